#include "patlim/montecarlo.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace patlim;

namespace {

EnsembleConfig cfg(LinkSpec link, int N, int p, int R, std::uint64_t seed = 7) {
    EnsembleConfig c;
    c.link = std::move(link);
    c.N = N;
    c.p = p;
    c.R = R;
    c.seed = seed;
    return c;
}

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int N) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd m(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = z(rng);
    return m;
}

}  // namespace

TEST_CASE("philox known answers") {
    Philox4x32::Counter c{0, 0, 0, 0};
    Philox4x32::Key k{0, 0};
    auto r = Philox4x32::apply(c, k);
    CHECK(r[0] == 0x6627e8d5u);
    Philox4x32::Counter ones{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu};
    CHECK(Philox4x32::apply(ones, {0xffffffffu, 0xffffffffu})[0] == 0x408f276du);
    Philox4x32::Counter pi{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u};
    CHECK(Philox4x32::apply(pi, {0xa4093822u, 0x299f31d0u})[0] == 0xd16cfe09u);
}

TEST_CASE("distributions") {
    CHECK(Distribution::std_normal().kappa() == 3.0);
    CHECK(Distribution::rademacher().kappa() == 1.0);
    CHECK(Distribution::centered_uniform().kappa() == doctest::Approx(1.8));
    CHECK(Distribution::named("rademacher").kind == Distribution::Kind::rademacher);
    auto c = Distribution::custom({-1.0, 1.0}, {0.5, 0.5});
    CHECK(c.kappa() == doctest::Approx(1.0));
    CHECK_THROWS(Distribution::custom({0.0, 1.0}, {0.5, 0.5}));
    CHECK_THROWS(Distribution::named("cauchy"));
    auto back = Distribution::from_json(c.to_json());
    CHECK(back.moment(4) == doctest::Approx(1.0));
    // Draw moments from the keyed stream.
    KeyedStream s(42);
    for (const auto& d : {Distribution::std_normal(), Distribution::rademacher(), Distribution::centered_uniform()}) {
        const int n = 200000;
        double m1 = 0, m2 = 0;
        for (int v = 0; v < n; ++v) {
            double x = d.draw(s, 0, static_cast<std::uint32_t>(v), 0);
            m1 += x;
            m2 += x * x;
        }
        CHECK(std::abs(m1 / n) < 0.01);
        CHECK(m2 / n == doctest::Approx(1.0).epsilon(0.01));
    }
}

TEST_CASE("ensemble config validation and JSON") {
    auto c = cfg(LinkSpec::toeplitz_abs(), 16, 2, 1);
    CHECK_THROWS(c.validate());
    c.R = 10;
    c.validate();
    auto back = EnsembleConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    c.p = 0;
    CHECK_THROWS(c.validate());
}

TEST_CASE("sample_matrix structure") {
    auto t = sample_matrix(cfg(LinkSpec::toeplitz_abs(), 8, 2, 2), 0);
    for (int i = 1; i < 8; ++i)
        for (int j = 1; j < 8; ++j) CHECK(t(i, j) == t(i - 1, j - 1));
    CHECK(t.isApprox(t.transpose(), 0.0));
    auto hc = cfg(LinkSpec::hankel(), 8, 2, 2);
    hc.mask = MaskSpec::hollow();
    auto h = sample_matrix(hc, 3);
    for (int i = 0; i < 8; ++i) CHECK(h(i, i) == 0.0);
    EnsembleSampler w(cfg(LinkSpec::wigner(), 2, 2, 2));
    CHECK(w.num_values() == 3);
    // Same seed and replicate give the same matrix; other replicates differ.
    auto c = cfg(LinkSpec::symmetric_circulant(), 6, 2, 2, 99);
    CHECK(sample_matrix(c, 4) == sample_matrix(c, 4));
    CHECK(sample_matrix(c, 4) != sample_matrix(c, 5));
}

TEST_CASE("trace identities") {
    for (int N : {4, 9})
        for (int p = 1; p <= 6; ++p) {
            Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
            double want = N * std::pow(N, -p / 2.0);
            CHECK(trace_power(I, p, TraceMethod::eigen) == doctest::Approx(want));
            CHECK(trace_power(I, p, TraceMethod::power) == doctest::Approx(want));
        }
    std::mt19937_64 rng(3);
    auto m = random_symmetric(rng, 7);
    CHECK(trace_power(m, 1) == doctest::Approx(m.trace() / std::sqrt(7.0)));
    CHECK(trace_power(m, 2) == doctest::Approx(m.squaredNorm() / 7.0));
}

TEST_CASE("eigen and power traces agree on 100 random matrices") {
    std::mt19937_64 rng(17);
    const int sizes[] = {8, 32, 64, 128, 512};
    for (int t = 0; t < 100; ++t) {
        int N = sizes[t % 5];
        if (N == 512 && t % 25 != 4) N = 96;
        int p = 1 + t % 8;
        auto m = random_symmetric(rng, N);
        double e = trace_power(m, p, TraceMethod::eigen);
        double q = trace_power(m, p, TraceMethod::power);
        CAPTURE(N);
        CAPTURE(p);
        CHECK(std::abs(e - q) / std::max(1.0, std::abs(e)) <= 1e-8);
    }
}

TEST_CASE("sample_eta") {
    auto c = cfg(LinkSpec::toeplitz_abs(), 32, 3, 200);
    auto a = sample_eta(c);
    auto b = sample_eta(c);
    CHECK(a.values == b.values);
    CHECK(a.values.size() == 200);
    CHECK(std::abs(stable_sum(a.values)) < 1e-9);
    auto c2 = c;
    c2.seed = 8;
    CHECK(sample_eta(c2).values != a.values);
    // Multiplicity fast path and matrix traces agree.
    EnsembleSampler s(cfg(LinkSpec::hankel(), 16, 2, 2));
    auto x = s.variates(0);
    CHECK(s.trace(x, 2) == doctest::Approx(trace_power(s.matrix(x), 2, TraceMethod::eigen)).epsilon(1e-12));
    CHECK(s.trace(x, 1) == doctest::Approx(trace_power(s.matrix(x), 1, TraceMethod::eigen)).epsilon(1e-12));
}

TEST_CASE("wigner eta_2 variance shrinks with N") {
    auto small = sample_eta(cfg(LinkSpec::wigner(), 100, 2, 2000));
    auto large = sample_eta(cfg(LinkSpec::wigner(), 400, 2, 2000));
    auto vs = empirical_moments(small.values, {2}).at(2).value;
    auto vl = empirical_moments(large.values, {2}).at(2).value;
    CHECK(vl < vs);
    CHECK(vl == doctest::Approx(4.0 / 400).epsilon(0.15));
}

TEST_CASE("empirical moments") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    std::vector<double> x(200000);
    for (auto& v : x) v = z(rng);
    auto m = empirical_moments(x, {1, 2, 3, 4});
    double mean = stable_sum(x) / x.size();
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    CHECK(m.at(1).value == doctest::Approx(mean));
    CHECK(m.at(2).value == doctest::Approx(ss / (x.size() - 1)).epsilon(1e-12));
    CHECK(m.at(4).value / (m.at(2).value * m.at(2).value) == doctest::Approx(3.0).epsilon(0.02));
    CHECK(m.at(1).standard_error == doctest::Approx(1.0 / std::sqrt(200000.0)).epsilon(0.02));
    CHECK(std::abs(m.at(3).value) < 4 * m.at(3).standard_error);
    auto sh = shape_moments(x);
    CHECK(std::abs(sh.skewness) < 4 * sh.skewness_se);
    CHECK(std::abs(sh.excess_kurtosis) < 4 * sh.excess_kurtosis_se);
    CHECK(ks_distance_normal(x, 1.0) < 0.005);
    for (auto& v : x) v += 0.5;
    CHECK(ks_distance_normal(x, 1.0) > 0.15);
    CHECK_THROWS(empirical_moments(x, {9}));
    CHECK_THROWS(empirical_moments({}, {2}));
    CHECK(stable_sum({1e16, 1.0, -1e16}) == 1.0);
}

TEST_CASE("process batch") {
    auto c = cfg(LinkSpec::symmetric_circulant(), 64, 2, 1500, 5);
    std::vector<double> grid{0.0, 0.25, 0.5, 1.0};
    auto b = sample_process(c, grid);
    REQUIRE(b.paths.rows() == 1500);
    REQUIRE(b.paths.cols() == 4);
    for (Eigen::Index r = 0; r < b.paths.rows(); ++r) CHECK(b.paths(r, 0) == 0.0);
    for (Eigen::Index g = 0; g < 4; ++g) CHECK(std::abs(b.paths.col(g).sum()) < 1e-8);
    auto b2 = sample_process(c, grid);
    CHECK(b.paths == b2.paths);
    CHECK_THROWS(sample_process(c, {0.5, 1.0}));
    CHECK_THROWS(sample_process(c, {0.0, 1.0, 0.5}));
    // Self-similarity: Var kappa_2(t) = t^2 Var kappa_2(1).
    std::vector<double> col1(b.paths.col(3).data(), b.paths.col(3).data() + 1500);
    std::vector<double> colh(b.paths.col(2).data(), b.paths.col(2).data() + 1500);
    auto v1 = empirical_moments(col1, {2}).at(2);
    auto vh = empirical_moments(colh, {2}).at(2);
    CHECK(std::abs(vh.value - 0.25 * v1.value) <= 3.0 * std::hypot(vh.standard_error, 0.25 * v1.standard_error));
    // kappa_2(1) has the law of eta_2 with Gaussian inputs.
    auto eta = sample_eta(c);
    auto ve = empirical_moments(eta.values, {2}).at(2);
    CHECK(std::abs(ve.value - v1.value) <= 3.0 * std::hypot(ve.standard_error, v1.standard_error));
}

TEST_CASE("tightness ratios") {
    auto c = cfg(LinkSpec::symmetric_circulant(), 64, 2, 2000, 9);
    std::vector<double> grid{0.0, 0.125, 0.25, 0.5, 0.75, 1.0};
    auto b = sample_process(c, grid);
    auto res = tightness_check(b, {{0.0, 0.125}, {0.0, 0.25}, {0.25, 0.5}, {0.5, 1.0}, {0.25, 0.75}});
    REQUIRE(res.size() == 5);
    // In the Gaussian limit Var(kappa(t) - kappa(s)) = 4 (t^2 - s^2), so the ratio
    // is 3 * 16 (t + s)^2.
    for (const auto& r : res) {
        double want = 48.0 * (r.t + r.s) * (r.t + r.s);
        CAPTURE(r.s);
        CAPTURE(r.t);
        CHECK(std::abs(r.ratio - want) <= 4.0 * r.ratio_se + 0.1 * want);
        CHECK(r.ratio <= 48.0 * 4.0 * 1.2);
    }
    CHECK_THROWS(tightness_check(b, {{0.5, 0.5}}));
    CHECK_THROWS(tightness_check(b, {{0.0, 0.3}}));
    std::vector<std::vector<TightnessResult>> sweep{{{0, 1, 1, 0.1, 1.0, 0.1}}, {{0, 1, 5, 0.1, 5.0, 0.1}}};
    CHECK(tightness_growth_flags(sweep)[0]);
    sweep[1][0].ratio = 1.1;
    CHECK_FALSE(tightness_growth_flags(sweep)[0]);
}

TEST_CASE("theoretical covariance") {
    ThetaTable t;
    t.p2 = {{0.7, 0}, {1.3, 2}, {0.4, 4}};
    t.p24_sum = 2.5;
    for (int p : {2, 4}) {
        double sigma2 = 0.7 + 1.3 + 0.4 + 2.0 * t.p24_sum;
        for (double s : {0.3, 0.6, 1.0}) CHECK(theoretical_covariance(t, p, s, s) == doctest::Approx(std::pow(s, p) * sigma2));
        CHECK(theoretical_covariance(t, p, 0.0, 0.8) == 0.0);
    }
    // Symmetric circulant at p = 2: 4 s^2.
    ThetaTable sc;
    sc.p2 = {{0.0, 2}, {0.0, 2}};
    sc.p24_sum = 2.0;
    CHECK(theoretical_covariance(sc, 2, 0.5, 1.0) == doctest::Approx(1.0));
    auto c = cfg(LinkSpec::symmetric_circulant(), 128, 2, 2000, 21);
    auto b = sample_process(c, {0.0, 0.5, 1.0});
    auto cmp = covariance_check(b, 2, sc, {{0.5, 1.0}});
    REQUIRE(cmp.size() == 1);
    CHECK(std::abs(cmp[0].z) <= 3.0);
    CHECK_THROWS(covariance_check(b, 3, sc, {{0.5, 1.0}}));
}

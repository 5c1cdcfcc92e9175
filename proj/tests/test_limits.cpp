#include "patlim/limits.hpp"

#include <doctest.h>

#include <cmath>

using namespace patlim;

namespace {

std::vector<Sentence> pair_classes(int p) {
    auto v = enumerate_P2(p, p);
    for (auto& s : enumerate_P24(p, p)) v.push_back(s);
    return v;
}

BranchVector first_branch(const Sentence& w, IntegralKind kind) {
    const int E = num_link_equations(w);
    BranchVector b;
    if (kind == IntegralKind::abs_diff || kind == IntegralKind::mod_absdiff) b.signs.assign(static_cast<std::size_t>(E), 1);
    if (kind == IntegralKind::mod_sum || kind == IntegralKind::mod_absdiff) b.offsets.assign(static_cast<std::size_t>(E), 0);
    return b;
}

}  // namespace

TEST_CASE("integral kinds by link") {
    CHECK(integral_kind_for(LinkSpec::hankel()) == IntegralKind::sum);
    CHECK(integral_kind_for(LinkSpec::toeplitz_abs()) == IntegralKind::abs_diff);
    CHECK(integral_kind_for(LinkSpec::reverse_circulant()) == IntegralKind::mod_sum);
    CHECK(integral_kind_for(LinkSpec::symmetric_circulant()) == IntegralKind::mod_absdiff);
    CHECK_FALSE(integral_kind_for(LinkSpec::wigner()).has_value());
    CHECK(parse_integral_kind(integral_kind_name(IntegralKind::mod_sum)) == IntegralKind::mod_sum);
    CHECK_THROWS(parse_integral_kind("product"));
}

TEST_CASE("free set has p+1 vertices and every vertex has one form") {
    for (int p = 1; p <= 4; ++p)
        for (const auto& w : pair_classes(p))
            for (auto kind : {IntegralKind::sum, IntegralKind::diff_signed, IntegralKind::abs_diff, IntegralKind::mod_sum,
                              IntegralKind::mod_absdiff}) {
                auto cs = build_constraint_system(w, kind, first_branch(w, kind));
                CAPTURE(w.str());
                CHECK(cs.free_vertices.size() == static_cast<std::size_t>(p + 1));
                CHECK(cs.claim_b == is_P2(w));
                REQUIRE(cs.forms.size() == 2);
                for (int u = 1; u <= 2; ++u) CHECK(cs.forms[static_cast<std::size_t>(u - 1)].size() == static_cast<std::size_t>(p + 1));
                // Free vertices are coordinate projections.
                for (std::size_t s = 0; s < cs.free_vertices.size(); ++s) {
                    const auto& f = cs.form(cs.free_vertices[s].u, cs.free_vertices[s].j);
                    CHECK(f.constant == 0);
                    for (std::size_t c = 0; c < f.coef.size(); ++c) CHECK(f.coef[c] == (c == s ? 1 : 0));
                }
            }
}

TEST_CASE("2-4 partition (aa,aa) with the sum link") {
    auto cs = build_constraint_system(Sentence::parse("aa,aa"), IntegralKind::sum);
    CHECK(cs.free_vertices == std::vector<Vertex>{{1, 0}, {1, 1}, {2, 0}});
    // v10 + v11 = v20 + v21 gives v21 = v10 + v11 - v20, and v22 = v20.
    const auto& f21 = cs.form(2, 1);
    CHECK(f21.coef == std::vector<std::int64_t>{1, 1, -1});
    CHECK(cs.form(2, 2).coef == std::vector<std::int64_t>{0, 0, 1});
    CHECK(closure_status(cs) == ClosureStatus::satisfied);
}

namespace {

// Builds every branch vector without pruning; returns how many were built and
// whether each pruned-enumeration system is among them.
std::pair<std::uint64_t, bool> all_branches(const Sentence& w, IntegralKind kind) {
    const int E = num_link_equations(w);
    const bool sg = kind == IntegralKind::abs_diff || kind == IntegralKind::mod_absdiff;
    const bool of = kind == IntegralKind::mod_sum || kind == IntegralKind::mod_absdiff;
    const int radix = (sg ? 2 : 1) * (of ? 5 : 1);
    std::uint64_t total = 1;
    for (int e = 0; e < E; ++e) total *= static_cast<std::uint64_t>(radix);
    std::vector<std::vector<std::vector<LinearForm>>> built;
    for (std::uint64_t code = 0; code < total; ++code) {
        BranchVector b;
        std::uint64_t c = code;
        for (int e = 0; e < E; ++e) {
            int digit = static_cast<int>(c % static_cast<std::uint64_t>(radix));
            c /= static_cast<std::uint64_t>(radix);
            if (sg) b.signs.push_back(digit % 2 ? -1 : 1);
            if (of) b.offsets.push_back((sg ? digit / 2 : digit) - 2);
        }
        built.push_back(build_constraint_system(w, kind, b).forms);
    }
    bool subset = true;
    for (const auto& s : enumerate_branch_systems(w, kind).systems) {
        bool found = false;
        for (const auto& f : built) found = found || f == s.forms;
        subset = subset && found;
    }
    return {built.size(), subset};
}

}  // namespace

TEST_CASE("branch counts") {
    for (int p : {2, 3}) {
        for (const auto& w : enumerate_P2(p, p)) {
            auto [n, sub] = all_branches(w, IntegralKind::abs_diff);
            CHECK(n == std::uint64_t(1) << p);
            CHECK(sub);
            auto [m, msub] = all_branches(w, IntegralKind::mod_sum);
            CHECK(m == static_cast<std::uint64_t>(std::pow(5, p)));
            CHECK(msub);
            CHECK(enumerate_branch_systems(w, IntegralKind::abs_diff).systems.size() <= n);
        }
        for (const auto& w : enumerate_P24(p, p)) {
            auto [n, sub] = all_branches(w, IntegralKind::abs_diff);
            CHECK(n == std::uint64_t(1) << (p + 1));
            CHECK(sub);
        }
    }
    CHECK(num_link_equations(Sentence::parse("ab,ab")) == 2);
    CHECK(num_link_equations(Sentence::parse("aa,aa")) == 3);
}

TEST_CASE("bad inputs") {
    CHECK_THROWS(build_constraint_system(Sentence::parse("ab,cd"), IntegralKind::sum));
    CHECK_THROWS(build_constraint_system(Sentence::parse("ab,ab"), IntegralKind::abs_diff, {{1}, {}}));
    CHECK_THROWS(build_constraint_system(Sentence::parse("ab,ab"), IntegralKind::abs_diff, {{1, 3}, {}}));
    CHECK_THROWS(build_constraint_system(Sentence::parse("ab,ab"), IntegralKind::mod_sum, {{}, {0, 4}}));
    CHECK_THROWS(fit_extrapolation({8, 16}, {1.0, 1.0}));
}

TEST_CASE("star limits at p = 2 (frozen)") {
    IntegrationSpec spec;
    struct Case {
        IntegralKind kind;
        double theta;
    };
    for (auto c : {Case{IntegralKind::abs_diff, 4.0 / 3.0}, Case{IntegralKind::sum, 2.0 / 3.0},
                   Case{IntegralKind::mod_sum, 1.0}, Case{IntegralKind::mod_absdiff, 2.0}})
        for (const auto& w : pair_classes(2)) {
            auto e = theta_integral(w, c.kind, LimitRegion::unit_square(), spec);
            CAPTURE(integral_kind_name(c.kind));
            CAPTURE(w.str());
            CHECK(e.value == doctest::Approx(c.theta).epsilon(0.005));
            CHECK(e.error >= 0.0);
            CHECK(e.method == "integral");
        }
    // theta(W) <= B^{p+1}.
    for (const auto& w : pair_classes(2)) {
        CHECK(theta_integral(w, IntegralKind::abs_diff, LimitRegion::unit_square(), spec).value <= 8.0);
        CHECK(theta_integral(w, IntegralKind::mod_sum, LimitRegion::unit_square(), spec).value <= 1.0 + 1e-12);
    }
}

TEST_CASE("exact limits vanish for 2-letter cross pairs at p = 2") {
    for (auto kind : {IntegralKind::abs_diff, IntegralKind::sum, IntegralKind::mod_sum})
        for (const auto& w : enumerate_P2(2, 2)) {
            auto e = theta_integral(w, kind, LimitRegion::unit_square(), {}, Variant::exact);
            CHECK(e.value == doctest::Approx(0.0).epsilon(1e-12));
        }
    CHECK(cross_merge(Sentence::parse("ab,ab")).value().str() == "aa,aa");
    CHECK(cross_merge(Sentence::parse("ab,ba")).value().str() == "aa,aa");
    CHECK_FALSE(cross_merge(Sentence::parse("a,a")).has_value());
}

TEST_CASE("single cross pair at p = 1") {
    auto w = Sentence::parse("a,a");
    auto in = theta_integral(w, IntegralKind::sum, LimitRegion::unit_square());
    ExtrapolationOptions o;
    o.variant = Variant::star;
    auto ex = theta_extrapolate(LinkSpec::hankel(), MaskSpec::full(), w, {64, 128, 256, 512}, o);
    CHECK(std::abs(in.value - ex.value) <= std::max(0.02 * in.value, 2.0 * (in.error + ex.error)));
}

TEST_CASE("empty region gives zero") {
    for (const auto& w : pair_classes(2)) {
        auto e = theta_integral(w, IntegralKind::abs_diff, LimitRegion::none());
        CHECK(e.value == 0.0);
    }
}

TEST_CASE("branch additivity") {
    auto w = Sentence::parse("ab,ba");
    auto all = enumerate_branch_systems(w, IntegralKind::abs_diff);
    REQUIRE(all.systems.size() > 1);
    IntegrationSpec spec;
    spec.log2_points = 12;
    double sum = 0.0;
    for (const auto& s : all.systems) sum += integrate_systems({s}, LimitRegion::unit_square(), spec).value;
    double joint = integrate_systems(all.systems, LimitRegion::unit_square(), spec).value;
    CHECK(joint == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("grid mode agrees with quasi-random mode") {
    IntegrationSpec grid;
    grid.mode = IntegrationSpec::Mode::grid;
    grid.grid_n = 24;
    for (const auto& w : pair_classes(2)) {
        double q = theta_integral(w, IntegralKind::sum, LimitRegion::unit_square()).value;
        auto g = theta_integral(w, IntegralKind::sum, LimitRegion::unit_square(), grid);
        CHECK(std::abs(q - g.value) <= 0.02 + 2 * g.error);
    }
}

TEST_CASE("band limit region") {
    // Toeplitz (aa,aa) star count restricted to |x - y| <= 1/2.
    auto w = Sentence::parse("aa,aa");
    auto region = LimitRegion::abs_diff_le(Rational(1, 2));
    auto in = theta_integral(w, IntegralKind::abs_diff, region);
    ExtrapolationOptions o;
    o.variant = Variant::star;
    auto mask = MaskSpec::band(Rational(1, 2), 0).with_limit(region);
    auto ex = theta_extrapolate(LinkSpec::toeplitz_abs(), mask, w, {32, 64, 128, 160}, o);
    CHECK(in.value > 0.0);
    CHECK(std::abs(in.value - ex.value) <= std::max(0.02 * in.value, 2.0 * (in.error + ex.error)));
}

TEST_CASE("extrapolation") {
    std::vector<int> N{16, 32, 64, 128};
    std::vector<double> y;
    for (int n : N) y.push_back(2.0 + 3.0 / n);
    auto e = fit_extrapolation(N, y);
    CHECK(e.value == doctest::Approx(2.0).epsilon(1e-9));
    CHECK_FALSE(e.low_confidence);
    y = {1.0, 1.2, 0.9, 1.3};
    CHECK(fit_extrapolation(N, y).low_confidence);
    // Wigner: cross pairs vanish in the limit.
    ExtrapolationOptions o;
    o.variant = Variant::star;
    auto w = theta_extrapolate(LinkSpec::wigner(), MaskSpec::full(), Sentence::parse("ab,ab"), {32, 64, 128}, o);
    CHECK(w.value == doctest::Approx(0.0).epsilon(0.02));
    auto sc = theta_extrapolate(LinkSpec::symmetric_circulant(), MaskSpec::full(), Sentence::parse("ab,ba"), {32, 64, 128}, o);
    CHECK(sc.value > 1.0);
    for (const auto& s : pair_classes(2))
        CHECK(theta_extrapolate(LinkSpec::toeplitz_abs(), MaskSpec::full(), s, {32, 64, 128}, o).value > 0.5);
}

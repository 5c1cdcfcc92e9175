#include "patlim/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace patlim {

Distribution Distribution::custom(std::vector<double> support, std::vector<double> weights) {
    Distribution d;
    d.kind = Kind::custom;
    d.support = std::move(support);
    d.weights = std::move(weights);
    d.validate();
    return d;
}

Distribution Distribution::named(const std::string& name) {
    if (name == "std_normal" || name == "normal" || name == "gaussian") return std_normal();
    if (name == "rademacher") return rademacher();
    if (name == "centered_uniform" || name == "uniform") return centered_uniform();
    throw std::invalid_argument("unknown distribution: " + name);
}

std::string Distribution::name() const {
    switch (kind) {
        case Kind::std_normal: return "std_normal";
        case Kind::rademacher: return "rademacher";
        case Kind::centered_uniform: return "centered_uniform";
        case Kind::custom: return "custom";
    }
    return "?";
}

double Distribution::moment(int r) const {
    if (r == 0) return 1.0;
    switch (kind) {
        case Kind::std_normal: {
            if (r % 2) return 0.0;
            double m = 1.0;
            for (int i = r - 1; i > 1; i -= 2) m *= i;
            return m;
        }
        case Kind::rademacher: return r % 2 ? 0.0 : 1.0;
        case Kind::centered_uniform: return r % 2 ? 0.0 : std::pow(3.0, r / 2.0) / (r + 1);
        case Kind::custom: {
            double m = 0.0;
            for (std::size_t i = 0; i < support.size(); ++i) m += weights[i] * std::pow(support[i], r);
            return m;
        }
    }
    return 0.0;
}

void Distribution::validate() const {
    if (kind != Kind::custom) return;
    if (support.empty() || support.size() != weights.size())
        throw std::invalid_argument("custom distribution needs matching support and weights");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("custom distribution weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("custom distribution weights must sum to 1");
    if (std::abs(moment(1)) > 1e-9) throw std::invalid_argument("custom distribution must have mean 0");
    if (std::abs(moment(2) - 1.0) > 1e-9) throw std::invalid_argument("custom distribution must have variance 1");
}

double Distribution::draw(const KeyedStream& s, std::uint32_t rep, std::uint32_t value, std::uint32_t step) const {
    switch (kind) {
        case Kind::std_normal: return s.normal(rep, value, step);
        case Kind::rademacher: return (s.bits(rep, value, step)[0] & 1u) ? 1.0 : -1.0;
        case Kind::centered_uniform: return std::sqrt(3.0) * (2.0 * s.uniform(rep, value, step) - 1.0);
        case Kind::custom: {
            double u = s.uniform(rep, value, step), acc = 0.0;
            for (std::size_t i = 0; i < support.size(); ++i) {
                acc += weights[i];
                if (u < acc) return support[i];
            }
            return support.back();
        }
    }
    return 0.0;
}

nlohmann::json Distribution::to_json() const {
    if (kind != Kind::custom) return name();
    return {{"kind", "custom"}, {"support", support}, {"weights", weights}};
}

Distribution Distribution::from_json(const nlohmann::json& j) {
    if (j.is_string()) return named(j.get<std::string>());
    if (j.value("kind", std::string()) != "custom") return named(j.at("kind").get<std::string>());
    return custom(j.at("support").get<std::vector<double>>(), j.at("weights").get<std::vector<double>>());
}

const char* trace_method_name(TraceMethod m) {
    switch (m) {
        case TraceMethod::automatic: return "auto";
        case TraceMethod::eigen: return "eigen";
        case TraceMethod::power: return "power";
    }
    return "?";
}

TraceMethod parse_trace_method(const std::string& s) {
    for (auto m : {TraceMethod::automatic, TraceMethod::eigen, TraceMethod::power})
        if (s == trace_method_name(m)) return m;
    throw std::invalid_argument("unknown trace method: " + s);
}

void EnsembleConfig::validate() const {
    if (N < 1) throw std::invalid_argument("N must be positive");
    if (p < 1) throw std::invalid_argument("p must be positive");
    if (R < 2) throw std::invalid_argument("R must be at least 2");
    distribution.validate();
}

nlohmann::json EnsembleConfig::to_json() const {
    return {{"link", link.to_json()},
            {"mask", mask.to_json()},
            {"N", N},
            {"p", p},
            {"distribution", distribution.to_json()},
            {"R", R},
            {"seed", seed},
            {"trace_method", trace_method_name(method)}};
}

EnsembleConfig EnsembleConfig::from_json(const nlohmann::json& j) {
    EnsembleConfig c;
    if (j.contains("link")) c.link = LinkSpec::from_json(j.at("link"));
    if (j.contains("mask")) c.mask = MaskSpec::from_json(j.at("mask"));
    c.N = j.value("N", c.N);
    c.p = j.value("p", c.p);
    if (j.contains("distribution")) c.distribution = Distribution::from_json(j.at("distribution"));
    c.R = j.value("R", c.R);
    c.seed = j.value("seed", c.seed);
    if (j.contains("trace_method")) c.method = parse_trace_method(j.at("trace_method").get<std::string>());
    c.validate();
    return c;
}

EnsembleSampler::EnsembleSampler(const EnsembleConfig& cfg)
    : cfg_(cfg), table_(build_link_table(cfg.link, cfg.N)), mask_(mask_table(cfg.mask, cfg.N)) {
    cfg_.validate();
    mult_.assign(static_cast<std::size_t>(table_.num_values), 0.0);
    diag_mult_.assign(static_cast<std::size_t>(table_.num_values), 0.0);
    const int N = cfg_.N;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            std::int32_t v = table_.at(i, j);
            if (v < 0 || !mask_[static_cast<std::size_t>(i) * N + j]) continue;
            mult_[static_cast<std::size_t>(v)] += 1.0;
            if (i == j) diag_mult_[static_cast<std::size_t>(v)] += 1.0;
        }
}

std::vector<double> EnsembleSampler::variates(int rep, int step) const {
    KeyedStream s(cfg_.seed);
    std::vector<double> x(static_cast<std::size_t>(table_.num_values));
    for (std::size_t v = 0; v < x.size(); ++v)
        x[v] = cfg_.distribution.draw(s, static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(v),
                                      static_cast<std::uint32_t>(step));
    return x;
}

Eigen::MatrixXd EnsembleSampler::matrix(const std::vector<double>& x) const {
    const int N = cfg_.N;
    Eigen::MatrixXd m(N, N);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) {
            std::int32_t v = table_.at(i, j);
            m(i, j) = (v >= 0 && mask_[static_cast<std::size_t>(i) * N + j]) ? x[static_cast<std::size_t>(v)] : 0.0;
        }
    return m;
}

double EnsembleSampler::trace(const std::vector<double>& x, int p) const {
    const double N = cfg_.N;
    if (p == 1 || p == 2) {
        const auto& w = p == 1 ? diag_mult_ : mult_;
        double s = 0.0, c = 0.0;
        for (std::size_t v = 0; v < x.size(); ++v) {
            double term = w[v] * (p == 1 ? x[v] : x[v] * x[v]);
            double t = s + term;
            c += std::abs(s) >= std::abs(term) ? (s - t) + term : (term - t) + s;
            s = t;
        }
        return (s + c) / (p == 1 ? std::sqrt(N) : N);
    }
    return trace_power(matrix(x), p, cfg_.method);
}

Eigen::MatrixXd sample_matrix(const EnsembleConfig& cfg, int replicate) {
    EnsembleSampler s(cfg);
    return s.matrix(replicate);
}

double trace_power(const Eigen::MatrixXd& m, int p, TraceMethod method) {
    if (p < 1) throw std::invalid_argument("p must be positive");
    const double N = static_cast<double>(m.rows());
    if (method == TraceMethod::eigen) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver did not converge");
        double s = 0.0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) s += std::pow(es.eigenvalues()(i) / std::sqrt(N), p);
        return s;
    }
    if (p == 1) return m.trace() / std::sqrt(N);
    if (p == 2) return m.squaredNorm() / N;
    const Eigen::MatrixXd B = m / std::sqrt(N);
    const int q = p / 2;
    Eigen::MatrixXd C = B;
    for (int i = 1; i < q; ++i) {
        Eigen::MatrixXd T(C.rows(), C.cols());
        T.noalias() = C * B;
        C.swap(T);
    }
    if (p % 2 == 0) return C.squaredNorm();
    Eigen::MatrixXd BC(C.rows(), C.cols());
    BC.noalias() = B * C;
    return C.cwiseProduct(BC).sum();
}

double stable_sum(const std::vector<double>& x) {
    double s = 0.0, c = 0.0;
    for (double v : x) {
        double t = s + v;
        c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
        s = t;
    }
    return s + c;
}

SampleBatch sample_eta(const EnsembleConfig& cfg) {
    EnsembleSampler sampler(cfg);
    SampleBatch b;
    b.seed = cfg.seed;
    b.config = cfg.to_json();
    b.traces.resize(static_cast<std::size_t>(cfg.R));
    for (int r = 0; r < cfg.R; ++r) b.traces[static_cast<std::size_t>(r)] = sampler.trace(sampler.variates(r), cfg.p);
    b.trace_mean = stable_sum(b.traces) / cfg.R;
    b.values.resize(b.traces.size());
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.N));
    for (std::size_t r = 0; r < b.traces.size(); ++r) b.values[r] = (b.traces[r] - b.trace_mean) * scale;
    return b;
}

ProcessBatch sample_process(const EnsembleConfig& cfg, const std::vector<double>& grid) {
    if (grid.empty() || grid[0] != 0.0) throw std::invalid_argument("time grid must start at 0");
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (!(grid[g] > grid[g - 1])) throw std::invalid_argument("time grid must be increasing");
    EnsembleConfig c = cfg;
    c.distribution = Distribution::std_normal();
    EnsembleSampler sampler(c);
    ProcessBatch b;
    b.time_grid = grid;
    b.seed = cfg.seed;
    b.config = c.to_json();
    const int G = static_cast<int>(grid.size());
    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(cfg.R, G);
    for (int r = 0; r < cfg.R; ++r) {
        std::vector<double> a(static_cast<std::size_t>(sampler.num_values()), 0.0);
        for (int g = 1; g < G; ++g) {
            const double sd = std::sqrt(grid[static_cast<std::size_t>(g)] - grid[static_cast<std::size_t>(g - 1)]);
            std::vector<double> z = sampler.variates(r, g);
            for (std::size_t v = 0; v < a.size(); ++v) a[v] += sd * z[v];
            raw(r, g) = sampler.trace(a, cfg.p);
        }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.N));
    b.paths.resize(cfg.R, G);
    for (int g = 0; g < G; ++g) {
        std::vector<double> col(raw.col(g).data(), raw.col(g).data() + cfg.R);
        double mean = stable_sum(col) / cfg.R;
        b.trace_means.push_back(mean);
        for (int r = 0; r < cfg.R; ++r) b.paths(r, g) = (raw(r, g) - mean) * scale;
    }
    return b;
}

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

struct LooMoments {
    std::vector<double> y;
    std::vector<double> T;  // power sums of y about the full mean
    int n = 0;
    double mean = 0.0;

    LooMoments(const std::vector<double>& x, int kmax) {
        n = static_cast<int>(x.size());
        mean = stable_sum(x) / n;
        y.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - mean;
        T.assign(static_cast<std::size_t>(kmax) + 1, 0.0);
        for (int j = 0; j <= kmax; ++j) {
            std::vector<double> pw(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) pw[i] = std::pow(y[i], j);
            T[static_cast<std::size_t>(j)] = stable_sum(pw);
        }
    }

    // Biased central moment of order k; drop < 0 keeps all points.
    double central(int k, int drop) const {
        if (drop < 0) return T[static_cast<std::size_t>(k)] / n;
        const double yi = y[static_cast<std::size_t>(drop)];
        const int m = n - 1;
        const double mu = -yi / m;
        double s = 0.0;
        for (int j = 0; j <= k; ++j) s += binom(k, j) * std::pow(-mu, k - j) * (T[static_cast<std::size_t>(j)] - std::pow(yi, j));
        return s / m;
    }
};

template <class F>
MomentEstimate jackknife(int n, const F& stat) {
    MomentEstimate e;
    e.value = stat(-1);
    double mean = 0.0;
    std::vector<double> th(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        th[static_cast<std::size_t>(i)] = stat(i);
        mean += th[static_cast<std::size_t>(i)];
    }
    mean /= n;
    double ss = 0.0;
    for (double t : th) ss += (t - mean) * (t - mean);
    e.standard_error = std::sqrt((n - 1.0) / n * ss);
    return e;
}

}  // namespace

std::map<int, MomentEstimate> empirical_moments(const std::vector<double>& x, const std::vector<int>& orders) {
    if (x.size() < 3) throw std::invalid_argument("empirical moments need at least three samples");
    int kmax = 2;
    for (int k : orders) {
        if (k < 1 || k > 8) throw std::invalid_argument("moment orders must lie in 1..8");
        kmax = std::max(kmax, k);
    }
    LooMoments lm(x, kmax);
    const int n = lm.n;
    std::map<int, MomentEstimate> out;
    for (int k : orders) {
        if (k == 1) {
            MomentEstimate e;
            e.value = lm.mean;
            e.standard_error = std::sqrt(lm.T[2] / (n - 1.0) / n);
            out[k] = e;
        } else if (k == 2) {
            out[k] = jackknife(n, [&](int d) {
                int m = d < 0 ? n : n - 1;
                return lm.central(2, d) * m / (m - 1.0);
            });
        } else {
            out[k] = jackknife(n, [&](int d) { return lm.central(k, d); });
        }
    }
    return out;
}

ShapeEstimate shape_moments(const std::vector<double>& x) {
    if (x.size() < 4) throw std::invalid_argument("shape moments need at least four samples");
    LooMoments lm(x, 4);
    const int n = lm.n;
    auto skew = jackknife(n, [&](int d) { return lm.central(3, d) / std::pow(lm.central(2, d), 1.5); });
    auto kurt = jackknife(n, [&](int d) {
        double m2 = lm.central(2, d);
        return lm.central(4, d) / (m2 * m2) - 3.0;
    });
    return {skew.value, skew.standard_error, kurt.value, kurt.standard_error};
}

double ks_distance_normal(std::vector<double> x, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (x.empty()) throw std::invalid_argument("empty sample");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double F = 0.5 * std::erfc(-x[i] / (sigma * std::sqrt(2.0)));
        d = std::max({d, (i + 1) / n - F, F - i / n});
    }
    return d;
}

namespace {

int grid_index(const std::vector<double>& grid, double t) {
    for (std::size_t g = 0; g < grid.size(); ++g)
        if (std::abs(grid[g] - t) <= 1e-12) return static_cast<int>(g);
    throw std::invalid_argument("time " + std::to_string(t) + " is not on the grid");
}

}  // namespace

std::vector<TightnessResult> tightness_check(const ProcessBatch& batch, const std::vector<std::pair<double, double>>& pairs) {
    std::vector<TightnessResult> out;
    const int R = static_cast<int>(batch.paths.rows());
    for (const auto& [s, t] : pairs) {
        if (!(s < t)) throw std::invalid_argument("tightness pairs need s < t");
        int gs = grid_index(batch.time_grid, s), gt = grid_index(batch.time_grid, t);
        std::vector<double> d4(static_cast<std::size_t>(R));
        for (int r = 0; r < R; ++r) d4[static_cast<std::size_t>(r)] = std::pow(batch.paths(r, gt) - batch.paths(r, gs), 4);
        double mean = stable_sum(d4) / R, ss = 0.0;
        for (double v : d4) ss += (v - mean) * (v - mean);
        TightnessResult res;
        res.s = s;
        res.t = t;
        res.fourth_moment = mean;
        res.fourth_moment_se = std::sqrt(ss / (R - 1.0) / R);
        res.ratio = mean / ((t - s) * (t - s));
        res.ratio_se = res.fourth_moment_se / ((t - s) * (t - s));
        out.push_back(res);
    }
    return out;
}

std::vector<bool> tightness_growth_flags(const std::vector<std::vector<TightnessResult>>& sweep, double z) {
    if (sweep.size() < 2) throw std::invalid_argument("a sweep needs at least two N values");
    std::vector<bool> flags;
    const auto& first = sweep.front();
    const auto& last = sweep.back();
    for (std::size_t i = 0; i < first.size(); ++i) {
        double se = std::hypot(first[i].ratio_se, last[i].ratio_se);
        flags.push_back(last[i].ratio > first[i].ratio + z * se);
    }
    return flags;
}

double theoretical_covariance(const ThetaTable& table, int p, double s, double t) {
    if (p % 2) throw std::invalid_argument("covariance formula needs an even p");
    if (s > t) std::swap(s, t);
    double c = 0.0;
    for (const auto& [theta, c0] : table.p2) c += theta * std::pow(s, (p + c0) / 2.0) * std::pow(t, (p - c0) / 2.0);
    c += (table.kappa - 1.0) * table.p24_sum * std::pow(s, p / 2.0 + 1.0) * std::pow(t, p / 2.0 - 1.0);
    return c;
}

std::vector<CovarianceComparison> covariance_check(const ProcessBatch& batch, int p, const ThetaTable& table,
                                                   const std::vector<std::pair<double, double>>& pairs) {
    std::vector<CovarianceComparison> out;
    const int R = static_cast<int>(batch.paths.rows());
    for (auto [s, t] : pairs) {
        if (s > t) std::swap(s, t);
        int gs = grid_index(batch.time_grid, s), gt = grid_index(batch.time_grid, t);
        std::vector<double> a(batch.paths.col(gs).data(), batch.paths.col(gs).data() + R);
        std::vector<double> b(batch.paths.col(gt).data(), batch.paths.col(gt).data() + R);
        double ma = stable_sum(a) / R, mb = stable_sum(b) / R;
        std::vector<double> prod(static_cast<std::size_t>(R));
        for (int r = 0; r < R; ++r) prod[static_cast<std::size_t>(r)] = (a[static_cast<std::size_t>(r)] - ma) * (b[static_cast<std::size_t>(r)] - mb);
        double mp = stable_sum(prod) / R, ss = 0.0;
        for (double v : prod) ss += (v - mp) * (v - mp);
        CovarianceComparison c;
        c.s = s;
        c.t = t;
        c.theoretical = theoretical_covariance(table, p, s, t);
        c.empirical = mp * R / (R - 1.0);
        c.standard_error = std::sqrt(ss / (R - 1.0) / R);
        double diff = c.empirical - c.theoretical;
        c.z = c.standard_error > 0.0 ? diff / c.standard_error : (std::abs(diff) < 1e-12 ? 0.0 : INFINITY);
        out.push_back(c);
    }
    return out;
}

}  // namespace patlim

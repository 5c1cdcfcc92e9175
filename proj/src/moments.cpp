#include "patlim/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace patlim {

const char* theta_method_name(ThetaMethod m) {
    switch (m) {
        case ThetaMethod::automatic: return "auto";
        case ThetaMethod::integral: return "integral";
        case ThetaMethod::extrapolation_exact: return "extrapolation_exact";
        case ThetaMethod::extrapolation_star: return "extrapolation_star";
    }
    return "?";
}

ThetaMethod parse_theta_method(const std::string& s) {
    for (auto m : {ThetaMethod::automatic, ThetaMethod::integral, ThetaMethod::extrapolation_exact,
                   ThetaMethod::extrapolation_star})
        if (s == theta_method_name(m)) return m;
    if (s == "extrapolation") return ThetaMethod::extrapolation_exact;
    throw std::invalid_argument("unknown theta method: " + s);
}

nlohmann::json MomentReport::to_json() const {
    nlohmann::json j;
    j["p"] = p;
    j["parity"] = parity;
    if (parity == "even") {
        j["sigma2"] = sigma2;
        j["sigma2_error"] = sigma2_error;
        j["p2_subtotal"] = p2_subtotal;
        j["p24_subtotal"] = p24_subtotal;
    } else {
        nlohmann::json m = nlohmann::json::object();
        for (const auto& [k, v] : odd_moments) m[std::to_string(k)] = v;
        j["odd_moments"] = m;
        j["input_moments"] = input_moments;
    }
    j["kappa"] = kappa;
    j["provenance"] = provenance;
    j["flagged"] = flagged;
    nlohmann::json t = nlohmann::json::array();
    for (const auto& x : terms)
        t.push_back({{"sentence", x.sentence}, {"class", x.cls}, {"cross", x.cross}, {"value", x.value},
                     {"error", x.error}, {"route", x.route}, {"low_confidence", x.low_confidence}});
    j["terms"] = t;
    return j;
}

namespace {

int cross_pairs(const Sentence& w) {
    if (w.k() != 2) return 0;
    const auto& a = w.words()[0];
    const auto& b = w.words()[1];
    std::set<int> la(a.begin(), a.end());
    int c = 0;
    for (int l : la)
        if (std::find(b.begin(), b.end(), l) != b.end()) ++c;
    return c;
}

// Grid whose largest point keeps N^{(pk+k)/2} near the default node budget.
std::vector<int> default_grid(const Sentence& w, std::uint64_t budget) {
    // The search visits at most about N^F nodes, F = |W| + k.
    const double F = w.num_letters() + w.k();
    const double target = std::min(2.0e7, static_cast<double>(budget) / 4.0);
    int nmax = static_cast<int>(std::floor(std::pow(target, 1.0 / F)));
    nmax = std::clamp(nmax, 8, 512);
    std::vector<int> g;
    for (double f : {0.5, 2.0 / 3.0, 5.0 / 6.0, 1.0}) {
        int n = static_cast<int>(std::lround(nmax * f / 4.0)) * 4;
        n = std::max(n, 4);
        if (g.empty() || n > g.back()) g.push_back(n);
    }
    while (g.size() < 3) g.push_back(g.back() + 4);
    return g;
}

ThetaTerm from_estimate(const Sentence& w, const ThetaEstimate& e, const std::string& route) {
    ThetaTerm t;
    t.sentence = w.str();
    t.cls = is_P2(w) ? "P2" : (is_P24(w) ? "P24" : "cluster");
    t.cross = t.cls == "P2" ? cross_pairs(w) : 0;
    t.value = e.value;
    t.error = e.error;
    t.route = route;
    t.low_confidence = e.low_confidence;
    return t;
}

std::optional<LimitRegion> region_of(const MaskSpec& mask) { return mask.limit_region(); }

}  // namespace

ThetaTerm theta_term(const LinkSpec& link, const MaskSpec& mask, const Sentence& w, const ThetaOptions& opts) {
    ThetaMethod m = opts.method;
    const auto kind = integral_kind_for(link);
    const auto region = region_of(mask);
    const bool integrable = kind && region && (is_P2(w) || is_P24(w));
    if (m == ThetaMethod::automatic) m = integrable ? ThetaMethod::integral : ThetaMethod::extrapolation_exact;
    if (m == ThetaMethod::integral) {
        if (!integrable)
            throw std::invalid_argument("integral route unavailable for link " + link.name() + " and sentence " + w.str());
        return from_estimate(w, theta_integral(w, *kind, *region, opts.integration, Variant::exact), "integral");
    }
    const std::vector<int> grid = opts.N_grid.empty() ? default_grid(w, opts.count.budget_nodes) : opts.N_grid;
    ExtrapolationOptions eo;
    eo.count = opts.count;
    if (m == ThetaMethod::extrapolation_exact) {
        eo.variant = Variant::exact;
        return from_estimate(w, theta_extrapolate(link, mask, w, grid, eo), "extrapolation_exact");
    }
    eo.variant = Variant::star;
    ThetaEstimate e = theta_extrapolate(link, mask, w, grid, eo);
    if (auto coarse = cross_merge(w)) {
        ThetaEstimate c = theta_extrapolate(link, mask, *coarse, grid, eo);
        e.value = std::max(0.0, e.value - c.value);
        e.error = std::hypot(e.error, c.error);
        e.low_confidence = e.low_confidence || c.low_confidence;
    }
    return from_estimate(w, e, "extrapolation_star");
}

MomentReport sigma_p_squared(const LinkSpec& link, const MaskSpec& mask, int p, double kappa, const ThetaOptions& opts) {
    if (p < 2 || p % 2) throw std::invalid_argument("sigma_p^2 needs an even p >= 2");
    if (!(kappa >= 1.0)) throw std::invalid_argument("kappa must be >= 1");
    MomentReport r;
    r.p = p;
    r.parity = "even";
    r.kappa = kappa;
    double var2 = 0.0, var4 = 0.0;
    std::set<std::string> routes;
    for (const auto& w : enumerate_P2(p, p)) {
        ThetaTerm t = theta_term(link, mask, w, opts);
        r.p2_subtotal += t.value;
        var2 += t.error * t.error;
        r.flagged = r.flagged || t.low_confidence;
        routes.insert(t.route);
        r.terms.push_back(t);
    }
    for (const auto& w : enumerate_P24(p, p)) {
        ThetaTerm t = theta_term(link, mask, w, opts);
        r.p24_subtotal += t.value;
        var4 += t.error * t.error;
        r.flagged = r.flagged || t.low_confidence;
        routes.insert(t.route);
        r.terms.push_back(t);
    }
    r.sigma2 = r.p2_subtotal + (kappa - 1.0) * r.p24_subtotal;
    r.sigma2_error = std::sqrt(var2 + (kappa - 1.0) * (kappa - 1.0) * var4);
    for (const auto& s : routes) r.provenance += (r.provenance.empty() ? "" : "+") + s;
    return r;
}

double double_factorial(int n) {
    double r = 1.0;
    for (int i = n; i > 1; i -= 2) r *= i;
    return r;
}

std::vector<double> standard_normal_moments(int r_max) {
    std::vector<double> m(static_cast<std::size_t>(r_max) + 1, 0.0);
    for (int r = 0; r <= r_max; r += 2) m[static_cast<std::size_t>(r)] = double_factorial(r - 1);
    return m;
}

MomentReport odd_moment_limits(const LinkSpec& link, const MaskSpec& mask, int p, int k_max,
                               const std::vector<double>& m, const ThetaOptions& opts) {
    if (p < 1 || p % 2 == 0) throw std::invalid_argument("odd moment limits need an odd p");
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    if (static_cast<int>(m.size()) <= k_max)
        throw std::invalid_argument("input moments m_r are needed for r <= " + std::to_string(k_max));
    if (m.size() < 3 || m[1] != 0.0 || m[2] != 1.0) throw std::invalid_argument("input moments need m_1 = 0 and m_2 = 1");
    MomentReport r;
    r.p = p;
    r.parity = "odd";
    r.input_moments = m;
    r.kappa = m.size() > 4 ? m[4] : 3.0;
    std::map<std::string, ThetaTerm> cache;
    std::set<std::string> routes;
    for (int k = 1; k <= k_max; ++k) {
        double total = 0.0;
        for (const auto& w : enumerate_special_partitions(p, k)) {
            ClusterInfo ci = cluster_decompose(w);
            double prod = 1.0;
            for (const auto& comp : ci.components) {
                Sentence sub = w.sub_sentence(comp);
                auto it = cache.find(sub.str());
                if (it == cache.end()) {
                    ThetaOptions o = opts;
                    if (o.method == ThetaMethod::automatic && sub.k() > 2) o.method = ThetaMethod::extrapolation_exact;
                    ThetaTerm t = theta_term(link, mask, sub, o);
                    routes.insert(t.route);
                    r.flagged = r.flagged || t.low_confidence;
                    it = cache.emplace(sub.str(), t).first;
                    r.terms.push_back(t);
                }
                prod *= m[comp.size()] * it->second.value;
                if (prod == 0.0) break;
            }
            total += prod;
        }
        r.odd_moments[k] = total;
    }
    for (const auto& s : routes) r.provenance += (r.provenance.empty() ? "" : "+") + s;
    return r;
}

std::map<int, double> wick_moments(double sigma2, int k_max) {
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be >= 0");
    std::map<int, double> b;
    for (int k = 1; k <= k_max; ++k) {
        b[2 * k - 1] = 0.0;
        b[2 * k] = double_factorial(2 * k - 1) * std::pow(sigma2, k);
    }
    return b;
}

nlohmann::json GaussianWitness::to_json() const {
    nlohmann::json j;
    j["ok"] = ok;
    j["builder"] = builder;
    j["Z"] = z_descriptor;
    j["S"] = s_descriptor;
    j["c1"] = c1;
    j["c2"] = c2;
    j["verified_at"] = verified_at;
    nlohmann::json lv = nlohmann::json::array();
    for (const auto& l : levels)
        lv.push_back({{"N", l.N}, {"c1", l.c1}, {"c2", l.c2}, {"worst_value", l.worst_value}, {"worst_row", l.worst_row},
                      {"Z_size", l.z_size}, {"S_size", l.s_size}});
    j["levels"] = lv;
    if (!failure.empty()) j["failure"] = failure;
    j["note"] = note;
    return j;
}

namespace {

std::string value_text(const LinkValue& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + ")";
}

}  // namespace

GaussianWitness verify_gaussian_conditions(const LinkSpec& link, const MaskSpec& mask, const std::string& builder,
                                           const std::vector<int>& N_grid, double floor, const WitnessSet& custom) {
    GaussianWitness g;
    g.builder = builder;
    WitnessSet S;
    if (builder == "toeplitz_half") {
        S = [](int i, int j, int N) { return std::abs(i - j) <= N / 2; };
        g.s_descriptor = "{(i,j): |i-j| <= floor(N/2)} within the mask";
        g.z_descriptor = "{0, 1, ..., floor(N/2)}";
    } else if (builder == "hankel_band") {
        S = [](int i, int j, int N) { return N / 2 + 2 <= i + j && i + j <= (3 * N) / 2 + 2; };
        g.s_descriptor = "{(i,j): floor(N/2)+2 <= i+j <= floor(3N/2)+2} within the mask";
        g.z_descriptor = "{floor(N/2)+2, ..., floor(3N/2)+2}";
    } else if (builder == "full_image") {
        S = [](int, int, int) { return true; };
        g.s_descriptor = "the mask Delta_N";
        g.z_descriptor = "the image L(Delta_N)";
    } else if (builder == "custom") {
        if (!custom) throw std::invalid_argument("custom witness needs a set predicate");
        S = custom;
        g.s_descriptor = "user supplied";
        g.z_descriptor = "L(S_N)";
    } else {
        throw std::invalid_argument("unknown witness builder: " + builder);
    }
    if (N_grid.empty()) throw std::invalid_argument("witness check needs at least one N");
    g.ok = true;
    g.c1 = g.c2 = std::numeric_limits<double>::infinity();
    for (int N : N_grid) {
        LinkTable t = build_link_table(link, N);
        std::vector<std::int64_t> per_value(static_cast<std::size_t>(t.num_values), 0);
        std::vector<std::int64_t> per_row(static_cast<std::size_t>(N), 0);
        WitnessLevel lv;
        lv.N = N;
        for (int i = 1; i <= N; ++i)
            for (int j = 1; j <= N; ++j) {
                bool in = S(i, j, N) && mask.contains(i, j, N) && t.at(i - 1, j - 1) >= 0;
                bool tin = S(j, i, N) && mask.contains(j, i, N) && t.at(j - 1, i - 1) >= 0;
                if (in != tin) {
                    g.ok = false;
                    g.failure = "S_N is not symmetric at N=" + std::to_string(N) + " (" + std::to_string(i) + "," +
                                std::to_string(j) + ")";
                    return g;
                }
                if (!in) continue;
                ++per_value[static_cast<std::size_t>(t.at(i - 1, j - 1))];
                ++per_row[static_cast<std::size_t>(i - 1)];
                ++lv.s_size;
            }
        if (lv.s_size == 0) {
            g.ok = false;
            g.failure = "S_N is empty at N=" + std::to_string(N);
            return g;
        }
        std::int64_t best_v = -1, best_r = -1;
        for (std::size_t v = 0; v < per_value.size(); ++v) {
            if (!per_value[v]) continue;
            ++lv.z_size;
            if (best_v < 0 || per_value[v] < per_value[static_cast<std::size_t>(best_v)]) best_v = static_cast<std::int64_t>(v);
        }
        for (std::size_t r = 0; r < per_row.size(); ++r) {
            if (!per_row[r]) continue;
            if (best_r < 0 || per_row[r] < per_row[static_cast<std::size_t>(best_r)]) best_r = static_cast<std::int64_t>(r);
        }
        lv.c1 = static_cast<double>(per_value[static_cast<std::size_t>(best_v)]) / N;
        lv.c2 = static_cast<double>(per_row[static_cast<std::size_t>(best_r)]) / N;
        lv.worst_value = value_text(t.values[static_cast<std::size_t>(best_v)]);
        lv.worst_row = static_cast<int>(best_r) + 1;
        g.levels.push_back(lv);
        g.verified_at.push_back(N);
        g.c1 = std::min(g.c1, lv.c1);
        g.c2 = std::min(g.c2, lv.c2);
        if (g.ok && lv.c1 < floor) {
            g.ok = false;
            g.failure = "value count floor violated at N=" + std::to_string(N) + ", value " + lv.worst_value;
        }
        if (g.ok && lv.c2 < floor) {
            g.ok = false;
            g.failure = "row floor violated at N=" + std::to_string(N) + ", row " + std::to_string(lv.worst_row);
        }
    }
    g.note = "certified on the listed N only; the trend beyond the grid is not established";
    return g;
}

}  // namespace patlim

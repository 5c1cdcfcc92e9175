#include "patlim/limits.hpp"

#include <Eigen/Dense>
#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

namespace patlim {

const char* integral_kind_name(IntegralKind k) {
    switch (k) {
        case IntegralKind::sum: return "sum";
        case IntegralKind::diff_signed: return "diff_signed";
        case IntegralKind::abs_diff: return "abs_diff";
        case IntegralKind::mod_sum: return "mod_sum";
        case IntegralKind::mod_absdiff: return "mod_absdiff";
    }
    return "?";
}

IntegralKind parse_integral_kind(const std::string& s) {
    for (auto k : {IntegralKind::sum, IntegralKind::diff_signed, IntegralKind::abs_diff, IntegralKind::mod_sum,
                   IntegralKind::mod_absdiff})
        if (s == integral_kind_name(k)) return k;
    throw std::invalid_argument("unknown integral kind: " + s);
}

std::optional<IntegralKind> integral_kind_for(const LinkSpec& link) {
    switch (link.kind()) {
        case LinkKind::hankel: return IntegralKind::sum;
        case LinkKind::toeplitz_abs:
        case LinkKind::toeplitz_signed: return IntegralKind::abs_diff;
        case LinkKind::reverse_circulant: return IntegralKind::mod_sum;
        case LinkKind::symmetric_circulant:
        case LinkKind::palindromic_toeplitz: return IntegralKind::mod_absdiff;
        default: return std::nullopt;
    }
}

bool LinearForm::is_constant() const {
    return std::all_of(coef.begin(), coef.end(), [](std::int64_t c) { return c == 0; });
}

double LinearForm::min_unit() const {
    double m = static_cast<double>(constant);
    for (auto c : coef)
        if (c < 0) m += static_cast<double>(c);
    return m;
}

double LinearForm::max_unit() const {
    double m = static_cast<double>(constant);
    for (auto c : coef)
        if (c > 0) m += static_cast<double>(c);
    return m;
}

double LinearForm::eval(const double* z) const {
    double s = static_cast<double>(constant);
    for (std::size_t i = 0; i < coef.size(); ++i) s += static_cast<double>(coef[i]) * z[i];
    return s;
}

namespace {

LinearForm operator+(const LinearForm& a, const LinearForm& b) {
    LinearForm r = a;
    for (std::size_t i = 0; i < r.coef.size(); ++i) r.coef[i] += b.coef[i];
    r.constant += b.constant;
    return r;
}

LinearForm scaled(const LinearForm& a, std::int64_t s) {
    LinearForm r = a;
    for (auto& c : r.coef) c *= s;
    r.constant *= s;
    return r;
}

LinearForm shifted(LinearForm a, std::int64_t k) {
    a.constant += k;
    return a;
}

bool empty_on_unit_cube(const LinearForm& f) {
    if (f.is_constant()) return f.constant < 0 || f.constant > 1;
    return f.max_unit() <= 0.0 || f.min_unit() >= 1.0;
}

bool uses_signs(IntegralKind k) { return k == IntegralKind::abs_diff || k == IntegralKind::mod_absdiff; }
bool uses_offsets(IntegralKind k) { return k == IntegralKind::mod_sum || k == IntegralKind::mod_absdiff; }
// X + sigma*Y is the step functional.
int sigma_of(IntegralKind k) { return (k == IntegralKind::sum || k == IntegralKind::mod_sum) ? 1 : -1; }

enum class ItemType { free_start, step_fwd, step_bwd, step_def, alias, close };

struct Item {
    ItemType type;
    int u;
    int j;
};

struct Schedule {
    std::vector<Item> items;
    bool claim_b = false;
};

Schedule make_schedule(const Sentence& w) {
    Schedule s;
    const bool p24 = is_P24(w);
    const bool p2 = !p24 && is_P2(w);
    if (!p2 && !p24) throw std::invalid_argument("sentence is neither a cross pair partition nor a 2-4 partition: " + w.str());
    if (p24) {
        for (int u = 1; u <= w.k(); ++u) {
            s.items.push_back({ItemType::free_start, u, 0});
            for (int j = 1; j <= w.length(u); ++j) s.items.push_back({ItemType::step_fwd, u, j});
            s.items.push_back({ItemType::close, u, w.length(u)});
        }
        return s;
    }
    s.claim_b = true;
    const auto& w1 = w.words()[0];
    const auto& w2 = w.words()[1];
    const int p = w.length(1);
    int r = 0;
    for (int j = 1; j <= p; ++j)
        if (std::find(w2.begin(), w2.end(), w1[static_cast<std::size_t>(j - 1)]) != w2.end()) r = j;
    s.items.push_back({ItemType::free_start, 1, 0});
    for (int j = 1; j < r; ++j) s.items.push_back({ItemType::step_fwd, 1, j});
    s.items.push_back({ItemType::alias, 1, p});
    for (int j = p; j > r; --j) s.items.push_back({ItemType::step_bwd, 1, j});
    s.items.push_back({ItemType::step_def, 1, r});
    s.items.push_back({ItemType::free_start, 2, 0});
    for (int j = 1; j <= w.length(2); ++j) s.items.push_back({ItemType::step_fwd, 2, j});
    s.items.push_back({ItemType::close, 2, w.length(2)});
    return s;
}

struct State {
    std::vector<std::vector<std::optional<LinearForm>>> forms;
    std::vector<std::optional<LinearForm>> letter;
    std::vector<LinearForm> closures;
    BranchVector branch;
    int next_free = 0;
};

// Structural pass: which vertices are free and how many equations arise.
struct Structure {
    std::vector<Vertex> free_vertices;
    int equations = 0;
};

Structure analyze(const Sentence& w, const Schedule& sch) {
    Structure st;
    std::vector<char> seen(static_cast<std::size_t>(w.num_letters()) + 1, 0);
    for (const auto& it : sch.items) {
        if (it.type == ItemType::free_start) {
            st.free_vertices.push_back({it.u, 0});
            continue;
        }
        if (it.type == ItemType::alias || it.type == ItemType::close) continue;
        int l = w.words()[static_cast<std::size_t>(it.u - 1)][static_cast<std::size_t>(it.j - 1)];
        if (seen[static_cast<std::size_t>(l)]) {
            ++st.equations;
            continue;
        }
        seen[static_cast<std::size_t>(l)] = 1;
        if (it.type == ItemType::step_fwd) st.free_vertices.push_back({it.u, it.j});
        else if (it.type == ItemType::step_bwd) st.free_vertices.push_back({it.u, it.j - 1});
    }
    return st;
}

class Builder {
public:
    Builder(const Sentence& w, IntegralKind kind)
        : w_(w), kind_(kind), sch_(make_schedule(w)), st_(analyze(w, sch_)), d_(static_cast<int>(st_.free_vertices.size())) {}

    int equations() const { return st_.equations; }

    ConstraintSystem build(const BranchVector& b) {
        const std::size_t E = static_cast<std::size_t>(st_.equations);
        if (uses_signs(kind_) ? b.signs.size() != E : !b.signs.empty())
            throw std::invalid_argument("branch vector: expected " + std::to_string(uses_signs(kind_) ? E : 0) + " signs");
        if (uses_offsets(kind_) ? b.offsets.size() != E : !b.offsets.empty())
            throw std::invalid_argument("branch vector: expected " + std::to_string(uses_offsets(kind_) ? E : 0) + " offsets");
        for (int s : b.signs)
            if (s != 1 && s != -1) throw std::invalid_argument("branch vector: signs must be +1 or -1");
        for (int k : b.offsets)
            if (k < -2 || k > 2) throw std::invalid_argument("branch vector: offsets must lie in -2..2");
        fixed_ = &b;
        ConstraintSystem out;
        found_ = &out;
        prune_ = false;
        run(0, initial());
        return out;
    }

    BranchEnumeration enumerate() {
        BranchEnumeration res;
        enum_ = &res;
        prune_ = true;
        fixed_ = nullptr;
        found_ = nullptr;
        run(0, initial());
        return res;
    }

private:
    State initial() const {
        State s;
        s.forms.resize(static_cast<std::size_t>(w_.k()));
        for (int u = 1; u <= w_.k(); ++u) s.forms[static_cast<std::size_t>(u - 1)].resize(static_cast<std::size_t>(w_.length(u)) + 1);
        s.letter.resize(static_cast<std::size_t>(w_.num_letters()) + 1);
        return s;
    }

    LinearForm coordinate(int idx) const {
        LinearForm f;
        f.coef.assign(static_cast<std::size_t>(d_), 0);
        f.coef[static_cast<std::size_t>(idx)] = 1;
        return f;
    }

    std::optional<LinearForm>& slot(State& s, int u, int j) const {
        return s.forms[static_cast<std::size_t>(u - 1)][static_cast<std::size_t>(j)];
    }

    void emit(State& s) {
        ConstraintSystem cs;
        cs.free_vertices = st_.free_vertices;
        cs.claim_b = sch_.claim_b;
        cs.branch = s.branch;
        cs.closure_constraints = s.closures;
        for (const auto& it : sch_.items)
            if (it.type != ItemType::free_start && it.type != ItemType::alias && it.type != ItemType::close)
                cs.order.push_back({it.u, it.j});
        cs.forms.resize(s.forms.size());
        for (std::size_t u = 0; u < s.forms.size(); ++u)
            for (auto& f : s.forms[u]) cs.forms[u].push_back(*f);
        if (found_) {
            *found_ = std::move(cs);
            return;
        }
        std::vector<std::int64_t> key;
        for (const auto& row : cs.forms)
            for (const auto& f : row) {
                key.insert(key.end(), f.coef.begin(), f.coef.end());
                key.push_back(f.constant);
            }
        if (!seen_.insert(key).second) {
            ++enum_->duplicates;
            return;
        }
        enum_->systems.push_back(std::move(cs));
    }

    // Returns false when the branch should stop here.
    bool accept_form(const LinearForm& f) {
        if (prune_ && empty_on_unit_cube(f)) {
            ++enum_->pruned;
            return false;
        }
        return true;
    }

    bool accept_closure(const LinearForm& g) {
        if (!prune_) return true;
        if (!g.is_constant()) {
            ++enum_->lower_dimensional;
            return false;
        }
        if (g.constant != 0) {
            ++enum_->inconsistent;
            return false;
        }
        return true;
    }

    void run(std::size_t idx, State s) {
        if (idx == sch_.items.size()) {
            if (enum_ && prune_) ++enum_->considered;
            emit(s);
            return;
        }
        const Item& it = sch_.items[idx];
        switch (it.type) {
            case ItemType::free_start:
                slot(s, it.u, 0) = coordinate(s.next_free++);
                run(idx + 1, std::move(s));
                return;
            case ItemType::alias:
                slot(s, it.u, it.j) = *slot(s, it.u, 0);
                run(idx + 1, std::move(s));
                return;
            case ItemType::close: {
                LinearForm g = *slot(s, it.u, it.j) + scaled(*slot(s, it.u, 0), -1);
                if (!accept_closure(g)) return;
                s.closures.push_back(g);
                run(idx + 1, std::move(s));
                return;
            }
            default: break;
        }
        step(idx, it, std::move(s));
    }

    void step(std::size_t idx, const Item& it, State s) {
        const int sigma = sigma_of(kind_);
        const int l = w_.words()[static_cast<std::size_t>(it.u - 1)][static_cast<std::size_t>(it.j - 1)];
        auto& x = slot(s, it.u, it.j - 1);
        auto& y = slot(s, it.u, it.j);
        auto& e = s.letter[static_cast<std::size_t>(l)];
        if (!e) {
            // First occurrence: a new endpoint is free, then the letter value is read off.
            if (it.type == ItemType::step_fwd) y = coordinate(s.next_free++);
            else if (it.type == ItemType::step_bwd) x = coordinate(s.next_free++);
            e = *x + scaled(*y, sigma);
            run(idx + 1, std::move(s));
            return;
        }
        const int eq = static_cast<int>(s.branch.signs.size() > s.branch.offsets.size() ? s.branch.signs.size()
                                                                                         : s.branch.offsets.size());
        std::vector<int> signs{1}, offsets{0};
        if (uses_signs(kind_)) signs = fixed_ ? std::vector<int>{fixed_->signs[static_cast<std::size_t>(eq)]} : std::vector<int>{1, -1};
        if (uses_offsets(kind_))
            offsets = fixed_ ? std::vector<int>{fixed_->offsets[static_cast<std::size_t>(eq)]} : std::vector<int>{-2, -1, 0, 1, 2};
        for (int sg : signs)
            for (int k : offsets) {
                State t = s;
                if (uses_signs(kind_)) t.branch.signs.push_back(sg);
                if (uses_offsets(kind_)) t.branch.offsets.push_back(k);
                auto& tx = slot(t, it.u, it.j - 1);
                auto& ty = slot(t, it.u, it.j);
                // X + sigma*Y = sg*e + k
                LinearForm rhs = shifted(scaled(*t.letter[static_cast<std::size_t>(l)], sg), k);
                if (it.type == ItemType::step_fwd && !ty) {
                    ty = scaled(rhs + scaled(*tx, -1), sigma);
                    if (!accept_form(*ty)) continue;
                } else if (it.type == ItemType::step_bwd && !tx) {
                    tx = rhs + scaled(*ty, -sigma);
                    if (!accept_form(*tx)) continue;
                } else {
                    LinearForm g = *tx + scaled(*ty, sigma) + scaled(rhs, -1);
                    if (!accept_closure(g)) continue;
                    t.closures.push_back(g);
                }
                run(idx + 1, std::move(t));
            }
    }

    const Sentence& w_;
    IntegralKind kind_;
    Schedule sch_;
    Structure st_;
    int d_;
    const BranchVector* fixed_ = nullptr;
    ConstraintSystem* found_ = nullptr;
    BranchEnumeration* enum_ = nullptr;
    bool prune_ = false;
    std::set<std::vector<std::int64_t>> seen_;
};

// Dense evaluation data for one system.
struct Compiled {
    int d = 0;
    std::vector<double> range_coef;  // derived forms, row-major d+1 (constant last)
    int n_range = 0;
    std::vector<double> step_coef;  // per step: x form then y form
    int n_steps = 0;
    double weight = 1.0;
};

void push_form(std::vector<double>& out, const LinearForm& f) {
    for (auto c : f.coef) out.push_back(static_cast<double>(c));
    out.push_back(static_cast<double>(f.constant));
}

bool is_coordinate(const LinearForm& f) {
    if (f.constant != 0) return false;
    int ones = 0;
    for (auto c : f.coef) {
        if (c == 1) ++ones;
        else if (c != 0) return false;
    }
    return ones == 1;
}

Compiled compile(const ConstraintSystem& cs, bool need_steps, double weight) {
    Compiled c;
    c.d = static_cast<int>(cs.free_vertices.size());
    c.weight = weight;
    std::set<std::vector<std::int64_t>> done;
    for (const auto& row : cs.forms)
        for (const auto& f : row) {
            if (is_coordinate(f)) continue;
            std::vector<std::int64_t> key = f.coef;
            key.push_back(f.constant);
            if (!done.insert(key).second) continue;
            push_form(c.range_coef, f);
            ++c.n_range;
        }
    if (need_steps)
        for (const auto& row : cs.forms)
            for (std::size_t j = 1; j < row.size(); ++j) {
                push_form(c.step_coef, row[j - 1]);
                push_form(c.step_coef, row[j]);
                ++c.n_steps;
            }
    return c;
}

inline double dot(const double* a, const double* z, int d) {
    double s = a[d];
    for (int i = 0; i < d; ++i) s += a[i] * z[i];
    return s;
}

bool feasible(const Compiled& c, const double* z, const LimitRegion& region, bool check_region) {
    const int stride = c.d + 1;
    for (int r = 0; r < c.n_range; ++r) {
        double v = dot(&c.range_coef[static_cast<std::size_t>(r * stride)], z, c.d);
        if (v < 0.0 || v > 1.0) return false;
    }
    if (check_region)
        for (int s = 0; s < c.n_steps; ++s) {
            double x = dot(&c.step_coef[static_cast<std::size_t>(2 * s * stride)], z, c.d);
            double y = dot(&c.step_coef[static_cast<std::size_t>((2 * s + 1) * stride)], z, c.d);
            if (!region.contains(x, y)) return false;
        }
    return true;
}

bool trivially_full(const LimitRegion& r) { return !r.empty && r.constraints.empty(); }

// Weighted integral of system indicators sharing one point set.
ThetaEstimate integrate_weighted(const std::vector<const ConstraintSystem*>& systems, const std::vector<double>& weights,
                                 const LimitRegion& region, const IntegrationSpec& spec) {
    ThetaEstimate est;
    est.method = "integral";
    est.branch_count = static_cast<int>(systems.size());
    est.diagnostics["mode"] = spec.mode == IntegrationSpec::Mode::qmc ? "qmc" : "grid";
    if (region.empty || systems.empty()) {
        est.diagnostics["per_branch"] = nlohmann::json::array();
        return est;
    }
    const bool check_region = !trivially_full(region);
    std::vector<Compiled> comp;
    for (std::size_t b = 0; b < systems.size(); ++b) comp.push_back(compile(*systems[b], check_region, weights[b]));
    const int d = comp[0].d;
    std::vector<double> per_branch(comp.size(), 0.0);

    if (spec.mode == IntegrationSpec::Mode::grid) {
        auto grid_total = [&](int n, std::vector<double>* pb) {
            std::vector<int> idx(static_cast<std::size_t>(d), 0);
            std::vector<double> z(static_cast<std::size_t>(d));
            std::vector<double> hits(comp.size(), 0.0);
            double cells = std::pow(static_cast<double>(n), d);
            while (true) {
                for (int i = 0; i < d; ++i) z[static_cast<std::size_t>(i)] = (idx[static_cast<std::size_t>(i)] + 0.5) / n;
                for (std::size_t b = 0; b < comp.size(); ++b)
                    if (feasible(comp[b], z.data(), region, check_region)) hits[b] += 1.0;
                int i = d - 1;
                while (i >= 0 && ++idx[static_cast<std::size_t>(i)] == n) idx[static_cast<std::size_t>(i--)] = 0;
                if (i < 0) break;
            }
            double t = 0.0;
            for (std::size_t b = 0; b < comp.size(); ++b) {
                t += comp[b].weight * hits[b] / cells;
                if (pb) (*pb)[b] = hits[b] / cells;
            }
            return t;
        };
        const int n = std::max(2, spec.grid_n);
        double fine = grid_total(n, &per_branch);
        double coarse = grid_total(std::max(1, n / 2), nullptr);
        est.value = fine;
        est.error = std::abs(fine - coarse);
        est.diagnostics["grid_n"] = n;
        est.diagnostics["coarse_value"] = coarse;
    } else {
        const std::size_t npts = std::size_t{1} << spec.log2_points;
        boost::random::sobol gen(static_cast<unsigned>(d));
        std::vector<double> pts(npts * static_cast<std::size_t>(d));
        const double scale = 1.0 / (static_cast<double>(boost::random::sobol::max()) + 1.0);
        for (auto& v : pts) v = static_cast<double>(gen()) * scale;
        std::mt19937_64 rng(spec.seed);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        const int shifts = std::max(2, spec.shifts);
        std::vector<double> totals;
        std::vector<double> z(static_cast<std::size_t>(d)), shift(static_cast<std::size_t>(d));
        for (int s = 0; s < shifts; ++s) {
            for (auto& v : shift) v = U(rng);
            std::vector<double> hits(comp.size(), 0.0);
            for (std::size_t q = 0; q < npts; ++q) {
                for (int i = 0; i < d; ++i) {
                    double v = pts[q * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] + shift[static_cast<std::size_t>(i)];
                    z[static_cast<std::size_t>(i)] = v >= 1.0 ? v - 1.0 : v;
                }
                for (std::size_t b = 0; b < comp.size(); ++b)
                    if (feasible(comp[b], z.data(), region, check_region)) hits[b] += 1.0;
            }
            double t = 0.0;
            for (std::size_t b = 0; b < comp.size(); ++b) {
                t += comp[b].weight * hits[b] / static_cast<double>(npts);
                per_branch[b] += hits[b] / static_cast<double>(npts) / shifts;
            }
            totals.push_back(t);
        }
        double mean = 0.0;
        for (double t : totals) mean += t;
        mean /= shifts;
        double var = 0.0;
        for (double t : totals) var += (t - mean) * (t - mean);
        var /= (shifts - 1);
        est.value = mean;
        est.error = std::sqrt(var / shifts);
        est.diagnostics["points_per_shift"] = npts;
        est.diagnostics["shifts"] = shifts;
        est.diagnostics["seed"] = spec.seed;
    }
    est.diagnostics["per_branch"] = per_branch;
    if (est.value < 0.0) {
        est.diagnostics["raw_value"] = est.value;
        est.error = std::max(est.error, -est.value);
        est.value = 0.0;
    }
    return est;
}

}  // namespace

ClosureStatus closure_status(const ConstraintSystem& cs) {
    ClosureStatus st = ClosureStatus::satisfied;
    for (const auto& g : cs.closure_constraints) {
        if (!g.is_constant()) st = ClosureStatus::lower_dimensional;
        else if (g.constant != 0) return ClosureStatus::inconsistent;
    }
    return st;
}

int num_link_equations(const Sentence& w) { return w.total_length() - w.num_letters(); }

ConstraintSystem build_constraint_system(const Sentence& w, IntegralKind kind, const BranchVector& branch) {
    Builder b(w, kind);
    return b.build(branch);
}

BranchEnumeration enumerate_branch_systems(const Sentence& w, IntegralKind kind) {
    Builder b(w, kind);
    return b.enumerate();
}

ThetaEstimate integrate_systems(const std::vector<ConstraintSystem>& systems, const LimitRegion& region,
                                const IntegrationSpec& spec) {
    std::vector<const ConstraintSystem*> ptr;
    for (const auto& s : systems) ptr.push_back(&s);
    return integrate_weighted(ptr, std::vector<double>(systems.size(), 1.0), region, spec);
}

std::optional<Sentence> cross_merge(const Sentence& w) {
    if (!is_P2(w)) return std::nullopt;
    const auto& w1 = w.words()[0];
    const auto& w2 = w.words()[1];
    std::vector<int> cross;
    for (int l : w1)
        if (std::find(w2.begin(), w2.end(), l) != w2.end()) cross.push_back(l);
    if (cross.size() != 2) return std::nullopt;
    Sentence m = w;
    for (auto& word : m.mutable_words())
        for (auto& l : word)
            if (l == cross[1]) l = cross[0];
    return m.canonical();
}

ThetaEstimate theta_integral(const Sentence& w, IntegralKind kind, const LimitRegion& region, const IntegrationSpec& spec,
                             Variant variant) {
    BranchEnumeration be = enumerate_branch_systems(w, kind);
    std::vector<const ConstraintSystem*> ptr;
    std::vector<double> weights;
    for (const auto& s : be.systems) {
        ptr.push_back(&s);
        weights.push_back(1.0);
    }
    BranchEnumeration merged;
    std::optional<Sentence> coarse;
    if (variant == Variant::exact) coarse = cross_merge(w);
    if (coarse) {
        merged = enumerate_branch_systems(*coarse, kind);
        for (const auto& s : merged.systems) {
            ptr.push_back(&s);
            weights.push_back(-1.0);
        }
    }
    ThetaEstimate est = integrate_weighted(ptr, weights, region, spec);
    est.branch_count = static_cast<int>(be.systems.size());
    est.degenerate = be.systems.empty();
    est.diagnostics["sentence"] = w.str();
    est.diagnostics["kind"] = integral_kind_name(kind);
    est.diagnostics["variant"] = variant_name(variant);
    est.diagnostics["branches_considered"] = be.considered;
    est.diagnostics["branches_pruned"] = be.pruned;
    est.diagnostics["branches_duplicate"] = be.duplicates;
    est.diagnostics["branches_inconsistent"] = be.inconsistent;
    est.diagnostics["branches_lower_dimensional"] = be.lower_dimensional;
    if (coarse) est.diagnostics["subtracted"] = coarse->str();
    return est;
}

ThetaEstimate fit_extrapolation(const std::vector<int>& N, const std::vector<double>& y) {
    if (N.size() < 3 || N.size() != y.size()) throw std::invalid_argument("extrapolation needs at least three N values");
    const int n = static_cast<int>(N.size());
    double scale = 0.0;
    for (double v : y) scale = std::max(scale, std::abs(v));
    const double floor_rss = n * std::pow(1e-13 * std::max(scale, 1e-300), 2);
    struct Fit {
        int order;
        Eigen::VectorXd beta;
        double rss;
        double aic;
        double se;
    };
    std::vector<Fit> fits;
    for (int order = 1; order <= 2; ++order) {
        const int k = order + 1;
        if (n < k + 1) continue;
        Eigen::MatrixXd X(n, k);
        Eigen::VectorXd Y(n);
        for (int i = 0; i < n; ++i) {
            double inv = 1.0 / N[static_cast<std::size_t>(i)];
            for (int c = 0; c < k; ++c) X(i, c) = std::pow(inv, c);
            Y(i) = y[static_cast<std::size_t>(i)];
        }
        Eigen::VectorXd beta = X.colPivHouseholderQr().solve(Y);
        double rss = (X * beta - Y).squaredNorm();
        double s2 = rss / (n - k);
        Eigen::MatrixXd cov = s2 * (X.transpose() * X).inverse();
        double aic = n * std::log(std::max(rss, floor_rss) / n) + 2.0 * k;
        fits.push_back({order, beta, rss, aic, std::sqrt(std::max(0.0, cov(0, 0)))});
    }
    const Fit* best = &fits[0];
    for (const auto& f : fits)
        if (f.aic < best->aic - 1e-9) best = &f;
    ThetaEstimate est;
    est.method = "extrapolation";
    double raw = best->beta(0);
    est.value = raw;
    est.error = best->se;
    std::vector<double> coef(best->beta.data(), best->beta.data() + best->beta.size());
    est.diagnostics["model"] = best->order == 1 ? "theta+c/N" : "theta+c/N+c2/N^2";
    est.diagnostics["coefficients"] = coef;
    est.diagnostics["rss"] = best->rss;
    nlohmann::json aics = nlohmann::json::object();
    for (const auto& f : fits) aics[f.order == 1 ? "order1" : "order2"] = f.aic;
    est.diagnostics["aic"] = aics;
    // Non-monotone sequences get a low-confidence flag.
    int sign_changes = 0, last = 0;
    for (int i = 1; i < n; ++i) {
        double dlt = y[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i - 1)];
        if (std::abs(dlt) <= 1e-12 * std::max(scale, 1.0)) continue;
        int s = dlt > 0 ? 1 : -1;
        if (last != 0 && s != last) ++sign_changes;
        last = s;
    }
    est.low_confidence = sign_changes > 0;
    est.diagnostics["sign_changes"] = sign_changes;
    if (raw < 0.0) {
        est.diagnostics["raw_value"] = raw;
        est.error = std::max(est.error, -raw);
        est.value = 0.0;
    }
    return est;
}

ThetaEstimate theta_extrapolate(const LinkSpec& link, const MaskSpec& mask, const Sentence& w,
                                const std::vector<int>& N_grid, const ExtrapolationOptions& opts) {
    if (N_grid.size() < 3) throw std::invalid_argument("extrapolation needs at least three N values");
    std::vector<double> y;
    nlohmann::json counts = nlohmann::json::array();
    for (int N : N_grid) {
        auto rec = count_circuits(link, mask, w, N, opts.variant, opts.masked, opts.count);
        y.push_back(rec.normalized);
        counts.push_back(rec.value.str());
    }
    ThetaEstimate est = fit_extrapolation(N_grid, y);
    est.diagnostics["N"] = N_grid;
    est.diagnostics["normalized"] = y;
    est.diagnostics["counts"] = counts;
    est.diagnostics["sentence"] = w.str();
    est.diagnostics["variant"] = variant_name(opts.variant);
    return est;
}

}  // namespace patlim

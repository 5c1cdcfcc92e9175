#include "patlim/circuits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace patlim {

const char* variant_name(Variant v) { return v == Variant::exact ? "exact" : "star"; }

Variant parse_variant(const std::string& s) {
    if (s == "exact") return Variant::exact;
    if (s == "star") return Variant::star;
    throw std::invalid_argument("unknown variant: " + s);
}

namespace {

std::string budget_message(std::uint64_t budget, const Sentence& w, int N) {
    return "search budget of " + std::to_string(budget) + " nodes exceeded for " + w.str() +
           " at N=" + std::to_string(N) + " (a priori bound N^F with F=" +
           std::to_string(generating_vertices(w).F) + ")";
}

// Depth-first assignment in dictionary vertex order.
class Search {
public:
    Search(const LinkTable& t, const std::vector<std::uint8_t>* mask, const Sentence& w, bool exact,
           std::uint64_t budget, CountStats* stats)
        : t_(t), mask_(mask), exact_(exact), budget_(budget), stats_(stats), w_(w) {
        k_ = w.k();
        for (const auto& word : w.words()) {
            std::vector<int> lw;
            for (int l : word) lw.push_back(l - 1);
            words_.push_back(std::move(lw));
        }
        pi_.resize(static_cast<std::size_t>(k_));
        for (int u = 0; u < k_; ++u) pi_[static_cast<std::size_t>(u)].assign(words_[static_cast<std::size_t>(u)].size() + 1, 0);
        val_.assign(static_cast<std::size_t>(w.num_letters()), -1);
        if (exact_) owner_.assign(static_cast<std::size_t>(t.num_values), -1);
    }

    std::uint64_t run() {
        rec(0, 0);
        return count_;
    }

private:
    bool allowed(int a, int b) const { return !mask_ || (*mask_)[static_cast<std::size_t>(a) * t_.N + b]; }

    void tick() {
        if (++nodes_ > budget_) throw BudgetExceeded(budget_message(budget_, w_, t_.N), budget_);
        if (stats_) ++stats_->nodes;
    }

    void note_branching(int b) {
        if (stats_) stats_->max_branching_nongenerating = std::max(stats_->max_branching_nongenerating, b);
    }

    // Places value v for letter l at a step, then continues at (u, j+1).
    void place(int u, int j, int c, std::int32_t v, int l) {
        auto& val = val_[static_cast<std::size_t>(l)];
        pi_[static_cast<std::size_t>(u)][static_cast<std::size_t>(j)] = c;
        if (val >= 0) {
            if (v != val) return;
            advance(u, j);
            return;
        }
        if (exact_) {
            auto& own = owner_[static_cast<std::size_t>(v)];
            if (own >= 0) return;
            own = l;
            val = v;
            advance(u, j);
            val = -1;
            own = -1;
        } else {
            val = v;
            advance(u, j);
            val = -1;
        }
    }

    void advance(int u, int j) {
        const int p = static_cast<int>(words_[static_cast<std::size_t>(u)].size());
        if (j == p) rec(u + 1, 0);
        else rec(u, j + 1);
    }

    void rec(int u, int j) {
        if (u == k_) {
            ++count_;
            return;
        }
        const auto& word = words_[static_cast<std::size_t>(u)];
        auto& pi = pi_[static_cast<std::size_t>(u)];
        const int p = static_cast<int>(word.size());
        if (j == 0) {
            const std::int32_t t = val_[static_cast<std::size_t>(word[0])];
            if (t >= 0) {
                // First step already constrained: seed (pi(0), pi(1)) from the value's pairs.
                const int b = t_.val_start[static_cast<std::size_t>(t)];
                const int e = t_.val_start[static_cast<std::size_t>(t) + 1];
                for (int k = b; k < e; ++k) {
                    tick();
                    int a = t_.val_i[static_cast<std::size_t>(k)], c = t_.val_j[static_cast<std::size_t>(k)];
                    if (stats_) {
                        auto row = t_.preimage(a, t);
                        note_branching(static_cast<int>(row.second - row.first));
                    }
                    if (!allowed(a, c)) continue;
                    if (p == 1 && a != c) continue;
                    pi[0] = a;
                    pi[1] = c;
                    advance(u, 1);
                }
                return;
            }
            for (int a = 0; a < t_.N; ++a) {
                tick();
                pi[0] = a;
                rec(u, 1);
            }
            return;
        }
        const int prev = pi[static_cast<std::size_t>(j - 1)];
        const int l = word[static_cast<std::size_t>(j - 1)];
        const std::int32_t lv = val_[static_cast<std::size_t>(l)];
        if (j == p) {
            tick();
            const int c = pi[0];
            const std::int32_t v = t_.at(prev, c);
            if (v < 0 || !allowed(prev, c)) return;
            place(u, j, c, v, l);
            return;
        }
        if (lv >= 0) {
            auto range = t_.preimage(prev, lv);
            note_branching(static_cast<int>(range.second - range.first));
            for (const std::int32_t* c = range.first; c != range.second; ++c) {
                tick();
                if (!allowed(prev, *c)) continue;
                pi[static_cast<std::size_t>(j)] = *c;
                advance(u, j);
            }
            return;
        }
        for (int c = 0; c < t_.N; ++c) {
            tick();
            const std::int32_t v = t_.at(prev, c);
            if (v < 0 || !allowed(prev, c)) continue;
            place(u, j, c, v, l);
        }
    }

    const LinkTable& t_;
    const std::vector<std::uint8_t>* mask_;
    bool exact_;
    std::uint64_t budget_;
    CountStats* stats_;
    const Sentence& w_;
    int k_ = 0;
    std::vector<std::vector<int>> words_;
    std::vector<std::vector<int>> pi_;
    std::vector<std::int32_t> val_;
    std::vector<int> owner_;
    std::uint64_t count_ = 0;
    std::uint64_t nodes_ = 0;
};

constexpr int kMaxTableN = 4096;

int checked_N(int N) {
    if (N > kMaxTableN)
        throw BudgetExceeded("N=" + std::to_string(N) + " exceeds the link table limit of " + std::to_string(kMaxTableN),
                             static_cast<std::uint64_t>(kMaxTableN));
    return N;
}

// The search visits every choice of each generating vertex, and a k-tuple of
// circuits has only N^{sum of lengths} assignments, so N^min(F, sum p) bounds
// the size a priori; refuse before allocating when it exceeds the budget.
void check_a_priori(const Sentence& w, int N, Variant variant, const CountOptions& opts) {
    std::vector<Sentence> parts;
    if (variant == Variant::star && opts.factorize_star) {
        for (const auto& comp : cluster_decompose(w).components) parts.push_back(w.sub_sentence(comp));
    } else {
        parts.push_back(w);
    }
    double total = 0.0;
    for (const auto& s : parts) total += std::pow(static_cast<double>(N), std::min(generating_vertices(s).F, s.total_length()));
    if (total > static_cast<double>(opts.budget_nodes))
        throw BudgetExceeded("a priori search size N^min(F, sum p) = " + std::to_string(total) + " for " + w.str() + " at N=" +
                                 std::to_string(N) + " exceeds the budget of " + std::to_string(opts.budget_nodes) +
                                 " nodes",
                             opts.budget_nodes);
}

}  // namespace

CircuitCounter::CircuitCounter(const LinkSpec& link, const MaskSpec& mask, int N)
    : N_(N), table_(build_link_table(link, checked_N(N))), mask_(mask_table(mask, N)) {
    B_ = table_.max_row_multiplicity();
}

BigInt CircuitCounter::count(const Sentence& w, Variant variant, bool masked, const CountOptions& opts,
                             CountStats* stats) const {
    if (!w.is_canonical()) throw std::invalid_argument("sentence is not canonical: " + w.str());
    check_a_priori(w, N_, variant, opts);
    if (variant == Variant::star && opts.factorize_star) {
        ClusterInfo ci = cluster_decompose(w);
        if (ci.components.size() > 1) {
            BigInt prod = 1;
            CountOptions sub = opts;
            sub.factorize_star = false;
            for (const auto& comp : ci.components) {
                prod *= count(w.sub_sentence(comp), variant, masked, sub, stats);
                if (prod == 0) break;
            }
            return prod;
        }
    }
    Search s(table_, masked ? &mask_ : nullptr, w, variant == Variant::exact, opts.budget_nodes, stats);
    return BigInt(s.run());
}

void fill_normalization(CircuitCountRecord& r) {
    const int twice = r.total_length + r.k;
    if (twice % 2 == 0) {
        BigInt den = boost::multiprecision::pow(BigInt(r.N), static_cast<unsigned>(twice / 2));
        r.normalized_exact = Rational(r.value, den);
        r.normalized = to_double(*r.normalized_exact);
    } else {
        r.normalized_exact.reset();
        boost::multiprecision::cpp_rational q(r.value, boost::multiprecision::pow(BigInt(r.N), static_cast<unsigned>(twice / 2)));
        r.normalized = to_double(q) / std::sqrt(static_cast<double>(r.N));
    }
}

CircuitCountRecord count_circuits(const LinkSpec& link, const MaskSpec& mask, const Sentence& w, int N,
                                  Variant variant, bool masked, const CountOptions& opts, CountStats* stats) {
    if (!w.is_canonical()) throw std::invalid_argument("sentence is not canonical: " + w.str());
    check_a_priori(w, N, variant, opts);
    CircuitCounter counter(link, mask, N);
    CircuitCountRecord r;
    r.N = N;
    r.k = w.k();
    r.total_length = w.total_length();
    r.variant = variant;
    r.masked_flag = masked;
    r.value = counter.count(w, variant, masked, opts, stats);
    if (variant == Variant::exact) (masked ? r.masked : r.raw_exact) = r.value;
    else (masked ? r.masked_star : r.raw_star) = r.value;
    fill_normalization(r);
    return r;
}

CircuitCountRecord full_circuit_record(const LinkSpec& link, const MaskSpec& mask, const Sentence& w, int N,
                                       Variant variant, const CountOptions& opts) {
    if (!w.is_canonical()) throw std::invalid_argument("sentence is not canonical: " + w.str());
    check_a_priori(w, N, Variant::exact, opts);
    CircuitCounter counter(link, mask, N);
    CircuitCountRecord r;
    r.N = N;
    r.k = w.k();
    r.total_length = w.total_length();
    r.variant = variant;
    r.masked_flag = true;
    r.raw_exact = counter.count(w, Variant::exact, false, opts);
    r.raw_star = counter.count(w, Variant::star, false, opts);
    r.masked = counter.count(w, Variant::exact, true, opts);
    r.masked_star = counter.count(w, Variant::star, true, opts);
    r.value = variant == Variant::exact ? *r.masked : *r.masked_star;
    fill_normalization(r);
    return r;
}

BigInt count_circuits_bruteforce(const LinkSpec& link, const MaskSpec& mask, const Sentence& w, int N,
                                 Variant variant, bool masked, std::uint64_t cap) {
    const int total = w.total_length();
    double tuples = std::pow(static_cast<double>(N), total);
    if (tuples > static_cast<double>(cap))
        throw BudgetExceeded("brute-force cap exceeded: N^(pk)=" + std::to_string(tuples), cap);
    // Direct evaluation, independent of the preimage tables.
    std::vector<LinkValue> L(static_cast<std::size_t>(N) * N);
    std::vector<char> zero(static_cast<std::size_t>(N) * N), in(static_cast<std::size_t>(N) * N);
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j) {
            std::size_t k = static_cast<std::size_t>(i - 1) * N + (j - 1);
            zero[k] = link.is_zero_entry(i, j, N);
            if (!zero[k]) L[k] = link.eval(i, j, N);
            in[k] = mask.contains(i, j, N);
        }
    std::vector<int> word_of, pos_of, letter;
    for (int u = 0; u < w.k(); ++u)
        for (int j = 0; j < w.length(u + 1); ++j) {
            word_of.push_back(u);
            pos_of.push_back(j);
            letter.push_back(w.words()[static_cast<std::size_t>(u)][static_cast<std::size_t>(j)]);
        }
    std::vector<int> start(static_cast<std::size_t>(w.k()), 0);
    for (int u = 1; u < w.k(); ++u) start[static_cast<std::size_t>(u)] = start[static_cast<std::size_t>(u - 1)] + w.length(u);

    std::vector<int> idx(static_cast<std::size_t>(total), 0);
    std::vector<std::size_t> step(static_cast<std::size_t>(total));
    BigInt count = 0;
    while (true) {
        bool ok = true;
        for (int s = 0; s < total && ok; ++s) {
            int u = word_of[static_cast<std::size_t>(s)];
            int len = w.length(u + 1);
            int a = idx[static_cast<std::size_t>(s)];
            int b = pos_of[static_cast<std::size_t>(s)] + 1 == len ? idx[static_cast<std::size_t>(start[static_cast<std::size_t>(u)])]
                                                                   : idx[static_cast<std::size_t>(s) + 1];
            step[static_cast<std::size_t>(s)] = static_cast<std::size_t>(a) * N + b;
            if (zero[step[static_cast<std::size_t>(s)]]) ok = false;
            if (masked && !in[step[static_cast<std::size_t>(s)]]) ok = false;
        }
        for (int s = 0; s < total && ok; ++s)
            for (int r = s + 1; r < total && ok; ++r) {
                bool same_letter = letter[static_cast<std::size_t>(s)] == letter[static_cast<std::size_t>(r)];
                bool same_value = L[step[static_cast<std::size_t>(s)]] == L[step[static_cast<std::size_t>(r)]];
                if (same_letter && !same_value) ok = false;
                if (variant == Variant::exact && !same_letter && same_value) ok = false;
            }
        if (ok) ++count;
        int s = total - 1;
        while (s >= 0 && ++idx[static_cast<std::size_t>(s)] == N) idx[static_cast<std::size_t>(s--)] = 0;
        if (s < 0) break;
    }
    return count;
}

double normalized_count(const CircuitCountRecord& record, int p, int k) {
    const double e = (static_cast<double>(p) * k + k) / 2.0;
    return record.value.convert_to<double>() / std::pow(static_cast<double>(record.N), e);
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

ScalingProfile scaling_profile(const LinkSpec& link, const MaskSpec& mask, const Sentence& w,
                               const std::vector<int>& N_grid, Variant variant, bool masked,
                               const CountOptions& opts) {
    if (N_grid.size() < 2) throw std::invalid_argument("scaling profile needs at least two N values");
    ScalingProfile prof;
    std::vector<double> lx, ly;
    bool any_zero = false;
    for (int N : N_grid) {
        auto rec = count_circuits(link, mask, w, N, variant, masked, opts);
        prof.N.push_back(N);
        prof.values.push_back(rec.normalized);
        if (rec.normalized <= 0.0) any_zero = true;
        lx.push_back(std::log(static_cast<double>(N)));
        ly.push_back(std::log(rec.normalized));
    }
    if (any_zero) {
        prof.slope = -std::numeric_limits<double>::infinity();
        prof.classification = "vanishing";
        return prof;
    }
    prof.slope = ls_slope(lx, ly);
    if (prof.slope > 0.1) prof.classification = "growing";
    else if (prof.slope < -0.1) prof.classification = "vanishing";
    else prof.classification = "bounded";
    return prof;
}

}  // namespace patlim

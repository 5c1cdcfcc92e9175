#include "patlim/link.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace patlim {

namespace {

struct KindName {
    LinkKind kind;
    const char* name;
};

constexpr KindName kKindNames[] = {
    {LinkKind::wigner, "wigner"},
    {LinkKind::toeplitz_abs, "toeplitz_abs"},
    {LinkKind::toeplitz_signed, "toeplitz_signed"},
    {LinkKind::hankel, "hankel"},
    {LinkKind::reverse_circulant, "reverse_circulant"},
    {LinkKind::symmetric_circulant, "symmetric_circulant"},
    {LinkKind::palindromic_toeplitz, "palindromic_toeplitz"},
    {LinkKind::palindromic_hankel, "palindromic_hankel"},
    {LinkKind::generalized_toeplitz, "generalized_toeplitz"},
    {LinkKind::generalized_hankel, "generalized_hankel"},
    {LinkKind::block, "block"},
    {LinkKind::checkerboard, "checkerboard"},
    {LinkKind::custom, "custom"},
};

const char* kind_name(LinkKind k) {
    for (const auto& kn : kKindNames)
        if (kn.kind == k) return kn.name;
    return "unknown";
}

void check_index(int i, int j, int N) {
    if (N < 1) throw std::out_of_range("dimension must be positive");
    if (i < 1 || i > N || j < 1 || j > N)
        throw std::out_of_range("index out of range: (" + std::to_string(i) + "," +
                                std::to_string(j) + ") for N=" + std::to_string(N));
}

void validate_generalized(std::int64_t& alpha, std::int64_t& beta) {
    if (alpha <= 0 || beta <= 0)
        throw std::invalid_argument("generalized link parameters must be positive");
    std::int64_t g = std::gcd(alpha, beta);
    alpha /= g;
    beta /= g;
}

}  // namespace

LinkSpec LinkSpec::wigner() { return LinkSpec(LinkKind::wigner); }
LinkSpec LinkSpec::toeplitz_abs() { return LinkSpec(LinkKind::toeplitz_abs); }
LinkSpec LinkSpec::toeplitz_signed() { return LinkSpec(LinkKind::toeplitz_signed); }
LinkSpec LinkSpec::hankel() { return LinkSpec(LinkKind::hankel); }
LinkSpec LinkSpec::reverse_circulant() { return LinkSpec(LinkKind::reverse_circulant); }
LinkSpec LinkSpec::symmetric_circulant() { return LinkSpec(LinkKind::symmetric_circulant); }
LinkSpec LinkSpec::palindromic_toeplitz() { return LinkSpec(LinkKind::palindromic_toeplitz); }
LinkSpec LinkSpec::palindromic_hankel() { return LinkSpec(LinkKind::palindromic_hankel); }

LinkSpec LinkSpec::generalized_toeplitz(std::int64_t alpha, std::int64_t beta) {
    validate_generalized(alpha, beta);
    LinkSpec s(LinkKind::generalized_toeplitz);
    s.alpha_ = alpha;
    s.beta_ = beta;
    return s;
}

LinkSpec LinkSpec::generalized_hankel(std::int64_t alpha, std::int64_t beta) {
    validate_generalized(alpha, beta);
    LinkSpec s(LinkKind::generalized_hankel);
    s.alpha_ = alpha;
    s.beta_ = beta;
    return s;
}

LinkSpec LinkSpec::block(const LinkSpec& outer, const LinkSpec& inner, int inner_dim) {
    if (inner_dim < 1) throw std::invalid_argument("block inner dimension must be >= 1");
    LinkSpec s(LinkKind::block);
    s.m_ = inner_dim;
    s.a_ = std::make_shared<const LinkSpec>(outer);
    s.b_ = std::make_shared<const LinkSpec>(inner);
    return s;
}

LinkSpec LinkSpec::checkerboard(const LinkSpec& base, int k) {
    if (k < 1) throw std::invalid_argument("checkerboard period must be >= 1");
    LinkSpec s(LinkKind::checkerboard);
    s.m_ = k;
    s.a_ = std::make_shared<const LinkSpec>(base);
    return s;
}

LinkSpec LinkSpec::custom(std::vector<std::vector<LinkValue>> table) {
    const std::size_t n = table.size();
    if (n == 0) throw std::invalid_argument("custom link table is empty");
    std::size_t d = table[0].empty() ? 0 : table[0][0].size();
    for (std::size_t i = 0; i < n; ++i) {
        if (table[i].size() != n) throw std::invalid_argument("custom link table is not square");
        for (std::size_t j = 0; j < n; ++j)
            if (table[i][j].size() != d || d == 0)
                throw std::invalid_argument("custom link table has inconsistent tuple sizes");
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (table[i][j] != table[j][i])
                throw std::invalid_argument("custom link table is not symmetric at (" +
                                            std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
    LinkSpec s(LinkKind::custom);
    s.table_ = std::make_shared<const std::vector<std::vector<LinkValue>>>(std::move(table));
    return s;
}

LinkSpec LinkSpec::named(const std::string& name) {
    for (const auto& kn : kKindNames) {
        if (name != kn.name) continue;
        switch (kn.kind) {
            case LinkKind::generalized_toeplitz:
            case LinkKind::generalized_hankel:
            case LinkKind::block:
            case LinkKind::checkerboard:
            case LinkKind::custom:
                throw std::invalid_argument("link kind '" + name + "' needs parameters");
            default:
                return LinkSpec(kn.kind);
        }
    }
    throw std::invalid_argument("unknown link kind: " + name);
}

int LinkSpec::codomain_dim() const {
    switch (kind_) {
        case LinkKind::wigner: return 2;
        case LinkKind::block: return a_->codomain_dim() + b_->codomain_dim();
        case LinkKind::checkerboard: return a_->codomain_dim() + 1;
        case LinkKind::custom: return static_cast<int>((*table_)[0][0].size());
        default: return 1;
    }
}

int LinkSpec::custom_dim() const { return table_ ? static_cast<int>(table_->size()) : 0; }

std::string LinkSpec::name() const {
    switch (kind_) {
        case LinkKind::generalized_toeplitz:
        case LinkKind::generalized_hankel:
            return std::string(kind_name(kind_)) + "(" + std::to_string(alpha_) + "," +
                   std::to_string(beta_) + ")";
        case LinkKind::block:
            return "block(" + a_->name() + "," + b_->name() + "," + std::to_string(m_) + ")";
        case LinkKind::checkerboard:
            return "checkerboard(" + a_->name() + "," + std::to_string(m_) + ")";
        default:
            return kind_name(kind_);
    }
}

bool LinkSpec::is_zero_entry(int i, int j, int N) const {
    check_index(i, j, N);
    switch (kind_) {
        case LinkKind::checkerboard:
            return ((i - j) % m_ + m_) % m_ == 0 || a_->is_zero_entry(i, j, N);
        case LinkKind::block: {
            if (N % m_ != 0) throw std::invalid_argument("block link: N not divisible by inner dimension");
            int d = N / m_;
            int r1 = (i - 1) / m_ + 1, s1 = (i - 1) % m_ + 1;
            int r2 = (j - 1) / m_ + 1, s2 = (j - 1) % m_ + 1;
            return a_->is_zero_entry(r1, r2, d) || b_->is_zero_entry(s1, s2, m_);
        }
        default:
            return false;
    }
}

void LinkSpec::eval_into(int i, int j, int N, LinkValue& out) const {
    const std::int64_t lo = std::min(i, j), hi = std::max(i, j);
    const std::int64_t d = hi - lo;
    switch (kind_) {
        case LinkKind::wigner:
            out.push_back(lo);
            out.push_back(hi);
            return;
        case LinkKind::toeplitz_abs:
            out.push_back(d);
            return;
        case LinkKind::toeplitz_signed:
            out.push_back(lo - hi);
            return;
        case LinkKind::hankel:
            out.push_back(lo + hi);
            return;
        case LinkKind::reverse_circulant:
            out.push_back((lo + hi - 2) % N);
            return;
        case LinkKind::symmetric_circulant:
            out.push_back(std::min<std::int64_t>(d, N - d));
            return;
        case LinkKind::palindromic_toeplitz:
            out.push_back(std::min<std::int64_t>(d, N - 1 - d));
            return;
        case LinkKind::palindromic_hankel: {
            std::int64_t s = lo + hi;
            out.push_back(s <= N + 1 ? std::min<std::int64_t>(s, N + 3 - s) : s);
            return;
        }
        case LinkKind::generalized_toeplitz:
            out.push_back(alpha_ * lo - beta_ * hi);
            return;
        case LinkKind::generalized_hankel:
            out.push_back(alpha_ * lo + beta_ * hi);
            return;
        case LinkKind::block: {
            if (N % m_ != 0) throw std::invalid_argument("block link: N=" + std::to_string(N) +
                                                         " not divisible by inner dimension " +
                                                         std::to_string(m_));
            int dd = N / m_;
            int r1 = (i - 1) / m_ + 1, s1 = (i - 1) % m_ + 1;
            int r2 = (j - 1) / m_ + 1, s2 = (j - 1) % m_ + 1;
            a_->eval_into(r1, r2, dd, out);
            b_->eval_into(s1, s2, m_, out);
            return;
        }
        case LinkKind::checkerboard:
            if (((i - j) % m_ + m_) % m_ == 0) {
                out.push_back(1);
                for (int c = 0; c < a_->codomain_dim(); ++c) out.push_back(0);
            } else {
                out.push_back(0);
                a_->eval_into(i, j, N, out);
            }
            return;
        case LinkKind::custom: {
            if (N != custom_dim())
                throw std::invalid_argument("custom link table defined for N=" +
                                            std::to_string(custom_dim()) + " only");
            const auto& v = (*table_)[i - 1][j - 1];
            out.insert(out.end(), v.begin(), v.end());
            return;
        }
    }
}

LinkValue LinkSpec::eval(int i, int j, int N) const {
    check_index(i, j, N);
    LinkValue out;
    out.reserve(static_cast<std::size_t>(codomain_dim()));
    eval_into(i, j, N, out);
    return out;
}

nlohmann::json LinkSpec::to_json() const {
    nlohmann::json j;
    j["kind"] = kind_name(kind_);
    switch (kind_) {
        case LinkKind::generalized_toeplitz:
        case LinkKind::generalized_hankel:
            j["params"] = {{"alpha", alpha_}, {"beta", beta_}};
            break;
        case LinkKind::block:
            j["params"] = {{"outer", a_->to_json()}, {"inner", b_->to_json()}, {"m", m_}};
            break;
        case LinkKind::checkerboard:
            j["params"] = {{"base", a_->to_json()}, {"k", m_}};
            break;
        case LinkKind::custom:
            j["params"] = {{"table", *table_}};
            break;
        default:
            break;
    }
    return j;
}

LinkSpec LinkSpec::from_json(const nlohmann::json& j) {
    if (j.is_string()) return named(j.get<std::string>());
    if (!j.is_object() || !j.contains("kind"))
        throw std::invalid_argument("link spec must be an object with a 'kind' field");
    const std::string kind = j.at("kind").get<std::string>();
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    if (kind == "generalized_toeplitz")
        return generalized_toeplitz(params.at("alpha").get<std::int64_t>(), params.at("beta").get<std::int64_t>());
    if (kind == "generalized_hankel")
        return generalized_hankel(params.at("alpha").get<std::int64_t>(), params.at("beta").get<std::int64_t>());
    if (kind == "block")
        return block(from_json(params.at("outer")), from_json(params.at("inner")), params.at("m").get<int>());
    if (kind == "checkerboard") return checkerboard(from_json(params.at("base")), params.at("k").get<int>());
    if (kind == "custom")
        return custom(params.at("table").get<std::vector<std::vector<LinkValue>>>());
    return named(kind);
}

LinkValue eval_link(const LinkSpec& link, int i, int j, int N) { return link.eval(i, j, N); }

LinkSpec compose_block(const LinkSpec& outer, const LinkSpec& inner, int inner_dim) {
    return LinkSpec::block(outer, inner, inner_dim);
}

std::pair<const std::int32_t*, const std::int32_t*> LinkTable::preimage(int r, std::int32_t v) const {
    const std::int32_t* vb = row_val.data() + row_start[r];
    const std::int32_t* ve = row_val.data() + row_start[r + 1];
    auto range = std::equal_range(vb, ve, v);
    const std::int32_t* cb = row_col.data() + (range.first - row_val.data());
    const std::int32_t* cend = row_col.data() + (range.second - row_val.data());
    return {cb, cend};
}

int LinkTable::max_row_multiplicity() const {
    int best = 0;
    for (int r = 0; r < N; ++r) {
        int run = 0;
        for (int k = row_start[r]; k < row_start[r + 1]; ++k) {
            run = (k > row_start[r] && row_val[k] == row_val[k - 1]) ? run + 1 : 1;
            best = std::max(best, run);
        }
    }
    return best;
}

LinkTable build_link_table(const LinkSpec& link, int N) {
    LinkTable t;
    t.N = N;
    const std::size_t nn = static_cast<std::size_t>(N) * N;
    std::vector<LinkValue> raw(nn);
    std::vector<char> zero(nn, 0);
    std::map<LinkValue, std::int32_t> ids;
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j) {
            std::size_t k = static_cast<std::size_t>(i - 1) * N + (j - 1);
            if (link.is_zero_entry(i, j, N)) {
                zero[k] = 1;
                continue;
            }
            raw[k] = link.eval(i, j, N);
            ids.emplace(raw[k], 0);
        }
    std::int32_t next = 0;
    t.values.reserve(ids.size());
    for (auto& kv : ids) {
        kv.second = next++;
        t.values.push_back(kv.first);
    }
    t.num_values = next;
    t.id.assign(nn, -1);
    for (std::size_t k = 0; k < nn; ++k)
        if (!zero[k]) t.id[k] = ids.at(raw[k]);

    t.row_start.assign(static_cast<std::size_t>(N) + 1, 0);
    std::vector<std::pair<std::int32_t, std::int32_t>> row;
    for (int r = 0; r < N; ++r) {
        row.clear();
        for (int c = 0; c < N; ++c)
            if (t.at(r, c) >= 0) row.emplace_back(t.at(r, c), c);
        std::sort(row.begin(), row.end());
        for (auto& vc : row) {
            t.row_val.push_back(vc.first);
            t.row_col.push_back(vc.second);
        }
        t.row_start[static_cast<std::size_t>(r) + 1] = static_cast<std::int32_t>(t.row_val.size());
    }

    std::vector<std::int32_t> counts(static_cast<std::size_t>(t.num_values) + 1, 0);
    for (auto v : t.id)
        if (v >= 0) ++counts[static_cast<std::size_t>(v) + 1];
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    t.val_start = counts;
    t.val_i.assign(static_cast<std::size_t>(counts.back()), 0);
    t.val_j.assign(static_cast<std::size_t>(counts.back()), 0);
    std::vector<std::int32_t> fill(counts.begin(), counts.end() - 1);
    for (int r = 0; r < N; ++r)
        for (int c = 0; c < N; ++c) {
            std::int32_t v = t.at(r, c);
            if (v < 0) continue;
            auto pos = static_cast<std::size_t>(fill[static_cast<std::size_t>(v)]++);
            t.val_i[pos] = r;
            t.val_j[pos] = c;
        }
    return t;
}

AssumptionBReport verify_assumption_B(const LinkSpec& link, const std::vector<int>& N_grid) {
    AssumptionBReport rep;
    for (int N : N_grid) rep.per_N.emplace_back(N, build_link_table(link, N).max_row_multiplicity());
    if (rep.per_N.empty()) return rep;
    // Constant over the tail (last half of the grid, at least one point).
    std::size_t tail = rep.per_N.size() / 2;
    int last = rep.per_N.back().second;
    bool constant = true;
    for (std::size_t k = tail; k < rep.per_N.size(); ++k)
        if (rep.per_N[k].second != last) constant = false;
    rep.bounded = constant;
    if (constant) {
        int best = 0;
        for (const auto& nb : rep.per_N) best = std::max(best, nb.second);
        rep.B = best;
    }
    return rep;
}

}  // namespace patlim

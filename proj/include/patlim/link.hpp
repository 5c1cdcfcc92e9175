#pragma once

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace patlim {

enum class LinkKind {
    wigner,
    toeplitz_abs,
    toeplitz_signed,
    hankel,
    reverse_circulant,
    symmetric_circulant,
    palindromic_toeplitz,
    palindromic_hankel,
    generalized_toeplitz,
    generalized_hankel,
    block,
    checkerboard,
    custom,
};

using LinkValue = std::vector<std::int64_t>;

// A symmetric link function family L_N : [N]^2 -> Z^d. Indices are 1-based.
class LinkSpec {
public:
    static LinkSpec wigner();
    static LinkSpec toeplitz_abs();
    static LinkSpec toeplitz_signed();
    static LinkSpec hankel();
    static LinkSpec reverse_circulant();
    static LinkSpec symmetric_circulant();
    static LinkSpec palindromic_toeplitz();
    static LinkSpec palindromic_hankel();
    static LinkSpec generalized_toeplitz(std::int64_t alpha, std::int64_t beta);
    static LinkSpec generalized_hankel(std::int64_t alpha, std::int64_t beta);
    static LinkSpec block(const LinkSpec& outer, const LinkSpec& inner, int inner_dim);
    // Entries with i = j (mod k) are deterministic zeros; the rest follow base.
    static LinkSpec checkerboard(const LinkSpec& base, int k);
    // table[i-1][j-1] is L(i,j) for a single fixed N = table.size().
    static LinkSpec custom(std::vector<std::vector<LinkValue>> table);
    // Parameter-free kinds by name ("toeplitz_abs", "hankel", ...).
    static LinkSpec named(const std::string& name);

    LinkKind kind() const { return kind_; }
    int codomain_dim() const;
    std::string name() const;

    LinkValue eval(int i, int j, int N) const;
    bool is_zero_entry(int i, int j, int N) const;

    std::int64_t alpha() const { return alpha_; }
    std::int64_t beta() const { return beta_; }
    int inner_dim() const { return m_; }
    int checker_k() const { return m_; }
    const LinkSpec& outer() const { return *a_; }
    const LinkSpec& inner() const { return *b_; }
    const LinkSpec& base() const { return *a_; }
    int custom_dim() const;

    nlohmann::json to_json() const;
    static LinkSpec from_json(const nlohmann::json& j);

private:
    explicit LinkSpec(LinkKind k) : kind_(k) {}
    void eval_into(int i, int j, int N, LinkValue& out) const;

    LinkKind kind_;
    std::int64_t alpha_ = 1;
    std::int64_t beta_ = 1;
    int m_ = 1;
    std::shared_ptr<const LinkSpec> a_;
    std::shared_ptr<const LinkSpec> b_;
    std::shared_ptr<const std::vector<std::vector<LinkValue>>> table_;
};

LinkValue eval_link(const LinkSpec& link, int i, int j, int N);

LinkSpec compose_block(const LinkSpec& outer, const LinkSpec& inner, int inner_dim);

struct AssumptionBReport {
    bool bounded = false;
    std::optional<int> B;
    std::vector<std::pair<int, int>> per_N;  // (N, max row multiplicity)
};

AssumptionBReport verify_assumption_B(const LinkSpec& link, const std::vector<int>& N_grid);

// Dense per-(link, N) tables. Value ids are ranks of the distinct tuples in
// lexicographic order; structural zeros get id -1. Rows and columns are 0-based.
struct LinkTable {
    int N = 0;
    int num_values = 0;
    std::vector<std::int32_t> id;  // N*N
    std::vector<LinkValue> values;

    // Row preimages: for row r, columns grouped by value id.
    std::vector<std::int32_t> row_start;  // N+1
    std::vector<std::int32_t> row_val;
    std::vector<std::int32_t> row_col;

    // All ordered pairs (i,j) carrying each value.
    std::vector<std::int32_t> val_start;  // num_values+1
    std::vector<std::int32_t> val_i;
    std::vector<std::int32_t> val_j;

    std::int32_t at(int r, int c) const { return id[static_cast<std::size_t>(r) * N + c]; }
    // Columns c with id(r,c) == v, as a [begin,end) range into row_col.
    std::pair<const std::int32_t*, const std::int32_t*> preimage(int r, std::int32_t v) const;
    int max_row_multiplicity() const;
};

LinkTable build_link_table(const LinkSpec& link, int N);

}  // namespace patlim

#pragma once

#include "patlim/circuits.hpp"
#include "patlim/combinat.hpp"
#include "patlim/link.hpp"
#include "patlim/mask.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace patlim {

// Continuum link families admitting the Riemann-integral construction.
enum class IntegralKind { sum, diff_signed, abs_diff, mod_sum, mod_absdiff };
const char* integral_kind_name(IntegralKind k);
IntegralKind parse_integral_kind(const std::string& s);
// The family whose continuum limit matches the link, if any.
std::optional<IntegralKind> integral_kind_for(const LinkSpec& link);

// c . v_S + constant.
struct LinearForm {
    std::vector<std::int64_t> coef;
    std::int64_t constant = 0;

    bool is_constant() const;
    double min_unit() const;  // over [0,1]^S
    double max_unit() const;
    double eval(const double* z) const;
    auto operator<=>(const LinearForm&) const = default;
};

// One choice per link equation. Signs are used by abs_diff and mod_absdiff,
// offsets (in -2..2) by mod_sum and mod_absdiff; unused parts stay empty.
struct BranchVector {
    std::vector<int> signs;
    std::vector<int> offsets;
};

struct ConstraintSystem {
    std::vector<Vertex> free_vertices;  // S
    // forms[u-1][j] expresses v_{u,j}.
    std::vector<std::vector<LinearForm>> forms;
    // Residuals f_{u,p} - f_{u,0} (and any other equality not absorbed into forms).
    std::vector<LinearForm> closure_constraints;
    // Steps (u, j) with their letters, in the order used for substitution.
    std::vector<Vertex> order;
    BranchVector branch;
    bool claim_b = false;  // reordered construction for pair partitions

    const LinearForm& form(int u, int j) const { return forms[static_cast<std::size_t>(u - 1)][static_cast<std::size_t>(j)]; }
};

enum class ClosureStatus { satisfied, inconsistent, lower_dimensional };
ClosureStatus closure_status(const ConstraintSystem& cs);

// Number of link equations (non-first letter occurrences) for W.
int num_link_equations(const Sentence& w);

ConstraintSystem build_constraint_system(const Sentence& w, IntegralKind kind, const BranchVector& branch = {});

struct BranchEnumeration {
    std::vector<ConstraintSystem> systems;  // closure satisfied, distinct, not pruned
    std::uint64_t considered = 0;
    std::uint64_t pruned = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t inconsistent = 0;
    std::uint64_t lower_dimensional = 0;
};

// All branch systems with a full-dimensional, nonempty feasible set.
BranchEnumeration enumerate_branch_systems(const Sentence& w, IntegralKind kind);

struct IntegrationSpec {
    enum class Mode { qmc, grid } mode = Mode::qmc;
    int log2_points = 14;  // Sobol points per shift
    int shifts = 16;       // Cranley-Patterson random shifts
    int grid_n = 32;       // midpoints per axis in grid mode
    std::uint64_t seed = 20240611ULL;
};

struct ThetaEstimate {
    double value = 0.0;
    std::string method;  // extrapolation | integral
    double error = 0.0;
    int branch_count = 0;
    bool low_confidence = false;
    bool degenerate = false;
    nlohmann::json diagnostics = nlohmann::json::object();
};

// Integrates the indicator of the feasible set of each system.
ThetaEstimate integrate_systems(const std::vector<ConstraintSystem>& systems, const LimitRegion& region,
                                const IntegrationSpec& spec = {});

// For a pair partition with exactly two cross pairs, the 2-4 partition obtained
// by merging them; star and exact limits differ by its star limit.
std::optional<Sentence> cross_merge(const Sentence& w);

// Star limit theta*(W) by default; Variant::exact subtracts the full-dimensional
// coarsening of a pair partition with two cross pairs.
ThetaEstimate theta_integral(const Sentence& w, IntegralKind kind, const LimitRegion& region,
                             const IntegrationSpec& spec = {}, Variant variant = Variant::star);

struct ExtrapolationOptions {
    Variant variant = Variant::exact;
    bool masked = true;
    CountOptions count;
};

ThetaEstimate theta_extrapolate(const LinkSpec& link, const MaskSpec& mask, const Sentence& w,
                                const std::vector<int>& N_grid, const ExtrapolationOptions& opts = {});

// Least-squares fit of y = theta + c1/N (+ c2/N^2) with the order chosen by AIC.
ThetaEstimate fit_extrapolation(const std::vector<int>& N, const std::vector<double>& y);

}  // namespace patlim

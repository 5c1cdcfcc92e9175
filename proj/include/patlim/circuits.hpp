#pragma once

#include "patlim/combinat.hpp"
#include "patlim/link.hpp"
#include "patlim/mask.hpp"
#include "patlim/rational.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace patlim {

enum class Variant { exact, star };
const char* variant_name(Variant v);
Variant parse_variant(const std::string& s);

class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(const std::string& what, std::uint64_t budget)
        : std::runtime_error(what), budget_(budget) {}
    std::uint64_t budget() const { return budget_; }

private:
    std::uint64_t budget_;
};

struct CircuitCountRecord {
    int N = 0;
    int k = 0;
    int total_length = 0;
    std::optional<BigInt> raw_exact;
    std::optional<BigInt> raw_star;
    std::optional<BigInt> masked;
    std::optional<BigInt> masked_star;
    Variant variant = Variant::exact;
    bool masked_flag = true;
    BigInt value;  // the requested (variant, masked) count
    // value / N^{(sum of lengths + k)/2}: exact when the exponent is an integer.
    std::optional<Rational> normalized_exact;
    double normalized = 0.0;
};

struct CountOptions {
    std::uint64_t budget_nodes = 1000000000ULL;
    bool factorize_star = true;  // star counts factor over clusters
};

struct CountStats {
    std::uint64_t nodes = 0;
    int max_branching_nongenerating = 0;
};

// Counter bound to one (link, mask, N); reuses the preimage tables.
class CircuitCounter {
public:
    CircuitCounter(const LinkSpec& link, const MaskSpec& mask, int N);
    int N() const { return N_; }
    const LinkTable& table() const { return table_; }
    int B() const { return B_; }
    BigInt count(const Sentence& w, Variant variant, bool masked, const CountOptions& opts = {},
                 CountStats* stats = nullptr) const;

private:
    int N_;
    LinkTable table_;
    std::vector<std::uint8_t> mask_;
    int B_;
};

CircuitCountRecord count_circuits(const LinkSpec& link, const MaskSpec& mask, const Sentence& w, int N,
                                  Variant variant, bool masked, const CountOptions& opts = {},
                                  CountStats* stats = nullptr);

// All four counts.
CircuitCountRecord full_circuit_record(const LinkSpec& link, const MaskSpec& mask, const Sentence& w, int N,
                                       Variant variant = Variant::exact, const CountOptions& opts = {});

// Enumerates every tuple of circuits and checks the defining predicate.
BigInt count_circuits_bruteforce(const LinkSpec& link, const MaskSpec& mask, const Sentence& w, int N,
                                 Variant variant, bool masked, std::uint64_t cap = 100000000ULL);

// value / N^{(pk+k)/2}.
double normalized_count(const CircuitCountRecord& record, int p, int k);
void fill_normalization(CircuitCountRecord& record);

struct ScalingProfile {
    std::vector<int> N;
    std::vector<double> values;
    double slope = 0.0;
    std::string classification;  // bounded | vanishing | growing
};

ScalingProfile scaling_profile(const LinkSpec& link, const MaskSpec& mask, const Sentence& w,
                               const std::vector<int>& N_grid, Variant variant = Variant::star,
                               bool masked = true, const CountOptions& opts = {});

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace patlim

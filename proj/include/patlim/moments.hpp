#pragma once

#include "patlim/circuits.hpp"
#include "patlim/limits.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace patlim {

enum class ThetaMethod { automatic, integral, extrapolation_exact, extrapolation_star };
const char* theta_method_name(ThetaMethod m);
ThetaMethod parse_theta_method(const std::string& s);

struct ThetaTerm {
    std::string sentence;
    std::string cls;  // P2 | P24 | cluster
    int cross = 0;    // number of cross-matched pairs (P2 only)
    double value = 0.0;
    double error = 0.0;
    std::string route;
    bool low_confidence = false;
};

struct MomentReport {
    int p = 0;
    std::string parity;
    double sigma2 = 0.0;
    double sigma2_error = 0.0;
    double p2_subtotal = 0.0;
    double p24_subtotal = 0.0;
    std::map<int, double> odd_moments;
    double kappa = 3.0;
    std::vector<double> input_moments;  // m_0, m_1, ...
    std::string provenance;
    bool flagged = false;
    std::vector<ThetaTerm> terms;

    nlohmann::json to_json() const;
};

struct ThetaOptions {
    ThetaMethod method = ThetaMethod::automatic;
    std::vector<int> N_grid;  // empty: a default grid chosen by p and k
    IntegrationSpec integration;
    CountOptions count;
};

// Exact-variant theta(W) for one sentence by the requested route.
ThetaTerm theta_term(const LinkSpec& link, const MaskSpec& mask, const Sentence& w, const ThetaOptions& opts);

MomentReport sigma_p_squared(const LinkSpec& link, const MaskSpec& mask, int p, double kappa,
                             const ThetaOptions& opts = {});

// m_r of a standard normal for r = 0..r_max.
std::vector<double> standard_normal_moments(int r_max);

MomentReport odd_moment_limits(const LinkSpec& link, const MaskSpec& mask, int p, int k_max,
                               const std::vector<double>& input_moments, const ThetaOptions& opts = {});

// beta_k for k = 1..k_max.
std::map<int, double> wick_moments(double sigma2, int k_max);
double double_factorial(int n);

struct WitnessLevel {
    int N = 0;
    double c1 = 0.0;
    double c2 = 0.0;
    std::string worst_value;  // L-value attaining c1
    int worst_row = 0;        // 1-based row attaining c2
    std::int64_t z_size = 0;
    std::int64_t s_size = 0;
};

struct GaussianWitness {
    bool ok = false;
    std::string builder;
    std::string z_descriptor;
    std::string s_descriptor;
    double c1 = 0.0;
    double c2 = 0.0;
    std::vector<int> verified_at;
    std::vector<WitnessLevel> levels;
    std::string failure;
    std::string note;

    nlohmann::json to_json() const;
};

// S_n as a predicate on 1-based (i, j) at size N.
using WitnessSet = std::function<bool(int i, int j, int N)>;

GaussianWitness verify_gaussian_conditions(const LinkSpec& link, const MaskSpec& mask, const std::string& builder,
                                           const std::vector<int>& N_grid, double floor = 0.05,
                                           const WitnessSet& custom = {});

}  // namespace patlim

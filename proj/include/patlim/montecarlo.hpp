#pragma once

#include "patlim/link.hpp"
#include "patlim/mask.hpp"
#include "patlim/philox.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace patlim {

// Input law with mean 0 and variance 1.
struct Distribution {
    enum class Kind { std_normal, rademacher, centered_uniform, custom } kind = Kind::std_normal;
    // custom: a discrete law on `support` with probabilities `weights`.
    std::vector<double> support;
    std::vector<double> weights;

    static Distribution std_normal() { return {}; }
    static Distribution rademacher() { return {Kind::rademacher, {}, {}}; }
    static Distribution centered_uniform() { return {Kind::centered_uniform, {}, {}}; }
    static Distribution custom(std::vector<double> support, std::vector<double> weights);
    static Distribution named(const std::string& name);

    std::string name() const;
    double moment(int r) const;
    double kappa() const { return moment(4); }
    void validate() const;
    double draw(const KeyedStream& s, std::uint32_t rep, std::uint32_t value, std::uint32_t step) const;

    nlohmann::json to_json() const;
    static Distribution from_json(const nlohmann::json& j);
};

enum class TraceMethod { automatic, eigen, power };
const char* trace_method_name(TraceMethod m);
TraceMethod parse_trace_method(const std::string& s);

struct EnsembleConfig {
    LinkSpec link = LinkSpec::toeplitz_abs();
    MaskSpec mask = MaskSpec::full();
    int N = 64;
    int p = 2;
    Distribution distribution;
    int R = 1000;
    std::uint64_t seed = 1;
    TraceMethod method = TraceMethod::automatic;

    void validate() const;
    nlohmann::json to_json() const;
    static EnsembleConfig from_json(const nlohmann::json& j);
};

struct SampleBatch {
    std::vector<double> values;  // eta_p, centered by the batch mean of the trace power
    std::vector<double> traces;  // Tr((A/sqrt N)^p) per replicate
    double trace_mean = 0.0;
    std::uint64_t seed = 0;
    nlohmann::json config;
};

struct ProcessBatch {
    std::vector<double> time_grid;
    Eigen::MatrixXd paths;  // R x |grid|, kappa_p(t) centered per column
    std::vector<double> trace_means;
    std::uint64_t seed = 0;
    nlohmann::json config;
};

// Reusable sampler: the link table and mask are materialized once.
class EnsembleSampler {
public:
    explicit EnsembleSampler(const EnsembleConfig& cfg);
    const EnsembleConfig& config() const { return cfg_; }
    int num_values() const { return table_.num_values; }
    // Variates x_v for one replicate (time step 0).
    std::vector<double> variates(int rep, int step = 0) const;
    Eigen::MatrixXd matrix(const std::vector<double>& x) const;
    Eigen::MatrixXd matrix(int rep) const { return matrix(variates(rep)); }
    // Tr((A/sqrt N)^p), using entry multiplicities when p <= 2.
    double trace(const std::vector<double>& x, int p) const;
    // Number of mask entries carrying each value.
    const std::vector<double>& multiplicity() const { return mult_; }

private:
    EnsembleConfig cfg_;
    LinkTable table_;
    std::vector<std::uint8_t> mask_;
    std::vector<double> mult_;
    std::vector<double> diag_mult_;
};

Eigen::MatrixXd sample_matrix(const EnsembleConfig& cfg, int replicate);

// Tr((M/sqrt N)^p) with N = rows of M.
double trace_power(const Eigen::MatrixXd& m, int p, TraceMethod method = TraceMethod::automatic);

SampleBatch sample_eta(const EnsembleConfig& cfg);

ProcessBatch sample_process(const EnsembleConfig& cfg, const std::vector<double>& time_grid);

struct MomentEstimate {
    double value = 0.0;
    double standard_error = 0.0;
};

// Central sample moments (order 2 is the unbiased variance) with jackknife errors.
std::map<int, MomentEstimate> empirical_moments(const std::vector<double>& x, const std::vector<int>& orders);

struct ShapeEstimate {
    double skewness = 0.0;
    double skewness_se = 0.0;
    double excess_kurtosis = 0.0;
    double excess_kurtosis_se = 0.0;
};

// Jackknife standardized skewness and excess kurtosis.
ShapeEstimate shape_moments(const std::vector<double>& x);

// sup |F_n(x) - Phi(x / sigma)|.
double ks_distance_normal(std::vector<double> x, double sigma);

// Sum with compensated accumulation.
double stable_sum(const std::vector<double>& x);

struct TightnessResult {
    double s = 0.0;
    double t = 0.0;
    double fourth_moment = 0.0;
    double fourth_moment_se = 0.0;
    double ratio = 0.0;
    double ratio_se = 0.0;
};

std::vector<TightnessResult> tightness_check(const ProcessBatch& batch, const std::vector<std::pair<double, double>>& pairs);

// Per pair, true when the ratio at the largest N exceeds the smallest-N ratio
// by more than z combined standard errors.
std::vector<bool> tightness_growth_flags(const std::vector<std::vector<TightnessResult>>& sweep, double z = 3.0);

struct ThetaTable {
    std::vector<std::pair<double, int>> p2;  // (theta, cross pairs c0)
    double p24_sum = 0.0;
    double kappa = 3.0;  // Gaussian increments
};

// Limit of Cov(kappa_p(s), kappa_p(t)) for s <= t.
double theoretical_covariance(const ThetaTable& table, int p, double s, double t);

struct CovarianceComparison {
    double s = 0.0;
    double t = 0.0;
    double theoretical = 0.0;
    double empirical = 0.0;
    double standard_error = 0.0;
    double z = 0.0;
};

std::vector<CovarianceComparison> covariance_check(const ProcessBatch& batch, int p, const ThetaTable& table,
                                                   const std::vector<std::pair<double, double>>& pairs);

}  // namespace patlim

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace momlin {

struct NetworkCase;

// Two-factor affine load model: each bus load scales by a_{i,1} r1 + a_{i,2} r2
// with r drawn from a truncated bivariate Gaussian.
struct LoadModel {
    Eigen::Vector2d mean{0.85, 0.85};
    Eigen::Matrix2d cov;
    Eigen::Vector2d lo{0.7, 0.7};     // componentwise truncation interval
    Eigen::Vector2d hi{1.0, 1.0};
    // per-bus (a_{i,1}, a_{i,2}), rows aligned with case bus order
    std::vector<std::pair<double, double>> weights;

    LoadModel();

    // Interpolating weights a_{i,1} = (i-1)/(N_B-1) over the case's buses and
    // the default mean/covariance/truncation.
    static LoadModel standard_profile(const NetworkCase& c);
};

struct ScenarioSet {
    Eigen::MatrixX2d samples; // M x 2 factor draws
    std::uint64_t seed = 0;
    int M() const { return static_cast<int>(samples.rows()); }
};

// Empirical raw moments keyed by the multi-index (gamma1, gamma2).
using MomentVector = std::map<std::pair<int, int>, double>;

// Rejection-sampled truncated Gaussian draws; deterministic for a given seed.
// RNG: std::mt19937_64 + Box-Muller + Cholesky of cov (documented in README).
ScenarioSet sample_factors(const LoadModel& model, int M, std::uint64_t seed);

// z_gamma = (1/M) sum_m r_m^gamma for all |gamma| <= order.
MomentVector raw_moments(const ScenarioSet& scenarios, int order);

// Apply the affine map to nominal loads at one factor realization.
std::pair<Eigen::VectorXd, Eigen::VectorXd>
loads_from_factors(const LoadModel& model, const NetworkCase& c,
                   const Eigen::Vector2d& r);

// CSV with header "r1,r2", one row per sample, full precision.
std::string scenarios_csv(const ScenarioSet& s);
ScenarioSet scenarios_from_csv(const std::string& text);

} // namespace momlin

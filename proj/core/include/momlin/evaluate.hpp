#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "momlin/conic.hpp"
#include "momlin/linearize.hpp"
#include "momlin/program.hpp"
#include "momlin/uncertainty.hpp"

namespace momlin {

// Conic form of one linearized OPF. Scenarios differ only in the constants of
// the leading equality rows, so the model is built once per profile.
//
// The linearized model usually has many cost-equivalent optima (cost only
// sees the injections), so each scenario is solved twice: once for the
// optimal value, then again over the optimal face minimizing the convex
// violation surrogate (x-x0)' sum_i(H_i^+ + H_i^-) (x-x0), which selects the
// economically optimal solution with the smallest bounded violation.
struct ScenarioModel {
    ConicProblem base;  // constants taken at y = 0
    Eigen::MatrixXd B;  // per-scenario shift of the leading equality constants
    int num_x = 0;      // decision variables (epigraph variables follow)
    Eigen::MatrixXd Lt; // factor of the surrogate: sum_i(H_i^+ + H_i^-) = Lt' Lt
    Eigen::VectorXd x0; // linearization point the surrogate is centered on
};

ScenarioModel build_scenario_model(const PolynomialProgram& program,
                                   const LinearizedProgram& lin);

struct ScenarioSolve {
    SolveStatus status = SolveStatus::numerical_failure;
    Eigen::VectorXd x;  // decision variables of the linearized optimum
    double cost = 0.0;  // original generation cost at x
    Eigen::VectorXd p;  // active nodal residuals of the full model, per bus
    Eigen::VectorXd q;  // reactive nodal residuals, per bus
    double eps_p = 0.0; // sum_i |p_i|
    double eps_q = 0.0; // sum_i |q_i|
};

ScenarioSolve solve_linearized(const PolynomialProgram& program, const ScenarioModel& model,
                               const Eigen::VectorXd& y, const SolverSettings& settings = {});

struct HistogramAxis {
    double lo = 0.0;
    double width = 0.0;
    int bins = 0;
};

struct ProfileStats {
    std::string name;
    int solved = 0;
    int failed = 0; // scenarios excluded from the statistics
    double mean_eps_p = 0.0, std_eps_p = 0.0;
    double mean_eps_q = 0.0, std_eps_q = 0.0;
    double mean_cost = 0.0;
    std::vector<long> hist_p, hist_q; // counts over the report's shared axes
};

struct EvaluationReport {
    std::string case_name;
    int scenarios = 0;
    HistogramAxis axis_p, axis_q; // shared so profiles are directly comparable
    std::vector<ProfileStats> profiles;
};

struct MonteCarloOptions {
    int histogram_bins = 50;
    SolverSettings solver;
};

// Solves the linearized model of every profile for every scenario and
// aggregates violation statistics (population standard deviations) and pooled
// per-bus residual histograms.
EvaluationReport run_monte_carlo(const PolynomialProgram& program,
                                 const std::vector<LinearizationPoint>& points,
                                 const ScenarioSet& scenarios,
                                 const MonteCarloOptions& options = {});

struct ProfileComparison {
    std::string metric;        // "eps_p", "eps_q", "cost"
    std::vector<int> order;    // profile indices, best first (skips unsolved)
    std::vector<double> ratio; // per profile: value / best value
};

std::vector<ProfileComparison> compare_profiles(const EvaluationReport& report);

std::string report_csv(const EvaluationReport& report);
std::string report_json(const EvaluationReport& report);
std::string histogram_csv(const EvaluationReport& report);

} // namespace momlin

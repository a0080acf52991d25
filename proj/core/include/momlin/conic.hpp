#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "momlin/quadratic.hpp" // LinTerm

namespace momlin {

// Affine scalar expression: constant + terms . v
struct ScalarRow {
    double constant = 0.0;
    std::vector<LinTerm> terms;

    double eval(const Eigen::VectorXd& v) const {
        double s = constant;
        for (const auto& t : terms) s += t.coef * v[t.var];
        return s;
    }
};

// One sparse symmetric coefficient entry of a PSD block; row <= col, and an
// off-diagonal entry stands for both (row, col) and (col, row).
struct PsdEntry {
    int var = 0;
    int row = 0;
    int col = 0;
    double coef = 0.0;
};

struct PsdTriplet {
    int row = 0;
    int col = 0; // row <= col
    double value = 0.0;
};

// S = C + sum_i v_i A_i must be positive semidefinite.
struct PsdBlock {
    int dim = 0;
    std::vector<PsdTriplet> constant;
    std::vector<PsdEntry> entries; // kept sorted by var
};

// rows[0] >= || (rows[1], ..., rows[q-1]) ||_2
struct SocBlock {
    std::vector<ScalarRow> rows;
};

// Inequality-form conic problem:
//   minimize    objective . v + objective_constant
//   subject to  each equality row == 0
//               each nonneg row >= 0
//               each SOC block in the second-order cone
//               each PSD block positive semidefinite
struct ConicProblem {
    int num_vars = 0;
    std::vector<LinTerm> objective;
    double objective_constant = 0.0;
    std::vector<ScalarRow> equalities;
    std::vector<ScalarRow> nonneg;
    std::vector<SocBlock> soc;
    std::vector<PsdBlock> psd;
};

enum class SolveStatus {
    optimal,
    near_optimal,
    infeasible,
    unbounded,
    iteration_limit,
    numerical_failure,
};

std::string to_string(SolveStatus s);

struct SolverSettings {
    double tol_feas = 1e-8;
    double tol_gap = 1e-8;
    // accept as near-optimal when within these looser thresholds
    double tol_feas_loose = 2e-5;
    double tol_gap_loose = 2e-5;
    int max_iter = 100;
    double static_reg = 1e-9;      // saddle-point regularization
    int refine_steps = 1;          // iterative-refinement passes
    bool presolve_equalities = false;
    bool verbose = false;
};

struct SolveStats {
    int iterations = 0;
    double primal_res = 0.0; // relative equality + cone restoration residual
    double dual_res = 0.0;   // relative dual residual
    double rel_gap = 0.0;
    double solve_seconds = 0.0;
};

struct SolveResult {
    SolveStatus status = SolveStatus::numerical_failure;
    Eigen::VectorXd x;          // primal point (original variable space)
    double objective = 0.0;     // objective . x + objective_constant
    double dual_objective = 0.0;
    Eigen::VectorXd eq_duals;   // multipliers of the equality rows (pre-presolve: empty)
    SolveStats stats;
};

// NT-scaled Mehrotra predictor-corrector interior-point method.
SolveResult solve(const ConicProblem& problem, const SolverSettings& settings = {});

inline bool solution_usable(SolveStatus s) {
    return s == SolveStatus::optimal || s == SolveStatus::near_optimal;
}

} // namespace momlin

#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "momlin/conic.hpp"

namespace momlin {

// Result of eliminating linear equality rows of a conic problem by Gaussian
// substitution restricted to fill-free pivots: only rows of one or two
// variables are substituted away (fixings and variable merges), so cone-block
// sparsity is preserved exactly. Eliminated variables are affine in the kept
// ones: the recovery list maps each eliminated original id to an expression
// over kept ORIGINAL ids (already fully back-substituted). Rows with no
// admissible pivot survive as equality rows of the reduced problem.
struct EqElimination {
    bool infeasible = false;
    ConicProblem reduced;
    std::vector<int> var_map;                        // original id -> reduced id, -1 if eliminated
    std::vector<std::pair<int, ScalarRow>> recovery; // eliminated id -> expr over kept original ids
};

EqElimination eliminate_equalities(const ConicProblem& problem);

// Expand a reduced-space solution back to the original variable space.
Eigen::VectorXd recover_primal(const EqElimination& elim, const Eigen::VectorXd& x_reduced);

} // namespace momlin

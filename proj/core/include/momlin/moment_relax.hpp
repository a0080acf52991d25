#pragma once

#include <Eigen/Dense>
#include <unordered_map>
#include <vector>

#include "momlin/conic.hpp"
#include "momlin/monomial.hpp"
#include "momlin/program.hpp"
#include "momlin/sparsity.hpp"
#include "momlin/uncertainty.hpp"

namespace momlin {

struct RelaxationOptions {
    int order = 1;       // moment-matrix degree k; the relaxation order is 2k
    bool dense = false;  // single clique spanning every variable
    // merge tree-adjacent cliques whose union stays within this size
    int clique_merge_threshold = 1;
};

struct RelaxationStats {
    int num_moments = 0;
    int num_equalities = 0;
    int num_nonneg = 0;
    std::vector<int> psd_dims;
    double build_seconds = 0.0;
};

// Moment-SDP surrogate of the polynomial program: one moment variable per
// distinct monomial of degree <= 2k supported on a clique, clique moment
// matrices and constraint localizers as cones, and the parameter marginals
// pinned to the supplied moment vector.
struct MomentRelaxation {
    ConicProblem problem;
    std::vector<Monomial> keys; // moment variable id -> monomial
    std::unordered_map<Monomial, int, MonomialHash> index;
    CliqueDecomposition cliques;
    std::vector<std::vector<Monomial>> clique_bases; // degree-k basis per clique
    int order = 1;
    int num_program_vars = 0;
    int num_params = 0;
    RelaxationStats stats;
};

MomentRelaxation build_relaxation(const PolynomialProgram& program, const MomentVector& z,
                                  const RelaxationOptions& options = {});

struct RelaxSolution {
    SolveStatus status = SolveStatus::numerical_failure;
    Eigen::VectorXd values; // moments, aligned with MomentRelaxation::keys
    double objective = 0.0; // relaxed objective value (cost lower bound)
    SolveStats stats;
};

RelaxSolution solve_relaxation(const MomentRelaxation& relax,
                               const SolverSettings& settings = {});

// First moments of the decision variables, in program id order.
Eigen::VectorXd extract_first_moment(const MomentRelaxation& relax,
                                     const RelaxSolution& sol);

// Numeric moment matrix of one clique, rebuilt from the solved moments.
Eigen::MatrixXd moment_matrix(const MomentRelaxation& relax, const RelaxSolution& sol,
                              int clique);

} // namespace momlin

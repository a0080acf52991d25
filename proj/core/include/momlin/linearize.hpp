#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "momlin/moment_relax.hpp"
#include "momlin/program.hpp"

namespace momlin {

enum class PointKind { moment, flat, no_load };

std::string to_string(PointKind k);

// Operating point the equality constraints are linearized around, in the
// program's decision-variable space (slack voltage is implicit).
struct LinearizationPoint {
    Eigen::VectorXd x0;
    PointKind kind = PointKind::flat;
    int order = 0; // relaxation order k for moment points
    std::string label() const;
};

// First moments of the solved relaxation.
LinearizationPoint moment_point(const MomentRelaxation& relax, const RelaxSolution& sol);

// Unit voltage at every bus; dependent coordinates (X, line flows, generator
// injections) completed from the defining equalities at nominal load.
LinearizationPoint flat_point(const PolynomialProgram& program);

// Voltage of the unloaded network: the non-slack admittance block solved
// against the slack voltage. Throws when that block is singular.
LinearizationPoint noload_point(const PolynomialProgram& program);

// h_i(x, y) ~ A_i x + B_i y + c_i, exact at x0 for every y.
struct LinearizedProgram {
    Eigen::MatrixXd A; // num_h x n
    Eigen::MatrixXd B; // num_h x p
    Eigen::VectorXd c;
    Eigen::VectorXd x0;

    Eigen::VectorXd eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
        return A * x + B * y + c;
    }
};

LinearizedProgram linearize_program(const PolynomialProgram& program,
                                    const LinearizationPoint& point);

// Signed linearization errors h_i(x,y) - h_lin_i(x,y); by the degree-2
// structure these equal the quadratic remainders and do not depend on y.
Eigen::VectorXd signed_error(const PolynomialProgram& program, const LinearizedProgram& lin,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Quadratic coefficient matrix of one equality row, restricted to the
// decision variables (the signed error equals d' H d with d = x - x0).
Eigen::MatrixXd equality_hessian(const PolynomialProgram& program, int h_index);

// Split H = plus - minus with both parts positive semidefinite.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> hessian_split(const Eigen::MatrixXd& H);

// Grid search of the empirical absolute-violation objective
//   J(x0) = (1/M) sum_m sum_i |(x_m - x0)' H_i (x_m - x0)|
// around the sample mean. With split_upper_bound, each H is replaced by the
// sum of its PSD split parts, giving the convex upper bound.
struct MeanCheck {
    Eigen::VectorXd minimizer;
    Eigen::VectorXd sample_mean;
    double objective_at_min = 0.0;
    double objective_at_mean = 0.0;
};

MeanCheck mean_optimality_check(const Eigen::MatrixXd& samples,
                                const std::vector<Eigen::MatrixXd>& hessians,
                                int steps_per_axis, double step,
                                bool split_upper_bound = false);

// name -> value serialization (includes the fixed slack voltage entries)
std::string point_json(const PolynomialProgram& program, const LinearizationPoint& point);
LinearizationPoint point_from_json(const PolynomialProgram& program, const std::string& text);

} // namespace momlin

#pragma once

#include <Eigen/Core>
#include <vector>

#include "momlin/monomial.hpp"

namespace momlin {

struct LinTerm {
    int var = 0;
    double coef = 0.0;
};

// Quadratic term over a joint variable space; row <= col by convention and
// the coefficient multiplies the monomial u_row * u_col directly.
struct QuadTerm {
    int row = 0;
    int col = 0;
    double coef = 0.0;
};

// Polynomial of total degree <= 2 over a single joint index space
// (decision variables first, uncertain parameters after them):
//   value(u) = constant + sum_i lin[i].coef * u_i + sum_{r<=c} quad.coef * u_r * u_c
class QuadraticForm {
public:
    double constant = 0.0;
    std::vector<LinTerm> linear;
    std::vector<QuadTerm> quadratic;

    void add_constant(double c) { constant += c; }
    void add_linear(int var, double coef);
    void add_quadratic(int row, int col, double coef);

    // Merge duplicate terms and drop exact zeros; keeps terms sorted.
    void compress(double drop_tol = 0.0);

    double eval(const Eigen::VectorXd& u) const;
    // Gradient restricted to ids in [0, nx); parameters beyond contribute
    // through the mixed terms only.
    Eigen::VectorXd gradient_head(const Eigen::VectorXd& u, int nx) const;
    // Dense symmetric Hessian restricted to the leading nx ids.
    Eigen::MatrixXd hessian_head(int nx) const;

    // (monomial, coefficient) pairs including the constant term (degree 0).
    std::vector<std::pair<Monomial, double>> monomials() const;
    // Sorted unique variable ids appearing with nonzero coefficient.
    std::vector<int> support() const;

    double max_abs_coef() const;
    void scale(double s);
};

} // namespace momlin

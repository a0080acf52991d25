#pragma once

#include <Eigen/Core>
#include <cmath>

#include <momlin/monomial.hpp>
#include <momlin/quadratic.hpp>

// Term-by-term reference evaluation used to cross-check the production
// polynomial code. Deliberately naive: std::pow on each factor, no reuse.
inline double eval_monomial_naive(const momlin::Monomial& m, const Eigen::VectorXd& u) {
    double v = 1.0;
    for (const auto& [id, pw] : m.terms()) v *= std::pow(u[id], pw);
    return v;
}

inline double eval_quadratic_naive(const momlin::QuadraticForm& f, const Eigen::VectorXd& u) {
    double v = 0.0;
    for (const auto& [mono, coef] : f.monomials()) v += coef * eval_monomial_naive(mono, u);
    return v;
}

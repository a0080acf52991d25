#include "momlin/quadratic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

namespace momlin {

void QuadraticForm::add_linear(int var, double coef) {
    if (coef == 0.0) return;
    linear.push_back({var, coef});
}

void QuadraticForm::add_quadratic(int row, int col, double coef) {
    if (coef == 0.0) return;
    if (row > col) std::swap(row, col);
    quadratic.push_back({row, col, coef});
}

void QuadraticForm::compress(double drop_tol) {
    std::map<int, double> lin;
    for (const auto& t : linear) lin[t.var] += t.coef;
    linear.clear();
    for (const auto& [v, c] : lin)
        if (std::abs(c) > drop_tol) linear.push_back({v, c});

    std::map<std::pair<int, int>, double> quad;
    for (const auto& t : quadratic) quad[{t.row, t.col}] += t.coef;
    quadratic.clear();
    for (const auto& [rc, c] : quad)
        if (std::abs(c) > drop_tol) quadratic.push_back({rc.first, rc.second, c});
}

double QuadraticForm::eval(const Eigen::VectorXd& u) const {
    double v = constant;
    for (const auto& t : linear) v += t.coef * u[t.var];
    for (const auto& t : quadratic) v += t.coef * u[t.row] * u[t.col];
    return v;
}

Eigen::VectorXd QuadraticForm::gradient_head(const Eigen::VectorXd& u, int nx) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nx);
    for (const auto& t : linear)
        if (t.var < nx) g[t.var] += t.coef;
    for (const auto& t : quadratic) {
        if (t.row == t.col) {
            if (t.row < nx) g[t.row] += 2.0 * t.coef * u[t.row];
        } else {
            if (t.row < nx) g[t.row] += t.coef * u[t.col];
            if (t.col < nx) g[t.col] += t.coef * u[t.row];
        }
    }
    return g;
}

Eigen::MatrixXd QuadraticForm::hessian_head(int nx) const {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nx, nx);
    for (const auto& t : quadratic) {
        if (t.row >= nx || t.col >= nx) continue;
        if (t.row == t.col) {
            H(t.row, t.row) += 2.0 * t.coef;
        } else {
            H(t.row, t.col) += t.coef;
            H(t.col, t.row) += t.coef;
        }
    }
    return H;
}

std::vector<std::pair<Monomial, double>> QuadraticForm::monomials() const {
    std::vector<std::pair<Monomial, double>> out;
    if (constant != 0.0) out.emplace_back(Monomial::one(), constant);
    for (const auto& t : linear) out.emplace_back(Monomial::var(t.var), t.coef);
    for (const auto& t : quadratic) {
        if (t.row == t.col)
            out.emplace_back(Monomial::var(t.row, 2), t.coef);
        else
            out.emplace_back(Monomial::var(t.row).times(Monomial::var(t.col)), t.coef);
    }
    return out;
}

std::vector<int> QuadraticForm::support() const {
    std::vector<int> s;
    for (const auto& t : linear) s.push_back(t.var);
    for (const auto& t : quadratic) {
        s.push_back(t.row);
        s.push_back(t.col);
    }
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

double QuadraticForm::max_abs_coef() const {
    double m = std::abs(constant);
    for (const auto& t : linear) m = std::max(m, std::abs(t.coef));
    for (const auto& t : quadratic) m = std::max(m, std::abs(t.coef));
    return m;
}

void QuadraticForm::scale(double s) {
    constant *= s;
    for (auto& t : linear) t.coef *= s;
    for (auto& t : quadratic) t.coef *= s;
}

} // namespace momlin

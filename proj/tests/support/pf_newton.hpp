#pragma once

#include <Eigen/Dense>

#include <momlin/program.hpp>

// Small reference power-flow solver: damped Gauss-Newton on the equality
// system h(x, y) = 0 from a flat voltage start. The system is underdetermined
// when the case has more than one generator, so the least-squares step picks
// one particular solution; all the tests need is *a* point with h = 0.
struct PfResult {
    bool converged = false;
    Eigen::VectorXd x;
    double max_residual = 1e300;
};

inline PfResult solve_power_flow(const momlin::PolynomialProgram& prog, const Eigen::VectorXd& y,
                                 int max_iter = 60) {
    const int n = prog.n();
    const int nh = static_cast<int>(prog.h.size());
    PfResult out;
    out.x = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
        const auto kind = prog.vars.infos()[i].kind;
        if (kind == momlin::VarKind::E || kind == momlin::VarKind::X) out.x[i] = 1.0;
    }
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd h = momlin::eval_constraints(prog, out.x, y).first;
        out.max_residual = h.cwiseAbs().maxCoeff();
        if (out.max_residual < 1e-12) {
            out.converged = true;
            return out;
        }
        Eigen::MatrixXd J(nh, n);
        for (int i = 0; i < nh; ++i)
            J.row(i) = momlin::gradient_hessian(prog, i, out.x).first.transpose();
        out.x -= J.colPivHouseholderQr().solve(h);
    }
    const Eigen::VectorXd h = momlin::eval_constraints(prog, out.x, y).first;
    out.max_residual = h.cwiseAbs().maxCoeff();
    out.converged = out.max_residual < 1e-12;
    return out;
}

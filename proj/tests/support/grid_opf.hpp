#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include <momlin/program.hpp>

// Brute-force global OPF for a two-bus case with all generation at the slack
// bus: sweep the non-slack voltage (e2, f2) over a grid, complete the
// remaining variables (which enter the equalities linearly) exactly, and keep
// the cheapest point that satisfies every inequality. Three refinement rounds
// shrink the grid step below 1e-5 per-unit.
struct GridOpf {
    bool found = false;
    double cost = 1e300;
    Eigen::VectorXd x;
};

namespace grid_detail {

// With the voltages fixed, P/Q/S enter h linearly: solve them from one
// least-squares system (exact here because the system is square in them).
inline Eigen::VectorXd complete_linear(const momlin::PolynomialProgram& prog, double e2,
                                       double f2, const Eigen::VectorXd& y) {
    const int n = prog.n();
    const int nh = static_cast<int>(prog.h.size());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<int> lin;
    for (int i = 0; i < n; ++i) {
        switch (prog.vars.infos()[i].kind) {
        case momlin::VarKind::E: x[i] = e2; break;
        case momlin::VarKind::F: x[i] = f2; break;
        case momlin::VarKind::X: x[i] = e2 * e2 + f2 * f2; break;
        default: lin.push_back(i);
        }
    }
    const Eigen::VectorXd h0 = momlin::eval_constraints(prog, x, y).first;
    Eigen::MatrixXd J(nh, static_cast<int>(lin.size()));
    for (int i = 0; i < nh; ++i) {
        const Eigen::VectorXd gr = momlin::gradient_hessian(prog, i, x).first;
        for (std::size_t j = 0; j < lin.size(); ++j) J(i, static_cast<int>(j)) = gr[lin[j]];
    }
    const Eigen::VectorXd u = J.colPivHouseholderQr().solve(-h0);
    for (std::size_t j = 0; j < lin.size(); ++j) x[lin[j]] = u[static_cast<int>(j)];
    return x;
}

} // namespace grid_detail

inline GridOpf grid_opf_2bus(const momlin::PolynomialProgram& prog, const Eigen::VectorXd& y) {
    GridOpf best;
    const int nonslack = prog.slack_bus == 0 ? 1 : 0;
    double elo = prog.net.buses[nonslack].vmin - 0.02;
    double ehi = prog.net.buses[nonslack].vmax + 0.02;
    double flo = -0.6, fhi = 0.6;
    const int steps = 120;
    for (int round = 0; round < 4; ++round) {
        double be = 0.0, bf = 0.0;
        const double de = (ehi - elo) / steps, df = (fhi - flo) / steps;
        for (int ie = 0; ie <= steps; ++ie) {
            for (int jf = 0; jf <= steps; ++jf) {
                const double e2 = elo + de * ie, f2 = flo + df * jf;
                const Eigen::VectorXd x = grid_detail::complete_linear(prog, e2, f2, y);
                const auto [h, g] = momlin::eval_constraints(prog, x, y);
                if (h.cwiseAbs().maxCoeff() > 1e-8) continue;
                bool ok = true;
                for (int i = 0; i < prog.num_gx(); ++i) ok = ok && g[i] >= -1e-9;
                if (!ok) continue;
                const double cost = prog.f.eval(prog.joint(x, y));
                if (cost < best.cost) {
                    best.found = true;
                    best.cost = cost;
                    best.x = x;
                    be = e2;
                    bf = f2;
                }
            }
        }
        if (!best.found) return best;
        elo = be - 2 * de;
        ehi = be + 2 * de;
        flo = bf - 2 * df;
        fhi = bf + 2 * df;
    }
    return best;
}

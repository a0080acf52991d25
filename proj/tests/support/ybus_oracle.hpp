#pragma once

#include <Eigen/Core>
#include <complex>

#include <momlin/case.hpp>

// Bus admittance matrix assembled entry-by-entry from the textbook Pi-model
// stamp, written independently of the production assembly so the two can be
// compared: for a branch l->m with series admittance y, total shunt y_sh and
// complex turns ratio t = tau * exp(i theta) on the from side,
//   Y_ll += (y + y_sh/2) / |t|^2,  Y_lm -= y / conj(t),
//   Y_ml -= y / t,                 Y_mm += y + y_sh/2,
// plus each bus shunt on its diagonal.
inline Eigen::MatrixXcd ybus_by_summation(const momlin::NetworkCase& c) {
    using cd = std::complex<double>;
    const int nb = static_cast<int>(c.buses.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(nb, nb);
    for (const auto& br : c.branches) {
        const int l = c.bus_index(br.from);
        const int m = c.bus_index(br.to);
        const cd ys(br.g, br.b);
        const cd ysh2(br.g_sh / 2.0, br.b_sh / 2.0);
        const cd t = std::polar(br.tau, br.theta);
        y(l, l) += (ys + ysh2) / (br.tau * br.tau);
        y(l, m) -= ys / std::conj(t);
        y(m, l) -= ys / t;
        y(m, m) += ys + ysh2;
    }
    for (int i = 0; i < nb; ++i) y(i, i) += cd(c.buses[i].gs, c.buses[i].bs);
    return y;
}

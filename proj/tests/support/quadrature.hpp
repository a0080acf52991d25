#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

// Dense numerical integration of truncated-bivariate-Gaussian raw moments,
// used as the reference the sampled moments are compared against.

struct GaussLegendre {
    std::vector<double> node, weight; // on [-1, 1]

    explicit GaussLegendre(int n) {
        node.resize(n);
        weight.resize(n);
        for (int i = 0; i < n; ++i) {
            // Newton from the Chebyshev estimate; dP/dx via the standard identity
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            node[i] = x;
            weight[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }
};

// E[r1^g1 * r2^g2] for a bivariate Gaussian N(mean, cov) truncated to the
// rectangle [lo1,hi1]x[lo2,hi2], by tensor-product Gauss-Legendre.
inline double truncated_gaussian_moment(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov,
                                        const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                                        int g1, int g2, int nodes = 64) {
    const GaussLegendre gl(nodes);
    const Eigen::Matrix2d prec = cov.inverse();
    double mass = 0.0, raw = 0.0;
    for (int i = 0; i < nodes; ++i) {
        const double r1 = 0.5 * (hi[0] + lo[0]) + 0.5 * (hi[0] - lo[0]) * gl.node[i];
        const double w1 = 0.5 * (hi[0] - lo[0]) * gl.weight[i];
        for (int j = 0; j < nodes; ++j) {
            const double r2 = 0.5 * (hi[1] + lo[1]) + 0.5 * (hi[1] - lo[1]) * gl.node[j];
            const double w2 = 0.5 * (hi[1] - lo[1]) * gl.weight[j];
            const Eigen::Vector2d d(r1 - mean[0], r2 - mean[1]);
            const double dens = std::exp(-0.5 * d.dot(prec * d));
            const double w = w1 * w2 * dens;
            mass += w;
            raw += w * std::pow(r1, g1) * std::pow(r2, g2);
        }
    }
    return raw / mass;
}

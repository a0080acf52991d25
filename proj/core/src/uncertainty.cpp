#include "momlin/uncertainty.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "momlin/case.hpp"
#include "momlin/errors.hpp"

namespace momlin {

LoadModel::LoadModel() {
    cov << 0.01, 0.002, 0.002, 0.008;
}

LoadModel LoadModel::standard_profile(const NetworkCase& c) {
    LoadModel m;
    const int nb = static_cast<int>(c.buses.size());
    m.weights.resize(nb);
    for (int i = 0; i < nb; ++i) {
        const double a1 = nb > 1 ? static_cast<double>(i) / (nb - 1) : 0.0;
        m.weights[i] = {a1, 1.0 - a1};
    }
    return m;
}

namespace {

// Deterministic Box-Muller standard normal pairs on top of mt19937_64.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform_();
        } while (u1 <= 0.0);
        u2 = uniform_();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    double uniform_() {
        // 53-bit uniform in [0, 1)
        return static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0);
    }
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace

ScenarioSet sample_factors(const LoadModel& model, int M, std::uint64_t seed) {
    if (M < 1) throw ValidationError("sample count must be at least 1");

    // lower-triangular Cholesky factor of the 2x2 covariance
    const double c00 = model.cov(0, 0);
    if (c00 <= 0.0) throw ValidationError("covariance must be positive definite");
    const double l00 = std::sqrt(c00);
    const double l10 = model.cov(1, 0) / l00;
    const double l11sq = model.cov(1, 1) - l10 * l10;
    if (l11sq <= 0.0) throw ValidationError("covariance must be positive definite");
    const double l11 = std::sqrt(l11sq);

    NormalSource normals(seed);
    ScenarioSet out;
    out.seed = seed;
    out.samples.resize(M, 2);

    long long attempts = 0, accepted = 0;
    const long long probe = 1000000; // acceptance check horizon
    while (accepted < M) {
        const double n1 = normals.next();
        const double n2 = normals.next();
        const double r1 = model.mean[0] + l00 * n1;
        const double r2 = model.mean[1] + l10 * n1 + l11 * n2;
        ++attempts;
        const bool inside = r1 >= model.lo[0] && r1 <= model.hi[0] &&
                            r2 >= model.lo[1] && r2 <= model.hi[1];
        if (inside) {
            out.samples(accepted, 0) = r1;
            out.samples(accepted, 1) = r2;
            ++accepted;
        }
        if (attempts >= probe && accepted == 0)
            throw SolverError("truncated-Gaussian acceptance probability below 1e-6");
        if (attempts > 64 && accepted > 0 &&
            static_cast<double>(accepted) / static_cast<double>(attempts) < 1e-6)
            throw SolverError("truncated-Gaussian acceptance probability below 1e-6");
    }
    return out;
}

MomentVector raw_moments(const ScenarioSet& scenarios, int order) {
    if (order < 0) throw ValidationError("moment order must be nonnegative");
    MomentVector z;
    const int M = scenarios.M();
    for (int g1 = 0; g1 <= order; ++g1) {
        for (int g2 = 0; g1 + g2 <= order; ++g2) {
            double acc = 0.0;
            for (int m = 0; m < M; ++m)
                acc += std::pow(scenarios.samples(m, 0), g1) *
                       std::pow(scenarios.samples(m, 1), g2);
            z[{g1, g2}] = acc / M;
        }
    }
    return z;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd>
loads_from_factors(const LoadModel& model, const NetworkCase& c,
                   const Eigen::Vector2d& r) {
    const int nb = static_cast<int>(c.buses.size());
    if (static_cast<int>(model.weights.size()) != nb)
        throw ValidationError("load model weights do not match case bus count");
    Eigen::VectorXd pl(nb), ql(nb);
    for (int i = 0; i < nb; ++i) {
        const double s = model.weights[i].first * r[0] + model.weights[i].second * r[1];
        pl[i] = c.buses[i].p_nominal * s;
        ql[i] = c.buses[i].q_nominal * s;
    }
    return {pl, ql};
}

std::string scenarios_csv(const ScenarioSet& s) {
    std::ostringstream out;
    out.precision(17);
    out << "r1,r2\n";
    for (int m = 0; m < s.M(); ++m)
        out << s.samples(m, 0) << "," << s.samples(m, 1) << "\n";
    return out.str();
}

ScenarioSet scenarios_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::pair<double, double>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("r1", 0) == 0) continue; // header
        }
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError("scenario CSV row missing comma: " + line);
        try {
            rows.emplace_back(std::stod(line.substr(0, comma)),
                              std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw ParseError("scenario CSV row not numeric: " + line);
        }
    }
    ScenarioSet s;
    s.samples.resize(static_cast<int>(rows.size()), 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        s.samples(static_cast<int>(i), 0) = rows[i].first;
        s.samples(static_cast<int>(i), 1) = rows[i].second;
    }
    return s;
}

} // namespace momlin

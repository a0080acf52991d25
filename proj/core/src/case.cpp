#include "momlin/case.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "momlin/errors.hpp"

namespace momlin {

int NetworkCase::bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    throw ValidationError("unknown bus id " + std::to_string(id));
}

int NetworkCase::slack_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].is_slack) return static_cast<int>(i);
    throw ValidationError("case has no slack bus");
}

void NetworkCase::validate() const {
    if (base_mva <= 0.0) throw ValidationError("base_mva must be positive");
    if (buses.empty()) throw ValidationError("case has no buses");

    std::unordered_set<int> ids;
    int slack_count = 0;
    for (const auto& bus : buses) {
        if (!ids.insert(bus.id).second)
            throw ValidationError("duplicate bus id " + std::to_string(bus.id));
        if (!(bus.vmin > 0.0 && bus.vmin <= bus.vmax))
            throw ValidationError("bus " + std::to_string(bus.id) +
                                  ": need 0 < vmin <= vmax");
        if (bus.is_slack) ++slack_count;
    }
    if (slack_count == 0) throw ValidationError("case has no slack bus");
    if (slack_count > 1) throw ValidationError("case has multiple slack buses");

    for (const auto& br : branches) {
        if (br.from == br.to)
            throw ValidationError("branch connects bus " + std::to_string(br.from) +
                                  " to itself");
        if (!ids.count(br.from) || !ids.count(br.to))
            throw ValidationError("branch references unknown bus");
        if (!(br.tau > 0.0)) throw ValidationError("branch tap ratio must be positive");
        if (!(br.s_max > 0.0)) throw ValidationError("branch s_max must be positive");
    }

    for (const auto& gen : generators) {
        if (!ids.count(gen.bus))
            throw ValidationError("generator references unknown bus " +
                                  std::to_string(gen.bus));
        if (gen.pmin > gen.pmax || gen.qmin > gen.qmax)
            throw ValidationError("generator at bus " + std::to_string(gen.bus) +
                                  " has inverted bounds");
        if (gen.cost.size() > 3)
            throw ValidationError("generator cost degree exceeds 2");
        if (gen.cost.size() == 3 && gen.cost[2] < 0.0)
            throw ValidationError("generator cost is not convex");
    }
}

Eigen::MatrixXcd build_ybus(const NetworkCase& c) {
    const int nb = static_cast<int>(c.buses.size());
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(nb, nb);
    const std::complex<double> j(0.0, 1.0);

    for (const auto& br : c.branches) {
        if (!(br.tau > 0.0)) throw ValidationError("branch tap ratio must be positive");
        const int f = c.bus_index(br.from);
        const int t = c.bus_index(br.to);
        const std::complex<double> ys(br.g, br.b);
        const std::complex<double> ysh(br.g_sh, br.b_sh);
        const std::complex<double> tap = br.tau * std::exp(j * br.theta);

        Y(f, f) += (ys + 0.5 * ysh) / (br.tau * br.tau);
        Y(t, t) += ys + 0.5 * ysh;
        Y(f, t) += -ys / std::conj(tap);
        Y(t, f) += -ys / tap;
    }
    for (int i = 0; i < nb; ++i)
        Y(i, i) += std::complex<double>(c.buses[i].gs, c.buses[i].bs);
    return Y;
}

NetworkCase set_uniform_line_limit(const NetworkCase& c, double s_max) {
    if (!(s_max > 0.0)) throw ValidationError("line limit must be positive");
    NetworkCase out = c;
    for (auto& br : out.branches) br.s_max = std::min(br.s_max, s_max);
    return out;
}

NetworkCase clear_line_limits(const NetworkCase& c) {
    NetworkCase out = c;
    for (auto& br : out.branches) br.s_max = unlimited;
    return out;
}

namespace detail {
NetworkCase parse_matpower(const std::string& source);
NetworkCase parse_json_case(const std::string& source);
} // namespace detail

NetworkCase parse_case(const std::string& source, CaseFormat format) {
    NetworkCase c = format == CaseFormat::matpower_subset
                        ? detail::parse_matpower(source)
                        : detail::parse_json_case(source);
    c.validate();
    c.ybus = build_ybus(c);
    return c;
}

NetworkCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open case file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();

    CaseFormat fmt;
    if (path.size() >= 2 && path.substr(path.size() - 2) == ".m")
        fmt = CaseFormat::matpower_subset;
    else if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
        fmt = CaseFormat::json;
    else
        throw ParseError("unrecognized case extension (want .m or .json): " + path);

    NetworkCase c = parse_case(buf.str(), fmt);
    if (c.name.empty()) {
        auto slash = path.find_last_of("/\\");
        auto base = slash == std::string::npos ? path : path.substr(slash + 1);
        auto dot = base.find_last_of('.');
        c.name = dot == std::string::npos ? base : base.substr(0, dot);
    }
    return c;
}

} // namespace momlin

#pragma once

#include <Eigen/Core>
#include <complex>
#include <limits>
#include <string>
#include <vector>

namespace momlin {

// Sentinel for "no line limit".
inline constexpr double unlimited = std::numeric_limits<double>::infinity();

struct Bus {
    int id = 0;                // external 1-based id
    double vmin = 0.0;         // voltage magnitude bounds, per-unit
    double vmax = 0.0;
    double p_nominal = 0.0;    // nominal load, per-unit
    double q_nominal = 0.0;
    double gs = 0.0;           // bus shunt, per-unit
    double bs = 0.0;
    bool is_slack = false;
};

struct Branch {
    int from = 0;              // external bus ids
    int to = 0;
    double g = 0.0;            // series admittance, per-unit
    double b = 0.0;
    double g_sh = 0.0;         // total shunt admittance of the Pi-model
    double b_sh = 0.0;
    double tau = 1.0;          // tap magnitude, from side
    double theta = 0.0;        // phase shift, radians
    double s_max = unlimited;  // apparent-power limit, per-unit
};

struct Generator {
    int bus = 0;
    double pmin = 0.0, pmax = 0.0;
    double qmin = 0.0, qmax = 0.0;
    // cost[i] multiplies P^i with P in per-unit; degree <= 2, convex.
    std::vector<double> cost;

    double c0() const { return cost.size() > 0 ? cost[0] : 0.0; }
    double c1() const { return cost.size() > 1 ? cost[1] : 0.0; }
    double c2() const { return cost.size() > 2 ? cost[2] : 0.0; }
};

struct NetworkCase {
    std::string name;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    Eigen::MatrixXcd ybus;     // filled by parse_case / refresh_ybus

    // 0-based position of an external bus id; throws ValidationError if absent.
    int bus_index(int id) const;
    int slack_index() const;
    // Throws ValidationError on any structural violation.
    void validate() const;
};

enum class CaseFormat { matpower_subset, json };

// Parse case text. MATPOWER subset: mpc.baseMVA plus the bus/gen/branch/
// gencost matrices with numeric literals only; quantities converted to
// per-unit. JSON: schema documented in the README, values already per-unit.
NetworkCase parse_case(const std::string& source, CaseFormat format);

// Read a file and dispatch on extension (.m -> matpower, .json -> json).
NetworkCase load_case(const std::string& path);

// Standard Pi-model assembly with off-nominal taps and bus shunts.
Eigen::MatrixXcd build_ybus(const NetworkCase& c);

// Copy of the case with every branch limit set to s_max.
NetworkCase set_uniform_line_limit(const NetworkCase& c, double s_max);

// Copy of the case with all branch limits removed (s_max = unlimited).
NetworkCase clear_line_limits(const NetworkCase& c);

// Full-precision JSON serialization (round-trips through parse_case).
std::string serialize_case_json(const NetworkCase& c);

} // namespace momlin

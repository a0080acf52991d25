#include "momlin/linearize.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <unordered_map>

#include <json.hpp>

#include "momlin/errors.hpp"

namespace momlin {

namespace {

// fill X, line-flow, and generator coordinates from the defining equalities
// at the given bus voltages and nominal load (all load factors at 1)
LinearizationPoint complete_point(const PolynomialProgram& prog,
                                  const Eigen::VectorXd& e_bus,
                                  const Eigen::VectorXd& f_bus, PointKind kind) {
    const NetworkCase& net = prog.net;
    const int nb = static_cast<int>(net.buses.size());
    const VariableTable& vars = prog.vars;

    LinearizationPoint pt;
    pt.kind = kind;
    pt.x0 = Eigen::VectorXd::Zero(prog.n());
    for (int b = 0; b < nb; ++b) {
        if (vars.e_of_bus(b) >= 0) pt.x0[vars.e_of_bus(b)] = e_bus[b];
        if (vars.f_of_bus(b) >= 0) pt.x0[vars.f_of_bus(b)] = f_bus[b];
        pt.x0[vars.x_of_bus(b)] = e_bus[b] * e_bus[b] + f_bus[b] * f_bus[b];
    }

    const Eigen::VectorXd y_nom = Eigen::VectorXd::Ones(prog.p());
    auto joint = [&]() { return prog.joint(pt.x0, y_nom); };

    // flow definitions: h = (flow expression) - S, so with S still zero the
    // row value is the flow itself
    for (const auto& con : prog.h) {
        int slot = -1;
        switch (con.kind) {
        case ConstraintKind::FlowPf: slot = 0; break;
        case ConstraintKind::FlowPt: slot = 1; break;
        case ConstraintKind::FlowQf: slot = 2; break;
        case ConstraintKind::FlowQt: slot = 3; break;
        default: break;
        }
        if (slot < 0) continue;
        pt.x0[vars.s_of_branch(con.owner)[slot]] = con.poly.eval(joint());
    }

    // generator injections from the nodal balances, split evenly per bus
    std::vector<std::vector<int>> gens_of_bus(nb);
    for (int g = 0; g < static_cast<int>(net.generators.size()); ++g)
        gens_of_bus[net.bus_index(net.generators[g].bus)].push_back(g);
    for (const auto& con : prog.h) {
        const bool is_p = con.kind == ConstraintKind::BalanceP;
        if (!is_p && con.kind != ConstraintKind::BalanceQ) continue;
        const auto& gens = gens_of_bus[con.owner];
        if (gens.empty()) continue;
        const double need = -con.poly.eval(joint()) / static_cast<double>(gens.size());
        for (int g : gens)
            pt.x0[is_p ? vars.p_of_gen(g) : vars.q_of_gen(g)] += need;
    }
    return pt;
}

} // namespace

std::string to_string(PointKind k) {
    switch (k) {
    case PointKind::moment: return "moment";
    case PointKind::flat: return "flat";
    case PointKind::no_load: return "no-load";
    }
    return "?";
}

std::string LinearizationPoint::label() const {
    if (kind == PointKind::moment) return "moment-2k=" + std::to_string(2 * order);
    return to_string(kind);
}

LinearizationPoint moment_point(const MomentRelaxation& relax, const RelaxSolution& sol) {
    LinearizationPoint pt;
    pt.kind = PointKind::moment;
    pt.order = relax.order;
    pt.x0 = extract_first_moment(relax, sol);
    return pt;
}

LinearizationPoint flat_point(const PolynomialProgram& program) {
    const int nb = static_cast<int>(program.net.buses.size());
    return complete_point(program, Eigen::VectorXd::Ones(nb), Eigen::VectorXd::Zero(nb),
                          PointKind::flat);
}

LinearizationPoint noload_point(const PolynomialProgram& program) {
    const NetworkCase& net = program.net;
    const int nb = static_cast<int>(net.buses.size());
    const int s = program.slack_bus;
    if (net.ybus.rows() != nb) throw ValidationError("case lacks an admittance matrix");

    std::vector<int> rest;
    for (int b = 0; b < nb; ++b)
        if (b != s) rest.push_back(b);
    const int m = static_cast<int>(rest.size());
    Eigen::MatrixXcd Ynn(m, m);
    Eigen::VectorXcd rhs(m);
    const std::complex<double> vs(program.slack_e, program.slack_f);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) Ynn(i, j) = net.ybus(rest[i], rest[j]);
        rhs[i] = -net.ybus(rest[i], s) * vs;
    }
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(Ynn);
    if (!lu.isInvertible())
        throw SolverError("no-load voltage system is singular for this network");
    const Eigen::VectorXcd v = lu.solve(rhs);

    Eigen::VectorXd e_bus(nb), f_bus(nb);
    e_bus[s] = program.slack_e;
    f_bus[s] = program.slack_f;
    for (int i = 0; i < m; ++i) {
        e_bus[rest[i]] = v[i].real();
        f_bus[rest[i]] = v[i].imag();
    }
    return complete_point(program, e_bus, f_bus, PointKind::no_load);
}

LinearizedProgram linearize_program(const PolynomialProgram& program,
                                    const LinearizationPoint& point) {
    const int n = program.n(), p = program.p(), rows = static_cast<int>(program.h.size());
    if (point.x0.size() != n) throw ValidationError("linearization point has wrong dimension");

    LinearizedProgram lin;
    lin.x0 = point.x0;
    lin.A.setZero(rows, n);
    lin.B.setZero(rows, p);
    lin.c.setZero(rows);
    const Eigen::VectorXd u0 = program.joint(point.x0, Eigen::VectorXd::Zero(p));
    for (int i = 0; i < rows; ++i) {
        const QuadraticForm& poly = program.h[i].poly;
        lin.A.row(i) = poly.gradient_head(u0, n).transpose();
        for (const auto& t : poly.linear)
            if (t.var >= n) lin.B(i, t.var - n) += t.coef;
        lin.c[i] = poly.eval(u0) - lin.A.row(i).dot(point.x0);
    }
    return lin;
}

Eigen::VectorXd signed_error(const PolynomialProgram& program, const LinearizedProgram& lin,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const Eigen::VectorXd u = program.joint(x, y);
    Eigen::VectorXd eps = -lin.eval(x, y);
    for (int i = 0; i < eps.size(); ++i) eps[i] += program.h[i].poly.eval(u);
    return eps;
}

Eigen::MatrixXd equality_hessian(const PolynomialProgram& program, int h_index) {
    return 0.5 * program.h.at(h_index).poly.hessian_head(program.n());
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> hessian_split(const Eigen::MatrixXd& H) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const Eigen::VectorXd& w = es.eigenvalues();
    const Eigen::MatrixXd& V = es.eigenvectors();
    Eigen::MatrixXd plus = Eigen::MatrixXd::Zero(H.rows(), H.cols());
    Eigen::MatrixXd minus = plus;
    for (int i = 0; i < w.size(); ++i) {
        const Eigen::MatrixXd outer = V.col(i) * V.col(i).transpose();
        if (w[i] >= 0)
            plus += w[i] * outer;
        else
            minus += -w[i] * outer;
    }
    return {plus, minus};
}

MeanCheck mean_optimality_check(const Eigen::MatrixXd& samples,
                                const std::vector<Eigen::MatrixXd>& hessians,
                                int steps_per_axis, double step, bool split_upper_bound) {
    const int d = static_cast<int>(samples.cols());
    const int M = static_cast<int>(samples.rows());
    if (M < 1 || d < 1) throw ValidationError("empty sample cloud");
    if (steps_per_axis < 1) throw ValidationError("grid needs at least one step per axis");
    double total = 1;
    for (int a = 0; a < d; ++a) total *= steps_per_axis;
    if (total > 4e6) throw ValidationError("grid too large; reduce steps or dimension");

    std::vector<Eigen::MatrixXd> hs = hessians;
    if (split_upper_bound)
        for (auto& H : hs) {
            auto [hp, hm] = hessian_split(H);
            H = hp + hm;
        }

    const Eigen::VectorXd mean = samples.colwise().mean();
    auto J = [&](const Eigen::VectorXd& x0) {
        double s = 0.0;
        for (int m = 0; m < M; ++m) {
            const Eigen::VectorXd dvec = samples.row(m).transpose() - x0;
            for (const auto& H : hs) s += std::abs(dvec.dot(H * dvec));
        }
        return s / M;
    };

    MeanCheck out;
    out.sample_mean = mean;
    out.objective_at_mean = J(mean);
    out.minimizer = mean;
    out.objective_at_min = out.objective_at_mean;

    std::vector<int> idx(d, 0);
    const double half = 0.5 * (steps_per_axis - 1);
    Eigen::VectorXd x0(d);
    while (true) {
        for (int a = 0; a < d; ++a) x0[a] = mean[a] + (idx[a] - half) * step;
        const double v = J(x0);
        if (v < out.objective_at_min) {
            out.objective_at_min = v;
            out.minimizer = x0;
        }
        int a = 0;
        for (; a < d; ++a) {
            if (++idx[a] < steps_per_axis) break;
            idx[a] = 0;
        }
        if (a == d) break;
    }
    return out;
}

std::string point_json(const PolynomialProgram& program, const LinearizationPoint& point) {
    nlohmann::json j;
    j["kind"] = to_string(point.kind);
    if (point.kind == PointKind::moment) j["order"] = point.order;
    nlohmann::json vals = nlohmann::json::object();
    for (int i = 0; i < program.n(); ++i)
        vals[program.vars.name(i)] = point.x0[i];
    const std::string sid = std::to_string(program.net.buses[program.slack_bus].id);
    vals["E_" + sid] = program.slack_e;
    vals["F_" + sid] = program.slack_f;
    j["values"] = std::move(vals);
    return j.dump(2) + "\n";
}

LinearizationPoint point_from_json(const PolynomialProgram& program, const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("linearization point: ") + e.what());
    }
    LinearizationPoint pt;
    const std::string kind = j.value("kind", "flat");
    if (kind == "moment")
        pt.kind = PointKind::moment;
    else if (kind == "flat")
        pt.kind = PointKind::flat;
    else if (kind == "no-load")
        pt.kind = PointKind::no_load;
    else
        throw ParseError("unknown linearization point kind: " + kind);
    pt.order = j.value("order", 0);

    std::unordered_map<std::string, int> id_of;
    for (int i = 0; i < program.n(); ++i) id_of[program.vars.name(i)] = i;
    const std::string sid = std::to_string(program.net.buses[program.slack_bus].id);

    pt.x0 = Eigen::VectorXd::Zero(program.n());
    std::vector<char> seen(program.n(), 0);
    if (!j.contains("values") || !j["values"].is_object())
        throw ParseError("linearization point lacks a values object");
    for (const auto& [name, val] : j["values"].items()) {
        if (!val.is_number()) throw ParseError("non-numeric value for " + name);
        auto it = id_of.find(name);
        if (it == id_of.end()) {
            if (name == "E_" + sid || name == "F_" + sid) continue; // fixed slack voltage
            throw ParseError("unknown variable in linearization point: " + name);
        }
        pt.x0[it->second] = val.get<double>();
        seen[it->second] = 1;
    }
    for (int i = 0; i < program.n(); ++i)
        if (!seen[i])
            throw ParseError("linearization point is missing " + program.vars.name(i));
    return pt;
}

} // namespace momlin

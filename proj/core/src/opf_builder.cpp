#include <cmath>
#include <sstream>

#include "momlin/errors.hpp"
#include "momlin/program.hpp"
#include "momlin/uncertainty.hpp"

namespace momlin {

void VariableTable::init(const NetworkCase& c, int slack, int p) {
    const int nb = static_cast<int>(c.buses.size());
    const int ng = static_cast<int>(c.generators.size());
    const int nl = static_cast<int>(c.branches.size());

    infos_.clear();
    e_of_bus_.assign(nb, -1);
    f_of_bus_.assign(nb, -1);
    x_of_bus_.assign(nb, -1);
    p_of_gen_.assign(ng, -1);
    q_of_gen_.assign(ng, -1);
    s_of_branch_.assign(nl, {-1, -1, -1, -1});

    auto push = [&](VarKind kind, int owner, std::string name) {
        infos_.push_back({kind, owner, std::move(name)});
        return static_cast<int>(infos_.size()) - 1;
    };

    for (int i = 0; i < nb; ++i) {
        if (i == slack) continue;
        const std::string sid = std::to_string(c.buses[i].id);
        e_of_bus_[i] = push(VarKind::E, i, "E_" + sid);
        f_of_bus_[i] = push(VarKind::F, i, "F_" + sid);
    }
    for (int i = 0; i < nb; ++i)
        x_of_bus_[i] = push(VarKind::X, i, "X_" + std::to_string(c.buses[i].id));
    for (int k = 0; k < ng; ++k) {
        const std::string sid = std::to_string(c.generators[k].bus) + "_g" + std::to_string(k);
        p_of_gen_[k] = push(VarKind::P, k, "P_" + sid);
        q_of_gen_[k] = push(VarKind::Q, k, "Q_" + sid);
    }
    for (int l = 0; l < nl; ++l) {
        const std::string sid = std::to_string(l);
        s_of_branch_[l][0] = push(VarKind::Spf, l, "Spf_" + sid);
        s_of_branch_[l][1] = push(VarKind::Spt, l, "Spt_" + sid);
        s_of_branch_[l][2] = push(VarKind::Sqf, l, "Sqf_" + sid);
        s_of_branch_[l][3] = push(VarKind::Sqt, l, "Sqt_" + sid);
    }
    n_ = static_cast<int>(infos_.size());
    p_ = p;
    for (int k = 0; k < p; ++k)
        push(VarKind::Param, k, "r" + std::to_string(k + 1));
}

void VariableTable::init_generic(int n, int p) {
    infos_.clear();
    e_of_bus_.clear();
    f_of_bus_.clear();
    x_of_bus_.clear();
    p_of_gen_.clear();
    q_of_gen_.clear();
    s_of_branch_.clear();
    for (int i = 0; i < n; ++i)
        infos_.push_back({VarKind::X, i, "u" + std::to_string(i)});
    for (int k = 0; k < p; ++k)
        infos_.push_back({VarKind::Param, k, "r" + std::to_string(k + 1)});
    n_ = n;
    p_ = p;
}

namespace {

// Symbolic factor: a variable id, or a fixed number (slack substitution).
struct Sym {
    int id = -1;
    double value = 0.0;
    static Sym var(int id) { return {id, 0.0}; }
    static Sym fix(double v) { return {-1, v}; }
};

void add_prod(QuadraticForm& q, const Sym& a, const Sym& b, double coef) {
    if (coef == 0.0) return;
    if (a.id < 0 && b.id < 0)
        q.add_constant(coef * a.value * b.value);
    else if (a.id < 0)
        q.add_linear(b.id, coef * a.value);
    else if (b.id < 0)
        q.add_linear(a.id, coef * b.value);
    else
        q.add_quadratic(a.id, b.id, coef);
}

} // namespace

PolynomialProgram build_opf(const NetworkCase& c, const LoadModel& uncertainty) {
    c.validate();
    if (static_cast<int>(uncertainty.weights.size()) != static_cast<int>(c.buses.size()))
        throw ValidationError("load model weights do not match case bus count");
    for (const auto& gen : c.generators)
        if (gen.cost.size() == 3 && gen.cost[2] < 0.0)
            throw ValidationError("generator cost is not convex");

    PolynomialProgram prog;
    prog.net = c;
    if (prog.net.ybus.size() == 0) prog.net.ybus = build_ybus(c);
    prog.slack_bus = c.slack_index();
    prog.vars.init(c, prog.slack_bus, 2);

    const int nb = static_cast<int>(c.buses.size());
    const int ng = static_cast<int>(c.generators.size());
    const int nl = static_cast<int>(c.branches.size());
    const auto& V = prog.vars;
    const Eigen::MatrixXcd& Y = prog.net.ybus;

    auto E = [&](int bus) {
        return bus == prog.slack_bus ? Sym::fix(prog.slack_e) : Sym::var(V.e_of_bus(bus));
    };
    auto F = [&](int bus) {
        return bus == prog.slack_bus ? Sym::fix(prog.slack_f) : Sym::var(V.f_of_bus(bus));
    };

    // --- equalities -------------------------------------------------------
    // nodal active and reactive balances (loads enter through the factors)
    for (int i = 0; i < nb; ++i) {
        QuadraticForm hp, hq;
        for (int k = 0; k < ng; ++k) {
            if (c.bus_index(c.generators[k].bus) != i) continue;
            hp.add_linear(V.p_of_gen(k), 1.0);
            hq.add_linear(V.q_of_gen(k), 1.0);
        }
        const auto [a1, a2] = uncertainty.weights[i];
        hp.add_linear(V.param(0), -c.buses[i].p_nominal * a1);
        hp.add_linear(V.param(1), -c.buses[i].p_nominal * a2);
        hq.add_linear(V.param(0), -c.buses[i].q_nominal * a1);
        hq.add_linear(V.param(1), -c.buses[i].q_nominal * a2);
        for (int k = 0; k < nb; ++k) {
            const double G = Y(i, k).real(), B = Y(i, k).imag();
            if (G == 0.0 && B == 0.0) continue;
            // -G(EiEk + FiFk) - B(FiEk - EiFk)
            add_prod(hp, E(i), E(k), -G);
            add_prod(hp, F(i), F(k), -G);
            add_prod(hp, F(i), E(k), -B);
            add_prod(hp, E(i), F(k), B);
            // -G(FiEk - EiFk) + B(EiEk + FiFk)
            add_prod(hq, F(i), E(k), -G);
            add_prod(hq, E(i), F(k), G);
            add_prod(hq, E(i), E(k), B);
            add_prod(hq, F(i), F(k), B);
        }
        const std::string sid = std::to_string(c.buses[i].id);
        prog.h.push_back({ConstraintKind::BalanceP, i, "balance_p_" + sid, std::move(hp)});
        prog.h.push_back({ConstraintKind::BalanceQ, i, "balance_q_" + sid, std::move(hq)});
    }

    // line-flow defining equalities: flow polynomial minus its S variable
    for (int l = 0; l < nl; ++l) {
        const auto& br = c.branches[l];
        const int bl = c.bus_index(br.from);
        const int bm = c.bus_index(br.to);
        const double g = br.g, b = br.b;
        const double ghalf = br.g_sh * 0.5, bhalf = br.b_sh * 0.5;
        const double ct = std::cos(br.theta), st = std::sin(br.theta);
        const double it = 1.0 / br.tau, it2 = it * it;
        const auto& s = V.s_of_branch(l);

        // coefficient sets: {|Vl|^2 or |Vm|^2, A = ElEm + FlFm, B = FlEm - ElFm}
        struct Coefs {
            double sq, A, B;
            bool from_side;
        };
        const Coefs co[4] = {
            {it2 * (g + ghalf), it * (b * st - g * ct), -it * (g * st + b * ct), true},
            {g + ghalf, -it * (g * ct + b * st), -it * (g * st - b * ct), false},
            {-it2 * (b + bhalf), it * (b * ct + g * st), -it * (g * ct - b * st), true},
            {-(b + bhalf), it * (b * ct - g * st), it * (g * ct + b * st), false},
        };
        const ConstraintKind kinds[4] = {ConstraintKind::FlowPf, ConstraintKind::FlowPt,
                                         ConstraintKind::FlowQf, ConstraintKind::FlowQt};
        const char* tags[4] = {"flow_pf_", "flow_pt_", "flow_qf_", "flow_qt_"};

        for (int q = 0; q < 4; ++q) {
            QuadraticForm hf;
            const int side = co[q].from_side ? bl : bm;
            add_prod(hf, E(side), E(side), co[q].sq);
            add_prod(hf, F(side), F(side), co[q].sq);
            add_prod(hf, E(bl), E(bm), co[q].A);
            add_prod(hf, F(bl), F(bm), co[q].A);
            add_prod(hf, F(bl), E(bm), co[q].B);
            add_prod(hf, E(bl), F(bm), -co[q].B);
            hf.add_linear(s[q], -1.0);
            prog.h.push_back({kinds[q], l, tags[q] + std::to_string(l), std::move(hf)});
        }
    }

    // squared-magnitude lifts X_i = E_i^2 + F_i^2
    for (int i = 0; i < nb; ++i) {
        QuadraticForm hx;
        add_prod(hx, E(i), E(i), 1.0);
        add_prod(hx, F(i), F(i), 1.0);
        hx.add_linear(V.x_of_bus(i), -1.0);
        prog.h.push_back({ConstraintKind::XLift, i,
                          "lift_x_" + std::to_string(c.buses[i].id), std::move(hx)});
    }

    // --- inequalities (>= 0) ---------------------------------------------
    for (int k = 0; k < ng; ++k) {
        const auto& gen = c.generators[k];
        QuadraticForm gp; // (pmax - P)(P - pmin)
        gp.add_quadratic(V.p_of_gen(k), V.p_of_gen(k), -1.0);
        gp.add_linear(V.p_of_gen(k), gen.pmin + gen.pmax);
        gp.add_constant(-gen.pmin * gen.pmax);
        QuadraticForm gq;
        gq.add_quadratic(V.q_of_gen(k), V.q_of_gen(k), -1.0);
        gq.add_linear(V.q_of_gen(k), gen.qmin + gen.qmax);
        gq.add_constant(-gen.qmin * gen.qmax);
        const std::string sid = std::to_string(gen.bus) + "_g" + std::to_string(k);
        prog.g.push_back({ConstraintKind::GenPBox, k, "box_p_" + sid, std::move(gp)});
        prog.g.push_back({ConstraintKind::GenQBox, k, "box_q_" + sid, std::move(gq)});
    }
    for (int i = 0; i < nb; ++i) {
        QuadraticForm gv; // vmax^2 - E^2 - F^2
        gv.add_constant(c.buses[i].vmax * c.buses[i].vmax);
        add_prod(gv, E(i), E(i), -1.0);
        add_prod(gv, F(i), F(i), -1.0);
        prog.g.push_back({ConstraintKind::VoltageUpper, i,
                          "vmax_" + std::to_string(c.buses[i].id), std::move(gv)});
    }
    for (int i = 0; i < nb; ++i) {
        QuadraticForm gx; // X - vmin^2
        gx.add_linear(V.x_of_bus(i), 1.0);
        gx.add_constant(-c.buses[i].vmin * c.buses[i].vmin);
        prog.g.push_back({ConstraintKind::XLower, i,
                          "vmin_" + std::to_string(c.buses[i].id), std::move(gx)});
    }
    for (int l = 0; l < nl; ++l) {
        const auto& br = c.branches[l];
        if (!std::isfinite(br.s_max)) continue;
        const auto& s = V.s_of_branch(l);
        const double cap = br.s_max * br.s_max;
        QuadraticForm gf, gt;
        gf.add_constant(cap);
        gf.add_quadratic(s[0], s[0], -1.0);
        gf.add_quadratic(s[2], s[2], -1.0);
        gt.add_constant(cap);
        gt.add_quadratic(s[1], s[1], -1.0);
        gt.add_quadratic(s[3], s[3], -1.0);
        prog.g.push_back({ConstraintKind::LineLimitFrom, l,
                          "smax_f_" + std::to_string(l), std::move(gf)});
        prog.g.push_back({ConstraintKind::LineLimitTo, l,
                          "smax_t_" + std::to_string(l), std::move(gt)});
    }
    // parameter boxes (r - lo)(hi - r) >= 0 defining the factor set
    for (int k = 0; k < 2; ++k) {
        QuadraticForm gy;
        gy.add_quadratic(V.param(k), V.param(k), -1.0);
        gy.add_linear(V.param(k), uncertainty.lo[k] + uncertainty.hi[k]);
        gy.add_constant(-uncertainty.lo[k] * uncertainty.hi[k]);
        prog.g.push_back({ConstraintKind::ParamBox, k,
                          "factor_box_r" + std::to_string(k + 1), std::move(gy)});
    }
    prog.num_param_box = 2;

    // --- objective ---------------------------------------------------------
    for (int k = 0; k < ng; ++k) {
        const auto& gen = c.generators[k];
        prog.f.add_constant(gen.c0());
        prog.f.add_linear(V.p_of_gen(k), gen.c1());
        prog.f.add_quadratic(V.p_of_gen(k), V.p_of_gen(k), gen.c2());
    }

    for (auto& pc : prog.h) pc.poly.compress();
    for (auto& pc : prog.g) pc.poly.compress();
    prog.f.compress();
    return prog;
}

Eigen::VectorXd PolynomialProgram::joint(const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& y) const {
    if (x.size() != n() || y.size() != p())
        throw ValidationError("joint(): dimension mismatch");
    Eigen::VectorXd u(n() + p());
    u << x, y;
    return u;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd>
eval_constraints(const PolynomialProgram& program, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& y) {
    const Eigen::VectorXd u = program.joint(x, y);
    Eigen::VectorXd hv(program.h.size()), gv(program.g.size());
    for (std::size_t i = 0; i < program.h.size(); ++i) hv[i] = program.h[i].poly.eval(u);
    for (std::size_t j = 0; j < program.g.size(); ++j) gv[j] = program.g[j].poly.eval(u);
    return {hv, gv};
}

const PolyConstraint& constraint_by_id(const PolynomialProgram& program, int id) {
    const int nh = static_cast<int>(program.h.size());
    const int ntot = nh + static_cast<int>(program.g.size());
    if (id < 0 || id >= ntot) throw ValidationError("constraint id out of range");
    return id < nh ? program.h[id] : program.g[id - nh];
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd>
gradient_hessian(const PolynomialProgram& program, int constraint_id,
                 const Eigen::VectorXd& x) {
    if (x.size() != program.n()) throw ValidationError("gradient_hessian(): bad x size");
    const auto& pc = constraint_by_id(program, constraint_id);
    Eigen::VectorXd u(program.n() + program.p());
    u << x, Eigen::VectorXd::Zero(program.p());
    return {pc.poly.gradient_head(u, program.n()), pc.poly.hessian_head(program.n())};
}

std::string PolynomialProgram::debug_dump() const {
    auto nm = [this](int id) { return vars.name(id); };
    auto poly_str = [&](const QuadraticForm& q) {
        std::ostringstream os;
        os.precision(12);
        bool first = true;
        auto sep = [&]() {
            if (!first) os << " + ";
            first = false;
        };
        if (q.constant != 0.0) {
            sep();
            os << q.constant;
        }
        for (const auto& t : q.linear) {
            sep();
            os << t.coef << "*" << nm(t.var);
        }
        for (const auto& t : q.quadratic) {
            sep();
            os << t.coef << "*" << nm(t.row);
            os << "*" << nm(t.col);
        }
        if (first) os << "0";
        return os.str();
    };
    std::ostringstream os;
    os << "min " << poly_str(f) << "\n";
    for (const auto& pc : h) os << pc.name << ": " << poly_str(pc.poly) << " = 0\n";
    for (const auto& pc : g) os << pc.name << ": " << poly_str(pc.poly) << " >= 0\n";
    return os.str();
}

} // namespace momlin

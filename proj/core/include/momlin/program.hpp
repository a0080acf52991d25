#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <utility>
#include <vector>

#include "momlin/case.hpp"
#include "momlin/quadratic.hpp"

namespace momlin {

enum class VarKind { E, F, X, P, Q, Spf, Spt, Sqf, Sqt, Param };

struct VarInfo {
    VarKind kind = VarKind::E;
    int owner = 0; // bus / generator / branch position (0-based), or parameter index
    std::string name;
};

// Maps (kind, owner) pairs to global column ids. Decision variables occupy
// [0, n); the latent parameters follow at [n, n+p).
class VariableTable {
public:
    void init(const NetworkCase& c, int slack, int p);
    // bare table with n generic decision variables (u0, u1, ...) and p
    // parameters; used by callers assembling programs by hand
    void init_generic(int n, int p);

    int n() const { return n_; }
    int p() const { return p_; }
    const std::vector<VarInfo>& infos() const { return infos_; }
    const std::string& name(int id) const { return infos_[id].name; }

    // -1 for the eliminated slack entries
    int e_of_bus(int bus) const { return e_of_bus_[bus]; }
    int f_of_bus(int bus) const { return f_of_bus_[bus]; }
    int x_of_bus(int bus) const { return x_of_bus_[bus]; }
    int p_of_gen(int gen) const { return p_of_gen_[gen]; }
    int q_of_gen(int gen) const { return q_of_gen_[gen]; }
    // order: Spf, Spt, Sqf, Sqt
    const std::array<int, 4>& s_of_branch(int br) const { return s_of_branch_[br]; }
    int param(int k) const { return n_ + k; }

private:
    int n_ = 0, p_ = 0;
    std::vector<VarInfo> infos_;
    std::vector<int> e_of_bus_, f_of_bus_, x_of_bus_;
    std::vector<int> p_of_gen_, q_of_gen_;
    std::vector<std::array<int, 4>> s_of_branch_;
};

enum class ConstraintKind {
    BalanceP,
    BalanceQ,
    FlowPf,
    FlowPt,
    FlowQf,
    FlowQt,
    XLift,
    GenPBox,
    GenQBox,
    VoltageUpper,
    XLower,
    LineLimitFrom,
    LineLimitTo,
    ParamBox,
};

struct PolyConstraint {
    ConstraintKind kind = ConstraintKind::BalanceP;
    int owner = 0; // bus / generator / branch position, or parameter index
    std::string name;
    QuadraticForm poly;
};

// Degree-2 polynomial optimization form of the OPF over decision vector x
// (dimension n) and latent load factors y (dimension p): minimize f(x)
// subject to h_i(x, y) = 0 and g_j >= 0 (trailing g rows constrain y only).
struct PolynomialProgram {
    NetworkCase net;
    VariableTable vars;
    int slack_bus = 0;       // bus position whose E, F were substituted
    double slack_e = 1.0;
    double slack_f = 0.0;

    std::vector<PolyConstraint> h;
    std::vector<PolyConstraint> g;
    int num_param_box = 0;   // trailing g rows that define the parameter set
    QuadraticForm f;

    int n() const { return vars.n(); }
    int p() const { return vars.p(); }
    // inequalities on x only (excludes the trailing parameter boxes)
    int num_gx() const { return static_cast<int>(g.size()) - num_param_box; }

    Eigen::VectorXd joint(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
    std::string debug_dump() const;
};

struct LoadModel; // uncertainty.hpp

// Build the polynomial program: nodal balances, line-flow definitions,
// squared-magnitude lifts, generator/voltage/flow boxes, parameter boxes.
// Slack-bus voltage is substituted out (E=1, F=0).
PolynomialProgram build_opf(const NetworkCase& c, const LoadModel& uncertainty);

// Exact evaluation of all equalities and inequalities at (x, y).
std::pair<Eigen::VectorXd, Eigen::VectorXd>
eval_constraints(const PolynomialProgram& program, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& y);

// Gradient over x at the given point and the (x-block) Hessian of one
// constraint; ids run over h first, then g.
std::pair<Eigen::VectorXd, Eigen::MatrixXd>
gradient_hessian(const PolynomialProgram& program, int constraint_id,
                 const Eigen::VectorXd& x);

const PolyConstraint& constraint_by_id(const PolynomialProgram& program, int id);

} // namespace momlin

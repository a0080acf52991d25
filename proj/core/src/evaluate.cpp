#include "momlin/evaluate.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "momlin/errors.hpp"

namespace momlin {

namespace {

std::string fmt(double v) {
    std::array<char, 40> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) {
        std::snprintf(buf.data(), buf.size(), "%.17g", v);
        return std::string(buf.data());
    }
    return std::string(buf.data(), ptr);
}

void add_terms(ScalarRow& row, const Eigen::RowVectorXd& coefs) {
    for (int v = 0; v < coefs.size(); ++v)
        if (coefs[v] != 0.0) row.terms.push_back({v, coefs[v]});
}

struct Moments {
    double mean = 0.0, stddev = 0.0;
};

Moments population_moments(const std::vector<double>& v) {
    Moments m;
    if (v.empty()) return m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(acc / static_cast<double>(v.size()));
    return m;
}

} // namespace

ScenarioModel build_scenario_model(const PolynomialProgram& program,
                                   const LinearizedProgram& lin) {
    const NetworkCase& net = program.net;
    const VariableTable& vars = program.vars;
    const int n = program.n();
    const int rows = static_cast<int>(lin.A.rows());

    ScenarioModel model;
    model.num_x = n;
    model.B = lin.B;
    ConicProblem& cp = model.base;
    cp.num_vars = n;

    for (int i = 0; i < rows; ++i) {
        ScalarRow row;
        row.constant = lin.c[i];
        add_terms(row, lin.A.row(i));
        cp.equalities.push_back(std::move(row));
    }

    auto bound_pair = [&](int var, double lo, double hi) {
        if (lo == hi) {
            ScalarRow row;
            row.constant = -lo;
            row.terms.push_back({var, 1.0});
            cp.equalities.push_back(std::move(row));
            return;
        }
        if (std::isfinite(lo)) {
            ScalarRow row;
            row.constant = -lo;
            row.terms.push_back({var, 1.0});
            cp.nonneg.push_back(std::move(row));
        }
        if (std::isfinite(hi)) {
            ScalarRow row;
            row.constant = hi;
            row.terms.push_back({var, -1.0});
            cp.nonneg.push_back(std::move(row));
        }
    };

    for (int g = 0; g < static_cast<int>(net.generators.size()); ++g) {
        const Generator& gen = net.generators[g];
        bound_pair(vars.p_of_gen(g), gen.pmin, gen.pmax);
        bound_pair(vars.q_of_gen(g), gen.qmin, gen.qmax);
    }
    for (int b = 0; b < static_cast<int>(net.buses.size()); ++b) {
        ScalarRow row; // lifted squared magnitude above its floor
        row.constant = -net.buses[b].vmin * net.buses[b].vmin;
        row.terms.push_back({vars.x_of_bus(b), 1.0});
        cp.nonneg.push_back(std::move(row));

        if (vars.e_of_bus(b) < 0) continue; // slack voltage is fixed
        SocBlock blk; // |V_b| within its ceiling
        ScalarRow top;
        top.constant = net.buses[b].vmax;
        blk.rows.push_back(std::move(top));
        ScalarRow re, im;
        re.terms.push_back({vars.e_of_bus(b), 1.0});
        im.terms.push_back({vars.f_of_bus(b), 1.0});
        blk.rows.push_back(std::move(re));
        blk.rows.push_back(std::move(im));
        cp.soc.push_back(std::move(blk));
    }
    for (int l = 0; l < static_cast<int>(net.branches.size()); ++l) {
        const Branch& br = net.branches[l];
        if (!std::isfinite(br.s_max)) continue;
        const auto& s = vars.s_of_branch(l);
        for (int side = 0; side < 2; ++side) {
            SocBlock blk; // apparent power within the line rating
            ScalarRow top;
            top.constant = br.s_max;
            blk.rows.push_back(std::move(top));
            ScalarRow pr, qr;
            pr.terms.push_back({s[side], 1.0});
            qr.terms.push_back({s[2 + side], 1.0});
            blk.rows.push_back(std::move(pr));
            blk.rows.push_back(std::move(qr));
            cp.soc.push_back(std::move(blk));
        }
    }

    // generation cost: linear part direct, quadratic part through an
    // epigraph variable u with c2 P^2 <= u as a second-order cone row
    for (int g = 0; g < static_cast<int>(net.generators.size()); ++g) {
        const Generator& gen = net.generators[g];
        const int pid = vars.p_of_gen(g);
        cp.objective_constant += gen.c0();
        if (gen.c1() != 0.0) cp.objective.push_back({pid, gen.c1()});
        if (gen.c2() > 0.0) {
            const int u = cp.num_vars++;
            cp.objective.push_back({u, 1.0});
            SocBlock blk;
            ScalarRow top, lin_row, quad_row;
            top.constant = 1.0;
            top.terms.push_back({u, 1.0}); // u + 1
            quad_row.terms.push_back({pid, 2.0 * std::sqrt(gen.c2())});
            lin_row.constant = -1.0;
            lin_row.terms.push_back({u, 1.0}); // u - 1
            blk.rows.push_back(std::move(top));
            blk.rows.push_back(std::move(quad_row));
            blk.rows.push_back(std::move(lin_row));
            cp.soc.push_back(std::move(blk));
        }
    }

    // violation surrogate for the second (tie-breaking) solve
    model.x0 = lin.x0;
    Eigen::MatrixXd htot = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < static_cast<int>(program.h.size()); ++i) {
        const auto [plus, minus] = hessian_split(equality_hessian(program, i));
        htot += plus + minus;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(htot);
    const double lmax = eig.eigenvalues().cwiseAbs().maxCoeff();
    int rank = 0;
    for (int i = 0; i < n; ++i)
        if (eig.eigenvalues()[i] > 1e-12 * lmax) ++rank;
    model.Lt.resize(rank, n);
    for (int i = n - rank, r = 0; i < n; ++i, ++r)
        model.Lt.row(r) = std::sqrt(eig.eigenvalues()[i]) * eig.eigenvectors().col(i).transpose();
    return model;
}

ScenarioSolve solve_linearized(const PolynomialProgram& program, const ScenarioModel& model,
                               const Eigen::VectorXd& y, const SolverSettings& settings) {
    if (y.size() != model.B.cols()) throw ValidationError("scenario dimension mismatch");
    ConicProblem cp = model.base;
    const Eigen::VectorXd shift = model.B * y;
    for (int i = 0; i < shift.size(); ++i) cp.equalities[i].constant += shift[i];

    SolverSettings s = settings;
    s.presolve_equalities = true;
    const SolveResult r = solve(cp, s);

    ScenarioSolve out;
    out.status = r.status;
    if (r.x.size() < model.num_x) return out;
    out.x = r.x.head(model.num_x);

    if (solution_usable(r.status) && model.Lt.rows() > 0) {
        // re-solve over the optimal face for the smallest violation surrogate
        double fstar = 0.0;
        for (const auto& t : cp.objective) fstar += t.coef * r.x[t.var];
        ScalarRow pin;
        pin.constant = fstar + 1e-6 * std::max(1.0, std::abs(fstar));
        for (const auto& t : cp.objective) pin.terms.push_back({t.var, -t.coef});
        cp.nonneg.push_back(std::move(pin));

        const int t = cp.num_vars++;
        SocBlock blk; // t >= |Lt (x - x0)|^2 via the rotated-cone embedding
        ScalarRow top;
        top.constant = 1.0;
        top.terms.push_back({t, 1.0});
        blk.rows.push_back(std::move(top));
        const Eigen::VectorXd off = model.Lt * model.x0;
        for (int rr = 0; rr < model.Lt.rows(); ++rr) {
            ScalarRow row;
            row.constant = -2.0 * off[rr];
            add_terms(row, 2.0 * model.Lt.row(rr));
            blk.rows.push_back(std::move(row));
        }
        ScalarRow bottom;
        bottom.constant = -1.0;
        bottom.terms.push_back({t, 1.0});
        blk.rows.push_back(std::move(bottom));
        cp.soc.push_back(std::move(blk));
        cp.objective = {{t, 1.0}};
        cp.objective_constant = 0.0;

        const SolveResult rp = solve(cp, s);
        if (solution_usable(rp.status) && rp.x.size() >= model.num_x)
            out.x = rp.x.head(model.num_x);
    }

    const Eigen::VectorXd u = program.joint(out.x, y);
    out.cost = program.f.eval(u);
    const int nb = static_cast<int>(program.net.buses.size());
    out.p = Eigen::VectorXd::Zero(nb);
    out.q = Eigen::VectorXd::Zero(nb);
    for (const auto& con : program.h) {
        if (con.kind == ConstraintKind::BalanceP)
            out.p[con.owner] = con.poly.eval(u);
        else if (con.kind == ConstraintKind::BalanceQ)
            out.q[con.owner] = con.poly.eval(u);
    }
    out.eps_p = out.p.cwiseAbs().sum();
    out.eps_q = out.q.cwiseAbs().sum();
    return out;
}

EvaluationReport run_monte_carlo(const PolynomialProgram& program,
                                 const std::vector<LinearizationPoint>& points,
                                 const ScenarioSet& scenarios,
                                 const MonteCarloOptions& options) {
    if (points.empty()) throw ValidationError("no linearization points given");
    const int M = scenarios.M();
    if (M < 1) throw ValidationError("no scenarios given");
    if (options.histogram_bins < 1) throw ValidationError("need at least one histogram bin");

    EvaluationReport rep;
    rep.case_name = program.net.name;
    rep.scenarios = M;

    struct Pool {
        std::vector<double> eps_p, eps_q, cost, resid_p, resid_q;
    };
    std::vector<Pool> pools(points.size());

    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        const LinearizedProgram lin = linearize_program(program, points[pi]);
        const ScenarioModel model = build_scenario_model(program, lin);
        ProfileStats st;
        st.name = points[pi].label();
        Pool& pool = pools[pi];
        for (int m = 0; m < M; ++m) {
            const Eigen::VectorXd y = scenarios.samples.row(m).transpose();
            const ScenarioSolve s = solve_linearized(program, model, y, options.solver);
            if (!solution_usable(s.status)) {
                ++st.failed;
                continue;
            }
            ++st.solved;
            pool.eps_p.push_back(s.eps_p);
            pool.eps_q.push_back(s.eps_q);
            pool.cost.push_back(s.cost);
            for (int b = 0; b < s.p.size(); ++b) {
                pool.resid_p.push_back(s.p[b]);
                pool.resid_q.push_back(s.q[b]);
            }
        }
        const Moments mp = population_moments(pool.eps_p);
        const Moments mq = population_moments(pool.eps_q);
        st.mean_eps_p = mp.mean;
        st.std_eps_p = mp.stddev;
        st.mean_eps_q = mq.mean;
        st.std_eps_q = mq.stddev;
        st.mean_cost = population_moments(pool.cost).mean;
        rep.profiles.push_back(std::move(st));
    }

    // shared fixed-width bins over the pooled range of every profile
    auto make_axis = [&](const std::vector<std::vector<double>*>& all) {
        HistogramAxis ax;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto* v : all)
            for (double x : *v) {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        if (!(lo <= hi)) return ax; // nothing solved anywhere
        if (hi - lo < 1e-300) hi = lo + 1e-12;
        ax.lo = lo;
        ax.bins = options.histogram_bins;
        ax.width = (hi - lo) / ax.bins;
        return ax;
    };
    auto fill_hist = [](const HistogramAxis& ax, const std::vector<double>& v) {
        std::vector<long> counts(static_cast<std::size_t>(ax.bins), 0);
        for (double x : v) {
            int b = static_cast<int>((x - ax.lo) / ax.width);
            b = std::clamp(b, 0, ax.bins - 1);
            ++counts[static_cast<std::size_t>(b)];
        }
        return counts;
    };
    std::vector<std::vector<double>*> all_p, all_q;
    for (auto& pool : pools) {
        all_p.push_back(&pool.resid_p);
        all_q.push_back(&pool.resid_q);
    }
    rep.axis_p = make_axis(all_p);
    rep.axis_q = make_axis(all_q);
    for (std::size_t pi = 0; pi < pools.size(); ++pi) {
        if (rep.axis_p.bins > 0) rep.profiles[pi].hist_p = fill_hist(rep.axis_p, pools[pi].resid_p);
        if (rep.axis_q.bins > 0) rep.profiles[pi].hist_q = fill_hist(rep.axis_q, pools[pi].resid_q);
    }
    return rep;
}

std::vector<ProfileComparison> compare_profiles(const EvaluationReport& report) {
    std::vector<ProfileComparison> out;
    const std::vector<std::pair<std::string, double ProfileStats::*>> metrics = {
        {"eps_p", &ProfileStats::mean_eps_p},
        {"eps_q", &ProfileStats::mean_eps_q},
        {"cost", &ProfileStats::mean_cost},
    };
    for (const auto& [name, field] : metrics) {
        ProfileComparison cmp;
        cmp.metric = name;
        for (int i = 0; i < static_cast<int>(report.profiles.size()); ++i)
            if (report.profiles[i].solved > 0) cmp.order.push_back(i);
        std::stable_sort(cmp.order.begin(), cmp.order.end(), [&](int a, int b) {
            return report.profiles[a].*field < report.profiles[b].*field;
        });
        cmp.ratio.assign(report.profiles.size(),
                         std::numeric_limits<double>::quiet_NaN());
        if (!cmp.order.empty()) {
            const double best = report.profiles[cmp.order.front()].*field;
            for (int i : cmp.order) {
                const double v = report.profiles[i].*field;
                cmp.ratio[i] = best > 0 ? v / best : (v == best ? 1.0 :
                               std::numeric_limits<double>::infinity());
            }
        }
        out.push_back(std::move(cmp));
    }
    return out;
}

std::string report_csv(const EvaluationReport& report) {
    std::ostringstream os;
    os << "case,profile,metric,value\n";
    for (const auto& st : report.profiles) {
        auto row = [&](const char* metric, double v) {
            os << report.case_name << "," << st.name << "," << metric << "," << fmt(v)
               << "\n";
        };
        row("eps_p_mean", st.mean_eps_p);
        row("eps_p_std", st.std_eps_p);
        row("eps_q_mean", st.mean_eps_q);
        row("eps_q_std", st.std_eps_q);
        row("cost_mean", st.mean_cost);
        row("solved", st.solved);
        row("failed", st.failed);
    }
    return os.str();
}

std::string report_json(const EvaluationReport& report) {
    nlohmann::json j;
    j["case"] = report.case_name;
    j["scenarios"] = report.scenarios;
    auto axis = [](const HistogramAxis& ax) {
        return nlohmann::json{{"lo", ax.lo}, {"width", ax.width}, {"bins", ax.bins}};
    };
    j["histogram_axis"] = {{"p", axis(report.axis_p)}, {"q", axis(report.axis_q)}};
    j["profiles"] = nlohmann::json::array();
    for (const auto& st : report.profiles) {
        nlohmann::json p;
        p["name"] = st.name;
        p["solved"] = st.solved;
        p["failed"] = st.failed;
        p["eps_p"] = {{"mean", st.mean_eps_p}, {"std", st.std_eps_p}};
        p["eps_q"] = {{"mean", st.mean_eps_q}, {"std", st.std_eps_q}};
        p["cost_mean"] = st.mean_cost;
        p["hist_p"] = st.hist_p;
        p["hist_q"] = st.hist_q;
        j["profiles"].push_back(std::move(p));
    }
    return j.dump(2) + "\n";
}

std::string histogram_csv(const EvaluationReport& report) {
    std::ostringstream os;
    os << "quantity,bin_lo,bin_hi";
    for (const auto& st : report.profiles) os << "," << st.name;
    os << "\n";
    auto emit = [&](const char* what, const HistogramAxis& ax,
                    std::vector<long> ProfileStats::* hist) {
        for (int b = 0; b < ax.bins; ++b) {
            os << what << "," << fmt(ax.lo + b * ax.width) << ","
               << fmt(ax.lo + (b + 1) * ax.width);
            for (const auto& st : report.profiles)
                os << ","
                   << (b < static_cast<int>((st.*hist).size()) ? (st.*hist)[b] : 0);
            os << "\n";
        }
    };
    emit("p", report.axis_p, &ProfileStats::hist_p);
    emit("q", report.axis_q, &ProfileStats::hist_q);
    return os.str();
}

} // namespace momlin

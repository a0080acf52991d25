#include "momlin/presolve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "momlin/errors.hpp"

namespace momlin {

namespace {

struct Row {
    std::unordered_map<int, double> coef;
    double constant = 0.0;
    // largest coefficient magnitude the row has carried; entries far below it
    // are cancellation residue, not data
    double scale = 0.0;
    bool alive = true;
};

} // namespace

EqElimination eliminate_equalities(const ConicProblem& problem) {
    EqElimination out;
    const int n = problem.num_vars;

    std::vector<Row> rows;
    rows.reserve(problem.equalities.size());
    for (const auto& e : problem.equalities) {
        Row r;
        r.constant = e.constant;
        for (const auto& t : e.terms) r.coef[t.var] += t.coef;
        for (auto it = r.coef.begin(); it != r.coef.end();)
            it = it->second == 0.0 ? r.coef.erase(it) : std::next(it);
        for (const auto& [var, cf] : r.coef) r.scale = std::max(r.scale, std::abs(cf));
        rows.push_back(std::move(r));
    }

    // column occupancy over the equality system
    std::vector<std::unordered_set<int>> cols(n);
    for (std::size_t ri = 0; ri < rows.size(); ++ri)
        for (const auto& [var, cf] : rows[ri].coef) cols[var].insert(static_cast<int>(ri));

    // rows that substitution has inflated far beyond the original data scale
    // stop pivoting and survive as explicit equality rows instead
    double scale0 = 1.0;
    for (const auto& r : rows) scale0 = std::max(scale0, r.scale);
    const double scale_cap = 1e3 * scale0;

    std::vector<char> eliminated(n, 0);
    // eagerly resolved substitutions: each expression references only
    // still-alive or kept variables, so it is final once its variables are
    const double growth_cap = 30.0; // largest coefficient a substitution may create
    std::unordered_map<int, Row> resolved;
    std::vector<std::unordered_set<int>> occ(n); // var -> resolved ids referencing it
    std::vector<double> occ_max(n, 0.0);         // max |coef| of var across resolved exprs

    std::size_t remaining = rows.size();
    while (remaining > 0) {
        // Markowitz-style pivot selection: cheapest (row_nnz-1)*(col_count-1)
        // among pivots whose substitution stays within the growth caps, ties
        // broken toward larger pivot magnitude for stability.
        int best_row = -1, best_var = -1;
        double best_cost = 0.0, best_mag = 0.0;
        for (std::size_t ri = 0; ri < rows.size(); ++ri) {
            const Row& r = rows[ri];
            if (!r.alive) continue;
            if (r.coef.empty()) continue;
            // only pivot rows of one or two variables: the substituted
            // expression then has at most one variable, so it never adds
            // entries to the cone blocks or lengthens other rows. Longer
            // rows are cheap for the interior-point method to keep, while
            // substituting them densifies the semidefinite blocks badly.
            if (r.coef.size() > 2) continue;
            if (r.scale > scale_cap) continue;
            double row_max = 0.0;
            for (const auto& [var, cf] : r.coef) row_max = std::max(row_max, std::abs(cf));
            for (const auto& [var, cf] : r.coef) {
                // a small pivot scales the substituted expression by
                // row_max/|pivot|; chained through earlier resolved
                // expressions that compounds, so both factors are bounded
                const double inflate = row_max / std::abs(cf);
                if (inflate > 10.0) continue;
                if (std::abs(cf) <= 1e-6 * r.scale) continue; // degraded entry
                if (occ_max[var] * inflate > growth_cap) continue;
                const double cost = static_cast<double>(r.coef.size() - 1) *
                                    static_cast<double>(cols[var].size() - 1);
                if (best_row < 0 || cost < best_cost ||
                    (cost == best_cost && std::abs(cf) > best_mag)) {
                    best_row = static_cast<int>(ri);
                    best_var = var;
                    best_cost = cost;
                    best_mag = std::abs(cf);
                }
            }
        }

        // flush rows with no variables left: consistency checks
        bool progressed = false;
        for (std::size_t ri = 0; ri < rows.size(); ++ri) {
            Row& r = rows[ri];
            if (!r.alive || !r.coef.empty()) continue;
            if (std::abs(r.constant) > 1e-8 * std::max(1.0, r.scale)) {
                out.infeasible = true;
                return out;
            }
            r.alive = false;
            --remaining;
            progressed = true;
        }
        if (best_row < 0) {
            if (progressed) continue;
            // the remaining rows have no admissible pivot; they survive as
            // explicit equality rows of the reduced problem
            break;
        }
        if (!rows[best_row].alive) continue;

        // expr: var = -(constant + sum other coef*u)/pivot
        Row& pr = rows[best_row];
        const double piv = pr.coef[best_var];
        Row expr;
        expr.constant = -pr.constant / piv;
        for (const auto& [var, cf] : pr.coef)
            if (var != best_var) expr.coef[var] = -cf / piv;

        // forward-substitute into the resolved expressions referencing it
        {
            std::vector<int> holders(occ[best_var].begin(), occ[best_var].end());
            for (int a : holders) {
                Row& ra = resolved[a];
                auto it = ra.coef.find(best_var);
                if (it == ra.coef.end()) continue;
                const double mult = it->second;
                ra.coef.erase(it);
                ra.constant += mult * expr.constant;
                for (const auto& [var, cf] : expr.coef) {
                    double& slot = ra.coef[var];
                    const bool existed = slot != 0.0;
                    slot += mult * cf;
                    if (slot == 0.0) {
                        ra.coef.erase(var);
                        occ[var].erase(a);
                    } else {
                        if (!existed) occ[var].insert(a);
                        occ_max[var] = std::max(occ_max[var], std::abs(slot));
                    }
                }
            }
            occ[best_var].clear();
            occ_max[best_var] = 0.0;
        }
        for (const auto& [var, cf] : expr.coef) {
            occ[var].insert(best_var);
            occ_max[var] = std::max(occ_max[var], std::abs(cf));
        }
        resolved[best_var] = expr;
        eliminated[best_var] = 1;

        pr.alive = false;
        --remaining;
        for (const auto& [var, cf] : pr.coef) cols[var].erase(best_row);

        // substitute into every other row containing the pivot variable
        std::vector<int> touch(cols[best_var].begin(), cols[best_var].end());
        cols[best_var].clear();
        for (int ri : touch) {
            Row& r = rows[ri];
            if (!r.alive) continue;
            auto it = r.coef.find(best_var);
            if (it == r.coef.end()) continue;
            const double mult = it->second;
            r.coef.erase(it);
            r.constant += mult * expr.constant;
            for (const auto& [var, cf] : expr.coef) {
                double& slot = r.coef[var];
                const bool existed = slot != 0.0;
                slot += mult * cf;
                r.scale = std::max(r.scale, std::abs(mult * cf));
                if (slot == 0.0) {
                    r.coef.erase(var);
                    cols[var].erase(ri);
                } else if (!existed) {
                    cols[var].insert(ri);
                }
            }
            // drop cancellation residue so it can never pivot a later step
            for (auto ct = r.coef.begin(); ct != r.coef.end();) {
                if (std::abs(ct->second) <= 1e-12 * r.scale) {
                    cols[ct->first].erase(ri);
                    ct = r.coef.erase(ct);
                } else {
                    ++ct;
                }
            }
        }
    }

    // variable mapping
    out.var_map.assign(n, -1);
    int nred = 0;
    for (int vId = 0; vId < n; ++vId)
        if (!eliminated[vId]) out.var_map[vId] = nred++;

    for (const auto& [var, expr] : resolved) {
        ScalarRow sr;
        sr.constant = expr.constant;
        for (const auto& [u, cf] : expr.coef) sr.terms.push_back({u, cf});
        std::sort(sr.terms.begin(), sr.terms.end(),
                  [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
        out.recovery.emplace_back(var, std::move(sr));
    }
    std::sort(out.recovery.begin(), out.recovery.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // rewrite a scalar row onto the reduced space
    auto rewrite_row = [&](const ScalarRow& row) {
        ScalarRow nr;
        nr.constant = row.constant;
        std::map<int, double> acc;
        for (const auto& t : row.terms) {
            if (!eliminated[t.var]) {
                acc[out.var_map[t.var]] += t.coef;
                continue;
            }
            const Row& ex = resolved.at(t.var);
            nr.constant += t.coef * ex.constant;
            for (const auto& [u, cf] : ex.coef) acc[out.var_map[u]] += t.coef * cf;
        }
        for (const auto& [var, cf] : acc)
            if (cf != 0.0) nr.terms.push_back({var, cf});
        return nr;
    };

    ConicProblem& red = out.reduced;
    red.num_vars = nred;
    red.objective_constant = problem.objective_constant;
    {
        ScalarRow obj;
        obj.terms = problem.objective;
        const ScalarRow ro = rewrite_row(obj);
        red.objective = ro.terms;
        red.objective_constant += ro.constant;
    }
    // rows that resisted stable elimination stay as explicit equalities
    for (const auto& r : rows) {
        if (!r.alive) continue;
        ScalarRow sr;
        sr.constant = r.constant;
        for (const auto& [var, cf] : r.coef) sr.terms.push_back({var, cf});
        red.equalities.push_back(rewrite_row(sr));
    }
    for (const auto& r : problem.nonneg) red.nonneg.push_back(rewrite_row(r));
    for (const auto& b : problem.soc) {
        SocBlock nb;
        for (const auto& r : b.rows) nb.rows.push_back(rewrite_row(r));
        red.soc.push_back(std::move(nb));
    }
    for (const auto& b : problem.psd) {
        PsdBlock nb;
        nb.dim = b.dim;
        std::map<std::pair<int, int>, double> cacc;
        for (const auto& t : b.constant) cacc[{t.row, t.col}] += t.value;
        std::map<std::tuple<int, int, int>, double> eacc; // (var, row, col)
        for (const auto& e : b.entries) {
            if (!eliminated[e.var]) {
                eacc[{out.var_map[e.var], e.row, e.col}] += e.coef;
                continue;
            }
            const Row& ex = resolved.at(e.var);
            if (ex.constant != 0.0) cacc[{e.row, e.col}] += e.coef * ex.constant;
            for (const auto& [u, cf] : ex.coef)
                eacc[{out.var_map[u], e.row, e.col}] += e.coef * cf;
        }
        for (const auto& [rc, val] : cacc)
            if (val != 0.0) nb.constant.push_back({rc.first, rc.second, val});
        for (const auto& [key, val] : eacc)
            if (val != 0.0)
                nb.entries.push_back(
                    {std::get<0>(key), std::get<1>(key), std::get<2>(key), val});
        red.psd.push_back(std::move(nb));
    }

    return out;
}

Eigen::VectorXd recover_primal(const EqElimination& elim, const Eigen::VectorXd& x_reduced) {
    const int n = static_cast<int>(elim.var_map.size());
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int v = 0; v < n; ++v)
        if (elim.var_map[v] >= 0) x[v] = x_reduced[elim.var_map[v]];
    for (const auto& [v, expr] : elim.recovery) {
        double acc = expr.constant;
        for (const auto& t : expr.terms) acc += t.coef * x[t.var];
        x[v] = acc;
    }
    return x;
}

} // namespace momlin

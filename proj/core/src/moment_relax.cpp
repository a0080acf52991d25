#include "momlin/moment_relax.hpp"

#include <algorithm>
#include <chrono>
#include <utility>

#include "momlin/errors.hpp"

namespace momlin {

namespace {

int intern(MomentRelaxation& rel, const Monomial& m) {
    auto it = rel.index.find(m);
    if (it != rel.index.end()) return it->second;
    const int id = static_cast<int>(rel.keys.size());
    rel.keys.push_back(m);
    rel.index.emplace(m, id);
    return id;
}

int lookup(const MomentRelaxation& rel, const Monomial& m) {
    auto it = rel.index.find(m);
    if (it == rel.index.end())
        throw SolverError("moment table has no entry for " + m.str() +
                          "; constraint support is not covered by its clique");
    return it->second;
}

} // namespace

MomentRelaxation build_relaxation(const PolynomialProgram& program, const MomentVector& z,
                                  const RelaxationOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    if (options.order < 1) throw ValidationError("relaxation order must be at least 1");
    const int k = options.order;

    MomentRelaxation rel;
    rel.order = k;
    rel.num_program_vars = program.n();
    rel.num_params = program.p();

    if (options.dense) {
        rel.cliques = dense_decomposition(program);
    } else {
        const CspGraph graph = build_csp_graph(program);
        rel.cliques = chordal_cliques(graph);
        if (options.clique_merge_threshold > 1)
            rel.cliques = merge_small_cliques(rel.cliques, options.clique_merge_threshold);
    }
    assign_constraints(program, rel.cliques);

    ConicProblem& cp = rel.problem;
    const int nc = static_cast<int>(rel.cliques.cliques.size());

    // clique moment matrices; interning their cells enumerates every monomial
    // of degree <= 2k supported on a clique
    rel.clique_bases.resize(nc);
    for (int c = 0; c < nc; ++c) {
        const std::vector<Monomial> basis = monomial_basis(rel.cliques.cliques[c], k);
        const int dim = static_cast<int>(basis.size());
        PsdBlock blk;
        blk.dim = dim;
        blk.entries.reserve(static_cast<std::size_t>(dim) * (dim + 1) / 2);
        for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j)
                blk.entries.push_back({intern(rel, basis[i].times(basis[j])), i, j, 1.0});
        cp.psd.push_back(std::move(blk));
        rel.clique_bases[c] = std::move(basis);
    }

    // objective: expectation of the cost polynomial
    cp.objective_constant = 0.0;
    for (const auto& [mono, coef] : program.f.monomials()) {
        if (mono.is_one())
            cp.objective_constant += coef;
        else
            cp.objective.push_back({lookup(rel, mono), coef});
    }

    // normalization of the measure
    {
        ScalarRow row;
        row.terms.push_back({lookup(rel, Monomial::one()), 1.0});
        row.constant = -1.0;
        cp.equalities.push_back(std::move(row));
    }

    // parameter marginals: every pure-parameter monomial in the table is
    // pinned to the sampled moment of the load factors
    {
        std::vector<int> param_ids(rel.num_params);
        for (int q = 0; q < rel.num_params; ++q)
            param_ids[q] = program.vars.param(q);
        std::vector<std::pair<Monomial, int>> pure;
        for (int id = 0; id < static_cast<int>(rel.keys.size()); ++id) {
            const Monomial& m = rel.keys[id];
            if (m.is_one() || m.degree_in(param_ids) != m.degree()) continue;
            pure.emplace_back(m, id);
        }
        std::sort(pure.begin(), pure.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [m, id] : pure) {
            std::pair<int, int> gamma{0, 0};
            for (const auto& [var, pow] : m.terms()) {
                if (var == param_ids[0])
                    gamma.first = pow;
                else if (rel.num_params > 1 && var == param_ids[1])
                    gamma.second = pow;
                else
                    throw ValidationError("marginal constraints support two parameters");
            }
            auto zit = z.find(gamma);
            if (zit == z.end())
                throw ValidationError("moment vector lacks the order (" +
                                      std::to_string(gamma.first) + "," +
                                      std::to_string(gamma.second) + ") marginal");
            ScalarRow row;
            row.terms.push_back({id, 1.0});
            row.constant = -zit->second;
            cp.equalities.push_back(std::move(row));
        }
    }

    // clique-of-constraint maps (program order keeps row order deterministic)
    std::vector<int> h_clique(program.h.size(), -1), g_clique(program.g.size(), -1);
    for (int c = 0; c < nc; ++c) {
        for (int hid : rel.cliques.h_assign[c]) h_clique[hid] = c;
        for (int gid : rel.cliques.g_assign[c]) g_clique[gid] = c;
    }

    // equality localizers: <h * w> = 0 for every monomial w of degree
    // <= 2(k-1) on the host clique
    for (std::size_t hid = 0; hid < program.h.size(); ++hid) {
        const int c = h_clique[hid];
        if (c < 0) throw SolverError("equality constraint not assigned to a clique");
        QuadraticForm poly = program.h[hid].poly;
        const double scale = poly.max_abs_coef();
        if (scale <= 0.0) continue;
        poly.scale(1.0 / scale);
        const auto terms = poly.monomials();
        for (const Monomial& w : monomial_basis(rel.cliques.cliques[c], 2 * (k - 1))) {
            ScalarRow row;
            row.terms.reserve(terms.size());
            for (const auto& [mono, coef] : terms)
                row.terms.push_back({lookup(rel, mono.times(w)), coef});
            cp.equalities.push_back(std::move(row));
        }
    }

    // inequality localizers M_{k-1}(g m); at k = 1 they are scalar rows
    for (std::size_t gid = 0; gid < program.g.size(); ++gid) {
        const int c = g_clique[gid];
        if (c < 0) throw SolverError("inequality constraint not assigned to a clique");
        QuadraticForm poly = program.g[gid].poly;
        const double scale = poly.max_abs_coef();
        if (scale <= 0.0) continue;
        poly.scale(1.0 / scale);
        const auto terms = poly.monomials();
        if (k == 1) {
            ScalarRow row;
            row.terms.reserve(terms.size());
            for (const auto& [mono, coef] : terms)
                row.terms.push_back({lookup(rel, mono), coef});
            cp.nonneg.push_back(std::move(row));
            continue;
        }
        const std::vector<Monomial> basis = monomial_basis(rel.cliques.cliques[c], k - 1);
        const int dim = static_cast<int>(basis.size());
        PsdBlock blk;
        blk.dim = dim;
        for (int i = 0; i < dim; ++i)
            for (int j = i; j < dim; ++j) {
                const Monomial cell = basis[i].times(basis[j]);
                for (const auto& [mono, coef] : terms)
                    blk.entries.push_back({lookup(rel, mono.times(cell)), i, j, coef});
            }
        cp.psd.push_back(std::move(blk));
    }

    cp.num_vars = static_cast<int>(rel.keys.size());
    rel.stats.num_moments = cp.num_vars;
    rel.stats.num_equalities = static_cast<int>(cp.equalities.size());
    rel.stats.num_nonneg = static_cast<int>(cp.nonneg.size());
    for (const auto& b : cp.psd) rel.stats.psd_dims.push_back(b.dim);
    rel.stats.build_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rel;
}

RelaxSolution solve_relaxation(const MomentRelaxation& relax,
                               const SolverSettings& settings) {
    SolverSettings s = settings;
    s.presolve_equalities = true; // the marginal/localizer rows substitute away cheaply
    const SolveResult r = solve(relax.problem, s);
    RelaxSolution out;
    out.status = r.status;
    out.values = r.x;
    out.objective = r.objective;
    out.stats = r.stats;
    return out;
}

Eigen::VectorXd extract_first_moment(const MomentRelaxation& relax,
                                     const RelaxSolution& sol) {
    Eigen::VectorXd x(relax.num_program_vars);
    for (int i = 0; i < relax.num_program_vars; ++i)
        x[i] = sol.values[lookup(relax, Monomial::var(i))];
    return x;
}

Eigen::MatrixXd moment_matrix(const MomentRelaxation& relax, const RelaxSolution& sol,
                              int clique) {
    const auto& basis = relax.clique_bases.at(clique);
    const int dim = static_cast<int>(basis.size());
    Eigen::MatrixXd M(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            const double v = sol.values[lookup(relax, basis[i].times(basis[j]))];
            M(i, j) = M(j, i) = v;
        }
    return M;
}

} // namespace momlin

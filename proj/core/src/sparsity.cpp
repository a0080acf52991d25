#include "momlin/sparsity.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "momlin/errors.hpp"
#include "momlin/program.hpp"

namespace momlin {

bool CspGraph::has_edge(int a, int b) const {
    if (a == b) return false;
    const auto& na = adj[a];
    return std::binary_search(na.begin(), na.end(), b);
}

namespace {

void connect_clique(std::vector<std::set<int>>& adj, const std::vector<int>& vars) {
    for (std::size_t i = 0; i < vars.size(); ++i)
        for (std::size_t j = i + 1; j < vars.size(); ++j) {
            adj[vars[i]].insert(vars[j]);
            adj[vars[j]].insert(vars[i]);
        }
}

bool subset_of(const std::vector<int>& a, const std::vector<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

} // namespace

CspGraph build_csp_graph(const PolynomialProgram& program) {
    const int nv = program.n() + program.p();
    std::vector<std::set<int>> adj(nv);

    for (const auto& pc : program.h) connect_clique(adj, pc.poly.support());
    for (const auto& pc : program.g) connect_clique(adj, pc.poly.support());
    // objective couples variables per monomial, not across its whole support
    for (const auto& t : program.f.quadratic)
        if (t.row != t.col) {
            adj[t.row].insert(t.col);
            adj[t.col].insert(t.row);
        }

    CspGraph g;
    g.num_vertices = nv;
    g.adj.resize(nv);
    for (int v = 0; v < nv; ++v) g.adj[v].assign(adj[v].begin(), adj[v].end());
    return g;
}

CliqueDecomposition chordal_cliques(const CspGraph& graph) {
    const int nv = graph.num_vertices;
    std::vector<std::set<int>> adj(nv);
    for (int v = 0; v < nv; ++v) adj[v].insert(graph.adj[v].begin(), graph.adj[v].end());

    // minimum-degree elimination with lowest-index tie break
    std::vector<bool> eliminated(nv, false);
    std::vector<int> order;
    order.reserve(nv);
    std::vector<int> position(nv, -1);
    std::vector<std::pair<int, int>> fill;
    // filled graph adjacency (original + fill edges)
    std::vector<std::set<int>> filled = adj;

    for (int step = 0; step < nv; ++step) {
        int best = -1;
        std::size_t best_deg = 0;
        for (int v = 0; v < nv; ++v) {
            if (eliminated[v]) continue;
            if (best < 0 || adj[v].size() < best_deg) {
                best = v;
                best_deg = adj[v].size();
            }
        }
        position[best] = step;
        order.push_back(best);
        eliminated[best] = true;

        std::vector<int> nbrs(adj[best].begin(), adj[best].end());
        for (std::size_t i = 0; i < nbrs.size(); ++i)
            for (std::size_t j = i + 1; j < nbrs.size(); ++j) {
                const int a = nbrs[i], b = nbrs[j];
                if (!adj[a].count(b)) {
                    adj[a].insert(b);
                    adj[b].insert(a);
                    filled[a].insert(b);
                    filled[b].insert(a);
                    fill.emplace_back(std::min(a, b), std::max(a, b));
                }
            }
        for (int u : nbrs) adj[u].erase(best);
        adj[best].clear();
    }

    // candidate cliques: vertex + later-eliminated neighbors in the filled graph
    std::vector<std::vector<int>> cand;
    cand.reserve(nv);
    for (int v = 0; v < nv; ++v) {
        std::vector<int> c{v};
        for (int u : filled[v])
            if (position[u] > position[v]) c.push_back(u);
        std::sort(c.begin(), c.end());
        cand.push_back(std::move(c));
    }
    // keep maximal ones (stable: larger first, ties by first occurrence)
    std::vector<int> idx(cand.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return cand[a].size() > cand[b].size();
    });
    std::vector<std::vector<int>> maximal;
    for (int i : idx) {
        bool contained = false;
        for (const auto& m : maximal)
            if (subset_of(cand[i], m)) {
                contained = true;
                break;
            }
        if (!contained) maximal.push_back(cand[i]);
    }

    // clique tree: maximum intersection weight, Prim with lowest-index tie break;
    // the insertion order is a root-first tree order, which satisfies RIP.
    const int nc = static_cast<int>(maximal.size());
    std::vector<bool> added(nc, false);
    std::vector<int> add_order;
    std::vector<int> parent_of(nc, -1);
    add_order.reserve(nc);
    added[0] = true;
    add_order.push_back(0);
    for (int step = 1; step < nc; ++step) {
        int best = -1, best_w = -1, best_parent = -1;
        for (int c = 0; c < nc; ++c) {
            if (added[c]) continue;
            for (int a : add_order) {
                std::vector<int> inter;
                std::set_intersection(maximal[c].begin(), maximal[c].end(),
                                      maximal[a].begin(), maximal[a].end(),
                                      std::back_inserter(inter));
                const int w = static_cast<int>(inter.size());
                if (w > best_w) {
                    best_w = w;
                    best = c;
                    best_parent = a;
                }
            }
        }
        added[best] = true;
        parent_of[best] = best_parent;
        add_order.push_back(best);
    }

    CliqueDecomposition d;
    d.fill_edges = std::move(fill);
    std::vector<int> new_index(nc, -1);
    for (int s = 0; s < nc; ++s) new_index[add_order[s]] = s;
    d.cliques.resize(nc);
    d.tree_parent.assign(nc, -1);
    for (int s = 0; s < nc; ++s) {
        d.cliques[s] = maximal[add_order[s]];
        const int par = parent_of[add_order[s]];
        d.tree_parent[s] = par < 0 ? -1 : new_index[par];
    }

    const RipCheck check = verify_rip(d);
    if (!check.ok)
        throw SolverError("clique-tree ordering violates the running intersection property");
    return d;
}

RipCheck verify_rip(const CliqueDecomposition& decomposition) {
    RipCheck out;
    const auto& cl = decomposition.cliques;
    std::set<int> seen;
    if (!cl.empty()) seen.insert(cl[0].begin(), cl[0].end());
    for (std::size_t s = 1; s < cl.size(); ++s) {
        std::vector<int> inter;
        for (int v : cl[s])
            if (seen.count(v)) inter.push_back(v);
        int q = -1;
        for (std::size_t t = 0; t < s; ++t)
            if (subset_of(inter, cl[t])) {
                q = static_cast<int>(t);
                break;
            }
        if (q < 0) {
            out.ok = false;
            out.violating = static_cast<int>(s);
            return out;
        }
        out.witness.push_back(q);
        seen.insert(cl[s].begin(), cl[s].end());
    }
    return out;
}

CliqueDecomposition merge_small_cliques(const CliqueDecomposition& decomposition,
                                        int threshold) {
    if (threshold < 1) throw ValidationError("merge threshold must be >= 1");
    CliqueDecomposition d = decomposition;
    d.h_assign.clear();
    d.g_assign.clear();

    const int nc = static_cast<int>(d.cliques.size());
    std::vector<bool> dead(nc, false);
    // children merge into parents; parents precede children in the RIP order
    for (int s = nc - 1; s >= 1; --s) {
        int par = d.tree_parent[s];
        while (par >= 0 && dead[par]) par = d.tree_parent[par];
        if (par < 0) continue;
        std::vector<int> merged;
        std::set_union(d.cliques[s].begin(), d.cliques[s].end(),
                       d.cliques[par].begin(), d.cliques[par].end(),
                       std::back_inserter(merged));
        if (static_cast<int>(merged.size()) <= threshold) {
            d.cliques[par] = std::move(merged);
            dead[s] = true;
        }
    }

    CliqueDecomposition out;
    out.fill_edges = d.fill_edges;
    std::vector<int> new_index(nc, -1);
    for (int s = 0; s < nc; ++s) {
        if (dead[s]) continue;
        new_index[s] = static_cast<int>(out.cliques.size());
        out.cliques.push_back(d.cliques[s]);
    }
    out.tree_parent.assign(out.cliques.size(), -1);
    for (int s = 0; s < nc; ++s) {
        if (dead[s]) continue;
        int par = d.tree_parent[s];
        while (par >= 0 && dead[par]) par = d.tree_parent[par];
        out.tree_parent[new_index[s]] = par < 0 ? -1 : new_index[par];
    }

    const RipCheck check = verify_rip(out);
    if (!check.ok)
        throw SolverError("clique merge violated the running intersection property");
    return out;
}

void assign_constraints(const PolynomialProgram& program, CliqueDecomposition& d) {
    const int nc = static_cast<int>(d.cliques.size());
    d.h_assign.assign(nc, {});
    d.g_assign.assign(nc, {});
    auto owner = [&](const std::vector<int>& support, const char* what) {
        for (int s = 0; s < nc; ++s)
            if (subset_of(support, d.cliques[s])) return s;
        throw SolverError(std::string("no clique covers a ") + what + " constraint");
    };
    for (std::size_t i = 0; i < program.h.size(); ++i)
        d.h_assign[owner(program.h[i].poly.support(), "equality")].push_back(
            static_cast<int>(i));
    for (std::size_t j = 0; j < program.g.size(); ++j)
        d.g_assign[owner(program.g[j].poly.support(), "inequality")].push_back(
            static_cast<int>(j));
}

CliqueDecomposition dense_decomposition(const PolynomialProgram& program) {
    CliqueDecomposition d;
    std::vector<int> all(program.n() + program.p());
    std::iota(all.begin(), all.end(), 0);
    d.cliques.push_back(std::move(all));
    d.tree_parent = {-1};
    assign_constraints(program, d);
    return d;
}

std::string CliqueDecomposition::to_json() const {
    std::ostringstream os;
    os << "{\n  \"num_cliques\": " << cliques.size() << ",\n  \"sizes\": [";
    for (std::size_t s = 0; s < cliques.size(); ++s)
        os << (s ? ", " : "") << cliques[s].size();
    os << "],\n  \"fill_edges\": " << fill_edges.size() << ",\n  \"cliques\": [";
    for (std::size_t s = 0; s < cliques.size(); ++s) {
        os << (s ? ", " : "") << "[";
        for (std::size_t i = 0; i < cliques[s].size(); ++i)
            os << (i ? ", " : "") << cliques[s][i];
        os << "]";
    }
    os << "],\n  \"tree_parent\": [";
    for (std::size_t s = 0; s < tree_parent.size(); ++s)
        os << (s ? ", " : "") << tree_parent[s];
    os << "]\n}\n";
    return os.str();
}

} // namespace momlin

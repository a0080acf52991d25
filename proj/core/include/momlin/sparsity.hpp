#pragma once

#include <string>
#include <vector>

namespace momlin {

struct PolynomialProgram;

// Correlative-sparsity graph over the joint variable ids [0, n+p).
struct CspGraph {
    int num_vertices = 0;
    std::vector<std::vector<int>> adj; // sorted, no self-loops

    bool has_edge(int a, int b) const;
};

struct CliqueDecomposition {
    // cliques in an order satisfying the running intersection property
    std::vector<std::vector<int>> cliques;     // each sorted ascending
    std::vector<int> tree_parent;              // clique-tree parent, -1 for root
    std::vector<std::pair<int, int>> fill_edges;
    std::vector<std::vector<int>> h_assign;    // equality ids per clique
    std::vector<std::vector<int>> g_assign;    // inequality ids per clique

    std::string to_json() const;
};

struct RipCheck {
    bool ok = true;
    // witnessing earlier clique index q per position s >= 1 (certificate)
    std::vector<int> witness;
    int violating = -1; // first violating s when !ok
};

CspGraph build_csp_graph(const PolynomialProgram& program);

// Minimum-degree elimination (lowest-index tie break), chordal extension,
// maximal cliques, and a clique-tree order with the running intersection
// property. Constraint assignment fills h_assign / g_assign.
CliqueDecomposition chordal_cliques(const CspGraph& graph);

RipCheck verify_rip(const CliqueDecomposition& decomposition);

// Merge tree-adjacent cliques while the union stays within the threshold;
// threshold 1 is the identity.
CliqueDecomposition merge_small_cliques(const CliqueDecomposition& decomposition,
                                        int threshold);

// Re-derive the constraint-to-clique assignment (first containing clique).
void assign_constraints(const PolynomialProgram& program, CliqueDecomposition& d);

// Single clique covering every variable (dense mode).
CliqueDecomposition dense_decomposition(const PolynomialProgram& program);

} // namespace momlin

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "consim/channel.hpp"
#include "consim/linalg.hpp"

namespace consim {

struct DirectedEdge {
    int receiver = -1;
    int transmitter = -1;
    double weight = 0.0; // summed path gains, may be negative under fading
};

// Weighted digraph of the network: edge (r, q) means information flows from
// q to r with weight sum_l a_rq^(l). Self-loops are rejected; nonpositive
// weights are allowed here and flagged by the channel condition checker.
class Digraph {
public:
    explicit Digraph(int node_count);

    void add_edge(int receiver, int transmitter, double weight);

    int node_count() const { return n_; }
    const std::vector<DirectedEdge>& edges() const { return edges_; }
    bool has_edge(int receiver, int transmitter) const;
    double weight(int receiver, int transmitter) const; // 0 when absent

    // Receivers of edges leaving `transmitter`, in insertion order.
    const std::vector<int>& flow_successors(int transmitter) const;

private:
    int n_ = 0;
    std::vector<DirectedEdge> edges_;
    std::vector<std::vector<int>> successors_;   // transmitter -> receivers
    std::vector<std::vector<int>> edge_lookup_;  // receiver -> edge indices
};

struct SccDecomposition {
    std::vector<int> component_of;            // node -> component id
    std::vector<std::vector<int>> components; // sorted node lists
    // Deduplicated (from, to) pairs in information-flow direction.
    std::vector<std::pair<int, int>> condensation_edges;
    // Present iff the condensation has a unique source component that
    // reaches every other component (equivalently, the digraph is QSC).
    std::optional<int> root_component;
};

struct LaplacianBundle {
    Matrix adjacency;               // A, summed path gains
    std::vector<double> in_degree;  // diagonal of D, D_ii = sum_j A_ij
    Matrix laplacian;               // L = D - A, zero row sums
    // Left null vector of L: gamma^T L = 0, sum gamma = 1, gamma_i > 0
    // exactly for nodes of the root SCC.
    std::vector<double> gamma;
};

// Raised when an operation needs a quasi-strongly connected digraph. The
// decomposition is attached so callers can still reason about (and
// simulate) the separated clusters.
class NonQscError : public std::runtime_error {
public:
    NonQscError(std::string message, SccDecomposition decomposition)
        : std::runtime_error(std::move(message)), decomposition(std::move(decomposition)) {}

    SccDecomposition decomposition;
};

// One edge per channel, weighted by the summed path amplitudes.
Digraph build_digraph(const NetworkModel& network);

// Tarjan's algorithm plus the condensation and root-component search.
SccDecomposition scc_decompose(const Digraph& g);

// QSC: some node reaches all others (a spanning directed tree exists).
bool is_qsc(const Digraph& g);
// SC: exactly one strongly connected component.
bool is_sc(const Digraph& g);

// Builds A, D, L and the left null eigenvector gamma. gamma is computed on
// the root-SCC restriction of L (which has no in-edges from outside, so the
// zero eigenvalue is simple there), then embedded with zeros, clamped at
// 1e-12 * max(gamma) and normalized to sum 1.
// Throws NonQscError when the digraph is not QSC.
LaplacianBundle laplacian(const Digraph& g);

} // namespace consim

#include "consim/digraph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>

namespace consim {

Digraph::Digraph(int node_count) : n_(node_count) {
    if (node_count < 1) throw std::invalid_argument("digraph needs at least one node");
    successors_.resize(static_cast<size_t>(node_count));
    edge_lookup_.resize(static_cast<size_t>(node_count));
}

void Digraph::add_edge(int receiver, int transmitter, double weight) {
    if (receiver < 0 || receiver >= n_ || transmitter < 0 || transmitter >= n_)
        throw std::invalid_argument("edge references node outside the digraph");
    if (receiver == transmitter)
        throw std::invalid_argument("self-loop rejected at node " + std::to_string(receiver));
    if (!std::isfinite(weight)) throw std::invalid_argument("edge weight must be finite");
    if (has_edge(receiver, transmitter))
        throw std::invalid_argument("duplicate edge " + std::to_string(receiver) + " <- " +
                                    std::to_string(transmitter));

    edge_lookup_[static_cast<size_t>(receiver)].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({receiver, transmitter, weight});
    successors_[static_cast<size_t>(transmitter)].push_back(receiver);
}

bool Digraph::has_edge(int receiver, int transmitter) const {
    for (int idx : edge_lookup_[static_cast<size_t>(receiver)])
        if (edges_[static_cast<size_t>(idx)].transmitter == transmitter) return true;
    return false;
}

double Digraph::weight(int receiver, int transmitter) const {
    for (int idx : edge_lookup_[static_cast<size_t>(receiver)])
        if (edges_[static_cast<size_t>(idx)].transmitter == transmitter)
            return edges_[static_cast<size_t>(idx)].weight;
    return 0.0;
}

const std::vector<int>& Digraph::flow_successors(int transmitter) const {
    return successors_[static_cast<size_t>(transmitter)];
}

Digraph build_digraph(const NetworkModel& network) {
    Digraph g(network.node_count);
    for (const MultipathChannel& ch : network.channels) {
        double summed = 0.0;
        for (const Path& p : ch.paths) summed += p.amplitude;
        g.add_edge(ch.receiver, ch.transmitter, summed);
    }
    return g;
}

namespace {

// Tarjan over the information-flow direction (transmitter -> receiver).
struct TarjanState {
    const Digraph& g;
    std::vector<int> index;
    std::vector<int> lowlink;
    std::vector<int> stack_pos;
    std::vector<int> stack;
    std::vector<std::vector<int>> components;
    std::vector<int> component_of;
    int next_index = 0;

    explicit TarjanState(const Digraph& graph)
        : g(graph),
          index(static_cast<size_t>(graph.node_count()), -1),
          lowlink(static_cast<size_t>(graph.node_count()), -1),
          stack_pos(static_cast<size_t>(graph.node_count()), -1),
          component_of(static_cast<size_t>(graph.node_count()), -1) {}

    void visit(int v) {
        index[v] = lowlink[v] = next_index++;
        stack_pos[v] = static_cast<int>(stack.size());
        stack.push_back(v);

        for (int w : g.flow_successors(v)) {
            if (index[w] == -1) {
                visit(w);
                lowlink[v] = std::min(lowlink[v], lowlink[w]);
            } else if (stack_pos[w] != -1) {
                lowlink[v] = std::min(lowlink[v], index[w]);
            }
        }

        if (lowlink[v] == index[v]) {
            std::vector<int> component(stack.begin() + stack_pos[v], stack.end());
            for (int w : component) {
                stack_pos[w] = -1;
                component_of[w] = static_cast<int>(components.size());
            }
            stack.resize(stack.size() - component.size());
            std::sort(component.begin(), component.end());
            components.push_back(std::move(component));
        }
    }
};

} // namespace

SccDecomposition scc_decompose(const Digraph& g) {
    TarjanState state(g);
    for (int v = 0; v < g.node_count(); ++v)
        if (state.index[v] == -1) state.visit(v);

    SccDecomposition out;
    out.component_of = std::move(state.component_of);
    out.components = std::move(state.components);

    const int m = static_cast<int>(out.components.size());
    std::set<std::pair<int, int>> edges;
    for (const DirectedEdge& e : g.edges()) {
        const int from = out.component_of[static_cast<size_t>(e.transmitter)];
        const int to = out.component_of[static_cast<size_t>(e.receiver)];
        if (from != to) edges.insert({from, to});
    }
    out.condensation_edges.assign(edges.begin(), edges.end());

    // Root component: the unique condensation source, accepted only if it
    // reaches every other component (absent for disconnected graphs).
    std::vector<int> in_degree(static_cast<size_t>(m), 0);
    for (const auto& [from, to] : out.condensation_edges) ++in_degree[static_cast<size_t>(to)];
    std::vector<int> sources;
    for (int c = 0; c < m; ++c)
        if (in_degree[static_cast<size_t>(c)] == 0) sources.push_back(c);

    if (sources.size() == 1) {
        std::vector<char> reached(static_cast<size_t>(m), 0);
        std::vector<int> frontier{sources[0]};
        reached[static_cast<size_t>(sources[0])] = 1;
        while (!frontier.empty()) {
            const int c = frontier.back();
            frontier.pop_back();
            for (const auto& [from, to] : out.condensation_edges)
                if (from == c && !reached[static_cast<size_t>(to)]) {
                    reached[static_cast<size_t>(to)] = 1;
                    frontier.push_back(to);
                }
        }
        if (std::all_of(reached.begin(), reached.end(), [](char r) { return r != 0; }))
            out.root_component = sources[0];
    }
    return out;
}

bool is_qsc(const Digraph& g) { return scc_decompose(g).root_component.has_value(); }

bool is_sc(const Digraph& g) { return scc_decompose(g).components.size() == 1; }

namespace {

// Left null vector of the zero-row-sum matrix `L` (i.e. null vector of
// L^T), by Gaussian elimination with partial pivoting. Rank decisions use
// `rank_tol` relative to the largest pivot seen. Expects a simple zero
// eigenvalue; returns an unnormalized vector.
std::vector<double> left_null_vector(const Matrix& L, double rank_tol) {
    const int m = L.rows();
    Matrix a(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = L(j, i); // transpose

    std::vector<int> pivot_col_of_row(static_cast<size_t>(m), -1);
    std::vector<char> col_is_pivot(static_cast<size_t>(m), 0);
    double max_pivot = 0.0;
    int rank = 0;

    for (int col = 0; col < m && rank < m; ++col) {
        int best = -1;
        double best_abs = 0.0;
        for (int row = rank; row < m; ++row) {
            const double v = std::abs(a(row, col));
            if (v > best_abs) {
                best_abs = v;
                best = row;
            }
        }
        if (best < 0 || best_abs <= rank_tol * std::max(max_pivot, 1e-300)) continue;
        max_pivot = std::max(max_pivot, best_abs);

        if (best != rank)
            for (int j = 0; j < m; ++j) std::swap(a(best, j), a(rank, j));
        for (int row = rank + 1; row < m; ++row) {
            const double factor = a(row, col) / a(rank, col);
            if (factor == 0.0) continue;
            a(row, col) = 0.0;
            for (int j = col + 1; j < m; ++j) a(row, j) -= factor * a(rank, j);
        }
        pivot_col_of_row[static_cast<size_t>(rank)] = col;
        col_is_pivot[static_cast<size_t>(col)] = 1;
        ++rank;
    }

    if (rank != m - 1)
        throw std::runtime_error("null space of the root-restricted Laplacian is not "
                                 "one-dimensional (rank " +
                                 std::to_string(rank) + " of " + std::to_string(m) + ")");

    int free_col = -1;
    for (int col = 0; col < m; ++col)
        if (!col_is_pivot[static_cast<size_t>(col)]) free_col = col;

    std::vector<double> x(static_cast<size_t>(m), 0.0);
    x[static_cast<size_t>(free_col)] = 1.0;
    for (int row = rank - 1; row >= 0; --row) {
        const int col = pivot_col_of_row[static_cast<size_t>(row)];
        double sum = 0.0;
        for (int j = col + 1; j < m; ++j) sum += a(row, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(col)] = -sum / a(row, col);
    }
    return x;
}

} // namespace

LaplacianBundle laplacian(const Digraph& g) {
    const int n = g.node_count();

    LaplacianBundle bundle;
    bundle.adjacency = Matrix(n, n);
    for (const DirectedEdge& e : g.edges()) bundle.adjacency(e.receiver, e.transmitter) = e.weight;

    // D_ii is the ascending-order row sum of A, so D - A has zero row sums
    // by construction, independent of edge insertion order.
    bundle.in_degree.assign(static_cast<size_t>(n), 0.0);
    bundle.laplacian = Matrix(n, n);
    for (int i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            row_sum += bundle.adjacency(i, j);
            bundle.laplacian(i, j) = -bundle.adjacency(i, j);
        }
        bundle.in_degree[static_cast<size_t>(i)] = row_sum;
        bundle.laplacian(i, i) = row_sum;
    }

    SccDecomposition scc = scc_decompose(g);
    if (!scc.root_component)
        throw NonQscError("digraph is not quasi-strongly connected: gamma is not unique "
                          "(simulation may still form separate consensus clusters)",
                          std::move(scc));

    // The root SCC has no in-edges from outside, so the restriction of L to
    // it keeps zero row sums and a simple zero eigenvalue.
    const std::vector<int>& root = scc.components[static_cast<size_t>(*scc.root_component)];
    const int m = static_cast<int>(root.size());

    std::vector<double> gamma(static_cast<size_t>(n), 0.0);
    if (m == 1) {
        gamma[static_cast<size_t>(root[0])] = 1.0;
    } else {
        Matrix restricted(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) restricted(i, j) = bundle.laplacian(root[i], root[j]);
        std::vector<double> local = left_null_vector(restricted, 1e-10);

        double sum = 0.0;
        for (double v : local) sum += v;
        if (sum < 0.0)
            for (double& v : local) v = -v;
        for (int i = 0; i < m; ++i) gamma[static_cast<size_t>(root[i])] = local[static_cast<size_t>(i)];

        double max_entry = 0.0;
        for (double v : gamma) max_entry = std::max(max_entry, v);
        for (double& v : gamma)
            if (v < 1e-12 * max_entry) v = 0.0;
        double total = 0.0;
        for (double v : gamma) total += v;
        for (double& v : gamma) v /= total;
    }
    bundle.gamma = std::move(gamma);
    return bundle;
}

} // namespace consim

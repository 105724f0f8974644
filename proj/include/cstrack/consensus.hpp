#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "cstrack/common.hpp"
#include "cstrack/particles.hpp"
#include "cstrack/topology.hpp"

namespace cstrack {

/// Undirected graph over n consensus participants (adjacency lists).
struct Graph {
  std::vector<std::vector<int>> adj;

  int size() const { return static_cast<int>(adj.size()); }

  int degree(int i) const { return static_cast<int>(adj[i].size()); }

  bool is_connected() const { return detail::graph_reach(adj).first; }

  int diameter() const {
    auto [conn, diam] = detail::graph_reach(adj);
    return conn ? diam : -1;
  }

  static Graph from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    Graph g;
    g.adj.assign(n, {});
    for (auto [a, b] : edges) {
      g.adj[a].push_back(b);
      g.adj[b].push_back(a);
    }
    for (auto& v : g.adj) std::sort(v.begin(), v.end());
    return g;
  }

  /// Subgraph induced by `members` (ids into this graph); returns the
  /// subgraph plus the member list in sorted order.
  Graph induced(const std::vector<int>& members) const {
    std::vector<int> m = members;
    std::sort(m.begin(), m.end());
    std::vector<int> index(size(), -1);
    for (int i = 0; i < static_cast<int>(m.size()); ++i) index[m[i]] = i;
    Graph g;
    g.adj.assign(m.size(), {});
    for (int i = 0; i < static_cast<int>(m.size()); ++i) {
      for (int nb : adj[m[i]])
        if (index[nb] >= 0) g.adj[i].push_back(index[nb]);
    }
    return g;
  }
};

inline Graph comm_graph(const TopologySnapshot& t) {
  Graph g;
  g.adj = t.comm;
  return g;
}

/// Metropolis weight matrix: w_ij = 1/(1 + max(d_i, d_j)) on edges, diagonal
/// fills the remainder. Symmetric and doubly stochastic on connected graphs.
inline Eigen::MatrixXd metropolis_weights(const Graph& g) {
  if (!g.is_connected())
    throw CommGraphDisconnected("metropolis_weights: graph disconnected");
  const int n = g.size();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j : g.adj[i]) {
      w(i, j) = 1.0 / (1.0 + std::max(g.degree(i), g.degree(j)));
      off += w(i, j);
    }
    w(i, i) = 1.0 - off;
  }
  return w;
}

/// One synchronous iteration zeta <- W zeta, rows = participants.
/// Each participant's update reads only its own and neighbors' states.
inline void average_consensus_step(const Graph& g, const Eigen::MatrixXd& weights,
                                   Eigen::MatrixXd& zeta) {
  Eigen::MatrixXd next(zeta.rows(), zeta.cols());
  for (int i = 0; i < g.size(); ++i) {
    next.row(i) = weights(i, i) * zeta.row(i);
    for (int j : g.adj[i]) next.row(i) += weights(i, j) * zeta.row(j);
  }
  zeta = std::move(next);
}

inline Eigen::MatrixXd average_consensus(const Graph& g, const Eigen::MatrixXd& weights,
                                         Eigen::MatrixXd zeta, int iterations) {
  for (int it = 0; it < iterations; ++it) average_consensus_step(g, weights, zeta);
  return zeta;
}

/// Elementwise max over the closed neighborhood, iterated. Exact network-wide
/// maximum after diameter iterations.
inline Eigen::MatrixXd max_consensus(const Graph& g, Eigen::MatrixXd state, int iterations) {
  for (int it = 0; it < iterations; ++it) {
    Eigen::MatrixXd next = state;
    for (int i = 0; i < g.size(); ++i)
      for (int j : g.adj[i]) next.row(i) = next.row(i).cwiseMax(state.row(j));
    state = std::move(next);
  }
  return state;
}

inline Eigen::MatrixXd min_consensus(const Graph& g, Eigen::MatrixXd state, int iterations) {
  for (int it = 0; it < iterations; ++it) {
    Eigen::MatrixXd next = state;
    for (int i = 0; i < g.size(); ++i)
      for (int j : g.adj[i]) next.row(i) = next.row(i).cwiseMin(state.row(j));
    state = std::move(next);
  }
  return state;
}

struct ConsensusOverWeightsResult {
  Eigen::MatrixXd log_phi;          // participants x J: |A| * zeta^(C)
  Eigen::MatrixXd aligned_weights;  // participants x J: identical rows after max-consensus
  Eigen::MatrixXd zeta0;            // the initial states (observers' own factors)
};

/// Product of per-observer message values as exp(multiplier * average of
/// logs): initialize with log phi at observers and 0 elsewhere, run C
/// averaging iterations, scale by the participant count, then align the
/// normalized weights exactly with I max-consensus iterations.
///
/// `log_phi_init` has one row per participant; non-observer rows are ignored.
inline ConsensusOverWeightsResult consensus_over_weights(
    const Graph& g, const std::vector<int>& observer_rows,
    const Eigen::MatrixXd& log_phi_init, int multiplier, int C, int I) {
  if (!g.is_connected())
    throw CommGraphDisconnected("consensus_over_weights: graph disconnected");
  const int n = g.size();
  const int J = static_cast<int>(log_phi_init.cols());

  ConsensusOverWeightsResult r;
  r.zeta0 = Eigen::MatrixXd::Zero(n, J);
  for (int row : observer_rows) r.zeta0.row(row) = log_phi_init.row(row);

  const Eigen::MatrixXd w = metropolis_weights(g);
  const Eigen::MatrixXd zeta = average_consensus(g, w, r.zeta0, C);
  r.log_phi = static_cast<double>(multiplier) * zeta;

  Eigen::MatrixXd norm(n, J);
  for (int i = 0; i < n; ++i)
    norm.row(i) = normalize_log_weights(r.log_phi.row(i).transpose()).transpose();
  Eigen::MatrixXd aligned = max_consensus(g, norm, I);
  for (int i = 0; i < n; ++i)
    aligned.row(i) = normalize_weights(aligned.row(i).transpose()).transpose();
  r.aligned_weights = std::move(aligned);
  return r;
}

/// Local distributed tracking: the same computation restricted to the
/// observer subnetwork. `observer_rows` are ids into `full`; the returned
/// matrices have one row per observer (sorted by id).
inline ConsensusOverWeightsResult ldt_consensus(const Graph& full,
                                                const std::vector<int>& observer_rows,
                                                const Eigen::MatrixXd& log_phi_init,
                                                int C) {
  std::vector<int> members = observer_rows;
  std::sort(members.begin(), members.end());
  if (members.empty()) throw EmptyObserverSet("ldt_consensus: no observers");
  Graph sub = full.induced(members);
  if (!sub.is_connected())
    throw LdtSubgraphDisconnected("ldt_consensus: observer subnetwork disconnected");
  const int J = static_cast<int>(log_phi_init.cols());
  Eigen::MatrixXd init(sub.size(), J);
  for (int i = 0; i < sub.size(); ++i) init.row(i) = log_phi_init.row(members[i]);
  std::vector<int> all_rows(sub.size());
  for (int i = 0; i < sub.size(); ++i) all_rows[i] = i;
  return consensus_over_weights(sub, all_rows, init, static_cast<int>(members.size()), C,
                                sub.diameter());
}

}  // namespace cstrack

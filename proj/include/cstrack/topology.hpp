#pragma once

#include <algorithm>
#include <map>
#include <queue>
#include <vector>

#include <Eigen/Dense>

#include "cstrack/common.hpp"
#include "cstrack/state.hpp"

namespace cstrack {

/// Per-time-step communication and measurement sets. Agents are indexed
/// 0..num_agents-1; objects carry ids >= num_agents.
///
/// Boundary convention for range-based construction: communication uses a
/// strict <, measurement uses <=. Measured agent partners are additionally
/// intersected with the communication set, which realizes the model
/// assumption M^A \subseteq C structurally.
struct TopologySnapshot {
  int num_agents = 0;
  std::vector<std::vector<int>> comm;          // C_l, sorted agent ids
  std::vector<std::vector<int>> meas_agents;   // M^A_l, sorted agent ids
  std::vector<std::vector<int>> meas_objects;  // M^O_l, sorted object ids
  std::map<int, std::vector<int>> observers;   // A_m: object id -> sorted agent ids
  int diameter = 0;
  bool connected = true;

  const std::vector<int>& observers_of(int object_id) const {
    static const std::vector<int> empty;
    auto it = observers.find(object_id);
    return it == observers.end() ? empty : it->second;
  }

  bool in_comm(int l, int lp) const {
    const auto& c = comm[l];
    return std::binary_search(c.begin(), c.end(), lp);
  }

  void finalize();  // derive observers/diameter/connected from the sets
};

namespace detail {

/// BFS eccentricities over an adjacency list; returns (connected, diameter).
inline std::pair<bool, int> graph_reach(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  if (n == 0) return {true, 0};
  int diameter = 0;
  for (int s = 0; s < n; ++s) {
    std::vector<int> dist(n, -1);
    std::queue<int> q;
    dist[s] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
      }
    }
    for (int v = 0; v < n; ++v) {
      if (dist[v] < 0) return {false, -1};
      diameter = std::max(diameter, dist[v]);
    }
  }
  return {true, diameter};
}

}  // namespace detail

inline void TopologySnapshot::finalize() {
  observers.clear();
  for (int l = 0; l < num_agents; ++l) {
    for (int m : meas_objects[l]) observers[m].push_back(l);
  }
  for (auto& [m, obs] : observers) std::sort(obs.begin(), obs.end());
  auto [conn, diam] = detail::graph_reach(comm);
  connected = conn;
  diameter = conn ? diam : -1;
}

/// Range-based topology over current true positions. meas_ranges is indexed
/// by agent id; object ids start at agent_positions.size().
inline TopologySnapshot build_topology(const std::vector<Eigen::VectorXd>& agent_positions,
                                       const std::vector<Eigen::VectorXd>& object_positions,
                                       double comm_range,
                                       const std::vector<double>& meas_ranges,
                                       bool require_connected = true) {
  const int A = static_cast<int>(agent_positions.size());
  const int O = static_cast<int>(object_positions.size());
  TopologySnapshot t;
  t.num_agents = A;
  t.comm.assign(A, {});
  t.meas_agents.assign(A, {});
  t.meas_objects.assign(A, {});

  for (int l = 0; l < A; ++l) {
    for (int k = 0; k < A; ++k) {
      if (k == l) continue;
      const double d = (agent_positions[l] - agent_positions[k]).norm();
      if (d < comm_range) t.comm[l].push_back(k);
      if (d <= meas_ranges[l] && d < comm_range) t.meas_agents[l].push_back(k);
    }
    for (int m = 0; m < O; ++m) {
      const double d = (agent_positions[l] - object_positions[m]).norm();
      if (d <= meas_ranges[l]) t.meas_objects[l].push_back(A + m);
    }
  }
  t.finalize();
  if (require_connected && A > 1 && !t.connected)
    throw CommGraphDisconnected("build_topology: communication graph disconnected");
  return t;
}

}  // namespace cstrack

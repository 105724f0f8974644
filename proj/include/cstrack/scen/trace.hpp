#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cstrack/netsim/ledger.hpp"
#include "cstrack/state.hpp"

namespace cstrack::scen {

struct TraceRow {
  int run = 0;
  int time = 0;
  int iteration = 0;  // message-passing iteration the estimate belongs to
  int entity = 0;
  EntityKind kind = EntityKind::MobileAgent;
  Eigen::VectorXd estimate;  // full state
  Eigen::VectorXd truth;     // full state
  double position_error = 0.0;
};

struct LedgerRow {
  int run = 0;
  int time = 0;
  netsim::StepLedger ledger;  // per-agent counts (uniform across agents)
};

struct RunTrace {
  std::string method;
  std::vector<TraceRow> rows;
  std::vector<LedgerRow> ledgers;
  double wall_seconds = 0.0;
  double wall_seconds_per_step = 0.0;
  long long degenerate_updates = 0;
  std::vector<int> aborted_runs;
};

enum class EntityClass { MobileAgents, Objects };

inline bool in_class(EntityKind k, EntityClass c) {
  return c == EntityClass::MobileAgents ? k == EntityKind::MobileAgent
                                        : k == EntityKind::Object;
}

/// Root mean squared position error over a class of entities, per time step.
/// Aggregates over runs and entities; mean of squares first, root last.
inline std::map<int, double> rmse_per_time(const std::vector<TraceRow>& rows,
                                           EntityClass cls, int iteration = -1) {
  std::map<int, std::pair<double, long long>> acc;
  for (const auto& r : rows) {
    if (!in_class(r.kind, cls)) continue;
    if (iteration >= 0 && r.iteration != iteration) continue;
    auto& [sq, n] = acc[r.time];
    sq += r.position_error * r.position_error;
    n += 1;
  }
  std::map<int, double> out;
  for (const auto& [t, sn] : acc) out[t] = std::sqrt(sn.first / sn.second);
  return out;
}

/// Per message-passing iteration (static scenario axis).
inline std::map<int, double> rmse_per_iteration(const std::vector<TraceRow>& rows,
                                                EntityClass cls) {
  std::map<int, std::pair<double, long long>> acc;
  for (const auto& r : rows) {
    if (!in_class(r.kind, cls)) continue;
    auto& [sq, n] = acc[r.iteration];
    sq += r.position_error * r.position_error;
    n += 1;
  }
  std::map<int, double> out;
  for (const auto& [p, sn] : acc) out[p] = std::sqrt(sn.first / sn.second);
  return out;
}

/// Time-averaged RMSE over the class (all runs, entities and steps).
inline double rmse_time_averaged(const std::vector<TraceRow>& rows, EntityClass cls,
                                 int iteration = -1) {
  double sq = 0.0;
  long long n = 0;
  for (const auto& r : rows) {
    if (!in_class(r.kind, cls)) continue;
    if (iteration >= 0 && r.iteration != iteration) continue;
    sq += r.position_error * r.position_error;
    n += 1;
  }
  return n == 0 ? 0.0 : std::sqrt(sq / n);
}

}  // namespace cstrack::scen

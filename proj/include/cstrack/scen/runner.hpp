#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "cstrack/netsim/network.hpp"
#include "cstrack/scen/scenario.hpp"
#include "cstrack/scen/trace.hpp"
#include "cstrack/topology.hpp"

namespace cstrack::scen {

/// Environment of one time step as the agents experienced it: true states,
/// topology, measurements. Recorded by the generating pass and replayed
/// unchanged for baseline methods.
struct StepWorld {
  std::vector<Eigen::VectorXd> agent_truth;
  std::vector<Eigen::VectorXd> object_truth;
  TopologySnapshot topo;
  std::vector<std::map<int, double>> measurements;
  bool alt_proposal = false;
};

struct WorldTrace {
  std::vector<StepWorld> steps;
  std::vector<Eigen::Vector2d> object_velocity_prior_mean;  // per object, per run
};

namespace detail {

inline std::uint64_t run_seed(const ScenarioConfig& c, int run) {
  return RngStream::derive_seed(c.seed, static_cast<std::uint64_t>(run), 0, 0,
                                Rng::Generic, 1);
}

inline std::map<int, double> draw_measurements(const TopologySnapshot& topo,
                                               const std::vector<Eigen::VectorXd>& agents,
                                               const std::vector<Eigen::VectorXd>& objects,
                                               int l, int n, int pos_dim, double sigma_v,
                                               std::uint64_t seed) {
  std::map<int, double> y;
  for (int k : topo.meas_agents[l]) {
    RngStream rng(seed, l, n, 0, Rng::Measurement, k);
    y[k] = measure_distance(agents[l], agents[k], pos_dim, rng.normal(0, sigma_v));
  }
  for (int m : topo.meas_objects[l]) {
    RngStream rng(seed, l, n, 0, Rng::Measurement, m);
    y[m] = measure_distance(agents[l], objects[m - topo.num_agents], pos_dim,
                            rng.normal(0, sigma_v));
  }
  return y;
}

}  // namespace detail

// ---- dynamic scenarios -------------------------------------------------------

/// Builds the agent configurations for one dynamic run.
inline std::vector<netsim::AgentConfig> dynamic_agent_configs(
    const ScenarioConfig& c, std::uint64_t seed, netsim::Method method,
    const std::vector<Eigen::Vector2d>& vel_hyper_means) {
  const int nA = static_cast<int>(c.anchors.size());
  const int nM = static_cast<int>(c.mobile_agents.size());
  const int nO = static_cast<int>(c.objects.size());
  StateSpace space{2, true};

  std::vector<netsim::AgentConfig> cfgs;
  for (int id = 0; id < nA + nM; ++id) {
    netsim::AgentConfig a;
    a.id = id;
    a.space = space;
    a.J = c.J;
    a.P = c.P;
    a.sigma_v2 = c.sigma_v2;
    a.seed = seed;
    a.method = method;
    a.is_anchor = id < nA;
    if (a.is_anchor) {
      a.anchor_state = Eigen::Vector4d(c.anchors[id].x(), c.anchors[id].y(), 0, 0);
    } else {
      a.prior.kind = netsim::PriorSpec::Kind::UniformBox;
      a.prior.box_lo = c.prior_lo;
      a.prior.box_hi = c.prior_hi;
      a.movement_rule = true;
      a.loc_var_threshold = c.loc_var_threshold_factor * c.sigma_v2;
      a.move_target = c.move_target;
      a.move_horizon = c.move_horizon;
      a.velocity_prior_var = c.velocity_prior_var;
    }
    a.motion_initial = MotionModel::static_model(4);
    a.motion_moving = MotionModel::constant_velocity(c.sigma_u2_agent);
    a.object_motion = MotionModel::constant_velocity(c.sigma_u2_object);
    a.prior_is_uniform = true;
    for (int k = 0; k < nO; ++k) {
      const int m = nA + nM + k;
      a.object_ids.push_back(m);
      netsim::PriorSpec p;
      p.kind = netsim::PriorSpec::Kind::UniformBox;
      p.box_lo = c.prior_lo;
      p.box_hi = c.prior_hi;
      p.velocity_gaussian = true;
      p.vel_mean = vel_hyper_means[k];
      p.vel_var = c.velocity_prior_var;
      a.object_priors[m] = p;
    }
    cfgs.push_back(std::move(a));
  }
  return cfgs;
}

/// Runs one dynamic-scenario realization. In generate mode (world == nullptr
/// output) the proposed method drives the movement rule and the environment
/// is recorded; in replay mode the recorded environment is reused so baseline
/// methods see identical measurements.
inline void run_dynamic_once(const ScenarioConfig& c, int run, netsim::Method method,
                             RunTrace& out, WorldTrace* record, const WorldTrace* replay) {
  const std::uint64_t seed = detail::run_seed(c, run);
  const int nA = static_cast<int>(c.anchors.size());
  const int nM = static_cast<int>(c.mobile_agents.size());
  const int nO = static_cast<int>(c.objects.size());

  std::vector<Eigen::Vector2d> vel_hyper(nO);
  if (replay) {
    vel_hyper = replay->object_velocity_prior_mean;
  } else {
    for (int k = 0; k < nO; ++k) {
      RngStream rng(seed, nA + nM + k, 0, 0, Rng::Generic, 2);
      vel_hyper[k] = Eigen::Vector2d(
          rng.normal(c.objects[k][2], std::sqrt(c.velocity_hyper_var)),
          rng.normal(c.objects[k][3], std::sqrt(c.velocity_hyper_var)));
    }
    if (record) record->object_velocity_prior_mean = vel_hyper;
  }

  netsim::SlottedNetwork net(dynamic_agent_configs(c, seed, method, vel_hyper),
                             netsim::NetworkParams{c.C, c.ldt});

  // ground truth state
  std::vector<Eigen::VectorXd> agent_truth(nA + nM);
  for (int i = 0; i < nA; ++i)
    agent_truth[i] = Eigen::Vector4d(c.anchors[i].x(), c.anchors[i].y(), 0, 0);
  for (int i = 0; i < nM; ++i) {
    const auto& p = c.mobile_agents[i];
    agent_truth[nA + i] =
        Eigen::Vector4d(p.x(), p.y(), (c.move_target.x() - p.x()) / c.move_horizon,
                        (c.move_target.y() - p.y()) / c.move_horizon);
  }
  std::vector<Eigen::VectorXd> object_truth(nO);
  for (int k = 0; k < nO; ++k) object_truth[k] = c.objects[k];
  std::vector<bool> moving(nA + nM, false);
  const MotionModel obj_motion = MotionModel::constant_velocity(c.sigma_u2_object);
  const MotionModel ma_motion = MotionModel::constant_velocity(c.sigma_u2_agent);

  std::vector<double> ranges(nA + nM, c.meas_range_default);
  for (int idx : c.corner_agents) ranges[nA + idx] = c.corner_meas_range;

  int consecutive_degenerate = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int n = 1; n <= c.steps; ++n) {
    StepWorld world;
    if (replay) {
      world = replay->steps[n - 1];
    } else {
      for (int k = 0; k < nO; ++k) {
        RngStream rng(seed, nA + nM + k, n, 0, Rng::TruthNoise);
        object_truth[k] = sample_transition(object_truth[k], obj_motion, rng);
      }
      for (int i = nA; i < nA + nM; ++i) {
        if (!moving[i]) continue;
        RngStream rng(seed, i, n, 0, Rng::TruthNoise);
        agent_truth[i] = sample_transition(agent_truth[i], ma_motion, rng);
      }
      world.agent_truth = agent_truth;
      world.object_truth = object_truth;
      std::vector<Eigen::VectorXd> apos, opos;
      for (const auto& s : agent_truth) apos.push_back(s.head(2));
      for (const auto& s : object_truth) opos.push_back(s.head(2));
      world.topo = build_topology(apos, opos, c.comm_range, ranges);
      world.measurements.resize(nA + nM);
      for (int l = 0; l < nA + nM; ++l)
        world.measurements[l] = detail::draw_measurements(
            world.topo, agent_truth, object_truth, l, n, 2, std::sqrt(c.sigma_v2), seed);
      world.alt_proposal =
          std::find(c.alt_proposal_steps.begin(), c.alt_proposal_steps.end(), n) !=
          c.alt_proposal_steps.end();
    }

    auto r = net.run_time_step(world.topo, world.measurements, n, world.alt_proposal);

    int degenerate = 0;
    for (int l = 0; l < nA + nM; ++l) degenerate += r.outputs[l].degenerate_updates;
    out.degenerate_updates += degenerate;
    consecutive_degenerate = degenerate > 0 ? consecutive_degenerate + 1 : 0;

    for (int i = nA; i < nA + nM; ++i) {
      TraceRow row;
      row.run = run;
      row.time = n;
      row.iteration = c.P;
      row.entity = i;
      row.kind = EntityKind::MobileAgent;
      row.estimate = r.outputs[i].own_estimate;
      row.truth = world.agent_truth[i];
      row.position_error = (row.estimate.head(2) - row.truth.head(2)).norm();
      out.rows.push_back(std::move(row));
      if (!replay && r.outputs[i].started_moving_this_step) moving[i] = true;
    }
    for (int k = 0; k < nO; ++k) {
      TraceRow row;
      row.run = run;
      row.time = n;
      row.iteration = c.P;
      row.entity = nA + nM + k;
      row.kind = EntityKind::Object;
      row.estimate = r.outputs[0].object_estimates.at(nA + nM + k);
      row.truth = world.object_truth[k];
      row.position_error = (row.estimate.head(2) - row.truth.head(2)).norm();
      out.rows.push_back(std::move(row));
    }
    out.ledgers.push_back(LedgerRow{run, n, r.ledgers[0]});
    if (record) record->steps.push_back(std::move(world));

    if (consecutive_degenerate >= 3) {
      out.aborted_runs.push_back(run);
      break;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  out.wall_seconds += std::chrono::duration<double>(t1 - t0).count();
  out.wall_seconds_per_step = out.wall_seconds / std::max(1, c.steps);
}

// ---- static & custom (fixed-roster) scenarios ---------------------------------

struct Roster {
  std::vector<Eigen::VectorXd> agent_truth;   // anchors first
  std::vector<Eigen::VectorXd> object_truth;
  std::vector<double> meas_ranges;
  int num_anchors = 0;
};

inline Roster build_roster(const ScenarioConfig& c, std::uint64_t seed) {
  Roster r;
  r.num_anchors = static_cast<int>(c.anchors.size());
  for (const auto& a : c.anchors) r.agent_truth.push_back(a);
  if (c.type == ScenarioType::Static) {
    RngStream rng(seed, 0, 0, 0, Rng::Placement);
    for (int i = 0; i < c.num_uniform_agents; ++i)
      r.agent_truth.push_back(
          Eigen::Vector2d(rng.uniform(c.field_lo, c.field_hi),
                          rng.uniform(c.field_lo, c.field_hi)));
    for (int i = 0; i < c.num_uniform_objects; ++i)
      r.object_truth.push_back(
          Eigen::Vector2d(rng.uniform(c.field_lo, c.field_hi),
                          rng.uniform(c.field_lo, c.field_hi)));
    r.meas_ranges.assign(r.agent_truth.size(), c.meas_range_default);
  } else {  // Custom
    for (const auto& a : c.custom_agents) r.agent_truth.push_back(a);
    for (const auto& o : c.custom_objects) r.object_truth.push_back(o);
    r.meas_ranges = c.custom_meas_ranges;
    if (r.meas_ranges.empty())
      r.meas_ranges.assign(r.agent_truth.size(), c.meas_range_default);
  }
  return r;
}

inline std::vector<netsim::AgentConfig> roster_agent_configs(const ScenarioConfig& c,
                                                             const Roster& roster,
                                                             std::uint64_t seed,
                                                             netsim::Method method,
                                                             bool record_per_iteration) {
  const int A = static_cast<int>(roster.agent_truth.size());
  const int O = static_cast<int>(roster.object_truth.size());
  StateSpace space{2, false};
  std::vector<netsim::AgentConfig> cfgs;
  for (int id = 0; id < A; ++id) {
    netsim::AgentConfig a;
    a.id = id;
    a.space = space;
    a.J = c.J;
    a.P = c.P;
    a.sigma_v2 = c.sigma_v2;
    a.seed = seed;
    a.method = method;
    a.is_anchor = id < roster.num_anchors;
    a.anchor_state = roster.agent_truth[id];
    a.prior.kind = netsim::PriorSpec::Kind::UniformBox;
    a.prior.box_lo = c.prior_lo;
    a.prior.box_hi = c.prior_hi;
    a.motion_initial = MotionModel::static_model(2);
    a.motion_moving = a.motion_initial;
    a.object_motion = MotionModel::static_model(2);
    a.prior_is_uniform = true;
    a.record_per_iteration = record_per_iteration;
    for (int k = 0; k < O; ++k) {
      const int m = A + k;
      a.object_ids.push_back(m);
      netsim::PriorSpec p;
      p.kind = netsim::PriorSpec::Kind::UniformBox;
      p.box_lo = c.prior_lo;
      p.box_hi = c.prior_hi;
      a.object_priors[m] = p;
    }
    cfgs.push_back(std::move(a));
  }
  return cfgs;
}

/// One realization of the static (or a custom fixed-roster) scenario.
inline void run_roster_once(const ScenarioConfig& c, int run, netsim::Method method,
                            RunTrace& out, bool record_per_iteration = true,
                            std::vector<netsim::TimeStepResult>* steps_out = nullptr) {
  const std::uint64_t seed = detail::run_seed(c, run);
  Roster roster = build_roster(c, seed);
  const int A = static_cast<int>(roster.agent_truth.size());
  const int O = static_cast<int>(roster.object_truth.size());

  netsim::SlottedNetwork net(
      roster_agent_configs(c, roster, seed, method, record_per_iteration),
      netsim::NetworkParams{c.C, c.ldt});

  const auto t0 = std::chrono::steady_clock::now();
  for (int n = 1; n <= c.steps; ++n) {
    TopologySnapshot topo = build_topology(roster.agent_truth, roster.object_truth,
                                           c.comm_range, roster.meas_ranges);
    std::vector<std::map<int, double>> meas(A);
    for (int l = 0; l < A; ++l)
      meas[l] = detail::draw_measurements(topo, roster.agent_truth, roster.object_truth,
                                          l, n, 2, std::sqrt(c.sigma_v2), seed);
    const bool ap = std::find(c.alt_proposal_steps.begin(), c.alt_proposal_steps.end(),
                              n) != c.alt_proposal_steps.end();
    auto r = net.run_time_step(topo, meas, n, ap);
    for (int l = 0; l < A; ++l) out.degenerate_updates += r.outputs[l].degenerate_updates;

    auto push_row = [&](int entity, EntityKind kind, int p, const Eigen::VectorXd& est,
                        const Eigen::VectorXd& truth) {
      TraceRow row;
      row.run = run;
      row.time = n;
      row.iteration = p;
      row.entity = entity;
      row.kind = kind;
      row.estimate = est;
      row.truth = truth;
      row.position_error = (est.head(2) - truth.head(2)).norm();
      out.rows.push_back(std::move(row));
    };

    if (record_per_iteration) {
      for (int l = roster.num_anchors; l < A; ++l)
        for (int p = 1; p <= c.P; ++p)
          push_row(l, EntityKind::MobileAgent, p,
                   r.outputs[l].own_estimate_per_p[p - 1], roster.agent_truth[l]);
      for (int k = 0; k < O; ++k)
        for (int p = 1; p <= c.P; ++p)
          push_row(A + k, EntityKind::Object, p,
                   r.outputs[0].object_estimates_per_p[p - 1].at(A + k),
                   roster.object_truth[k]);
    } else {
      for (int l = roster.num_anchors; l < A; ++l)
        push_row(l, EntityKind::MobileAgent, c.P, r.outputs[l].own_estimate,
                 roster.agent_truth[l]);
      for (int k = 0; k < O; ++k)
        push_row(A + k, EntityKind::Object, c.P,
                 r.outputs[0].object_estimates.at(A + k), roster.object_truth[k]);
    }
    out.ledgers.push_back(LedgerRow{run, n, r.ledgers[0]});
    if (steps_out) steps_out->push_back(std::move(r));
  }
  const auto t1 = std::chrono::steady_clock::now();
  out.wall_seconds += std::chrono::duration<double>(t1 - t0).count();
  out.wall_seconds_per_step = out.wall_seconds / std::max(1, c.steps);
}

}  // namespace cstrack::scen

#pragma once

#include <chrono>
#include <numeric>
#include <vector>

#include "cstrack/bp.hpp"
#include "cstrack/scen/scenario.hpp"
#include "cstrack/scen/spf.hpp"
#include "cstrack/scen/trace.hpp"
#include "cstrack/topology.hpp"

namespace cstrack::scen {

/// Random per-step measurement topology of the scalability ladder: every
/// mobile agent measures one or two anchors and its two neighbors on a random
/// cycle over mobile agents and objects (no two objects adjacent), so each
/// object is measured by exactly two mobile agents plus one or two anchors.
/// The communication graph is complete (the study is centralized).
inline TopologySnapshot gen_scalability_topology(int num_anchors, int num_mas,
                                                 int num_objects, RngStream& rng) {
  const int A = num_anchors + num_mas;
  TopologySnapshot t;
  t.num_agents = A;
  t.comm.assign(A, {});
  t.meas_agents.assign(A, {});
  t.meas_objects.assign(A, {});
  for (int i = 0; i < A; ++i)
    for (int k = 0; k < A; ++k)
      if (k != i) t.comm[i].push_back(k);

  // random cycle over MAs with objects inserted into distinct gaps
  std::vector<int> mas(num_mas);
  std::iota(mas.begin(), mas.end(), num_anchors);
  for (int i = num_mas - 1; i > 0; --i)
    std::swap(mas[i], mas[rng.below(i + 1)]);
  std::vector<int> gaps(num_mas);
  std::iota(gaps.begin(), gaps.end(), 0);
  for (int i = num_mas - 1; i > 0; --i)
    std::swap(gaps[i], gaps[rng.below(i + 1)]);
  std::vector<std::vector<int>> gap_objects(num_mas);
  for (int o = 0; o < num_objects; ++o) gap_objects[gaps[o]].push_back(A + o);

  std::vector<int> cycle;
  for (int i = 0; i < num_mas; ++i) {
    cycle.push_back(mas[i]);
    for (int obj : gap_objects[i]) cycle.push_back(obj);
  }
  const int n = static_cast<int>(cycle.size());
  for (int i = 0; i < n; ++i) {
    const int a = cycle[i];
    const int b = cycle[(i + 1) % n];
    const bool a_agent = a < A, b_agent = b < A;
    if (a_agent && b_agent) {
      t.meas_agents[a].push_back(b);
      t.meas_agents[b].push_back(a);
    } else if (a_agent) {
      t.meas_objects[a].push_back(b);
    } else {
      t.meas_objects[b].push_back(a);
    }
  }

  // anchors: each MA measures 1-2, each object is measured by 1-2
  for (int l = num_anchors; l < A; ++l) {
    const int count = 1 + static_cast<int>(rng.below(2));
    int first = static_cast<int>(rng.below(num_anchors));
    t.meas_agents[l].push_back(first);
    if (count == 2) {
      int second = static_cast<int>(rng.below(num_anchors - 1));
      if (second >= first) ++second;
      t.meas_agents[l].push_back(second);
    }
  }
  for (int o = 0; o < num_objects; ++o) {
    const int count = 1 + static_cast<int>(rng.below(2));
    int first = static_cast<int>(rng.below(num_anchors));
    t.meas_objects[first].push_back(A + o);
    if (count == 2) {
      int second = static_cast<int>(rng.below(num_anchors - 1));
      if (second >= first) ++second;
      t.meas_objects[second].push_back(A + o);
    }
  }
  for (auto& v : t.meas_agents) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  for (auto& v : t.meas_objects) std::sort(v.begin(), v.end());
  t.finalize();
  return t;
}

/// Centralized evaluation of the proposed method: identical belief-propagation
/// computations, with the consensus products replaced by their exact sums at
/// the fusion center. Used for the runtime-scaling study.
class CentralizedPm {
 public:
  struct Config {
    int num_anchors = 4;
    int num_mas = 8;
    int num_objects = 2;
    int J = 1000;
    int P = 2;
    double sigma_v2 = 1.0;
    double sigma_u2 = 1e-2;
    std::uint64_t seed = 1;
  };

  CentralizedPm(Config cfg, const std::vector<Eigen::VectorXd>& anchor_states,
                const std::map<int, ParticleSet>& priors)
      : cfg_(std::move(cfg)), anchor_states_(anchor_states) {
    motion_ = MotionModel::constant_velocity(cfg_.sigma_u2);
    const int A = cfg_.num_anchors + cfg_.num_mas;
    for (int id = cfg_.num_anchors; id < A; ++id) beliefs_[id] = priors.at(id);
    for (int id = A; id < A + cfg_.num_objects; ++id) beliefs_[id] = priors.at(id);
  }

  void step(const TopologySnapshot& topo,
            const std::vector<std::map<int, double>>& measurements, int time) {
    const int A = cfg_.num_anchors + cfg_.num_mas;
    const int pos_dim = 2;

    // Step 1: predictions (anchors are fixed point masses).
    std::map<int, ParticleSet> pred;
    for (auto& [id, b] : beliefs_) {
      RngStream rng(cfg_.seed, id, time, 0, Rng::Predict);
      pred[id] = message_filter(b, motion_, rng);
    }
    std::map<int, ParticleSet> anchor_pr;
    for (int a = 0; a < cfg_.num_anchors; ++a)
      anchor_pr[a] = ParticleSet::point_mass(anchor_states_[a], cfg_.J);

    std::map<int, ParticleSet> belief = pred;  // b^(0)
    std::map<int, ParticleSet> psi_to;         // psi_{l->m} per (l,m)
    std::map<int, ParticleSet> psi_from;       // psi_{m->l} per (m,l)
    auto key = [](int l, int m) { return l * 100000 + m; };
    (void)key;

    std::map<std::pair<int, int>, ParticleSet> psi_lm;  // agent -> object
    std::map<std::pair<int, int>, ParticleSet> psi_ml;  // object -> agent

    for (int p = 1; p <= cfg_.P; ++p) {
      std::map<int, ParticleSet> prev_belief = belief;

      // objects: exact message-product weights (2a) and extrinsics (2b)
      std::map<std::pair<int, int>, Eigen::VectorXd> logphi;
      for (const auto& [m, observers] : topo.observers) {
        Eigen::VectorXd total = Eigen::VectorXd::Zero(cfg_.J);
        for (int l : observers) {
          const ParticleSet* src;
          if (l < cfg_.num_anchors) {
            src = &anchor_pr[l];
          } else {
            auto it = psi_lm.find({l, m});
            src = it != psi_lm.end() ? &it->second : &prev_belief[l];
          }
          Eigen::VectorXd lp = mc_message_eval(pred[m].states, *src,
                                               measurements[l].at(m), pos_dim,
                                               cfg_.sigma_v2)
                                   .array()
                                   .log()
                                   .matrix();
          logphi[{l, m}] = lp;
          total += lp;
        }
        ParticleSet w;
        w.states = pred[m].states;
        try {
          w.weights = normalize_log_weights(total);
        } catch (const DegenerateWeights&) {
          w.weights = Eigen::VectorXd::Constant(cfg_.J, 1.0 / cfg_.J);
        }
        weighted_[m] = w;
        RngStream rng(cfg_.seed, m, time, p, Rng::Resample);
        belief[m] = resample(w, rng);
        if (p < cfg_.P) {
          for (int l : observers) {
            if (l < cfg_.num_anchors) continue;
            ParticleSet e;
            e.states = pred[m].states;
            try {
              e.weights = normalize_log_weights(total - logphi[{l, m}]);
            } catch (const DegenerateWeights&) {
              e.weights = Eigen::VectorXd::Constant(cfg_.J, 1.0 / cfg_.J);
            }
            RngStream rng2(cfg_.seed, m, time, p, Rng::ResampleExtrinsicFromObject, l);
            psi_ml[{m, l}] = resample(e, rng2);
          }
        }
      }

      // mobile agents: stacked update (2c) and extrinsics to objects (2d)
      for (int l = cfg_.num_anchors; l < A; ++l) {
        std::map<int, const ParticleSet*> partners;
        std::map<int, double> meas;
        for (int k : topo.meas_agents[l]) {
          partners[k] = k < cfg_.num_anchors ? &anchor_pr[k] : &prev_belief[k];
          meas[k] = measurements[l].at(k);
        }
        for (int m : topo.meas_objects[l]) {
          auto it = psi_ml.find({m, l});
          partners[m] = it != psi_ml.end() ? &it->second : &pred[m];
          meas[m] = measurements[l].at(m);
        }
        StackedUpdate factors;
        ParticleSet w;
        try {
          w = agent_belief_update(pred[l], partners, meas, pos_dim, cfg_.sigma_v2,
                                  &factors);
        } catch (const DegenerateWeights&) {
          w = pred[l];
          w.weights = Eigen::VectorXd::Constant(cfg_.J, 1.0 / cfg_.J);
          factors.total_log = Eigen::VectorXd::Zero(cfg_.J);
        }
        weighted_[l] = w;
        RngStream rng(cfg_.seed, l, time, p, Rng::Resample);
        belief[l] = resample(w, rng);
        if (p < cfg_.P) {
          for (int m : topo.meas_objects[l]) {
            RngStream rng2(cfg_.seed, l, time, p, Rng::ResampleExtrinsicToObject, m);
            try {
              psi_lm[{l, m}] = extrinsic_agent_to_object(pred[l], factors, m, rng2);
            } catch (const DegenerateWeights&) {
              psi_lm[{l, m}] = pred[l];
            }
          }
        }
      }
    }
    beliefs_ = belief;
  }

  Eigen::VectorXd estimate(int entity) const { return mmse_estimate(weighted_.at(entity)); }
  const ParticleSet& weighted_belief(int entity) const { return weighted_.at(entity); }

 private:
  Config cfg_;
  std::vector<Eigen::VectorXd> anchor_states_;
  MotionModel motion_;
  std::map<int, ParticleSet> beliefs_;
  std::map<int, ParticleSet> weighted_;
};

struct ScalabilityPoint {
  int num_mas = 0;
  int num_objects = 0;
  double pm_seconds_per_step = 0.0;
  double spf_seconds_per_step = 0.0;
  double pm_rmse = 0.0;
  double spf_rmse = 0.0;
};

/// Runs one ladder size with both methods on identical truth/measurements.
inline ScalabilityPoint run_scalability_size(const ScenarioConfig& c, int num_mas,
                                             int num_objects) {
  constexpr int kAnchors = 4;
  const int A = kAnchors + num_mas;
  ScalabilityPoint point;
  point.num_mas = num_mas;
  point.num_objects = num_objects;

  std::vector<Eigen::VectorXd> anchor_states;
  anchor_states.push_back(Eigen::Vector4d(-100, -100, 0, 0));
  anchor_states.push_back(Eigen::Vector4d(-100, 100, 0, 0));
  anchor_states.push_back(Eigen::Vector4d(100, -100, 0, 0));
  anchor_states.push_back(Eigen::Vector4d(100, 100, 0, 0));

  double pm_sq = 0, spf_sq = 0;
  long long err_count = 0;
  for (int run = 0; run < c.runs; ++run) {
    const std::uint64_t seed =
        RngStream::derive_seed(c.seed, run * 1000 + num_mas, 0, 0, Rng::Generic, 3);

    // truth: uniform initial positions, zero initial velocity
    std::map<int, Eigen::VectorXd> truth;
    RngStream place(seed, 0, 0, 0, Rng::Placement);
    for (int id = kAnchors; id < A + num_objects; ++id) {
      truth[id] = Eigen::Vector4d(place.uniform(c.field_lo, c.field_hi),
                                  place.uniform(c.field_lo, c.field_hi), 0, 0);
    }

    // Gaussian priors with per-run random means around the truth
    std::map<int, ParticleSet> priors;
    std::vector<int> tracked;
    for (int id = kAnchors; id < A + num_objects; ++id) {
      tracked.push_back(id);
      RngStream hyper(seed, id, 0, 0, Rng::Generic, 4);
      Eigen::VectorXd mu(4);
      for (int d = 0; d < 4; ++d)
        mu[d] = truth[id][d] + hyper.normal(0, std::sqrt(c.prior_var));
      netsim::PriorSpec spec;
      spec.kind = netsim::PriorSpec::Kind::Gaussian;
      spec.mean = mu;
      spec.var_diag = Eigen::VectorXd::Constant(4, c.prior_var);
      RngStream draw(seed, id, 0, 0, Rng::PriorDraw);
      priors[id] = spec.draw(StateSpace{2, true}, c.J, draw);
    }

    CentralizedPm::Config pmc;
    pmc.num_anchors = kAnchors;
    pmc.num_mas = num_mas;
    pmc.num_objects = num_objects;
    pmc.J = c.J;
    pmc.P = c.P;
    pmc.sigma_v2 = c.sigma_v2;
    pmc.sigma_u2 = c.sigma_u2_object;
    pmc.seed = seed;
    CentralizedPm pm(pmc, anchor_states, priors);

    StackedParticleFilter::Config sc;
    sc.entities = tracked;
    for (int a = 0; a < kAnchors; ++a) sc.anchors[a] = anchor_states[a];
    sc.J = c.J;
    sc.sigma_u2 = c.sigma_u2_object;
    sc.sigma_v2 = c.sigma_v2;
    sc.seed = seed;
    StackedParticleFilter spf(sc, priors);

    const MotionModel cv = MotionModel::constant_velocity(c.sigma_u2_object);
    double pm_time = 0, spf_time = 0;
    for (int n = 1; n <= c.steps; ++n) {
      for (int id = kAnchors; id < A + num_objects; ++id) {
        RngStream rng(seed, id, n, 0, Rng::TruthNoise);
        truth[id] = sample_transition(truth[id], cv, rng);
      }
      RngStream topo_rng(seed, 0, n, 0, Rng::Topology);
      TopologySnapshot topo =
          gen_scalability_topology(kAnchors, num_mas, num_objects, topo_rng);

      std::vector<std::map<int, double>> meas(A);
      std::vector<Measurement> flat;
      auto pos_of = [&](int id) -> Eigen::VectorXd {
        return id < kAnchors ? anchor_states[id] : truth[id];
      };
      for (int l = 0; l < A; ++l) {
        for (int k : topo.meas_agents[l]) {
          RngStream rng(seed, l, n, 0, Rng::Measurement, k);
          meas[l][k] = measure_distance(pos_of(l), pos_of(k), 2,
                                        rng.normal(0, std::sqrt(c.sigma_v2)));
          flat.push_back({l, k, meas[l][k], n});
        }
        for (int m : topo.meas_objects[l]) {
          RngStream rng(seed, l, n, 0, Rng::Measurement, m);
          meas[l][m] = measure_distance(pos_of(l), truth[m], 2,
                                        rng.normal(0, std::sqrt(c.sigma_v2)));
          flat.push_back({l, m, meas[l][m], n});
        }
      }

      auto t0 = std::chrono::steady_clock::now();
      pm.step(topo, meas, n);
      auto t1 = std::chrono::steady_clock::now();
      spf.step(flat, n);
      auto t2 = std::chrono::steady_clock::now();
      pm_time += std::chrono::duration<double>(t1 - t0).count();
      spf_time += std::chrono::duration<double>(t2 - t1).count();

      for (int id = kAnchors; id < A + num_objects; ++id) {
        pm_sq += (pm.estimate(id).head(2) - truth[id].head(2)).squaredNorm();
        spf_sq += (spf.estimate(id).head(2) - truth[id].head(2)).squaredNorm();
        ++err_count;
      }
    }
    point.pm_seconds_per_step += pm_time / c.steps;
    point.spf_seconds_per_step += spf_time / c.steps;
  }
  point.pm_seconds_per_step /= c.runs;
  point.spf_seconds_per_step /= c.runs;
  point.pm_rmse = std::sqrt(pm_sq / err_count);
  point.spf_rmse = std::sqrt(spf_sq / err_count);
  return point;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace cstrack::scen

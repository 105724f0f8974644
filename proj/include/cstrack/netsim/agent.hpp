#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include "cstrack/bp.hpp"
#include "cstrack/netsim/payload.hpp"
#include "cstrack/particles.hpp"
#include "cstrack/rng.hpp"
#include "cstrack/state.hpp"

namespace cstrack::netsim {

enum class Method { PM, RM };

/// Initial state distribution an agent assumes for itself or an object.
struct PriorSpec {
  enum class Kind { UniformBox, Gaussian, Point };
  Kind kind = Kind::UniformBox;
  double box_lo = -200.0, box_hi = 200.0;
  bool velocity_gaussian = false;  // UniformBox only; zero velocities otherwise
  Eigen::VectorXd vel_mean;
  double vel_var = 0.0;
  Eigen::VectorXd mean;      // Gaussian / Point
  Eigen::VectorXd var_diag;  // Gaussian

  ParticleSet draw(const StateSpace& space, int J, RngStream& rng) const {
    const int dim = space.dim();
    Eigen::MatrixXd s(dim, J);
    switch (kind) {
      case Kind::Point:
        return ParticleSet::point_mass(mean, J);
      case Kind::Gaussian:
        for (int j = 0; j < J; ++j)
          for (int d = 0; d < dim; ++d)
            s(d, j) = rng.normal(mean[d], std::sqrt(var_diag[d]));
        break;
      case Kind::UniformBox:
        for (int j = 0; j < J; ++j) {
          for (int d = 0; d < space.pos_dim; ++d) s(d, j) = rng.uniform(box_lo, box_hi);
          if (space.has_velocity) {
            for (int d = 0; d < space.pos_dim; ++d)
              s(space.pos_dim + d, j) =
                  velocity_gaussian ? rng.normal(vel_mean[d], std::sqrt(vel_var)) : 0.0;
          }
        }
        break;
    }
    return ParticleSet::equally_weighted(std::move(s));
  }
};

struct AgentConfig {
  int id = 0;
  bool is_anchor = false;
  StateSpace space;
  Eigen::VectorXd anchor_state;  // full state for anchors
  int J = 1000;
  int P = 1;
  double sigma_v2 = 2.0;
  std::uint64_t seed = 1;
  Method method = Method::PM;
  PriorSpec prior;
  MotionModel motion_initial;  // before the movement rule fires
  MotionModel motion_moving;   // after (same as initial when no rule)
  bool movement_rule = false;
  double loc_var_threshold = 10.0;  // per-component position variance
  Eigen::VectorXd move_target;
  double move_horizon = 75.0;
  double velocity_prior_var = 1e-3;
  std::vector<int> object_ids;
  MotionModel object_motion;
  std::map<int, PriorSpec> object_priors;
  bool prior_is_uniform = true;  // prediction factor constant in AP weights
  // stacked factors switch to the Monte-Carlo message marginal against
  // partners whose position variance exceeds this multiple of sigma_v2
  double marginal_switch_factor = 25.0;
  // the own-belief alternative proposal also fires whenever the prediction
  // message is this uninformative (empirical position variance), independent
  // of the scheduled steps; prior-box-scale variances qualify, arc- or
  // ring-shaped beliefs do not
  double ap_uninformative_variance = 1000.0;
  bool record_per_iteration = false;
};

struct LdtInfo {
  bool participate = false;
  int multiplier = 0;  // |A_{m,n}|
  int diameter = 0;    // observer-subgraph diameter
  int my_degree = 0;   // my degree in the observer subgraph
};

/// Everything an agent learns from the environment at one time step: its own
/// neighborhoods, its own measurements, and the network constants. Cross-agent
/// data arrives only through payloads.
struct StepInputs {
  int time = 0;
  std::vector<int> comm_neighbors;
  std::vector<int> measured_agents;   // subset of comm_neighbors
  std::vector<int> measured_objects;  // object ids
  std::map<int, double> y;            // measurements keyed by entity id
  int num_agents = 1;                 // |A|
  int diameter = 0;                   // I
  int consensus_iterations = 0;       // C
  bool alt_proposal = false;
  bool ldt = false;
  std::map<int, LdtInfo> ldt_info;
};

struct StepOutputs {
  Eigen::VectorXd own_estimate;
  std::map<int, Eigen::VectorXd> object_estimates;
  double own_position_variance = 0.0;  // per-component mean
  bool localized = false;
  bool started_moving_this_step = false;
  int degenerate_updates = 0;
  std::vector<Eigen::VectorXd> own_estimate_per_p;
  std::vector<std::map<int, Eigen::VectorXd>> object_estimates_per_p;
};

/// One agent of the slot-synchronous simulator. All persistent state is
/// private; the only inter-agent inputs are the payload vectors handed to the
/// receive_* methods, which is what the isolation audit replays.
class SimAgent {
 public:
  explicit SimAgent(AgentConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.is_anchor) {
      own_belief_ = ParticleSet::point_mass(cfg_.anchor_state, cfg_.J);
    } else {
      RngStream rng(cfg_.seed, cfg_.id, 0, 0, Rng::PriorDraw);
      own_belief_ = cfg_.prior.draw(cfg_.space, cfg_.J, rng);
    }
    for (int m : cfg_.object_ids) {
      ObjectTrack t;
      t.id = m;
      RngStream rng(cfg_.seed, m, 0, 0, Rng::PriorDraw);
      t.belief = cfg_.object_priors.at(m).draw(cfg_.space, cfg_.J, rng);
      t.held = true;
      tracks_.push_back(std::move(t));
    }
    moving_ = !cfg_.movement_rule;
  }

  int id() const { return cfg_.id; }
  bool is_anchor() const { return cfg_.is_anchor; }
  bool localized() const { return localized_; }
  const AgentConfig& config() const { return cfg_; }
  const ParticleSet& own_belief() const { return own_belief_; }

  const ParticleSet* object_belief(int m) const {
    const ObjectTrack* t = find(m);
    return (t && t->held) ? &t->belief : nullptr;
  }

  std::vector<int> held_objects() const {
    std::vector<int> out;
    for (const auto& t : tracks_)
      if (t.held) out.push_back(t.id);
    return out;
  }

  void drop_object_belief(int m) {  // test hook for LDT scenarios
    if (ObjectTrack* t = find_mut(m)) t->held = false;
  }

  // ---- time step lifecycle -------------------------------------------------

  void begin_step(const StepInputs& in) {
    in_ = in;
    out_ = StepOutputs{};
    out_.localized = localized_;
    p_ = 1;
    own_updated_ = false;
    received_beliefs_.clear();

    // Step 1: prediction for own state and every tracked object.
    if (cfg_.is_anchor) {
      own_pred_ = own_belief_;
    } else {
      RngStream rng(cfg_.seed, cfg_.id, in_.time, 0, Rng::Predict);
      own_pred_ = message_filter(own_belief_,
                                 moving_ ? cfg_.motion_moving : cfg_.motion_initial, rng);
    }
    own_weighted_ = own_pred_;
    own_proposal_ = own_pred_;
    for (auto& t : tracks_) {
      t.active = t.held;
      if (in_.ldt) {
        auto it = in_.ldt_info.find(t.id);
        t.active = t.held && it != in_.ldt_info.end() && it->second.participate;
      }
      t.use_override = false;
      t.has_psi_to_next = false;
      if (!t.held) continue;
      RngStream rng(cfg_.seed, t.id, in_.time, 0, Rng::Predict);
      t.pred = message_filter(t.belief, cfg_.object_motion, rng);
      t.proposal = t.pred;
      t.psi_from = t.pred;  // psi^(0)_{m->l}
    }
    // psi^(0)_{l->m} is the own prediction (RM: a point mass at its mean).
    psi_to_ = make_psi_to(own_pred_);
  }

  BeliefPayload emit_belief() const {
    BeliefPayload p;
    p.from = cfg_.id;
    p.degree = static_cast<int>(in_.comm_neighbors.size());
    p.is_anchor = cfg_.is_anchor;
    const ParticleSet& b = (p_ == 1) ? own_pred_ : own_belief_;
    p.positions = b.states.topRows(cfg_.space.pos_dim);
    return p;
  }

  void receive_beliefs(const std::vector<BeliefPayload>& inbox) {
    for (const auto& b : inbox) received_beliefs_[b.from] = b;
  }

  // -- alternative proposal: candidates, min-consensus, assembly -------------

  /// Draws this agent's proposal candidate for every measured object.
  void prepare_alt_proposal() {
    for (auto& t : tracks_) {
      if (!t.active) continue;
      t.min_candidate = MinPayload::Candidate{};
      if (!is_observer(t.id)) continue;
      MinPayload::Candidate c;
      c.sigma2 =
          cfg_.is_anchor ? 0.0 : empirical_variance(current_belief(), cfg_.space.pos_dim);
      c.agent = cfg_.id;
      RngStream rng(cfg_.seed, cfg_.id, in_.time, p_, Rng::AltProposalDraw, t.id);
      c.positions = draw_from_range_message(psi_to_for(t), in_.y.at(t.id),
                                            cfg_.space.pos_dim, cfg_.sigma_v2, rng);
      t.min_candidate = c;
    }
  }

  MinPayload emit_min() const {
    MinPayload p;
    p.from = cfg_.id;
    for (const auto& t : tracks_)
      if (t.active) p.candidates.emplace(t.id, t.min_candidate);
    return p;
  }

  void receive_min(const std::vector<MinPayload>& inbox) {
    for (auto& t : tracks_) {
      if (!t.active) continue;
      for (const auto& msg : inbox) {
        auto it = msg.candidates.find(t.id);
        if (it != msg.candidates.end() && it->second.better_than(t.min_candidate))
          t.min_candidate = it->second;
      }
    }
  }

  /// Adopts the winning proposal per object after the min-consensus phase.
  void finish_min() {
    for (auto& t : tracks_) {
      if (!t.active) continue;
      if (t.min_candidate.positions.size() == 0) continue;
      t.proposal.states = t.pred.states;
      t.proposal.states.topRows(cfg_.space.pos_dim) = t.min_candidate.positions;
      t.proposal.weights = Eigen::VectorXd::Constant(cfg_.J, 1.0 / cfg_.J);
    }
  }

  /// Runs the own-belief update (Step 2c) ahead of the consensus phases.
  /// Possible at alternative-proposal iterations because neighbor beliefs
  /// arrive with the first dissemination slot; the reference method needs it
  /// so its object weighting sees this iteration's location estimates.
  void update_own_from_beliefs() {
    if (!cfg_.is_anchor) {
      update_own_belief();
      if (cfg_.method == Method::RM)
        psi_to_ = ParticleSet::point_mass(mmse_estimate(own_weighted_), cfg_.J);
    }
    own_updated_ = true;
  }

  /// Initializes the consensus states with the alternative-proposal
  /// importance terms (or the plain terms where no proposal was won).
  void ap_consensus_init() {
    for (auto& t : tracks_) {
      if (!t.active) continue;
      if (t.min_candidate.positions.size() == 0) {
        init_track_consensus(t);  // nobody observes this object
        continue;
      }
      t.own_msg_log = Eigen::VectorXd::Zero(cfg_.J);
      t.zeta = Eigen::VectorXd::Zero(cfg_.J);

      if (is_observer(t.id)) {
        const double y = in_.y.at(t.id);
        const ParticleSet& src = psi_to_for(t);
        if (t.min_candidate.agent == cfg_.id) {
          // winner: own message (numerator) over the actual draw density,
          // plus the prediction factor when it is not flat
          const Eigen::VectorXd num = mc_message_eval(t.proposal.states, src, y,
                                                      cfg_.space.pos_dim, cfg_.sigma_v2);
          const Eigen::VectorXd den = range_message_draw_density(
              t.proposal.states, src, y, cfg_.space.pos_dim, cfg_.sigma_v2);
          t.own_msg_log = num.array().log().matrix();
          Eigen::VectorXd extra = -den.array().log().matrix();
          if (!cfg_.prior_is_uniform) extra += object_prediction_log(t);
          t.zeta = t.own_msg_log + extra;
        } else if (empirical_variance(src, cfg_.space.pos_dim) > marginal_threshold()) {
          // diffuse extrinsic: integrate it out (message marginal)
          t.own_msg_log = mc_message_eval(t.proposal.states, src, y, cfg_.space.pos_dim,
                                          cfg_.sigma_v2)
                              .array()
                              .log()
                              .matrix();
          t.zeta = t.own_msg_log;
        } else {
          // stacked single-point likelihood against my own extrinsic particle
          const Eigen::ArrayXd d = (src.states.topRows(cfg_.space.pos_dim) -
                                    t.proposal.states.topRows(cfg_.space.pos_dim))
                                       .colwise()
                                       .norm()
                                       .transpose()
                                       .array();
          for (int j = 0; j < cfg_.J; ++j)
            t.own_msg_log[j] = log_range_likelihood(y, d[j], cfg_.sigma_v2);
          t.zeta = t.own_msg_log;
        }
      }
      t.zeta0 = t.zeta;
    }
  }

  /// Plain pipeline: Eq.-24-style Monte Carlo message values at the
  /// prediction particles for every measured object; zero elsewhere.
  void init_consensus() {
    for (auto& t : tracks_) {
      if (!t.active) continue;
      init_track_consensus(t);
    }
  }

  AvgPayload emit_avg() const {
    AvgPayload p;
    p.from = cfg_.id;
    p.degree = static_cast<int>(in_.comm_neighbors.size());
    for (const auto& t : tracks_) {
      if (!t.active) continue;
      p.zeta[t.id] = t.zeta;
      if (in_.ldt) {
        auto it = in_.ldt_info.find(t.id);
        if (it != in_.ldt_info.end()) p.object_degree[t.id] = it->second.my_degree;
      }
    }
    return p;
  }

  void receive_avg(const std::vector<AvgPayload>& inbox) {
    for (auto& t : tracks_) {
      if (!t.active) continue;
      int my_deg = static_cast<int>(in_.comm_neighbors.size());
      if (in_.ldt) {
        auto it = in_.ldt_info.find(t.id);
        my_deg = it == in_.ldt_info.end() ? 0 : it->second.my_degree;
      }
      double self_weight = 1.0;
      Eigen::VectorXd next = Eigen::VectorXd::Zero(cfg_.J);
      for (const auto& msg : inbox) {
        auto it = msg.zeta.find(t.id);
        if (it == msg.zeta.end()) continue;
        int sender_deg = msg.degree;
        if (in_.ldt) {
          auto dit = msg.object_degree.find(t.id);
          sender_deg = dit == msg.object_degree.end() ? my_deg : dit->second;
        }
        const double w = 1.0 / (1.0 + std::max(my_deg, sender_deg));
        self_weight -= w;
        next += w * it->second;
      }
      t.zeta = next + self_weight * t.zeta;
    }
  }

  /// Start of the max phase: scale by the network (or observer-set) size and
  /// normalize locally; degenerate products fall back to uniform.
  void begin_max() {
    for (auto& t : tracks_) {
      if (!t.active) continue;
      int mult = in_.num_agents;
      if (in_.ldt) {
        auto it = in_.ldt_info.find(t.id);
        if (it != in_.ldt_info.end()) mult = it->second.multiplier;
      }
      t.log_phi = static_cast<double>(mult) * t.zeta;
      try {
        t.weights = normalize_log_weights(t.log_phi);
      } catch (const DegenerateWeights&) {
        t.weights = Eigen::VectorXd::Constant(cfg_.J, 1.0 / cfg_.J);
        ++out_.degenerate_updates;
      }
    }
  }

  MaxPayload emit_max() const {
    MaxPayload p;
    p.from = cfg_.id;
    for (const auto& t : tracks_)
      if (t.active) p.weights.emplace(t.id, t.weights);
    return p;
  }

  void receive_max(const std::vector<MaxPayload>& inbox) {
    for (auto& t : tracks_) {
      if (!t.active) continue;
      for (const auto& msg : inbox) {
        auto it = msg.weights.find(t.id);
        if (it != msg.weights.end()) t.weights = t.weights.cwiseMax(it->second);
      }
    }
  }

  /// Local computations after the consensus phases of iteration p: object
  /// beliefs, extrinsics, own belief, resampling, estimation bookkeeping.
  void finish_iteration() {
    const int p = p_;

    // Steps 2a/2b: object beliefs from aligned weights; extrinsic shortcut.
    for (auto& t : tracks_) {
      if (!t.active) continue;
      t.weighted.states = t.proposal.states;
      t.weighted.weights = normalize_weights(t.weights);
      if (is_observer(t.id) && p < cfg_.P && cfg_.method == Method::PM) {
        try {
          ParticleSet w;
          w.states = t.proposal.states;
          w.weights =
              normalize_log_weights(t.log_phi - t.own_msg_log);
          RngStream rng(cfg_.seed, t.id, in_.time, p, Rng::ResampleExtrinsicFromObject,
                        cfg_.id);
          t.psi_from_next = resample(w, rng);
        } catch (const DegenerateWeights&) {
          t.psi_from_next = t.proposal;
          ++out_.degenerate_updates;
        }
      }
      RngStream rng(cfg_.seed, t.id, in_.time, p, Rng::Resample);
      t.belief = resample(t.weighted, rng);
    }

    // Step 2c: own belief, using psi^(p-1)_{m->l} and neighbor b^(p-1)
    // (already done at alternative-proposal iterations).
    if (!cfg_.is_anchor && !own_updated_) update_own_belief();
    own_updated_ = false;

    // Step 2d: extrinsic to each measured object (PM, p < P).
    if (!cfg_.is_anchor && cfg_.method == Method::PM && p < cfg_.P) {
      for (auto& t : tracks_) {
        if (!t.active || !is_observer(t.id)) continue;
        RngStream rng(cfg_.seed, cfg_.id, in_.time, p, Rng::ResampleExtrinsicToObject,
                      t.id);
        try {
          t.psi_to_next = extrinsic_agent_to_object(own_proposal_, own_factors_, t.id, rng);
        } catch (const DegenerateWeights&) {
          t.psi_to_next = own_pred_;
          ++out_.degenerate_updates;
        }
        t.has_psi_to_next = true;
      }
    }

    // Step 2e: own belief resampling.
    if (!cfg_.is_anchor) {
      RngStream rng(cfg_.seed, cfg_.id, in_.time, p, Rng::Resample);
      own_belief_ = resample(own_weighted_, rng);
    }

    if (cfg_.record_per_iteration) {
      out_.own_estimate_per_p.push_back(
          cfg_.is_anchor ? cfg_.anchor_state : mmse_estimate(own_weighted_));
      std::map<int, Eigen::VectorXd> objs;
      for (const auto& t : tracks_)
        if (t.active) objs[t.id] = mmse_estimate(t.weighted);
      out_.object_estimates_per_p.push_back(std::move(objs));
    }

    // Advance the extrinsics for iteration p+1.
    psi_to_ = make_psi_to(own_belief_);
    for (auto& t : tracks_) {
      if (t.psi_from_next.count() > 0) {
        t.psi_from = t.psi_from_next;
        t.psi_from_next = ParticleSet{};
      }
      if (t.has_psi_to_next) {
        t.psi_to_override = t.psi_to_next;
        t.use_override = true;
        t.has_psi_to_next = false;
      }
    }
    ++p_;
  }

  HandoverPayload emit_handover() const {
    HandoverPayload p;
    p.from = cfg_.id;
    for (const auto& t : tracks_)
      if (t.active) p.beliefs[t.id] = t.belief.states;
    return p;
  }

  void receive_handover(const std::vector<HandoverPayload>& inbox) {
    for (auto& t : tracks_) {
      if (t.active) continue;
      for (const auto& msg : inbox) {
        auto it = msg.beliefs.find(t.id);
        if (it != msg.beliefs.end()) {
          t.belief = ParticleSet::equally_weighted(it->second);
          t.held = true;
          break;
        }
      }
    }
  }

  StepOutputs finish_step() {
    out_.own_estimate = cfg_.is_anchor ? cfg_.anchor_state : mmse_estimate(own_weighted_);
    for (const auto& t : tracks_)
      if (t.active) out_.object_estimates[t.id] = mmse_estimate(t.weighted);
    out_.own_position_variance =
        cfg_.is_anchor ? 0.0
                       : position_component_variance(own_belief_, cfg_.space.pos_dim).mean();

    if (cfg_.movement_rule && !cfg_.is_anchor && !localized_ &&
        out_.own_position_variance < cfg_.loc_var_threshold) {
      localized_ = true;
      moving_ = true;
      out_.started_moving_this_step = true;
      inject_velocity_prior();
    }
    out_.localized = localized_;
    return out_;
  }

  int active_object_count() const {
    int n = 0;
    for (const auto& t : tracks_)
      if (t.active) ++n;
    return n;
  }

 private:
  struct ObjectTrack {
    int id = -1;
    bool held = false;
    bool active = false;
    ParticleSet belief;    // carried across steps (equally weighted)
    ParticleSet pred;      // prediction message
    ParticleSet proposal;  // weighting support (prediction or AP draws)
    ParticleSet weighted;  // belief with aligned weights
    ParticleSet psi_from;  // psi^(p-1)_{m->l}, stacking partner
    ParticleSet psi_from_next;
    Eigen::VectorXd zeta0, zeta, log_phi, weights, own_msg_log;
    MinPayload::Candidate min_candidate;
    ParticleSet psi_to_next, psi_to_override;
    bool has_psi_to_next = false;
    bool use_override = false;
  };

  const ObjectTrack* find(int m) const {
    for (const auto& t : tracks_)
      if (t.id == m) return &t;
    return nullptr;
  }
  ObjectTrack* find_mut(int m) {
    for (auto& t : tracks_)
      if (t.id == m) return &t;
    return nullptr;
  }

  bool is_observer(int m) const {
    return std::binary_search(in_.measured_objects.begin(), in_.measured_objects.end(), m);
  }

  const ParticleSet& current_belief() const { return p_ == 1 ? own_pred_ : own_belief_; }

  ParticleSet make_psi_to(const ParticleSet& base) const {
    if (cfg_.method == Method::RM && !cfg_.is_anchor)
      return ParticleSet::point_mass(mmse_estimate(base), cfg_.J);
    return base;
  }

  const ParticleSet& psi_to_for(const ObjectTrack& t) const {
    return t.use_override ? t.psi_to_override : psi_to_;
  }

  double marginal_threshold() const {
    return cfg_.marginal_switch_factor * cfg_.sigma_v2;
  }

  Eigen::VectorXd object_prediction_log(const ObjectTrack& t) const {
    PredictionEvaluator ev;
    ev.uniform = false;
    ev.previous_belief = &t.belief;
    ev.model = &cfg_.object_motion;
    ev.kernel_var = position_kernel_variance(cfg_.object_motion);
    return ev.log_eval(t.proposal.states.topRows(cfg_.space.pos_dim), cfg_.space.pos_dim);
  }

  static double position_kernel_variance(const MotionModel& m) {
    if (m.is_static || m.sigma_u2 == 0.0) return 1e-6;
    return m.sigma_u2 * m.W.row(0).squaredNorm();
  }

  void init_track_consensus(ObjectTrack& t) {
    t.proposal = t.pred;
    t.own_msg_log = Eigen::VectorXd::Zero(cfg_.J);
    t.zeta = Eigen::VectorXd::Zero(cfg_.J);
    if (is_observer(t.id)) {
      const Eigen::VectorXd phi =
          mc_message_eval(t.proposal.states, psi_to_for(t), in_.y.at(t.id),
                          cfg_.space.pos_dim, cfg_.sigma_v2);
      t.own_msg_log = phi.array().log().matrix();
      t.zeta = t.own_msg_log;
    }
    t.zeta0 = t.zeta;
  }

  void update_own_belief() {
    std::map<int, const ParticleSet*> partners;
    std::map<int, double> meas;
    std::vector<ParticleSet> nbr_prs;
    nbr_prs.reserve(in_.measured_agents.size());
    for (int l : in_.measured_agents) {
      auto it = received_beliefs_.find(l);
      if (it == received_beliefs_.end()) continue;
      nbr_prs.push_back(ParticleSet::equally_weighted(it->second.positions));
      partners[l] = &nbr_prs.back();
      meas[l] = in_.y.at(l);
    }
    if (cfg_.method == Method::PM) {
      for (const auto& t : tracks_) {
        if (!t.active || !is_observer(t.id)) continue;
        partners[t.id] = &t.psi_from;
        meas[t.id] = in_.y.at(t.id);
      }
    }

    own_proposal_ = own_pred_;
    bool done = false;
    const bool uninformative_prediction =
        empirical_variance(own_pred_, cfg_.space.pos_dim) > cfg_.ap_uninformative_variance;
    if ((in_.alt_proposal || uninformative_prediction) && !partners.empty())
      done = try_alt_proposal_own(partners, meas);
    if (!done) {
      try {
        own_weighted_ = agent_belief_update(own_proposal_, partners, meas,
                                            cfg_.space.pos_dim, cfg_.sigma_v2, &own_factors_,
                                            marginal_threshold());
      } catch (const DegenerateWeights&) {
        own_weighted_ = own_proposal_;
        own_weighted_.weights = Eigen::VectorXd::Constant(cfg_.J, 1.0 / cfg_.J);
        own_factors_ = StackedUpdate{};
        own_factors_.total_log = Eigen::VectorXd::Zero(cfg_.J);
        ++out_.degenerate_updates;
      }
    }
  }

  /// Object-style alternative proposal for the own belief: redraw own
  /// positions from the most informative measured agent partner's belief.
  /// Entirely local; falls back to the plain proposal without agent partners.
  bool try_alt_proposal_own(const std::map<int, const ParticleSet*>& partners,
                            const std::map<int, double>& meas) {
    std::map<int, double> variances;
    for (const auto& [id, pr] : partners) {
      if (id < in_.num_agents) {
        auto it = received_beliefs_.find(id);
        if (it != received_beliefs_.end() && it->second.is_anchor) {
          variances[id] = 0.0;
          continue;
        }
      }
      variances[id] = empirical_variance(*pr, cfg_.space.pos_dim);
    }
    if (variances.empty()) return false;
    const int lhat = select_lhat(variances);
    // a proposal needs an informative source; with none, keep the plain path
    if (variances.at(lhat) > cfg_.ap_uninformative_variance) return false;
    const ParticleSet lhat_pr = *partners.at(lhat);
    const double y = meas.at(lhat);

    RngStream rng(cfg_.seed, cfg_.id, in_.time, p_, Rng::AltProposalDraw, cfg_.id);
    const Eigen::MatrixXd draws =
        draw_from_range_message(lhat_pr, y, cfg_.space.pos_dim, cfg_.sigma_v2, rng);
    own_proposal_.states = own_pred_.states;
    own_proposal_.states.topRows(cfg_.space.pos_dim) = draws;
    own_proposal_.weights = Eigen::VectorXd::Constant(cfg_.J, 1.0 / cfg_.J);

    std::map<int, const ParticleSet*> others = partners;
    others.erase(lhat);
    try {
      StackedUpdate factors;
      if (!others.empty()) {
        factors = stacked_factors(own_proposal_, others, meas, cfg_.space.pos_dim,
                                  cfg_.sigma_v2, marginal_threshold());
      } else {
        factors.factor_logs.resize(0, cfg_.J);
        factors.total_log = Eigen::VectorXd::Zero(cfg_.J);
      }
      const Eigen::VectorXd num = mc_message_eval(own_proposal_.states, lhat_pr, y,
                                                  cfg_.space.pos_dim, cfg_.sigma_v2);
      const Eigen::VectorXd den = range_message_draw_density(
          own_proposal_.states, lhat_pr, y, cfg_.space.pos_dim, cfg_.sigma_v2);
      Eigen::VectorXd correction = num.array().log().matrix() - den.array().log().matrix();
      if (!cfg_.prior_is_uniform) {
        PredictionEvaluator ev;
        ev.uniform = false;
        ev.previous_belief = &own_belief_;
        ev.model = moving_ ? &cfg_.motion_moving : &cfg_.motion_initial;
        ev.kernel_var = position_kernel_variance(*ev.model);
        correction += ev.log_eval(own_proposal_.states.topRows(cfg_.space.pos_dim),
                                  cfg_.space.pos_dim);
      }
      // the lhat message rides as an extra factor row so the agent-to-object
      // extrinsics (log_without) keep it
      factors.factor_ids.push_back(lhat);
      factors.factor_logs.conservativeResize(factors.factor_logs.rows() + 1, cfg_.J);
      factors.factor_logs.row(factors.factor_logs.rows() - 1) = correction.transpose();
      factors.total_log += correction;

      own_weighted_.states = own_proposal_.states;
      own_weighted_.weights = normalize_log_weights(
          factors.total_log, degenerate_level(static_cast<int>(others.size()) + 1));
      own_factors_ = std::move(factors);
      return true;
    } catch (const DegenerateWeights&) {
      ++out_.degenerate_updates;
      own_proposal_ = own_pred_;
      return false;
    }
  }

  void inject_velocity_prior() {
    if (!cfg_.space.has_velocity) return;
    const Eigen::VectorXd est = mmse_estimate(own_belief_);
    RngStream rng(cfg_.seed, cfg_.id, in_.time, cfg_.P, Rng::VelocityPrior);
    const double sd = std::sqrt(cfg_.velocity_prior_var);
    for (int j = 0; j < cfg_.J; ++j) {
      for (int d = 0; d < cfg_.space.pos_dim; ++d) {
        const double mean = (cfg_.move_target[d] - est[d]) / cfg_.move_horizon;
        own_belief_.states(cfg_.space.pos_dim + d, j) = rng.normal(mean, sd);
      }
    }
  }

  AgentConfig cfg_;
  StepInputs in_;
  StepOutputs out_;
  int p_ = 1;
  bool localized_ = false;
  bool moving_ = false;
  bool own_updated_ = false;

  ParticleSet own_belief_;    // b^(p) resampled, persists across steps
  ParticleSet own_pred_;      // prediction message
  ParticleSet own_proposal_;  // weighting support this iteration
  ParticleSet own_weighted_;  // b^(p) with weights (estimates read this)
  ParticleSet psi_to_;        // psi_{l->m} default (own prediction/belief)
  StackedUpdate own_factors_;
  std::vector<ObjectTrack> tracks_;
  std::map<int, BeliefPayload> received_beliefs_;
};

}  // namespace cstrack::netsim

#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "cstrack/common.hpp"
#include "cstrack/particles.hpp"
#include "cstrack/state.hpp"

namespace cstrack {

/// Result of a stacked-state importance update. The per-factor log
/// likelihoods are kept so extrinsic variants (same product with one factor
/// removed) can be formed without re-evaluating anything.
struct StackedUpdate {
  std::vector<int> factor_ids;  // partner entity id per factor row
  Eigen::MatrixXd factor_logs;  // factors x J, floored log likelihoods
  Eigen::VectorXd total_log;    // column sums

  Eigen::VectorXd log_without(int exclude_id) const {
    Eigen::VectorXd t = total_log;
    for (int f = 0; f < static_cast<int>(factor_ids.size()); ++f)
      if (factor_ids[f] == exclude_id) t -= factor_logs.row(f).transpose();
    return t;
  }
};

namespace detail {

inline Eigen::ArrayXd pairwise_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                         int pos_dim) {
  // Column-paired distances between two particle matrices.
  return (a.topRows(pos_dim) - b.topRows(pos_dim)).colwise().norm().transpose().array();
}

inline Eigen::VectorXd floored_log_gauss(const Eigen::ArrayXd& dist, double y,
                                         double sigma_v2) {
  const double c = 0.5 * std::log(2.0 * M_PI * sigma_v2);
  Eigen::ArrayXd lv = -0.5 * (y - dist).square() / sigma_v2 - c;
  return lv.max(kLogLikelihoodFloor).matrix();
}

}  // namespace detail

inline Eigen::VectorXd mc_message_eval(const Eigen::MatrixXd& object_states,
                                       const ParticleSet& agent_extrinsic, double y,
                                       int pos_dim, double sigma_v2);

/// Evaluates the likelihood factors of a stacked-state proposal: the j-th
/// particles of all inputs are paired index-wise, so no new draws are needed.
/// `partners` maps entity id -> equally weighted PR whose j-th particle is
/// the stacked sub-state; `measurements` maps the same ids to range values.
///
/// Index-paired single-point factors assume the partner representation is
/// reasonably concentrated; against a diffuse partner (position variance
/// above `marginal_variance_threshold`) the factor switches to the
/// Monte-Carlo message marginal, which integrates the partner out instead of
/// pairing against an arbitrary draw. Both forms are valid importance
/// factors; the marginal avoids the floored-weight lottery that a diffuse
/// single-point pairing produces.
inline StackedUpdate stacked_factors(
    const ParticleSet& own, const std::map<int, const ParticleSet*>& partners,
    const std::map<int, double>& measurements, int pos_dim, double sigma_v2,
    double marginal_variance_threshold = std::numeric_limits<double>::infinity()) {
  const int J = own.count();
  StackedUpdate u;
  u.factor_ids.reserve(partners.size());
  u.factor_logs.resize(partners.size(), J);
  int f = 0;
  for (const auto& [id, pr] : partners) {
    if (pr->count() != J)
      throw DimensionMismatch("stacked_factors: particle counts differ");
    const double y = measurements.at(id);
    if (empirical_variance(*pr, pos_dim) > marginal_variance_threshold) {
      u.factor_logs.row(f) =
          mc_message_eval(own.states, *pr, y, pos_dim, sigma_v2).array().log().transpose();
    } else {
      const Eigen::ArrayXd d = detail::pairwise_distances(own.states, pr->states, pos_dim);
      u.factor_logs.row(f) = detail::floored_log_gauss(d, y, sigma_v2).transpose();
    }
    u.factor_ids.push_back(id);
    ++f;
  }
  u.total_log = u.factor_logs.colwise().sum().transpose();
  return u;
}

/// Belief update for an agent: weights the prediction particles by the
/// product of all measurement factors formed by stacking neighbor beliefs and
/// object extrinsics index-wise. Empty measurement set returns the prediction
/// with uniform weights.
inline ParticleSet agent_belief_update(
    const ParticleSet& prediction, const std::map<int, const ParticleSet*>& partners,
    const std::map<int, double>& measurements, int pos_dim, double sigma_v2,
    StackedUpdate* factors_out = nullptr,
    double marginal_variance_threshold = std::numeric_limits<double>::infinity()) {
  ParticleSet out;
  out.states = prediction.states;
  if (partners.empty()) {
    out.weights = Eigen::VectorXd::Constant(prediction.count(), 1.0 / prediction.count());
    if (factors_out) {
      factors_out->factor_ids.clear();
      factors_out->factor_logs.resize(0, prediction.count());
      factors_out->total_log = Eigen::VectorXd::Zero(prediction.count());
    }
    return out;
  }
  StackedUpdate u = stacked_factors(prediction, partners, measurements, pos_dim, sigma_v2,
                                    marginal_variance_threshold);
  out.weights =
      normalize_log_weights(u.total_log, degenerate_level(static_cast<int>(partners.size())));
  if (factors_out) *factors_out = std::move(u);
  return out;
}

/// Object belief: the prediction particles reweighted by the consensus
/// product (log domain), Eq. form w ~ exp(log_products).
inline ParticleSet object_weighting(const ParticleSet& prediction,
                                    const Eigen::VectorXd& log_products) {
  if (log_products.size() != prediction.count())
    throw DimensionMismatch("object_weighting: log_products size mismatch");
  ParticleSet out;
  out.states = prediction.states;
  out.weights = normalize_log_weights(log_products);
  return out;
}

/// Monte Carlo evaluation of a measurement message at each object particle:
/// phi(x_m^(j)) ~= (1/J) sum_j' f(y | x_l^(j'), x_m^(j)). Linear-domain
/// average, floored. O(J^2); this is the hot kernel of the pipeline.
inline Eigen::VectorXd mc_message_eval(const Eigen::MatrixXd& object_states,
                                       const ParticleSet& agent_extrinsic, double y,
                                       int pos_dim, double sigma_v2) {
  const int J = static_cast<int>(object_states.cols());
  const int Ja = agent_extrinsic.count();
  const double c = 1.0 / std::sqrt(2.0 * M_PI * sigma_v2);
  const double inv2s = 0.5 / sigma_v2;
  Eigen::VectorXd out(J);
  const auto apos = agent_extrinsic.states.topRows(pos_dim);
  Eigen::ArrayXd d2(Ja);
  for (int j = 0; j < J; ++j) {
    d2 = (apos.colwise() - object_states.col(j).head(pos_dim))
             .colwise()
             .squaredNorm()
             .transpose()
             .array();
    const double mean = (-(y - d2.sqrt()).square() * inv2s).exp().mean() * c;
    out[j] = mean < kLikelihoodFloor ? kLikelihoodFloor : mean;
  }
  return out;
}

inline double mc_message_eval(const State& object_particle, const ParticleSet& agent_extrinsic,
                              double y, int pos_dim, double sigma_v2) {
  Eigen::MatrixXd x(object_particle.size(), 1);
  x.col(0) = object_particle;
  return mc_message_eval(x, agent_extrinsic, y, pos_dim, sigma_v2)[0];
}

/// Extrinsic information from object to agent via the consensus shortcut:
/// replace exp(|A| zeta^(C)) by exp(|A| zeta^(C) - zeta^(0)), i.e. divide the
/// belief product by the agent's own factor. Resampled to equal weights.
inline ParticleSet extrinsic_object_to_agent(const ParticleSet& prediction,
                                             const Eigen::VectorXd& log_sum_all,
                                             const Eigen::VectorXd& log_own,
                                             RngStream& rng) {
  ParticleSet weighted;
  weighted.states = prediction.states;
  weighted.weights = normalize_log_weights(log_sum_all - log_own);
  return resample(weighted, rng);
}

/// Extrinsic information from agent to object: the stacked update with
/// object m's factor removed, resampled to equal weights.
inline ParticleSet extrinsic_agent_to_object(const ParticleSet& prediction,
                                             const StackedUpdate& factors, int exclude_id,
                                             RngStream& rng) {
  int remaining = 0;
  for (int id : factors.factor_ids)
    if (id != exclude_id) ++remaining;
  if (remaining == 0) {
    ParticleSet out;
    out.states = prediction.states;
    out.weights = Eigen::VectorXd::Constant(prediction.count(), 1.0 / prediction.count());
    return out;
  }
  ParticleSet weighted;
  weighted.states = prediction.states;
  weighted.weights =
      normalize_log_weights(factors.log_without(exclude_id), degenerate_level(remaining));
  return resample(weighted, rng);
}

/// argmin of empirical belief variance; ties broken by lowest agent id.
inline int select_lhat(const std::map<int, double>& candidate_variances) {
  if (candidate_variances.empty())
    throw EmptyObserverSet("select_lhat: no candidates");
  int best = -1;
  double best_var = std::numeric_limits<double>::infinity();
  for (const auto& [id, var] : candidate_variances) {
    if (var < best_var) {
      best = id;
      best_var = var;
    }
  }
  return best;
}

/// Draws particles representing a range message: for each source particle,
/// a uniformly random direction and a N(y, sigma_v2) range. Exact for the
/// range-only likelihood in 2-D (sign flip in 1-D).
inline Eigen::MatrixXd draw_from_range_message(const ParticleSet& source, double y,
                                               int pos_dim, double sigma_v2,
                                               RngStream& rng) {
  const int J = source.count();
  Eigen::MatrixXd out(pos_dim, J);
  const double sd = std::sqrt(sigma_v2);
  for (int j = 0; j < J; ++j) {
    const double r = rng.normal(y, sd);
    Eigen::VectorXd dir(pos_dim);
    if (pos_dim == 1) {
      dir[0] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    } else {
      const double theta = rng.uniform(0.0, 2.0 * M_PI);
      dir[0] = std::cos(theta);
      dir[1] = std::sin(theta);
      for (int d = 2; d < pos_dim; ++d) dir[d] = 0.0;
    }
    out.col(j) = source.states.col(j).head(pos_dim) + r * dir;
  }
  return out;
}

/// Pointwise evaluator for the prediction message in alternative-proposal
/// weights. Uniform priors contribute a constant and are skipped; otherwise a
/// Monte Carlo kernel average over the previous belief's particles is used
/// (position marginal of the transition kernel).
struct PredictionEvaluator {
  bool uniform = true;
  const ParticleSet* previous_belief = nullptr;  // b^(P)(x_{n-1})
  const MotionModel* model = nullptr;
  double kernel_var = 0.0;  // position-marginal variance of W u

  Eigen::VectorXd log_eval(const Eigen::MatrixXd& positions, int pos_dim) const {
    const int J = static_cast<int>(positions.cols());
    if (uniform) return Eigen::VectorXd::Zero(J);
    const int Jp = previous_belief->count();
    Eigen::MatrixXd prop(pos_dim, Jp);
    for (int j = 0; j < Jp; ++j)
      prop.col(j) = (model->G * previous_belief->states.col(j)).head(pos_dim);
    const double c = std::pow(2.0 * M_PI * kernel_var, -0.5 * pos_dim);
    Eigen::VectorXd out(J);
    for (int j = 0; j < J; ++j) {
      const Eigen::ArrayXd d2 = (prop.colwise() - positions.col(j).head(pos_dim))
                                    .colwise()
                                    .squaredNorm()
                                    .transpose()
                                    .array();
      double mean = ((-0.5 / kernel_var) * d2).exp().mean() * c;
      if (mean < kLikelihoodFloor) mean = kLikelihoodFloor;
      out[j] = std::log(mean);
    }
    return out;
  }
};

/// Density of the bearing/range draw scheme evaluated by Monte Carlo over the
/// source particles: the range-message kernel divided by the surface measure
/// of the sphere at that range (2 pi r in 2-D, 2 in 1-D). This is the actual
/// proposal density of draw_from_range_message.
inline Eigen::VectorXd range_message_draw_density(const Eigen::MatrixXd& positions,
                                                  const ParticleSet& source, double y,
                                                  int pos_dim, double sigma_v2) {
  const int J = static_cast<int>(positions.cols());
  const int Js = source.count();
  const double c = 1.0 / std::sqrt(2.0 * M_PI * sigma_v2);
  const double inv2s = 0.5 / sigma_v2;
  Eigen::VectorXd out(J);
  const auto spos = source.states.topRows(pos_dim);
  for (int j = 0; j < J; ++j) {
    const Eigen::ArrayXd r = (spos.colwise() - positions.col(j).head(pos_dim))
                                 .colwise()
                                 .norm()
                                 .transpose()
                                 .array();
    Eigen::ArrayXd surf;
    if (pos_dim == 1) {
      surf = Eigen::ArrayXd::Constant(Js, 2.0);
    } else {
      surf = 2.0 * M_PI * r.max(1e-9);
    }
    const double mean = ((-(y - r).square() * inv2s).exp() * c / surf).mean();
    out[j] = mean < kLikelihoodFloor ? kLikelihoodFloor : mean;
  }
  return out;
}

/// Alternative-proposal weights for an object belief. The proposal draws
/// object positions from the most informative observer's message
/// (draw_from_range_message); the importance weight evaluates the prediction
/// factor, the remaining observers' likelihoods, and the chosen observer's
/// message (Eq.-24-style Monte Carlo), and divides by the actual draw
/// density.
///
/// Note: the source derivation drops the chosen observer's message and
/// divides by the message value instead of the draw density; that estimator
/// has unbounded weight variance (the division cancels the radial profile of
/// the draws), so the exact importance ratio is used here. For ranges large
/// against the noise scale the two agree up to a slowly varying factor.
inline ParticleSet alt_proposal_object(const Eigen::MatrixXd& proposal_states,
                                       const ParticleSet& lhat_extrinsic, double y_lhat,
                                       const Eigen::MatrixXd& other_factor_logs,
                                       const PredictionEvaluator& prediction, int pos_dim,
                                       double sigma_v2,
                                       Eigen::VectorXd* log_correction_out = nullptr) {
  Eigen::VectorXd logw = prediction.log_eval(proposal_states.topRows(pos_dim), pos_dim);
  if (other_factor_logs.size() > 0)
    logw += other_factor_logs.colwise().sum().transpose();
  const Eigen::VectorXd num =
      mc_message_eval(proposal_states, lhat_extrinsic, y_lhat, pos_dim, sigma_v2);
  const Eigen::VectorXd den = range_message_draw_density(proposal_states, lhat_extrinsic,
                                                         y_lhat, pos_dim, sigma_v2);
  const Eigen::VectorXd correction =
      num.array().log().matrix() - den.array().log().matrix();
  logw += correction;
  if (log_correction_out) *log_correction_out = correction;
  ParticleSet out;
  out.states = proposal_states;
  out.weights = normalize_log_weights(logw);
  return out;
}

}  // namespace cstrack

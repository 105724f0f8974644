#pragma once

#include <limits>
#include <string>

#include <Eigen/Dense>

#include "cstrack/common.hpp"
#include "cstrack/rng.hpp"
#include "cstrack/state.hpp"

namespace cstrack {

/// Particle representation of a belief or message: J state columns with
/// normalized weights. Treated as an immutable value after construction.
struct ParticleSet {
  Eigen::MatrixXd states;   // dim x J, one particle per column
  Eigen::VectorXd weights;  // J, sums to 1

  int dim() const { return static_cast<int>(states.rows()); }
  int count() const { return static_cast<int>(states.cols()); }

  static ParticleSet equally_weighted(Eigen::MatrixXd s) {
    ParticleSet ps;
    const int j = static_cast<int>(s.cols());
    ps.states = std::move(s);
    ps.weights = Eigen::VectorXd::Constant(j, 1.0 / j);
    return ps;
  }

  /// J copies of one state, e.g. an anchor's exactly known location.
  static ParticleSet point_mass(const State& x, int j) {
    return equally_weighted(x.rowwise().replicate(j));
  }
};

inline Eigen::VectorXd normalize_weights(const Eigen::VectorXd& w) {
  const double s = w.sum();
  if (!(s > 0.0))
    throw DegenerateWeights("normalize_weights: weight sum is " + std::to_string(s));
  return w / s;
}

/// Log-domain normalization via max subtraction. `dead_level` marks the
/// value a fully floored entry would carry (callers know their factor
/// count); if no entry rises above it, the update carried no information and
/// DegenerateWeights is thrown. NaN inputs are also rejected.
inline Eigen::VectorXd normalize_log_weights(
    const Eigen::VectorXd& logw,
    double dead_level = -std::numeric_limits<double>::infinity()) {
  const double mx = logw.maxCoeff();
  if (!(mx > dead_level) || std::isnan(mx))
    throw DegenerateWeights("normalize_log_weights: all weights underflowed the floor");
  Eigen::VectorXd w = (logw.array() - mx).exp();
  return w / w.sum();
}

/// Threshold below which a product of `factors` floored likelihoods is
/// considered information-free (half a factor of slack).
inline double degenerate_level(int factors) {
  if (factors <= 0) return -std::numeric_limits<double>::infinity();
  return (static_cast<double>(factors) - 0.5) * kLogLikelihoodFloor;
}

/// Weighted particle mean: the particle approximation of the MMSE estimate.
inline State mmse_estimate(const ParticleSet& ps) {
  return ps.states * ps.weights;
}

/// Mean squared deviation of the position components from their mean,
/// computed over equally weighted particles. Anchors report 0 by convention.
inline double empirical_variance(const ParticleSet& ps, int pos_dim) {
  const auto pos = ps.states.topRows(pos_dim);
  const Eigen::VectorXd mu = pos.rowwise().mean();
  return (pos.colwise() - mu).colwise().squaredNorm().mean();
}

/// Per-component variance of the position block (used by the movement rule).
inline Eigen::VectorXd position_component_variance(const ParticleSet& ps, int pos_dim) {
  const auto pos = ps.states.topRows(pos_dim);
  const Eigen::VectorXd mu = pos.rowwise().mean();
  return (pos.colwise() - mu).array().square().rowwise().mean();
}

/// Systematic resampling to J equally weighted particles.
inline ParticleSet resample(const ParticleSet& ps, RngStream& rng) {
  const int j = ps.count();
  const Eigen::VectorXd w = normalize_weights(ps.weights);
  const double u0 = rng.uniform() / j;
  Eigen::MatrixXd out(ps.dim(), j);
  double cum = w[0];
  int i = 0;
  for (int p = 0; p < j; ++p) {
    const double u = u0 + static_cast<double>(p) / j;
    while (u > cum && i + 1 < j) cum += w[++i];
    out.col(p) = ps.states.col(i);
  }
  return ParticleSet::equally_weighted(std::move(out));
}

/// Prediction step: push each particle through the state-transition model,
/// one draw per particle. Weights pass through unchanged.
inline ParticleSet message_filter(const ParticleSet& prior, const MotionModel& model,
                                  RngStream& rng) {
  if (model.is_static) return prior;
  ParticleSet out;
  out.states.resize(prior.dim(), prior.count());
  const double sd = std::sqrt(model.sigma_u2);
  for (int p = 0; p < prior.count(); ++p) {
    const Eigen::VectorXd u = rng.normal_vector(model.noise_dim(), 0.0, sd);
    out.states.col(p) = model.G * prior.states.col(p) + model.W * u;
  }
  out.weights = prior.weights;
  return out;
}

}  // namespace cstrack

#pragma once

#include <string>

#include <Eigen/Dense>

#include "cstrack/common.hpp"
#include "cstrack/rng.hpp"

namespace cstrack {

enum class EntityKind { MobileAgent, Anchor, Object };

/// Entities carry one global integer id: agents first, objects after them.
struct EntityId {
  int id = -1;
  EntityKind kind = EntityKind::MobileAgent;

  bool is_agent() const { return kind != EntityKind::Object; }
  bool operator==(const EntityId&) const = default;
};

/// Dimensional layout of a state vector: the leading pos_dim entries are the
/// location, optionally followed by pos_dim velocity entries.
struct StateSpace {
  int pos_dim = 2;
  bool has_velocity = false;

  int dim() const { return has_velocity ? 2 * pos_dim : pos_dim; }
};

using State = Eigen::VectorXd;

inline Eigen::VectorXd position_of(const State& x, int pos_dim) {
  return x.head(pos_dim);
}

/// Linear motion model x' = G x + W u with u ~ N(0, sigma_u2 I).
/// A "static" model leaves the state untouched and draws no noise.
struct MotionModel {
  Eigen::MatrixXd G;
  Eigen::MatrixXd W;
  double sigma_u2 = 0.0;
  bool is_static = false;

  int state_dim() const { return static_cast<int>(G.rows()); }
  int noise_dim() const { return static_cast<int>(W.cols()); }

  /// Constant-velocity model on (x1, x2, v1, v2) with unit time step.
  static MotionModel constant_velocity(double sigma_u2) {
    MotionModel m;
    m.G.setIdentity(4, 4);
    m.G(0, 2) = 1.0;
    m.G(1, 3) = 1.0;
    m.W.setZero(4, 2);
    m.W(0, 0) = 0.5;
    m.W(1, 1) = 0.5;
    m.W(2, 0) = 1.0;
    m.W(3, 1) = 1.0;
    m.sigma_u2 = sigma_u2;
    return m;
  }

  static MotionModel static_model(int dim) {
    MotionModel m;
    m.G.setIdentity(dim, dim);
    m.W.setZero(dim, dim);
    m.sigma_u2 = 0.0;
    m.is_static = true;
    return m;
  }

  /// Random walk on a bare position state: x' = x + u.
  static MotionModel random_walk(int dim, double sigma_u2) {
    MotionModel m;
    m.G.setIdentity(dim, dim);
    m.W.setIdentity(dim, dim);
    m.sigma_u2 = sigma_u2;
    return m;
  }
};

inline State propagate_state(const State& x, const MotionModel& model,
                             const Eigen::VectorXd& noise) {
  if (model.is_static) return x;
  if (x.size() != model.G.cols())
    throw DimensionMismatch("propagate_state: state dim " + std::to_string(x.size()) +
                            " vs model dim " + std::to_string(model.G.cols()));
  if (noise.size() != model.W.cols())
    throw DimensionMismatch("propagate_state: noise dim mismatch");
  return model.G * x + model.W * noise;
}

inline State sample_transition(const State& x, const MotionModel& model, RngStream& rng) {
  if (model.is_static) return x;
  const double sd = std::sqrt(model.sigma_u2);
  return propagate_state(x, model, rng.normal_vector(model.noise_dim(), 0.0, sd));
}

/// Pairwise range measurement model y = ||pos_l - pos_k|| + v, v ~ N(0, sigma_v2).
struct MeasurementModel {
  double sigma_v2 = 1.0;
};

struct Measurement {
  int observer = -1;  // agent id
  int target = -1;    // entity id
  double value = 0.0;
  int time = 0;
};

inline double measure_distance(const State& x_l, const State& x_k, int pos_dim,
                               double noise) {
  if (x_l.size() < pos_dim || x_k.size() < pos_dim)
    throw DimensionMismatch("measure_distance: states shorter than pos_dim");
  return (x_l.head(pos_dim) - x_k.head(pos_dim)).norm() + noise;
}

/// Gaussian density of a range measurement given two positions, clamped at
/// the likelihood floor.
inline double range_likelihood(double y, double distance, double sigma_v2) {
  const double r = y - distance;
  const double val = std::exp(-0.5 * r * r / sigma_v2) / std::sqrt(2.0 * M_PI * sigma_v2);
  return val < kLikelihoodFloor ? kLikelihoodFloor : val;
}

inline double likelihood(double y, const State& x_l, const State& x_k, int pos_dim,
                         double sigma_v2) {
  return range_likelihood(y, (x_l.head(pos_dim) - x_k.head(pos_dim)).norm(), sigma_v2);
}

/// Same density in the log domain (floored), avoiding exp for weight math.
inline double log_range_likelihood(double y, double distance, double sigma_v2) {
  const double r = y - distance;
  const double lv = -0.5 * r * r / sigma_v2 - 0.5 * std::log(2.0 * M_PI * sigma_v2);
  return lv < kLogLikelihoodFloor ? kLogLikelihoodFloor : lv;
}

}  // namespace cstrack

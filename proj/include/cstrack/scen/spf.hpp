#pragma once

#include <map>
#include <vector>

#include "cstrack/particles.hpp"
#include "cstrack/rng.hpp"
#include "cstrack/state.hpp"

namespace cstrack::scen {

/// Bootstrap (sampling importance resampling) particle filter on the total
/// stacked state of all tracked entities. The transition is applied as one
/// dense matrix on the stacked vector, which is what ties its runtime to the
/// square of the network size.
class StackedParticleFilter {
 public:
  struct Config {
    std::vector<int> entities;              // tracked entity ids, 4-dim CV blocks each
    std::map<int, Eigen::VectorXd> anchors; // known positions by id
    int J = 1000;
    double sigma_u2 = 1e-2;
    double sigma_v2 = 1.0;
    int pos_dim = 2;
    std::uint64_t seed = 1;
  };

  explicit StackedParticleFilter(Config cfg, const std::map<int, ParticleSet>& priors)
      : cfg_(std::move(cfg)) {
    const int B = static_cast<int>(cfg_.entities.size());
    const int D = 4 * B;
    for (int b = 0; b < B; ++b) block_[cfg_.entities[b]] = b;

    const MotionModel cv = MotionModel::constant_velocity(cfg_.sigma_u2);
    F_ = Eigen::MatrixXd::Zero(D, D);
    W_ = Eigen::MatrixXd::Zero(D, 2 * B);
    for (int b = 0; b < B; ++b) {
      F_.block(4 * b, 4 * b, 4, 4) = cv.G;
      W_.block(4 * b, 2 * b, 4, 2) = cv.W;
    }
    particles_.resize(D, cfg_.J);
    for (int b = 0; b < B; ++b)
      particles_.middleRows(4 * b, 4) = priors.at(cfg_.entities[b]).states;
    weights_ = Eigen::VectorXd::Constant(cfg_.J, 1.0 / cfg_.J);
  }

  /// One prediction-update-resample cycle over all measurements (observer,
  /// target, value); observers or targets may be anchors.
  void step(const std::vector<Measurement>& measurements, int time) {
    const int B = static_cast<int>(block_.size());
    RngStream rng(cfg_.seed, 0, time, 0, Rng::Predict, 7777);
    Eigen::MatrixXd noise(2 * B, cfg_.J);
    const double sd = std::sqrt(cfg_.sigma_u2);
    for (int c = 0; c < cfg_.J; ++c)
      for (int r = 0; r < 2 * B; ++r) noise(r, c) = rng.normal(0, sd);
    particles_ = F_ * particles_ + W_ * noise;

    Eigen::VectorXd logw = Eigen::VectorXd::Zero(cfg_.J);
    for (const auto& m : measurements) {
      const Eigen::ArrayXd d = pair_distance(m.observer, m.target);
      const double c = 0.5 * std::log(2.0 * M_PI * cfg_.sigma_v2);
      logw += (-(0.5 / cfg_.sigma_v2) * (m.value - d).square() - c)
                  .max(kLogLikelihoodFloor)
                  .matrix();
    }
    ParticleSet ps;
    ps.states = particles_;
    try {
      ps.weights = normalize_log_weights(logw);
    } catch (const DegenerateWeights&) {
      ps.weights = Eigen::VectorXd::Constant(cfg_.J, 1.0 / cfg_.J);
    }
    weighted_ = ps;
    RngStream rs(cfg_.seed, 0, time, 0, Rng::Resample, 7777);
    ParticleSet res = resample(ps, rs);
    particles_ = res.states;
    weights_ = res.weights;
  }

  Eigen::VectorXd estimate(int entity) const {
    const int b = block_.at(entity);
    return weighted_.states.middleRows(4 * b, 4) * weighted_.weights;
  }

  /// Position-marginal particle set of one entity (for cross-checks).
  ParticleSet marginal(int entity) const {
    const int b = block_.at(entity);
    ParticleSet out;
    out.states = weighted_.states.middleRows(4 * b, 4);
    out.weights = weighted_.weights;
    return out;
  }

 private:
  Eigen::ArrayXd pair_distance(int a, int b) const {
    const auto pos = [&](int id) -> Eigen::MatrixXd {
      auto it = block_.find(id);
      if (it != block_.end())
        return particles_.middleRows(4 * it->second, cfg_.pos_dim);
      return cfg_.anchors.at(id).head(cfg_.pos_dim).rowwise().replicate(cfg_.J);
    };
    return (pos(a) - pos(b)).colwise().norm().transpose().array();
  }

  Config cfg_;
  std::map<int, int> block_;
  Eigen::MatrixXd F_, W_;
  Eigen::MatrixXd particles_;
  Eigen::VectorXd weights_;
  ParticleSet weighted_;
};

}  // namespace cstrack::scen

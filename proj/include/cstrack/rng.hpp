#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace cstrack {

/// What a substream is drawn for. Part of the stream key, so two different
/// uses at the same (entity, time, iteration) never share a sequence.
enum class Rng : std::uint64_t {
  PriorDraw = 1,
  Predict,
  Resample,
  ResampleExtrinsicFromObject,
  ResampleExtrinsicToObject,
  AltProposalDraw,
  VelocityPrior,
  Measurement,
  TruthNoise,
  Placement,
  Topology,
  Generic,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Deterministic keyed random stream. Every agent derives the same substream
/// from the same key, which stands in for the synchronized pseudo-random
/// number generators all agents are assumed to hold: no draw ever has to be
/// communicated.
///
/// Key = (master seed, entity id, time step, message-passing iteration,
/// purpose, aux). Equal keys produce bitwise-identical sequences.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t entity, std::uint64_t time,
            std::uint64_t iteration, Rng purpose, std::uint64_t aux = 0)
      : gen_(derive_seed(master_seed, entity, time, iteration, purpose, aux)) {}

  explicit RngStream(std::uint64_t raw_seed) : gen_(raw_seed) {}

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  Eigen::VectorXd normal_vector(int dim, double mean = 0.0, double stddev = 1.0) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = normal(mean, stddev);
    return v;
  }

  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Modulo bias is irrelevant at simulation scales (n << 2^64).
    return gen_() % n;
  }

  std::mt19937_64& engine() { return gen_; }

  static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t entity,
                                   std::uint64_t time, std::uint64_t iteration,
                                   Rng purpose, std::uint64_t aux) {
    using detail::splitmix64;
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ (entity + 0x51ed270b0f4d1d9dULL));
    h = splitmix64(h ^ (time + 0x9d8b0f3a2c7e4b11ULL));
    h = splitmix64(h ^ (iteration + 0x8f1bbcdc5a6d2e4fULL));
    h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    h = splitmix64(h ^ (aux + 0x3c6ef372fe94f82bULL));
    return h;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace cstrack

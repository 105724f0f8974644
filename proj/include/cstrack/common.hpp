#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace cstrack {

// Likelihood evaluations are clamped from below so that log-domain
// bookkeeping (consensus states, importance weights) stays finite.
inline constexpr double kLikelihoodFloor = 1e-300;
inline const double kLogLikelihoodFloor = std::log(kLikelihoodFloor);

struct DegenerateWeights : std::runtime_error {
  explicit DegenerateWeights(const std::string& what) : std::runtime_error(what) {}
};

struct CommGraphDisconnected : std::runtime_error {
  explicit CommGraphDisconnected(const std::string& what) : std::runtime_error(what) {}
};

struct LdtSubgraphDisconnected : std::runtime_error {
  explicit LdtSubgraphDisconnected(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyObserverSet : std::runtime_error {
  explicit EmptyObserverSet(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : std::invalid_argument {
  explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace cstrack

#pragma once

#include <limits>
#include <map>

#include <Eigen/Dense>

namespace cstrack::netsim {

// The only data that crosses agent boundaries. Sender id and graph degree are
// O(1) envelope metadata; the accounting charges the statistical payloads
// (particles, consensus coefficients) per the closed-form counts.

struct BeliefPayload {
  int from = -1;
  int degree = 0;
  bool is_anchor = false;
  Eigen::MatrixXd positions;  // L x J
};

struct AvgPayload {
  int from = -1;
  int degree = 0;
  std::map<int, Eigen::VectorXd> zeta;        // object id -> J consensus states
  std::map<int, int> object_degree;           // LDT: per-object subgraph degree
};

struct MaxPayload {
  int from = -1;
  std::map<int, Eigen::VectorXd> weights;     // object id -> J normalized weights
};

struct MinPayload {
  struct Candidate {
    double sigma2 = std::numeric_limits<double>::infinity();
    int agent = std::numeric_limits<int>::max();
    Eigen::MatrixXd positions;  // L x J proposal draws (empty if no candidate)

    bool better_than(const Candidate& o) const {
      if (sigma2 != o.sigma2) return sigma2 < o.sigma2;
      return agent < o.agent;
    }
  };
  int from = -1;
  std::map<int, Candidate> candidates;        // object id -> best known
};

struct HandoverPayload {
  int from = -1;
  std::map<int, Eigen::MatrixXd> beliefs;     // object id -> full-state particles
};

}  // namespace cstrack::netsim

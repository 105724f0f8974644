#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cstrack/state.hpp"
#include "cstrack/topology.hpp"

using namespace cstrack;

namespace {
Eigen::VectorXd vec4(double a, double b, double c, double d) {
  Eigen::VectorXd v(4);
  v << a, b, c, d;
  return v;
}
Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("propagate_state applies the constant-velocity matrices") {
  const MotionModel cv = MotionModel::constant_velocity(5e-4);

  SECTION("G moves position by velocity") {
    const State out = propagate_state(vec4(0, 0, 1, 0), cv, Eigen::Vector2d(0, 0));
    REQUIRE(out.isApprox(vec4(1, 0, 1, 0)));
  }
  SECTION("W injects noise into position and velocity") {
    const State out = propagate_state(vec4(0, 0, 0, 0), cv, Eigen::Vector2d(1, 0));
    REQUIRE(out.isApprox(vec4(0.5, 0, 1, 0)));
  }
  SECTION("static model returns the state unchanged") {
    const MotionModel st = MotionModel::static_model(4);
    const State s = vec4(3, -1, 2, 7);
    REQUIRE(propagate_state(s, st, Eigen::VectorXd::Zero(4)) == s);
  }
  SECTION("dimension mismatch throws") {
    REQUIRE_THROWS_AS(propagate_state(vec2(1, 2), cv, Eigen::Vector2d(0, 0)),
                      DimensionMismatch);
  }
  SECTION("linearity") {
    RngStream rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const State s1 = rng.normal_vector(4);
      const State s2 = rng.normal_vector(4);
      const double a = rng.normal(), b = rng.normal();
      const State lhs = propagate_state(a * s1 + b * s2, cv, Eigen::Vector2d(0, 0));
      const State rhs = a * propagate_state(s1, cv, Eigen::Vector2d(0, 0)) +
                        b * propagate_state(s2, cv, Eigen::Vector2d(0, 0));
      REQUIRE(lhs.isApprox(rhs, 1e-12));
    }
  }
}

TEST_CASE("sample_transition matches the analytic moments") {
  SECTION("zero driving noise is deterministic") {
    const MotionModel cv = MotionModel::constant_velocity(0.0);
    RngStream rng(1);
    const State s = vec4(2, 3, 0.5, -0.5);
    REQUIRE(sample_transition(s, cv, rng)
                .isApprox(propagate_state(s, cv, Eigen::Vector2d(0, 0))));
  }

  SECTION("empirical covariance of W u matches W W^T sigma_u2 within 5%") {
    const double sigma_u2 = 5e-4;
    const MotionModel cv = MotionModel::constant_velocity(sigma_u2);
    const State s = vec4(0, 0, 0, 0);
    const int n = 100000;
    RngStream rng(42);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
    std::vector<State> draws(n);
    for (int i = 0; i < n; ++i) {
      draws[i] = sample_transition(s, cv, rng);
      mean += draws[i];
    }
    mean /= n;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd d = draws[i] - mean;
      cov += d * d.transpose();
    }
    cov /= n;
    const Eigen::MatrixXd expected = sigma_u2 * cv.W * cv.W.transpose();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        if (expected(r, c) != 0.0)
          REQUIRE(cov(r, c) == Catch::Approx(expected(r, c)).epsilon(0.05));
  }

  SECTION("empirical mean equals G state within Monte Carlo tolerance") {
    const double sigma_u2 = 5e-4;
    const MotionModel cv = MotionModel::constant_velocity(sigma_u2);
    const State s = vec4(1, -2, 0.3, 0.1);
    const int n = 100000;
    RngStream rng(43);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
    for (int i = 0; i < n; ++i) mean += sample_transition(s, cv, rng);
    mean /= n;
    const Eigen::VectorXd expected = cv.G * s;
    // componentwise 4 sigma / sqrt(n) with component sd <= sqrt(sigma_u2)
    const double tol = 4.0 * std::sqrt(sigma_u2) / std::sqrt(double(n));
    for (int r = 0; r < 4; ++r) REQUIRE(std::abs(mean[r] - expected[r]) < tol);
  }
}

TEST_CASE("measure_distance") {
  REQUIRE(measure_distance(vec2(1, 1), vec2(1, 1), 2, 0.0) == 0.0);
  REQUIRE(measure_distance(vec2(0, 0), vec2(3, 4), 2, 0.0) == Catch::Approx(5.0));
  REQUIRE(measure_distance(vec2(0, 0), vec2(3, 4), 2, 0.5) == Catch::Approx(5.5));
  // velocity components are ignored
  REQUIRE(measure_distance(vec4(0, 0, 9, 9), vec4(3, 4, -9, -9), 2, 0.0) ==
          Catch::Approx(5.0));
}

TEST_CASE("likelihood") {
  SECTION("value at the mode") {
    REQUIRE(likelihood(5.0, vec2(0, 0), vec2(3, 4), 2, 2.0) ==
            Catch::Approx(1.0 / std::sqrt(4.0 * M_PI)).epsilon(1e-12));
  }
  SECTION("far tail underflows to the floor") {
    REQUIRE(likelihood(1e9, vec2(0, 0), vec2(3, 4), 2, 2.0) == kLikelihoodFloor);
    REQUIRE(log_range_likelihood(1e9, 5.0, 2.0) == kLogLikelihoodFloor);
  }
  SECTION("symmetric offsets give equal values") {
    for (double d : {0.3, 1.0, 2.5}) {
      REQUIRE(range_likelihood(5.0 + d, 5.0, 2.0) ==
              Catch::Approx(range_likelihood(5.0 - d, 5.0, 2.0)).epsilon(1e-14));
    }
  }
  SECTION("integrates to 1 over y") {
    const double sigma_v2 = 2.0;
    const double d = 7.0;
    const double lo = d - 10.0 * std::sqrt(sigma_v2), hi = d + 10.0 * std::sqrt(sigma_v2);
    const int n = 200001;
    const double h = (hi - lo) / (n - 1);
    double integral = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      integral += w * range_likelihood(lo + i * h, d, sigma_v2);
    }
    integral *= h;
    REQUIRE(std::abs(integral - 1.0) < 1e-6);
  }
}

TEST_CASE("build_topology") {
  auto agents = [](std::initializer_list<std::pair<double, double>> ps) {
    std::vector<Eigen::VectorXd> v;
    for (auto [x, y] : ps) v.push_back(vec2(x, y));
    return v;
  };

  SECTION("two agents 40 apart with comm range 50 see each other") {
    auto t = build_topology(agents({{0, 0}, {40, 0}}), {}, 50.0, {100.0, 100.0});
    REQUIRE(t.comm[0] == std::vector<int>{1});
    REQUIRE(t.comm[1] == std::vector<int>{0});
    REQUIRE(t.connected);
    REQUIRE(t.diameter == 1);
  }
  SECTION("single agent has empty sets and no error") {
    auto t = build_topology(agents({{0, 0}}), {vec2(5, 5)}, 50.0, {100.0});
    REQUIRE(t.comm[0].empty());
    REQUIRE(t.meas_objects[0] == std::vector<int>{1});
    REQUIRE(t.connected);
  }
  SECTION("object just out of measurement range is excluded") {
    auto t = build_topology(agents({{0, 0}}), {vec2(21, 0)}, 50.0, {20.0});
    REQUIRE(t.meas_objects[0].empty());
    auto t2 = build_topology(agents({{0, 0}}), {vec2(20, 0)}, 50.0, {20.0});
    REQUIRE(t2.meas_objects[0] == std::vector<int>{1});
  }
  SECTION("disconnected communication graph throws") {
    REQUIRE_THROWS_AS(build_topology(agents({{0, 0}, {60, 0}}), {}, 50.0, {100.0, 100.0}),
                      CommGraphDisconnected);
  }
  SECTION("symmetry and M^A subset of C on random layouts") {
    RngStream rng(11);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<Eigen::VectorXd> pos;
      for (int i = 0; i < 12; ++i) pos.push_back(vec2(rng.uniform(0, 30), rng.uniform(0, 30)));
      std::vector<double> ranges(12);
      for (auto& r : ranges) r = rng.uniform(5, 40);
      auto t = build_topology(pos, {}, 45.0, ranges, false);
      for (int l = 0; l < 12; ++l) {
        for (int k : t.comm[l]) REQUIRE(t.in_comm(k, l));
        for (int k : t.meas_agents[l]) REQUIRE(t.in_comm(l, k));
      }
    }
  }
  SECTION("observer sets mirror measurement sets") {
    auto t = build_topology(agents({{0, 0}, {10, 0}}), {vec2(5, 0), vec2(100, 100)}, 50.0,
                            {20.0, 6.0});
    REQUIRE(t.observers_of(2) == std::vector<int>{0, 1});
    REQUIRE(t.observers_of(3).empty());
    REQUIRE(t.meas_objects[0] == std::vector<int>{2});
    REQUIRE(t.meas_objects[1] == std::vector<int>{2});
  }
}

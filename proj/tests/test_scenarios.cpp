#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "cstrack/scen/runner.hpp"
#include "cstrack/scen/scalability.hpp"
#include "cstrack/scen/scenario.hpp"

using namespace cstrack;
using namespace cstrack::scen;

TEST_CASE("golden scenario parameters") {
  SECTION("dynamic") {
    auto c1 = dynamic_scenario(1, 20.0);
    REQUIRE(c1.sigma_v2 == 2.0);
    REQUIRE(c1.sigma_u2_agent == 5e-5);
    REQUIRE(c1.sigma_u2_object == 5e-4);
    REQUIRE(c1.anchors.size() == 4);
    REQUIRE(c1.mobile_agents.size() == 8);
    REQUIRE(c1.objects.size() == 2);
    REQUIRE(c1.meas_range_default > 1e17);
    REQUIRE(c1.corner_meas_range == 20.0);
    REQUIRE(c1.J == 1000);
    REQUIRE(c1.P == 1);
    REQUIRE(c1.C == 6);

    auto c2 = dynamic_scenario(2);
    REQUIRE(c2.meas_range_default == 20.0);
    REQUIRE(c2.corner_meas_range == 20.0);
  }
  SECTION("static") {
    auto c = static_scenario();
    REQUIRE(c.anchors.size() == 13);
    REQUIRE(c.num_uniform_agents == 50);
    REQUIRE(c.num_uniform_objects == 50);
    REQUIRE(c.meas_range_default == 22.5);
    REQUIRE(c.comm_range == 50.0);
    REQUIRE(c.steps == 1);
    REQUIRE(c.prior_lo == -200.0);
    REQUIRE(c.prior_hi == 200.0);
    REQUIRE(c.C == 15);
  }
  SECTION("scalability") {
    auto c = scalability_scenario();
    REQUIRE(c.sigma_u2_object == 1e-2);
    REQUIRE(c.sigma_v2 == 1.0);
    REQUIRE(c.sizes.size() == 4);
    REQUIRE(c.sizes[0] == std::pair<int, int>(8, 2));
  }
  SECTION("json round trip") {
    auto c = dynamic_scenario(1, 17.5);
    auto j = to_json(c);
    auto back = scenario_from_json(j);
    REQUIRE(back.name == c.name);
    REQUIRE(back.corner_meas_range == 17.5);
    REQUIRE(back.anchors.size() == c.anchors.size());
    REQUIRE(back.objects[1][2] == c.objects[1][2]);
    REQUIRE(back.seed == c.seed);
  }
}

TEST_CASE("dynamic truth generation") {
  auto c = dynamic_scenario(1, 20.0);
  c.J = 60;
  c.steps = 2;
  c.runs = 1;

  SECTION("object 1 position at n=1 is one transition from the printed start") {
    RunTrace pm;
    pm.method = "PM";
    WorldTrace world;
    run_dynamic_once(c, 0, netsim::Method::PM, pm, &world, nullptr);
    const auto& obj1 = world.steps[0].object_truth[0];
    // G (15,0,.8,.6) = (15.8, .6, .8, .6); driving noise sd 0.022 per step
    REQUIRE(std::abs(obj1[0] - 15.8) < 0.1);
    REQUIRE(std::abs(obj1[1] - 0.6) < 0.1);
    REQUIRE(std::abs(obj1[2] - 0.8) < 0.1);
  }

  SECTION("generation is deterministic and replay reuses the environment") {
    RunTrace a, b;
    WorldTrace wa, wb;
    run_dynamic_once(c, 0, netsim::Method::PM, a, &wa, nullptr);
    run_dynamic_once(c, 0, netsim::Method::PM, b, &wb, nullptr);
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t i = 0; i < a.rows.size(); ++i) {
      REQUIRE(a.rows[i].estimate == b.rows[i].estimate);
      REQUIRE(a.rows[i].truth == b.rows[i].truth);
    }
    RunTrace rm;
    run_dynamic_once(c, 0, netsim::Method::RM, rm, nullptr, &wa);
    REQUIRE(rm.rows.size() == a.rows.size());
    for (size_t i = 0; i < rm.rows.size(); ++i)
      REQUIRE(rm.rows[i].truth == a.rows[i].truth);  // identical environment
    // ledger totals identical for PM and RM
    for (size_t i = 0; i < rm.ledgers.size(); ++i)
      REQUIRE(rm.ledgers[i].ledger.total() == a.ledgers[i].ledger.total());
  }

  SECTION("corner ranges apply only in scenario 1") {
    RunTrace pm;
    WorldTrace world;
    run_dynamic_once(c, 0, netsim::Method::PM, pm, &world, nullptr);
    const auto& topo = world.steps[0].topo;
    const int mid = 4 + 4;  // first mid agent id (anchors 0..3, corners 4..7)
    // a non-corner agent (range unlimited) measures every agent it can talk
    // to (measured partners are a subset of the communication set) and both
    // objects anywhere in the field
    REQUIRE(topo.meas_agents[mid] == topo.comm[mid]);
    REQUIRE(topo.meas_objects[mid].size() == 2);
    // corner agents keep the limited range: corner 1 at (5,5) reaches only
    // the nearest anchor among agents, plus object 1 starting nearby
    const int corner = 4;
    REQUIRE(topo.meas_agents[corner] == std::vector<int>{0});
    REQUIRE(topo.meas_objects[corner] == std::vector<int>{12});
  }
}

TEST_CASE("static roster") {
  auto c = static_scenario();
  c.J = 40;
  auto roster = build_roster(c, 123);
  REQUIRE(roster.num_anchors == 13);
  REQUIRE(roster.agent_truth.size() == 63);
  REQUIRE(roster.object_truth.size() == 50);
  for (size_t i = 13; i < roster.agent_truth.size(); ++i) {
    REQUIRE(roster.agent_truth[i].x() >= 0.0);
    REQUIRE(roster.agent_truth[i].x() <= 100.0);
  }
  auto roster2 = build_roster(c, 123);
  for (size_t i = 0; i < roster.agent_truth.size(); ++i)
    REQUIRE(roster.agent_truth[i] == roster2.agent_truth[i]);
  auto roster3 = build_roster(c, 124);
  bool same = true;
  for (size_t i = 13; i < roster.agent_truth.size(); ++i)
    same = same && roster.agent_truth[i] == roster3.agent_truth[i];
  REQUIRE_FALSE(same);
}

TEST_CASE("scalability topology") {
  RngStream rng(5);
  for (auto [nm, no] : {std::pair{8, 2}, std::pair{16, 4}, std::pair{32, 8}}) {
    const int A = 4 + nm;
    auto t = gen_scalability_topology(4, nm, no, rng);

    SECTION("objects are measured by exactly two MAs plus 1-2 anchors " +
            std::to_string(nm)) {
      for (int o = 0; o < no; ++o) {
        int ma_observers = 0, anchor_observers = 0;
        for (int l : t.observers_of(A + o))
          (l < 4 ? anchor_observers : ma_observers)++;
        REQUIRE(ma_observers == 2);
        REQUIRE(anchor_observers >= 1);
        REQUIRE(anchor_observers <= 2);
      }
    }

    SECTION("cycle edges form a spanning Hamiltonian cycle " + std::to_string(nm)) {
      // cycle edges: MA-MA measurements and MA-row object measurements
      std::map<int, std::set<int>> adj;
      for (int l = 4; l < A; ++l) {
        for (int k : t.meas_agents[l])
          if (k >= 4) adj[l].insert(k);
        for (int m : t.meas_objects[l]) {
          adj[l].insert(m);
          adj[m].insert(l);
        }
      }
      REQUIRE(static_cast<int>(adj.size()) == nm + no);
      for (const auto& [node, nbrs] : adj) REQUIRE(nbrs.size() == 2);
      // connected => single cycle through all nodes
      std::set<int> seen;
      std::vector<int> stack{adj.begin()->first};
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        if (!seen.insert(u).second) continue;
        for (int v : adj[u]) stack.push_back(v);
      }
      REQUIRE(seen.size() == adj.size());
    }

    SECTION("MA-MA measurement symmetry " + std::to_string(nm)) {
      for (int l = 4; l < A; ++l)
        for (int k : t.meas_agents[l])
          if (k >= 4)
            REQUIRE(std::binary_search(t.meas_agents[k].begin(), t.meas_agents[k].end(),
                                       l));
    }
  }

  SECTION("expected neighbor count independent of size") {
    RngStream rng2(9);
    std::vector<double> avg;
    for (auto [nm, no] : {std::pair{8, 2}, std::pair{64, 16}}) {
      double deg = 0;
      const int reps = 20;
      for (int r = 0; r < reps; ++r) {
        auto t = gen_scalability_topology(4, nm, no, rng2);
        for (int l = 4; l < 4 + nm; ++l)
          deg += t.meas_agents[l].size() + t.meas_objects[l].size();
      }
      avg.push_back(deg / (reps * nm));
    }
    REQUIRE(std::abs(avg[0] - avg[1]) < 0.5);
  }
}

TEST_CASE("rmse") {
  auto row = [](int run, int t, EntityKind k, double err) {
    TraceRow r;
    r.run = run;
    r.time = t;
    r.iteration = 1;
    r.kind = k;
    r.position_error = err;
    return r;
  };
  SECTION("perfect estimates give zero") {
    std::vector<TraceRow> rows{row(0, 1, EntityKind::Object, 0.0),
                               row(0, 2, EntityKind::Object, 0.0)};
    REQUIRE(rmse_time_averaged(rows, EntityClass::Objects) == 0.0);
  }
  SECTION("single entity single run: norm arithmetic") {
    std::vector<TraceRow> rows{row(0, 1, EntityKind::MobileAgent, 5.0)};
    REQUIRE(rmse_time_averaged(rows, EntityClass::MobileAgents) == Catch::Approx(5.0));
    REQUIRE(rmse_per_time(rows, EntityClass::MobileAgents).at(1) == Catch::Approx(5.0));
  }
  SECTION("two runs with squared errors 9 and 16: mean first, root last") {
    std::vector<TraceRow> rows{row(0, 1, EntityKind::Object, 3.0),
                               row(1, 1, EntityKind::Object, 4.0)};
    REQUIRE(rmse_time_averaged(rows, EntityClass::Objects) ==
            Catch::Approx(std::sqrt(12.5)));
  }
  SECTION("permutation invariance") {
    std::vector<TraceRow> rows{row(0, 1, EntityKind::Object, 1.0),
                               row(1, 1, EntityKind::Object, 2.0),
                               row(2, 1, EntityKind::Object, 3.0)};
    auto a = rmse_time_averaged(rows, EntityClass::Objects);
    std::swap(rows[0], rows[2]);
    REQUIRE(rmse_time_averaged(rows, EntityClass::Objects) == a);
  }
  SECTION("class filter separates agents and objects") {
    std::vector<TraceRow> rows{row(0, 1, EntityKind::Object, 10.0),
                               row(0, 1, EntityKind::MobileAgent, 2.0)};
    REQUIRE(rmse_time_averaged(rows, EntityClass::Objects) == Catch::Approx(10.0));
    REQUIRE(rmse_time_averaged(rows, EntityClass::MobileAgents) == Catch::Approx(2.0));
  }
}

TEST_CASE("reference method equals proposed method when all agents are anchors") {
  ScenarioConfig c;
  c.type = ScenarioType::Custom;
  c.name = "anchors-only";
  c.steps = 2;
  c.J = 400;
  c.P = 1;
  c.C = 4;
  c.sigma_v2 = 1.0;
  c.comm_range = 100.0;
  c.meas_range_default = 100.0;
  c.anchors = {{0, 0}, {40, 0}, {0, 40}};
  c.custom_objects = {{15, 12}};
  c.prior_lo = -60;
  c.prior_hi = 60;
  c.alt_proposal_steps = {1};
  c.runs = 1;

  RunTrace pm, rm;
  run_roster_once(c, 0, netsim::Method::PM, pm, false);
  run_roster_once(c, 0, netsim::Method::RM, rm, false);
  REQUIRE(pm.rows.size() == rm.rows.size());
  for (size_t i = 0; i < pm.rows.size(); ++i) {
    REQUIRE(pm.rows[i].kind == EntityKind::Object);
    REQUIRE((pm.rows[i].estimate - rm.rows[i].estimate).norm() < 1e-9);
  }
  // and the object is actually localized from three anchors
  REQUIRE(rmse_time_averaged(pm.rows, EntityClass::Objects) < 2.0);
}

TEST_CASE("stacked particle filter") {
  SECTION("smoke: small ladder size runs and stays sane") {
    auto c = scalability_scenario();
    c.J = 200;
    c.steps = 4;
    c.runs = 1;
    auto point = run_scalability_size(c, 8, 2);
    REQUIRE(point.pm_rmse < 5.0);
    REQUIRE(point.spf_rmse < 5.0);
    REQUIRE(point.pm_seconds_per_step > 0.0);
    REQUIRE(point.spf_seconds_per_step > 0.0);
  }

  SECTION("agrees with the centralized PM on a single-object instance") {
    // two anchors and one object, informative prior: both methods
    // approximate the same posterior
    const std::uint64_t seed = 31;
    const int J = 4000;
    std::vector<Eigen::VectorXd> anchor_states = {Eigen::Vector4d(0, 0, 0, 0),
                                                  Eigen::Vector4d(30, 0, 0, 0)};
    Eigen::VectorXd truth = Eigen::Vector4d(12, 18, 0, 0);

    netsim::PriorSpec spec;
    spec.kind = netsim::PriorSpec::Kind::Gaussian;
    spec.mean = Eigen::Vector4d(13, 17, 0, 0);
    spec.var_diag = Eigen::VectorXd::Constant(4, 4.0);
    spec.var_diag[2] = spec.var_diag[3] = 1e-4;
    std::map<int, ParticleSet> priors_pm, priors_spf;
    {
      RngStream d1(seed, 2, 0, 0, Rng::PriorDraw);
      priors_pm[2] = spec.draw(StateSpace{2, true}, J, d1);
      RngStream d2(seed + 1, 2, 0, 0, Rng::PriorDraw);
      priors_spf[2] = spec.draw(StateSpace{2, true}, J, d2);
    }

    CentralizedPm::Config pmc;
    pmc.num_anchors = 2;
    pmc.num_mas = 0;
    pmc.num_objects = 1;
    pmc.J = J;
    pmc.P = 1;
    pmc.sigma_v2 = 1.0;
    pmc.sigma_u2 = 1e-4;
    pmc.seed = seed;
    CentralizedPm pm(pmc, anchor_states, priors_pm);

    StackedParticleFilter::Config sc;
    sc.entities = {2};
    sc.anchors[0] = anchor_states[0];
    sc.anchors[1] = anchor_states[1];
    sc.J = J;
    sc.sigma_u2 = 1e-4;
    sc.sigma_v2 = 1.0;
    sc.seed = seed + 1;
    StackedParticleFilter spf(sc, priors_spf);

    const MotionModel cv = MotionModel::constant_velocity(1e-4);
    for (int n = 1; n <= 3; ++n) {
      RngStream rng(seed, 2, n, 0, Rng::TruthNoise);
      truth = sample_transition(truth, cv, rng);
      TopologySnapshot topo;
      topo.num_agents = 2;
      topo.comm = {{1}, {0}};
      topo.meas_agents = {{}, {}};
      topo.meas_objects = {{2}, {2}};
      topo.finalize();
      std::vector<std::map<int, double>> meas(2);
      std::vector<Measurement> flat;
      for (int l = 0; l < 2; ++l) {
        RngStream mr(seed, l, n, 0, Rng::Measurement, 2);
        meas[l][2] = measure_distance(anchor_states[l], truth, 2, mr.normal(0, 1.0));
        flat.push_back({l, 2, meas[l][2], n});
      }
      pm.step(topo, meas, n);
      spf.step(flat, n);

      const Eigen::VectorXd epm = pm.estimate(2);
      const Eigen::VectorXd espf = spf.estimate(2);
      const double sd = std::sqrt(empirical_variance(pm.weighted_belief(2), 2));
      REQUIRE((epm.head(2) - espf.head(2)).norm() < 6.0 * sd / std::sqrt(double(J)) + 0.05);
    }
  }
}

#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cstrack/common.hpp"
#include "cstrack/state.hpp"

namespace cstrack::scen {

enum class ScenarioType { Dynamic, Static, Scalability, Custom };

/// Full description of an experiment family. Serialized as JSON; the golden
/// files under scenarios/ hold the four standard setups.
struct ScenarioConfig {
  std::string name = "custom";
  ScenarioType type = ScenarioType::Custom;

  int steps = 75;
  int J = 1000;
  int P = 1;
  int C = 6;
  double sigma_v2 = 2.0;
  double comm_range = 50.0;
  double meas_range_default = 1e18;  // effectively unlimited
  double corner_meas_range = 20.0;   // rho, dynamic scenario 1
  bool ldt = false;

  // dynamic roster: anchor positions, mobile-agent start positions (corner
  // agents listed by index), object initial full states
  std::vector<Eigen::Vector2d> anchors;
  std::vector<Eigen::Vector2d> mobile_agents;
  std::vector<int> corner_agents;
  std::vector<Eigen::Vector4d> objects;

  double sigma_u2_agent = 5e-5;
  double sigma_u2_object = 5e-4;
  double prior_lo = -200.0, prior_hi = 200.0;
  double velocity_prior_var = 1e-3;
  double velocity_hyper_var = 1e-3;  // spread of the per-run object velocity prior mean
  double loc_var_threshold_factor = 5.0;
  Eigen::Vector2d move_target{37.5, 37.5};
  double move_horizon = 75.0;
  std::vector<int> alt_proposal_steps{1};

  // static scenario
  int num_uniform_agents = 50;
  int num_uniform_objects = 50;
  double field_lo = 0.0, field_hi = 100.0;

  // scalability scenario
  std::vector<std::pair<int, int>> sizes{{8, 2}, {16, 4}, {32, 8}, {64, 16}};
  double prior_var = 1e-2;

  // custom roster (explicit everything; static states)
  std::vector<Eigen::Vector2d> custom_agents;  // non-anchor
  std::vector<Eigen::Vector2d> custom_objects;
  std::vector<double> custom_meas_ranges;  // per agent (anchors first)

  int runs = 20;
  std::uint64_t seed = 1;

  int num_agents() const {
    switch (type) {
      case ScenarioType::Dynamic:
        return static_cast<int>(anchors.size() + mobile_agents.size());
      case ScenarioType::Static:
        return static_cast<int>(anchors.size()) + num_uniform_agents;
      case ScenarioType::Custom:
        return static_cast<int>(anchors.size() + custom_agents.size());
      default:
        return 0;
    }
  }
  int num_objects() const {
    switch (type) {
      case ScenarioType::Dynamic:
        return static_cast<int>(objects.size());
      case ScenarioType::Static:
        return num_uniform_objects;
      case ScenarioType::Custom:
        return static_cast<int>(custom_objects.size());
      default:
        return 0;
    }
  }
};

// ---- golden setups ----------------------------------------------------------

/// Dynamic scenarios: 12 agents (8 mobile, 4 anchors), 2 objects on crossing
/// constant-velocity tracks, 75 steps. Anchor and initial agent positions are
/// approximate read-offs of the published layout; the corner agents sit at
/// the field corners.
inline ScenarioConfig dynamic_scenario(int variant, double rho = 20.0) {
  ScenarioConfig c;
  c.name = variant == 1 ? "dynamic1" : "dynamic2";
  c.type = ScenarioType::Dynamic;
  c.steps = 75;
  c.J = 1000;
  c.P = 1;
  c.C = 6;
  c.sigma_v2 = 2.0;
  c.comm_range = 50.0;
  c.anchors = {{9, 12}, {63, 9}, {9, 63}, {63, 63}};
  c.mobile_agents = {{3, 7}, {66, 6}, {6, 66}, {66, 66},
                     {29, 29}, {50, 30}, {30, 50}, {51, 51}};
  c.corner_agents = {0, 1, 2, 3};
  c.objects.push_back(Eigen::Vector4d(15, 0, 0.8, 0.6));
  c.objects.push_back(Eigen::Vector4d(75, 20, -0.8, 0.6));
  c.sigma_u2_agent = 5e-5;
  c.sigma_u2_object = 5e-4;
  if (variant == 1) {
    c.meas_range_default = 1e18;
    c.corner_meas_range = rho;
  } else {
    c.meas_range_default = 20.0;
    c.corner_meas_range = 20.0;
  }
  c.alt_proposal_steps = {1};
  return c;
}

/// Static scenario: 13 anchors (perimeter ring plus center, an approximate
/// read-off), 50 uniformly placed agents and 50 objects in a 100x100 field,
/// measurement range 22.5, one time step, P message passing iterations.
inline ScenarioConfig static_scenario() {
  ScenarioConfig c;
  c.name = "static";
  c.type = ScenarioType::Static;
  c.steps = 1;
  c.J = 1000;
  c.P = 7;
  c.C = 15;
  c.sigma_v2 = 2.0;
  c.comm_range = 50.0;
  c.meas_range_default = 22.5;
  const double t = 100.0 / 3.0;
  c.anchors = {{0, 0},   {t, 0},   {2 * t, 0},   {100, 0},  {100, t}, {100, 2 * t},
               {100, 100}, {2 * t, 100}, {t, 100}, {0, 100}, {0, 2 * t}, {0, t},
               {50, 50}};
  c.num_uniform_agents = 50;
  c.num_uniform_objects = 50;
  c.field_lo = 0;
  c.field_hi = 100;
  c.alt_proposal_steps = {1};
  c.runs = 10;
  return c;
}

/// Scalability ladder: 4 anchors at (+-100, +-100), mobile agents and objects
/// uniform in a centered 100x100 field, random per-step measurement topology
/// with a Hamiltonian-cycle constraint.
inline ScenarioConfig scalability_scenario() {
  ScenarioConfig c;
  c.name = "scalability";
  c.type = ScenarioType::Scalability;
  c.steps = 20;
  c.J = 1000;
  c.P = 2;
  c.sigma_v2 = 1.0;
  c.sigma_u2_agent = 1e-2;
  c.sigma_u2_object = 1e-2;
  c.prior_var = 1e-2;
  c.field_lo = -50;
  c.field_hi = 50;
  c.alt_proposal_steps = {};
  c.runs = 3;
  return c;
}

// ---- JSON (scenario files) ---------------------------------------------------

inline std::string to_string(ScenarioType t) {
  switch (t) {
    case ScenarioType::Dynamic: return "dynamic";
    case ScenarioType::Static: return "static";
    case ScenarioType::Scalability: return "scalability";
    default: return "custom";
  }
}

inline ScenarioType scenario_type_from(const std::string& s) {
  if (s == "dynamic") return ScenarioType::Dynamic;
  if (s == "static") return ScenarioType::Static;
  if (s == "scalability") return ScenarioType::Scalability;
  if (s == "custom") return ScenarioType::Custom;
  throw std::invalid_argument("unknown scenario type: " + s);
}

inline nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["type"] = to_string(c.type);
  j["steps"] = c.steps;
  j["J"] = c.J;
  j["P"] = c.P;
  j["C"] = c.C;
  j["sigma_v2"] = c.sigma_v2;
  j["comm_range"] = c.comm_range;
  j["meas_range_default"] = c.meas_range_default;
  j["corner_meas_range"] = c.corner_meas_range;
  j["ldt"] = c.ldt;
  auto vec2 = [](const Eigen::Vector2d& v) { return std::vector<double>{v.x(), v.y()}; };
  auto vec4 = [](const Eigen::Vector4d& v) {
    return std::vector<double>{v[0], v[1], v[2], v[3]};
  };
  for (const auto& a : c.anchors) j["anchors"].push_back(vec2(a));
  for (const auto& a : c.mobile_agents) j["mobile_agents"].push_back(vec2(a));
  j["corner_agents"] = c.corner_agents;
  for (const auto& o : c.objects) j["objects"].push_back(vec4(o));
  j["sigma_u2_agent"] = c.sigma_u2_agent;
  j["sigma_u2_object"] = c.sigma_u2_object;
  j["prior"] = {c.prior_lo, c.prior_hi};
  j["velocity_prior_var"] = c.velocity_prior_var;
  j["velocity_hyper_var"] = c.velocity_hyper_var;
  j["loc_var_threshold_factor"] = c.loc_var_threshold_factor;
  j["move_target"] = vec2(c.move_target);
  j["move_horizon"] = c.move_horizon;
  j["alt_proposal_steps"] = c.alt_proposal_steps;
  j["num_uniform_agents"] = c.num_uniform_agents;
  j["num_uniform_objects"] = c.num_uniform_objects;
  j["field"] = {c.field_lo, c.field_hi};
  for (const auto& [a, o] : c.sizes) j["sizes"].push_back(std::vector<int>{a, o});
  j["prior_var"] = c.prior_var;
  for (const auto& a : c.custom_agents) j["custom_agents"].push_back(vec2(a));
  for (const auto& o : c.custom_objects) j["custom_objects"].push_back(vec2(o));
  j["custom_meas_ranges"] = c.custom_meas_ranges;
  j["runs"] = c.runs;
  j["seed"] = c.seed;
  return j;
}

inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  c.name = j.value("name", std::string("custom"));
  c.type = scenario_type_from(j.value("type", std::string("custom")));
  c.steps = j.value("steps", c.steps);
  c.J = j.value("J", c.J);
  c.P = j.value("P", c.P);
  c.C = j.value("C", c.C);
  c.sigma_v2 = j.value("sigma_v2", c.sigma_v2);
  c.comm_range = j.value("comm_range", c.comm_range);
  c.meas_range_default = j.value("meas_range_default", c.meas_range_default);
  c.corner_meas_range = j.value("corner_meas_range", c.corner_meas_range);
  c.ldt = j.value("ldt", false);
  if (j.contains("anchors"))
    for (const auto& a : j["anchors"]) c.anchors.emplace_back(a[0].get<double>(), a[1].get<double>());
  if (j.contains("mobile_agents"))
    for (const auto& a : j["mobile_agents"])
      c.mobile_agents.emplace_back(a[0].get<double>(), a[1].get<double>());
  if (j.contains("corner_agents")) c.corner_agents = j["corner_agents"].get<std::vector<int>>();
  if (j.contains("objects"))
    for (const auto& o : j["objects"])
      c.objects.push_back(Eigen::Vector4d(o[0].get<double>(), o[1].get<double>(),
                                          o[2].get<double>(), o[3].get<double>()));
  c.sigma_u2_agent = j.value("sigma_u2_agent", c.sigma_u2_agent);
  c.sigma_u2_object = j.value("sigma_u2_object", c.sigma_u2_object);
  if (j.contains("prior")) {
    c.prior_lo = j["prior"][0].get<double>();
    c.prior_hi = j["prior"][1].get<double>();
  }
  c.velocity_prior_var = j.value("velocity_prior_var", c.velocity_prior_var);
  c.velocity_hyper_var = j.value("velocity_hyper_var", c.velocity_hyper_var);
  c.loc_var_threshold_factor = j.value("loc_var_threshold_factor", c.loc_var_threshold_factor);
  if (j.contains("move_target"))
    c.move_target = Eigen::Vector2d(j["move_target"][0].get<double>(),
                                    j["move_target"][1].get<double>());
  c.move_horizon = j.value("move_horizon", c.move_horizon);
  if (j.contains("alt_proposal_steps"))
    c.alt_proposal_steps = j["alt_proposal_steps"].get<std::vector<int>>();
  c.num_uniform_agents = j.value("num_uniform_agents", c.num_uniform_agents);
  c.num_uniform_objects = j.value("num_uniform_objects", c.num_uniform_objects);
  if (j.contains("field")) {
    c.field_lo = j["field"][0].get<double>();
    c.field_hi = j["field"][1].get<double>();
  }
  if (j.contains("sizes")) {
    c.sizes.clear();
    for (const auto& s : j["sizes"]) c.sizes.emplace_back(s[0].get<int>(), s[1].get<int>());
  }
  c.prior_var = j.value("prior_var", c.prior_var);
  if (j.contains("custom_agents"))
    for (const auto& a : j["custom_agents"])
      c.custom_agents.emplace_back(a[0].get<double>(), a[1].get<double>());
  if (j.contains("custom_objects"))
    for (const auto& o : j["custom_objects"])
      c.custom_objects.emplace_back(o[0].get<double>(), o[1].get<double>());
  if (j.contains("custom_meas_ranges"))
    c.custom_meas_ranges = j["custom_meas_ranges"].get<std::vector<double>>();
  c.runs = j.value("runs", c.runs);
  c.seed = j.value("seed", c.seed);
  return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scenario file: " + path);
  nlohmann::json j;
  f >> j;
  return scenario_from_json(j);
}

inline void save_scenario(const ScenarioConfig& c, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write scenario file: " + path);
  f << to_json(c).dump(2) << "\n";
}

}  // namespace cstrack::scen

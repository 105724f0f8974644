#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <thread>

#include "cstrack/io/artifacts.hpp"
#include "cstrack/scen/runner.hpp"
#include "cstrack/scen/scalability.hpp"

namespace cstrack::cli {

struct RunManifest {
  std::string scenario;  // builtin name or path to a scenario file
  std::string output_dir = "out";
  std::set<std::string> methods{"PM", "RM"};
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> J, P, C;
  std::optional<double> rho;
  std::optional<bool> ldt;
  std::optional<bool> alt_proposal;
  std::vector<std::pair<int, int>> sizes;  // scalability override
  int threads = 0;                         // 0: hardware concurrency
};

inline scen::ScenarioConfig resolve_scenario(const std::string& name) {
  namespace fs = std::filesystem;
  if (fs::exists(name)) return scen::load_scenario(name);
  std::vector<std::string> dirs{"scenarios", "../scenarios"};
  if (const char* env = std::getenv("CSTRACK_SCENARIO_DIR")) dirs.insert(dirs.begin(), env);
  for (const auto& d : dirs) {
    const fs::path p = fs::path(d) / (name + ".json");
    if (fs::exists(p)) return scen::load_scenario(p.string());
  }
  if (name == "dynamic1") return scen::dynamic_scenario(1);
  if (name == "dynamic2") return scen::dynamic_scenario(2);
  if (name == "static") return scen::static_scenario();
  if (name == "scalability") return scen::scalability_scenario();
  throw std::runtime_error("unknown scenario: " + name);
}

inline scen::ScenarioConfig apply_overrides(const RunManifest& m,
                                            scen::ScenarioConfig c) {
  if (m.seed) c.seed = *m.seed;
  if (m.runs) {
    if (*m.runs < 1) throw std::invalid_argument("runs must be >= 1");
    c.runs = *m.runs;
  }
  if (m.J) {
    if (*m.J < 1) throw std::invalid_argument("J must be >= 1");
    c.J = *m.J;
  }
  if (m.P) {
    if (*m.P < 1) throw std::invalid_argument("P must be >= 1");
    c.P = *m.P;
  }
  if (m.C) {
    if (*m.C < 0) throw std::invalid_argument("C must be >= 0");
    c.C = *m.C;
  }
  if (m.rho) {
    if (c.type != scen::ScenarioType::Dynamic)
      throw std::invalid_argument("--rho applies only to dynamic scenarios");
    if (*m.rho <= 0) throw std::invalid_argument("rho must be > 0");
    c.corner_meas_range = *m.rho;
  }
  if (m.ldt) c.ldt = *m.ldt;
  if (m.alt_proposal && !*m.alt_proposal) c.alt_proposal_steps.clear();
  if (!m.sizes.empty()) {
    if (c.type != scen::ScenarioType::Scalability)
      throw std::invalid_argument("--sizes applies only to the scalability scenario");
    c.sizes = m.sizes;
  }
  for (const auto& meth : m.methods) {
    if (meth != "PM" && meth != "RM" && meth != "SPF")
      throw std::invalid_argument("unknown method: " + meth);
    if (meth == "SPF" && c.type != scen::ScenarioType::Scalability)
      throw std::invalid_argument("SPF runs only in the scalability scenario");
  }
  return c;
}

namespace detail {

/// Simple deterministic worker pool: run indices are distributed over
/// threads, results land in per-run slots.
template <class Fn>
void parallel_runs(int runs, int threads, Fn&& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, runs));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= runs) break;
          fn(r);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline nlohmann::json rmse_block(const std::vector<scen::TraceRow>& rows, int P,
                                 bool per_iteration) {
  nlohmann::json j;
  j["time_averaged"]["mobile_agents"] =
      scen::rmse_time_averaged(rows, scen::EntityClass::MobileAgents, per_iteration ? P : -1);
  j["time_averaged"]["objects"] =
      scen::rmse_time_averaged(rows, scen::EntityClass::Objects, per_iteration ? P : -1);
  auto agents = scen::rmse_per_time(rows, scen::EntityClass::MobileAgents,
                                    per_iteration ? P : -1);
  auto objects = scen::rmse_per_time(rows, scen::EntityClass::Objects,
                                     per_iteration ? P : -1);
  for (const auto& [t, v] : agents) {
    j["vs_time"]["time"].push_back(t);
    j["vs_time"]["mobile_agents"].push_back(v);
  }
  for (const auto& [t, v] : objects) j["vs_time"]["objects"].push_back(v);
  if (per_iteration) {
    auto pa = scen::rmse_per_iteration(rows, scen::EntityClass::MobileAgents);
    auto po = scen::rmse_per_iteration(rows, scen::EntityClass::Objects);
    for (const auto& [p, v] : pa) {
      j["vs_iteration"]["p"].push_back(p);
      j["vs_iteration"]["mobile_agents"].push_back(v);
    }
    for (const auto& [p, v] : po) j["vs_iteration"]["objects"].push_back(v);
  }
  return j;
}

}  // namespace detail

/// Executes the manifest: runs every requested method on the resolved
/// scenario and writes traces.csv, ledger.csv and summary.json into the
/// output directory. Returns the process exit code.
inline int run(const RunManifest& manifest, std::ostream& diag = std::cerr) {
  namespace fs = std::filesystem;
  try {
    scen::ScenarioConfig config = apply_overrides(manifest, resolve_scenario(manifest.scenario));
    fs::create_directories(manifest.output_dir);

    nlohmann::json summary;
    summary["scenario"] = config.name;
    summary["seed"] = config.seed;
    summary["runs"] = config.runs;
    summary["config"] = scen::to_json(config);

    std::vector<scen::RunTrace> all_traces;

    if (config.type == scen::ScenarioType::Scalability) {
      nlohmann::json table = nlohmann::json::array();
      std::vector<double> sizes_axis, pm_times, spf_times;
      for (const auto& [nm, no] : config.sizes) {
        auto point = scen::run_scalability_size(config, nm, no);
        nlohmann::json row;
        row["mobile_agents"] = nm;
        row["objects"] = no;
        row["network_size"] = nm + no;
        row["pm_seconds_per_step"] = point.pm_seconds_per_step;
        row["pm_rmse"] = point.pm_rmse;
        if (manifest.methods.count("SPF")) {
          row["spf_seconds_per_step"] = point.spf_seconds_per_step;
          row["spf_rmse"] = point.spf_rmse;
        }
        table.push_back(row);
        sizes_axis.push_back(nm + no);
        pm_times.push_back(point.pm_seconds_per_step);
        spf_times.push_back(point.spf_seconds_per_step);
        diag << "size (" << nm << "," << no << "): pm " << point.pm_seconds_per_step
             << " s/step rmse " << point.pm_rmse << ", spf " << point.spf_seconds_per_step
             << " s/step rmse " << point.spf_rmse << "\n";
      }
      summary["scalability"]["table"] = table;
      if (sizes_axis.size() >= 2) {
        summary["scalability"]["pm_runtime_slope"] =
            scen::loglog_slope(sizes_axis, pm_times);
        if (manifest.methods.count("SPF"))
          summary["scalability"]["spf_runtime_slope"] =
              scen::loglog_slope(sizes_axis, spf_times);
      }
    } else if (config.type == scen::ScenarioType::Dynamic) {
      const bool want_rm = manifest.methods.count("RM") > 0;
      std::vector<scen::RunTrace> pm(config.runs), rm(config.runs);
      detail::parallel_runs(config.runs, manifest.threads, [&](int r) {
        scen::WorldTrace world;
        pm[r].method = "PM";
        scen::run_dynamic_once(config, r, netsim::Method::PM, pm[r], &world, nullptr);
        if (want_rm) {
          rm[r].method = "RM";
          scen::run_dynamic_once(config, r, netsim::Method::RM, rm[r], nullptr, &world);
        }
      });
      scen::RunTrace pm_all, rm_all;
      pm_all.method = "PM";
      rm_all.method = "RM";
      for (int r = 0; r < config.runs; ++r) {
        pm_all.rows.insert(pm_all.rows.end(), pm[r].rows.begin(), pm[r].rows.end());
        pm_all.ledgers.insert(pm_all.ledgers.end(), pm[r].ledgers.begin(),
                              pm[r].ledgers.end());
        pm_all.wall_seconds += pm[r].wall_seconds;
        pm_all.degenerate_updates += pm[r].degenerate_updates;
        pm_all.aborted_runs.insert(pm_all.aborted_runs.end(), pm[r].aborted_runs.begin(),
                                   pm[r].aborted_runs.end());
        if (want_rm) {
          rm_all.rows.insert(rm_all.rows.end(), rm[r].rows.begin(), rm[r].rows.end());
          rm_all.ledgers.insert(rm_all.ledgers.end(), rm[r].ledgers.begin(),
                                rm[r].ledgers.end());
          rm_all.wall_seconds += rm[r].wall_seconds;
          rm_all.degenerate_updates += rm[r].degenerate_updates;
          rm_all.aborted_runs.insert(rm_all.aborted_runs.end(),
                                     rm[r].aborted_runs.begin(),
                                     rm[r].aborted_runs.end());
        }
      }
      if (manifest.methods.count("PM")) all_traces.push_back(std::move(pm_all));
      if (want_rm) all_traces.push_back(std::move(rm_all));
    } else {  // Static or Custom
      const bool per_iter = config.type == scen::ScenarioType::Static;
      std::vector<scen::RunTrace> pm(config.runs), rm(config.runs);
      const bool want_pm = manifest.methods.count("PM") > 0;
      const bool want_rm = manifest.methods.count("RM") > 0;
      detail::parallel_runs(config.runs, manifest.threads, [&](int r) {
        if (want_pm) {
          pm[r].method = "PM";
          scen::run_roster_once(config, r, netsim::Method::PM, pm[r], per_iter);
        }
        if (want_rm) {
          rm[r].method = "RM";
          scen::run_roster_once(config, r, netsim::Method::RM, rm[r], per_iter);
        }
      });
      for (auto [want, vec, name] :
           {std::tuple{want_pm, &pm, "PM"}, std::tuple{want_rm, &rm, "RM"}}) {
        if (!want) continue;
        scen::RunTrace merged;
        merged.method = name;
        for (auto& t : *vec) {
          merged.rows.insert(merged.rows.end(), t.rows.begin(), t.rows.end());
          merged.ledgers.insert(merged.ledgers.end(), t.ledgers.begin(), t.ledgers.end());
          merged.wall_seconds += t.wall_seconds;
          merged.degenerate_updates += t.degenerate_updates;
        }
        all_traces.push_back(std::move(merged));
      }
    }

    if (!all_traces.empty()) {
      io::write_traces_csv((fs::path(manifest.output_dir) / "traces.csv").string(),
                           all_traces);
      io::write_ledger_csv((fs::path(manifest.output_dir) / "ledger.csv").string(),
                           all_traces);
      for (const auto& t : all_traces) {
        nlohmann::json m = detail::rmse_block(
            t.rows, config.P, config.type == scen::ScenarioType::Static);
        m["wall_seconds"] = t.wall_seconds;
        m["degenerate_updates"] = t.degenerate_updates;
        m["aborted_runs"] = t.aborted_runs;
        if (!t.ledgers.empty()) {
          const auto& lg = t.ledgers.front().ledger;
          m["ledger_first_step"] = {{"n_consensus", lg.consensus},
                                    {"n_beliefs", lg.beliefs},
                                    {"n_alt_proposal", lg.alt_proposal},
                                    {"n_total", lg.total()},
                                    {"delay_slots", lg.delay_slots}};
        }
        summary["methods"][t.method] = std::move(m);
      }
    }

    std::ofstream sf(fs::path(manifest.output_dir) / "summary.json");
    sf << summary.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cstrack::cli

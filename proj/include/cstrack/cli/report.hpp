#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <json.hpp>

namespace cstrack::cli {

/// Prints the summary tables of an artifact directory on standard output:
/// RMSE against the scenario's natural axis plus the communication ledger.
inline int report(const std::string& artifact_dir, std::ostream& out = std::cout) {
  namespace fs = std::filesystem;
  const fs::path summary_path = fs::path(artifact_dir) / "summary.json";
  std::ifstream f(summary_path);
  if (!f) {
    std::cerr << "error: missing artifact " << summary_path.string() << "\n";
    return 1;
  }
  nlohmann::json s;
  f >> s;

  out << "scenario: " << s.value("scenario", std::string("?"))
      << "  runs: " << s.value("runs", 0) << "  seed: " << s.value("seed", 0) << "\n";

  if (s.contains("scalability")) {
    out << "\nruntime and RMSE versus network size\n";
    out << std::setw(12) << "(MAs,objs)" << std::setw(14) << "PM s/step" << std::setw(14)
        << "SPF s/step" << std::setw(12) << "PM RMSE" << std::setw(12) << "SPF RMSE"
        << "\n";
    for (const auto& row : s["scalability"]["table"]) {
      out << std::setw(5) << row["mobile_agents"].get<int>() << ","
          << std::setw(5) << row["objects"].get<int>() << " " << std::setw(14)
          << row["pm_seconds_per_step"].get<double>();
      if (row.contains("spf_seconds_per_step"))
        out << std::setw(14) << row["spf_seconds_per_step"].get<double>();
      else
        out << std::setw(14) << "-";
      out << std::setw(12) << row["pm_rmse"].get<double>();
      if (row.contains("spf_rmse"))
        out << std::setw(12) << row["spf_rmse"].get<double>();
      else
        out << std::setw(12) << "-";
      out << "\n";
    }
    if (s["scalability"].contains("pm_runtime_slope"))
      out << "PM log-log runtime slope:  "
          << s["scalability"]["pm_runtime_slope"].get<double>() << "\n";
    if (s["scalability"].contains("spf_runtime_slope"))
      out << "SPF log-log runtime slope: "
          << s["scalability"]["spf_runtime_slope"].get<double>() << "\n";
    return 0;
  }

  if (!s.contains("methods")) {
    out << "(no method results)\n";
    return 0;
  }
  const auto& methods = s["methods"];
  const bool per_iteration =
      methods.begin().value().contains("vs_iteration");

  if (per_iteration) {
    out << "\nRMSE versus message passing iteration p\n";
    out << std::setw(4) << "p";
    for (auto it = methods.begin(); it != methods.end(); ++it)
      out << std::setw(14) << (it.key() + "-agent") << std::setw(14)
          << (it.key() + "-object");
    out << "\n";
    const auto& axis = methods.begin().value()["vs_iteration"]["p"];
    for (size_t i = 0; i < axis.size(); ++i) {
      out << std::setw(4) << axis[i].get<int>();
      for (auto it = methods.begin(); it != methods.end(); ++it)
        out << std::setw(14) << it.value()["vs_iteration"]["mobile_agents"][i].get<double>()
            << std::setw(14) << it.value()["vs_iteration"]["objects"][i].get<double>();
      out << "\n";
    }
  } else {
    out << "\nRMSE versus time step n\n";
    out << std::setw(4) << "n";
    for (auto it = methods.begin(); it != methods.end(); ++it)
      out << std::setw(14) << (it.key() + "-MA") << std::setw(14) << (it.key() + "-obj");
    out << "\n";
    const auto& axis = methods.begin().value()["vs_time"]["time"];
    for (size_t i = 0; i < axis.size(); ++i) {
      out << std::setw(4) << axis[i].get<int>();
      for (auto it = methods.begin(); it != methods.end(); ++it)
        out << std::setw(14) << it.value()["vs_time"]["mobile_agents"][i].get<double>()
            << std::setw(14) << it.value()["vs_time"]["objects"][i].get<double>();
      out << "\n";
    }
  }

  out << "\ntime-averaged RMSE\n";
  for (auto it = methods.begin(); it != methods.end(); ++it)
    out << std::setw(6) << it.key() << "  agents "
        << it.value()["time_averaged"]["mobile_agents"].get<double>() << "  objects "
        << it.value()["time_averaged"]["objects"].get<double>() << "\n";

  out << "\ncommunication (per agent, first time step)\n";
  out << std::setw(6) << " " << std::setw(12) << "N^C" << std::setw(12) << "N^NBP"
      << std::setw(12) << "N^AP" << std::setw(12) << "N^TOT" << std::setw(8) << "delay"
      << "\n";
  for (auto it = methods.begin(); it != methods.end(); ++it) {
    if (!it.value().contains("ledger_first_step")) continue;
    const auto& lg = it.value()["ledger_first_step"];
    out << std::setw(6) << it.key() << std::setw(12) << lg["n_consensus"].get<long long>()
        << std::setw(12) << lg["n_beliefs"].get<long long>() << std::setw(12)
        << lg["n_alt_proposal"].get<long long>() << std::setw(12)
        << lg["n_total"].get<long long>() << std::setw(8)
        << lg["delay_slots"].get<int>() << "\n";
  }
  return 0;
}

}  // namespace cstrack::cli

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cstrack/scen/trace.hpp"

namespace cstrack::io {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string kind_name(EntityKind k) {
  switch (k) {
    case EntityKind::MobileAgent: return "mobile-agent";
    case EntityKind::Anchor: return "anchor";
    default: return "object";
  }
}

inline EntityKind kind_from(const std::string& s) {
  if (s == "mobile-agent") return EntityKind::MobileAgent;
  if (s == "anchor") return EntityKind::Anchor;
  if (s == "object") return EntityKind::Object;
  throw std::invalid_argument("unknown entity kind: " + s);
}

inline const char* kTraceHeader =
    "run,method,time,iteration,entity,kind,est_x,est_y,est_vx,est_vy,"
    "true_x,true_y,true_vx,true_vy,pos_error";

inline const char* kLedgerHeader =
    "run,method,time,n_consensus,n_beliefs,n_alt_proposal,n_ldt_handover,n_total,"
    "delay_slots";

/// traces.csv: one row per (run, method, time, iteration, entity). Velocity
/// columns are empty for position-only states. Floats carry 17 significant
/// digits so reruns can be compared byte for byte.
inline void write_traces_csv(const std::string& path,
                             const std::vector<scen::RunTrace>& traces) {
  std::ofstream f(path);
  f << kTraceHeader << "\n";
  for (const auto& trace : traces) {
    for (const auto& r : trace.rows) {
      const bool vel = r.estimate.size() >= 4;
      f << r.run << ',' << trace.method << ',' << r.time << ',' << r.iteration << ','
        << r.entity << ',' << kind_name(r.kind) << ',' << fmt17(r.estimate[0]) << ','
        << fmt17(r.estimate[1]) << ',' << (vel ? fmt17(r.estimate[2]) : "") << ','
        << (vel ? fmt17(r.estimate[3]) : "") << ',' << fmt17(r.truth[0]) << ','
        << fmt17(r.truth[1]) << ',' << (vel ? fmt17(r.truth[2]) : "") << ','
        << (vel ? fmt17(r.truth[3]) : "") << ',' << fmt17(r.position_error) << "\n";
    }
  }
}

inline void write_ledger_csv(const std::string& path,
                             const std::vector<scen::RunTrace>& traces) {
  std::ofstream f(path);
  f << kLedgerHeader << "\n";
  for (const auto& trace : traces) {
    for (const auto& r : trace.ledgers) {
      f << r.run << ',' << trace.method << ',' << r.time << ',' << r.ledger.consensus
        << ',' << r.ledger.beliefs << ',' << r.ledger.alt_proposal << ','
        << r.ledger.ldt_handover << ',' << r.ledger.total() << ','
        << r.ledger.delay_slots << "\n";
    }
  }
}

struct ParsedTraceRow {
  int run, time, iteration, entity;
  std::string method;
  EntityKind kind;
  double pos_error;
};

/// Round-trip reader for the emitted traces (used by report and the
/// summary-consistency checks).
inline std::vector<ParsedTraceRow> read_traces_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(f, line);
  if (line != kTraceHeader) throw std::runtime_error("unexpected traces.csv header");
  std::vector<ParsedTraceRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        cells.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    ParsedTraceRow r;
    r.run = std::stoi(cells[0]);
    r.method = cells[1];
    r.time = std::stoi(cells[2]);
    r.iteration = std::stoi(cells[3]);
    r.entity = std::stoi(cells[4]);
    r.kind = kind_from(cells[5]);
    r.pos_error = std::stod(cells[14]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace cstrack::io

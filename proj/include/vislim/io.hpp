#pragma once

// CSV output and snapshot directories. Numbers are written with %.17g so
// that files round-trip exactly and identical runs give identical bytes.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vislim/cns.hpp"
#include "vislim/error.hpp"
#include "vislim/ins.hpp"
#include "vislim/snapshot.hpp"
#include "vislim/trajectory.hpp"

namespace vislim {

inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Minimal CSV table: a header and rows of numbers.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError("csv: no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }

  std::vector<double> values(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(c));
    return out;
  }
};

inline std::string to_csv(const CsvTable& t) {
  std::string out;
  for (std::size_t k = 0; k < t.header.size(); ++k) out += (k ? "," : "") + t.header[k];
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + format_number(row[k]);
    out += '\n';
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed: " + path.string());
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& t) { write_text(path, to_csv(t)); }

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("csv: empty input");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    return cells;
  };
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) throw FormatError("csv: ragged row '" + line + "'");
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw FormatError("csv: not a number '" + c + "'");
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

/// t, min_rho, max_rho, L2_v, H1_v, L2_divv, energy, energy_residual
inline CsvTable series_table(const std::vector<SeriesRow>& rows) {
  CsvTable t;
  t.header = {"t", "min_rho", "max_rho", "L2_v", "H1_v", "L2_divv", "energy", "energy_residual"};
  for (const auto& r : rows) {
    t.rows.push_back({r.t, r.min_rho, r.max_rho, r.l2_v, r.h1_v, r.l2_divv, r.energy, r.energy_residual});
  }
  return t;
}

inline CsvTable series_table(const CnsTrajectory& traj) {
  std::vector<SeriesRow> rows;
  for (const auto& r : traj.records) rows.push_back(r.row);
  return series_table(rows);
}

inline CsvTable series_table(const InsTrajectory& traj) {
  std::vector<SeriesRow> rows;
  for (const auto& r : traj.records) rows.push_back(r.row);
  return series_table(rows);
}

/// The full norm table of a compressible run.
inline CsvTable norms_table(const CnsTrajectory& traj) {
  CsvTable t;
  t.header = {"t",           "dissipation",  "sqrt_nu_L2_divv", "L2_rho_dev",   "L2H1_grad_v",
              "L2_vt",       "sqrt_nu_L2_grad_divv", "Bessel_v", "Lq_grad_divv", "Lq_grad_rho",
              "energy_functional", "equivalence_ratio"};
  for (const auto& r : traj.records) {
    t.rows.push_back({r.row.t, r.row.dissipation, r.sqrt_nu_l2_div, r.l2_density_deviation, r.grad_v_l2h1, r.vt_l2,
                      r.sqrt_nu_grad_div_l2, r.v_bessel, r.grad_div_lq, r.grad_rho_lq, r.energy_functional,
                      r.equivalence_ratio});
  }
  return t;
}

inline CsvTable norms_table(const InsTrajectory& traj) {
  CsvTable t;
  t.header = {"t", "dissipation", "L2_eta", "L4_eta", "Linf_eta", "pressure_iterations", "divergence_ratio"};
  for (const auto& r : traj.records) {
    t.rows.push_back({r.row.t, r.row.dissipation, r.eta_l2, r.eta_l4, r.eta_sup,
                      static_cast<double>(r.pressure_iterations), r.divergence_ratio});
  }
  return t;
}

inline std::filesystem::path snapshot_path(const std::filesystem::path& dir, std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "snap_%04zu.vlf", index);
  return dir / "snapshots" / name;
}

inline void write_snapshots(const std::filesystem::path& dir, const std::vector<FlowSnapshot>& snaps) {
  std::filesystem::create_directories(dir / "snapshots");
  for (std::size_t k = 0; k < snaps.size(); ++k) write_snapshot(snapshot_path(dir, k), to_snapshot(snaps[k]));
}

/// Snapshots of a run directory in file-name order.
inline std::vector<FlowSnapshot> read_snapshots(const std::filesystem::path& dir) {
  const auto sub = dir / "snapshots";
  if (!std::filesystem::is_directory(sub)) throw FormatError("no snapshots directory in " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(sub)) {
    if (e.path().extension() == ".vlf") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<FlowSnapshot> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(from_snapshot(read_snapshot(f)));
  return out;
}

}  // namespace vislim

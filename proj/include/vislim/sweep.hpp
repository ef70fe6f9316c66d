#pragma once

// The volume-viscosity sweep: one incompressible reference run and one
// compressible run per nu from identical initial data, followed by the
// distance to the reference, the divergence norms, the auxiliary-density
// remainder and log-log rate fits. Members run concurrently; every result is
// keyed by nu so the output does not depend on scheduling.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vislim/config.hpp"
#include "vislim/diagnostics.hpp"
#include "vislim/initial_data.hpp"
#include "vislim/io.hpp"

namespace vislim {

struct SweepMember {
  double nu = 0.0;
  ConvergenceMetric metric;
  double sup_div_l2 = 0.0;
  double sqrt_nu_sup_div_l2 = 0.0;
  double grad_div_lq = 0.0;
  double sup_r_lq = 0.0;
  double initial_energy = 0.0;
  double max_energy_residual = 0.0;
  double min_equivalence = 0.0;
  double max_equivalence = 0.0;
  double min_rho = 0.0;
  double max_rho = 0.0;
  double mass_drift = 0.0;
  std::vector<std::string> warnings;
  CnsTrajectory trajectory;  // snapshots are dropped once the metric is computed
  std::vector<AuxiliaryPoint> auxiliary;
};

struct SweepResult {
  std::vector<double> nus;
  std::vector<SweepMember> members;
  InsTrajectory reference;
  std::optional<RateFit> metric_rate;
  std::optional<RateFit> div_rate;
  std::optional<RateFit> grad_div_rate;
  std::optional<RateFit> remainder_rate;
};

/// Worker count from VISLIM_THREADS (default: hardware concurrency).
inline int sweep_threads_from_env() {
  if (const char* s = std::getenv("VISLIM_THREADS")) {
    const int n = std::atoi(s);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline std::string nu_label(double nu) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "nu_%g", nu);
  return buf;
}

inline SweepMember run_sweep_member(const RunConfig& cfg, const InitialData& data, double nu,
                                    const InsTrajectory& reference) {
  RunConfig c = cfg;
  c.nu = nu;
  const CnsParams params = c.cns_params();
  CnsRunOptions options = c.cns_options();
  options.keep_snapshots = true;
  const CnsState initial{data.rho, data.v, 0.0};
  AuxiliaryDensityTracker aux(data.rho, c.lq_exponent);
  aux.observe(initial);
  aux.mark();
  CnsHooks hooks;
  hooks.on_step = [&aux](const CnsState& before, const CnsState& after) { aux.step(before, after); };
  hooks.on_record = [&aux](const CnsState&, const CnsRecord&) { aux.mark(); };

  SweepMember m;
  m.nu = nu;
  m.trajectory = cns_run(initial, params, options, hooks);
  m.metric = convergence_metric(m.trajectory.snapshots, reference.snapshots);
  m.sup_div_l2 = m.trajectory.sup_div_l2;
  m.sqrt_nu_sup_div_l2 = std::sqrt(nu) * m.sup_div_l2;
  m.grad_div_lq = m.trajectory.grad_div_lq;
  m.sup_r_lq = aux.sup_r_lq();
  m.auxiliary = aux.series();
  m.warnings = m.trajectory.warnings;
  const auto& recs = m.trajectory.records;
  m.initial_energy = recs.front().row.energy;
  m.max_energy_residual = -std::numeric_limits<double>::infinity();
  m.min_equivalence = std::numeric_limits<double>::infinity();
  m.max_equivalence = 0.0;
  m.min_rho = std::numeric_limits<double>::infinity();
  m.max_rho = 0.0;
  for (const auto& r : recs) {
    m.max_energy_residual = std::max(m.max_energy_residual, r.row.energy_residual);
    m.min_equivalence = std::min(m.min_equivalence, r.equivalence_ratio);
    m.max_equivalence = std::max(m.max_equivalence, r.equivalence_ratio);
    m.min_rho = std::min(m.min_rho, r.row.min_rho);
    m.max_rho = std::max(m.max_rho, r.row.max_rho);
  }
  m.mass_drift = std::abs(m.trajectory.final_mass - m.trajectory.initial_mass) / m.trajectory.initial_mass;
  return m;
}

inline CsvTable sweep_table(const SweepResult& r) {
  CsvTable t;
  t.header = {"nu",
              "metric",
              "sup_density",
              "sup_solenoidal",
              "sup_potential",
              "int_solenoidal_grad",
              "int_potential_h1",
              "sup_L2_divv",
              "sqrt_nu_sup_L2_divv",
              "Lq_grad_divv",
              "sup_Lq_r",
              "initial_energy",
              "max_energy_residual",
              "min_equivalence",
              "max_equivalence",
              "min_rho",
              "max_rho",
              "mass_drift"};
  for (const auto& m : r.members) {
    t.rows.push_back({m.nu, m.metric.total(), m.metric.sup_density, m.metric.sup_solenoidal, m.metric.sup_potential,
                      m.metric.int_solenoidal_grad, m.metric.int_potential_h1, m.sup_div_l2, m.sqrt_nu_sup_div_l2,
                      m.grad_div_lq, m.sup_r_lq, m.initial_energy, m.max_energy_residual, m.min_equivalence,
                      m.max_equivalence, m.min_rho, m.max_rho, m.mass_drift});
  }
  return t;
}

/// Quantities whose nu-dependence is fitted, with the column they come from.
inline const std::vector<std::pair<std::string, std::string>>& rate_columns() {
  static const std::vector<std::pair<std::string, std::string>> cols = {
      {"convergence_metric", "metric"},
      {"sup_L2_divv", "sup_L2_divv"},
      {"Lq_grad_divv", "Lq_grad_divv"},
      {"sup_Lq_r", "sup_Lq_r"}};
  return cols;
}

/// quantity, slope, intercept, r2 (intercept in natural log).
inline std::string rates_csv(const CsvTable& sweep) {
  const auto nus = sweep.values("nu");
  std::string out = "quantity,slope,intercept,r2\n";
  for (const auto& [name, col] : rate_columns()) {
    const auto vals = sweep.values(col);
    const RateFit f = fit_rate(vals, nus);
    out += name + "," + format_number(f.slope) + "," + format_number(f.intercept) + "," + format_number(f.r2) + "\n";
  }
  return out;
}

/// Whitespace-separated columns for plotting: nu followed by each fitted quantity.
inline std::string rates_dat(const CsvTable& sweep) {
  std::string out = "# nu";
  for (const auto& [name, col] : rate_columns()) out += " " + name;
  out += "\n";
  const auto nus = sweep.values("nu");
  for (std::size_t k = 0; k < nus.size(); ++k) {
    out += format_number(nus[k]);
    for (const auto& [name, col] : rate_columns()) out += " " + format_number(sweep.rows[k][sweep.column(col)]);
    out += "\n";
  }
  return out;
}

inline void write_member(const std::filesystem::path& dir, const SweepMember& m, bool snapshots) {
  write_csv(dir / "diagnostics.csv", series_table(m.trajectory));
  write_csv(dir / "norms.csv", norms_table(m.trajectory));
  CsvTable aux;
  aux.header = {"t", "Lq_r", "L2_r", "L2_rho_tilde"};
  for (const auto& p : m.auxiliary) aux.rows.push_back({p.t, p.r_lq, p.r_l2, p.rho_tilde_l2});
  write_csv(dir / "auxiliary.csv", aux);
  CsvTable metric;
  metric.header = {"t", "density", "solenoidal", "potential", "solenoidal_grad", "potential_h1"};
  for (std::size_t k = 0; k < m.metric.times.size(); ++k) {
    const auto& t = m.metric.terms[k];
    metric.rows.push_back({m.metric.times[k], t.density, t.solenoidal, t.potential, t.solenoidal_grad, t.potential_h1});
  }
  write_csv(dir / "metric.csv", metric);
  if (snapshots) write_snapshots(dir, m.trajectory.snapshots);
}

/// Runs the sweep. With out_dir set, per-member directories, sweep.csv and
/// rates.csv are written; when a member fails, the finished members are
/// still written before the error propagates.
inline SweepResult nu_sweep(const RunConfig& cfg, std::vector<double> nus, int threads,
                            const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  if (nus.size() < 3) throw InvalidArgument("nu_sweep needs at least 3 values of nu");
  for (std::size_t k = 1; k < nus.size(); ++k) {
    if (!(nus[k] > nus[k - 1])) throw InvalidArgument("nu list must be strictly increasing");
  }
  if (!(nus.front() > 0.0)) throw InvalidArgument("nu values must be positive");
  const Grid g = cfg.grid();
  const InitialData data = make_initial_data(g, cfg.initial);
  {
    const Field2D div = divergence(data.v);
    if (lp_norm(div, 2.0) > 1e-12 * std::max(1.0, h1_norm(data.v))) {
      throw InvalidArgument("nu_sweep requires divergence-free initial velocity");
    }
  }

  SweepResult result;
  result.nus = nus;
  InsRunOptions ins_opt = cfg.ins_options();
  ins_opt.keep_snapshots = true;
  result.reference = ins_run(InsState{data.rho, data.v, 0.0}, cfg.ins_params(), ins_opt);

  std::map<double, SweepMember> done;
  std::map<double, std::string> failures;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= nus.size()) return;
      try {
        SweepMember m = run_sweep_member(cfg, data, nus[k], result.reference);
        if (out_dir) write_member(*out_dir / nu_label(nus[k]), m, cfg.write_snapshots);
        m.trajectory.snapshots.clear();
        m.trajectory.snapshots.shrink_to_fit();
        std::lock_guard lock(mutex);
        done.emplace(nus[k], std::move(m));
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        failures.emplace(nus[k], e.what());
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(nus.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (auto& [nu, m] : done) result.members.push_back(std::move(m));
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    write_csv(*out_dir / "ins" / "diagnostics.csv", series_table(result.reference));
    write_csv(*out_dir / "ins" / "norms.csv", norms_table(result.reference));
    if (cfg.write_snapshots) write_snapshots(*out_dir / "ins", result.reference.snapshots);
    write_csv(*out_dir / "sweep.csv", sweep_table(result));
  }
  if (!failures.empty()) {
    std::string msg = "sweep aborted:";
    for (const auto& [nu, what] : failures) msg += " [" + nu_label(nu) + ": " + what + "]";
    throw Error(msg);
  }

  std::vector<double> metric, div, grad_div, rem;
  for (const auto& m : result.members) {
    metric.push_back(m.metric.total());
    div.push_back(m.sup_div_l2);
    grad_div.push_back(m.grad_div_lq);
    rem.push_back(m.sup_r_lq);
  }
  result.metric_rate = fit_rate(metric, nus);
  result.div_rate = fit_rate(div, nus);
  result.grad_div_rate = fit_rate(grad_div, nus);
  result.remainder_rate = fit_rate(rem, nus);
  if (out_dir) write_text(*out_dir / "rates.csv", rates_csv(sweep_table(result)));
  return result;
}

}  // namespace vislim

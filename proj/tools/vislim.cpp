// Command-line front end: single runs, transport checks, dispersion tables,
// the nu sweep and its post-processing.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vislim/config.hpp"
#include "vislim/diagnostics.hpp"
#include "vislim/initial_data.hpp"
#include "vislim/io.hpp"
#include "vislim/linear.hpp"
#include "vislim/sweep.hpp"
#include "vislim/transport_cases.hpp"

namespace fs = std::filesystem;
using namespace vislim;

namespace {

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InvalidArgument("not a number in list: '" + item + "'");
    out.push_back(x);
  }
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

int cns_run_command(const std::string& config_path, const std::string& out) {
  RunConfig cfg = load_config(config_path);
  const fs::path dir = out.empty() ? fs::path(cfg.output_dir) : fs::path(out);
  const InitialData data = make_initial_data(cfg.grid(), cfg.initial);
  CnsRunOptions opt = cfg.cns_options();
  opt.keep_snapshots = cfg.write_snapshots;
  opt.failure_snapshot = dir / "failure.vlf";
  fs::create_directories(dir);
  const CnsTrajectory traj = cns_run(CnsState{data.rho, data.v, 0.0}, cfg.cns_params(), opt);
  write_csv(dir / "diagnostics.csv", series_table(traj));
  write_csv(dir / "norms.csv", norms_table(traj));
  if (cfg.write_snapshots) write_snapshots(dir, traj.snapshots);
  for (const auto& w : traj.warnings) std::cerr << "warning: " << w << '\n';
  std::printf("cns-run: %lld steps, mass drift %.3g, output in %s\n", traj.steps,
              std::abs(traj.final_mass / traj.initial_mass - 1.0), dir.string().c_str());
  return 0;
}

int ins_run_command(const std::string& config_path, const std::string& out) {
  RunConfig cfg = load_config(config_path);
  const fs::path dir = out.empty() ? fs::path(cfg.output_dir) : fs::path(out);
  const InitialData data = make_initial_data(cfg.grid(), cfg.initial);
  InsRunOptions opt = cfg.ins_options();
  opt.keep_snapshots = cfg.write_snapshots;
  fs::create_directories(dir);
  const InsTrajectory traj = ins_run(InsState{data.rho, p_project(data.v), 0.0}, cfg.ins_params(), opt);
  write_csv(dir / "diagnostics.csv", series_table(traj));
  write_csv(dir / "norms.csv", norms_table(traj));
  if (cfg.write_snapshots) write_snapshots(dir, traj.snapshots);
  std::printf("ins-run: %lld steps, max pressure iterations %d, output in %s\n", traj.steps,
              traj.max_pressure_iterations, dir.string().c_str());
  return 0;
}

int dispersion_command(const std::string& nus, int kmax, double epsilon) {
  if (kmax < 1) throw InvalidArgument("--kmax must be >= 1");
  std::string out = "nu,k2,re_plus,im_plus,re_minus,im_minus\n";
  for (double nu : parse_list(nus)) {
    for (int k2 = 1; k2 <= kmax * kmax; ++k2) {
      const ModePair m = epsilon > 0.0 ? low_mach_roots(k2, nu, epsilon) : dispersion_roots(k2, nu);
      out += format_number(nu) + "," + std::to_string(k2) + "," + format_number(m.lambda_plus.real()) + "," +
             format_number(m.lambda_plus.imag()) + "," + format_number(m.lambda_minus.real()) + "," +
             format_number(m.lambda_minus.imag()) + "\n";
    }
  }
  std::fputs(out.c_str(), stdout);
  return 0;
}

int sweep_command(const std::string& config_path, const std::string& nus, const std::string& out) {
  RunConfig cfg = load_config(config_path);
  const std::vector<double> list = nus.empty() ? cfg.sweep_nus : parse_list(nus);
  const fs::path dir = out.empty() ? fs::path(cfg.output_dir) : fs::path(out);
  const SweepResult r = nu_sweep(cfg, list, sweep_threads_from_env(), dir);
  for (const auto& m : r.members) {
    for (const auto& w : m.warnings) std::cerr << "warning [" << nu_label(m.nu) << "]: " << w << '\n';
  }
  std::printf("sweep: %zu members, metric slope %.4f, div slope %.4f, grad-div slope %.4f, r slope %.4f\n",
              r.members.size(), r.metric_rate->slope, r.div_rate->slope, r.grad_div_rate->slope,
              r.remainder_rate->slope);
  return 0;
}

int compare_command(const std::string& cns_dir, const std::string& ins_dir) {
  const auto cns = read_snapshots(cns_dir);
  const auto ins = read_snapshots(ins_dir);
  const ConvergenceMetric m = convergence_metric(cns, ins);
  std::string out = "t,density,solenoidal,potential,solenoidal_grad,potential_h1\n";
  for (std::size_t k = 0; k < m.times.size(); ++k) {
    const auto& t = m.terms[k];
    out += format_number(m.times[k]) + "," + format_number(t.density) + "," + format_number(t.solenoidal) + "," +
           format_number(t.potential) + "," + format_number(t.solenoidal_grad) + "," + format_number(t.potential_h1) +
           "\n";
  }
  out += "# sup_density=" + format_number(m.sup_density) + " sup_solenoidal=" + format_number(m.sup_solenoidal) +
         " sup_potential=" + format_number(m.sup_potential) + " sup_sum=" + format_number(m.sup_sum) +
         " int_solenoidal_grad=" + format_number(m.int_solenoidal_grad) +
         " int_potential_h1=" + format_number(m.int_potential_h1) + " total=" + format_number(m.total()) + "\n";
  std::fputs(out.c_str(), stdout);
  return 0;
}

int report_command(const std::string& sweep_dir) {
  const fs::path dir(sweep_dir);
  const CsvTable t = read_csv(dir / "sweep.csv");
  const std::string rates = rates_csv(t);
  write_text(dir / "rates.csv", rates);
  write_text(dir / "rates.dat", rates_dat(t));
  std::fputs(rates.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vislim: compressible flow at large volume viscosity and its incompressible limit"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  auto* cns = app.add_subcommand("cns-run", "Run the compressible solver");
  cns->add_option("--config", config, "Run configuration")->required()->check(CLI::ExistingFile);
  cns->add_option("--out", out, "Output directory (default: output.dir)");

  auto* ins = app.add_subcommand("ins-run", "Run the incompressible reference solver");
  ins->add_option("--config", config, "Run configuration")->required()->check(CLI::ExistingFile);
  ins->add_option("--out", out, "Output directory (default: output.dir)");

  std::string case_name;
  int threads = 1;
  auto* tc = app.add_subcommand("transport-check", "Run a named characteristics check (CSV on stdout)");
  tc->add_option("--case", case_name, "Case name or 'all'")->required();
  tc->add_option("--threads", threads, "Particle threads")->check(CLI::PositiveNumber);

  std::string nus;
  int kmax = 4;
  double epsilon = 0.0;
  auto* disp = app.add_subcommand("dispersion", "Roots of the linearised per-mode system (CSV on stdout)");
  disp->add_option("--nu", nus, "Comma-separated list of nu")->required();
  disp->add_option("--kmax", kmax, "Largest |k|; rows for |k|^2 = 1 .. kmax^2");
  disp->add_option("--epsilon", epsilon, "Mach parameter for the low-Mach scaling (0: off)");

  auto* sweep = app.add_subcommand("sweep", "nu sweep against the incompressible reference");
  sweep->add_option("--config", config, "Sweep template configuration")->required()->check(CLI::ExistingFile);
  sweep->add_option("--nus", nus, "Comma-separated nu list (default: sweep.nus)");
  sweep->add_option("--out", out, "Output directory (default: output.dir)");

  std::string cns_dir;
  std::string ins_dir;
  auto* cmp = app.add_subcommand("compare", "Distance between a compressible and an incompressible run");
  cmp->add_option("--cns", cns_dir, "cns-run output directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("--ins", ins_dir, "ins-run output directory")->required()->check(CLI::ExistingDirectory);

  std::string sweep_dir;
  auto* rep = app.add_subcommand("report", "Rate table and plot data from a sweep directory");
  rep->add_option("--sweep", sweep_dir, "sweep output directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cns) return cns_run_command(config, out);
    if (*ins) return ins_run_command(config, out);
    if (*tc) {
      std::vector<std::string> names =
          case_name == "all" ? transport_case_names() : std::vector<std::string>{case_name};
      std::string csv = "case,probe,value,reference,abs_error\n";
      for (const auto& n : names) {
        const std::string part = transport_csv(n, transport_case(n, threads));
        csv += part.substr(part.find('\n') + 1);
      }
      std::fputs(csv.c_str(), stdout);
      return 0;
    }
    if (*disp) return dispersion_command(nus, kmax, epsilon);
    if (*sweep) return sweep_command(config, nus, out);
    if (*cmp) return compare_command(cns_dir, ins_dir);
    if (*rep) return report_command(sweep_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

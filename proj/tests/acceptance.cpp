// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "vislim/vislim.hpp"

namespace fs = std::filesystem;
using namespace vislim;
using namespace vislim::test;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [out of range]");
  }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

struct Context {
  fs::path source;
  fs::path cli;
  fs::path work;
  std::optional<SweepResult> sweep;

  const SweepResult& flagship() {
    if (!sweep) {
      const RunConfig cfg = load_config(source / "configs/sweep.toml");
      sweep = nu_sweep(cfg, cfg.sweep_nus, sweep_threads_from_env(), work / "sweep");
    }
    return *sweep;
  }
};

Outcome metric_rate(Context& ctx) {
  Outcome o;
  const SweepResult& r = ctx.flagship();
  std::string values;
  for (const auto& m : r.members) values += (values.empty() ? "" : ", ") + fmt("%.4g", m.metric.total());
  o.check(within(r.metric_rate->slope, -1.25, -0.75),
          "metric slope " + fmt("%.4f", r.metric_rate->slope) + " (target [-1.25, -0.75]; values " + values + ")");
  return o;
}

Outcome div_rates(Context& ctx) {
  Outcome o;
  const SweepResult& r = ctx.flagship();
  o.check(within(r.div_rate->slope, -0.65, -0.35),
          "sup_t ||div v||_2 slope " + fmt("%.4f", r.div_rate->slope) + " (target [-0.65, -0.35])");
  o.check(within(r.grad_div_rate->slope, -1.25, -0.75),
          "||grad div v||_Lq slope " + fmt("%.4f", r.grad_div_rate->slope) + " (target [-1.25, -0.75])");
  return o;
}

Outcome remainder_rate(Context& ctx) {
  Outcome o;
  const SweepResult& r = ctx.flagship();
  o.check(within(r.remainder_rate->slope, -1.25, -0.75),
          "sup_t ||r||_q slope " + fmt("%.4f", r.remainder_rate->slope) + " (target [-1.25, -0.75])");
  return o;
}

Outcome energy_inequality(Context& ctx) {
  Outcome o;
  for (const auto& m : ctx.flagship().members) {
    const double rel = m.max_energy_residual / m.initial_energy;
    o.check(rel <= 1e-6, nu_label(m.nu) + " max residual/E0 " + fmt("%.3g", rel) + " (limit 1e-6)");
  }
  return o;
}

Outcome energy_equivalence(Context& ctx) {
  Outcome o;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& m : ctx.flagship().members) {
    lo = std::min(lo, m.min_equivalence);
    hi = std::max(hi, m.max_equivalence);
  }
  const double c = std::max(hi, 1.0 / lo);
  o.check(c <= 4.0, "ratio range [" + fmt("%.4f", lo) + ", " + fmt("%.4f", hi) + "], C = " + fmt("%.4f", c) +
                        " (limit 4)");
  return o;
}

LinearMode mode_of(const CnsState& s, int i, int j) {
  const Spectrum r = forward(s.rho);
  const VectorSpectrum v = forward(s.v);
  return {s.rho.grid().wavenumber(i), j, r(i, j), v.x(i, j), v.y(i, j)};
}

double mode_distance(const LinearMode& a, const LinearMode& b) {
  return std::sqrt(std::norm(a.eta - b.eta) + std::norm(a.v1 - b.v1) + std::norm(a.v2 - b.v2));
}

double mode_size(const LinearMode& a) { return std::sqrt(std::norm(a.eta) + std::norm(a.v1) + std::norm(a.v2)); }

// Worst relative mode error over t in [0, 1] for a small perturbation of the
// rest state under the given law.
double linear_mismatch(const PressureLaw& law, const LinearCoefficients& coef, double nu) {
  const Grid g(16);
  const double a = 1e-6;
  CnsState s{Field2D::sample(g, [a](double x1, double x2) { return 1.0 + a * std::cos(x1) + 0.5 * a * std::sin(x1 + x2); }),
             VectorField2D{Field2D::sample(g, [a](double x1, double) { return 0.5 * a * std::sin(x1); }),
                           Field2D::sample(g, [a](double, double x2) { return 0.4 * a * std::cos(x2); })},
             0.0};
  const std::vector<std::pair<int, int>> modes{{1, 0}, {0, 1}, {1, 1}};
  std::vector<LinearMode> initial;
  for (const auto& [i, j] : modes) initial.push_back(mode_of(s, i, j));
  CnsParams p;
  p.law = law;
  p.nu = nu;
  p.dt = 1e-4;
  p.t_end = 1.0;
  p.time_order = 2;
  CnsIntegrator integ(p);
  double worst = 0.0;
  for (int k = 1; k <= 10000; ++k) {
    s = integ.step(s);
    if (k % 100) continue;
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const LinearMode exact = evolve_linear(initial[m], nu, k * p.dt, coef);
      worst = std::max(worst, mode_distance(mode_of(s, modes[m].first, modes[m].second), exact) / mode_size(initial[m]));
    }
  }
  return worst;
}

Outcome linear_oracle(Context&) {
  Outcome o;
  const PressureLaw unit = PressureLaw::gamma_law(0.5, 2.0, 1.0);
  const PressureLaw standard = PressureLaw::gamma_law(1.0, 2.0, 1.0);
  for (double nu : {0.0, 10.0, 1e3}) {
    const double e = linear_mismatch(unit, {}, nu);
    o.check(e <= 1e-4, "P'=1 nu=" + fmt("%g", nu) + " rel err " + fmt("%.3g", e));
  }
  for (double nu : {0.0, 10.0, 1e3}) {
    const double e = linear_mismatch(standard, {1.0, 2.0}, nu);
    o.check(e <= 1e-4, "P'=2 (rescaled) nu=" + fmt("%g", nu) + " rel err " + fmt("%.3g", e));
  }
  const ModePair r = dispersion_roots(1.0, 3.0);
  const double e1 = std::abs(r.lambda_plus - complex{-2.0 + std::sqrt(3.0), 0.0});
  const double e2 = std::abs(r.lambda_minus - complex{-2.0 - std::sqrt(3.0), 0.0});
  o.check(std::max(e1, e2) <= 1e-12, "dispersion_roots(1, 3) error " + fmt("%.3g", std::max(e1, e2)));
  return o;
}

double sin_x1(double x1, double) { return std::sin(x1); }
double sin_x2(double, double x2) { return std::sin(x2); }
double zero(double, double) { return 0.0; }
double rho0(double x1, double x2) { return 1.0 + 0.3 * std::cos(x1 + 0.4) + 0.2 * std::sin(x2) * std::cos(x1); }

Outcome characteristics(Context&) {
  Outcome o;
  const Grid g(64);
  const Field2D r0 = Field2D::sample(g, rho0);
  for (const auto& [name, v1] : {std::pair{"shear (sin x2, 0)", sin_x2}, std::pair{"compressive (sin x1, 0)", sin_x1}}) {
    const Field2D rho = transport_solve_characteristics(r0, VelocitySeries(VectorField2D{Field2D::sample(g, v1), Field2D(g)}), 0.5);
    const Field2D ref = spectral_continuity_solve(Grid(256), v1, zero, rho0, 0.5, 1e-3);
    const double d = l2_distance_on_coarse(rho, ref);
    o.check(d <= 1e-6, std::string(name) + " L2 distance to n=256 spectral solve " + fmt("%.3g", d));
  }
  const VelocitySeries v(VectorField2D{Field2D::sample(g, sin_x1), Field2D(g)});
  std::vector<double> disc;
  for (int m : {32, 64, 128}) disc.push_back(jacobian_check(flow_map(v, seed_grid(m), {0.3}), 0.3).max_discrepancy);
  o.check(disc[2] <= 1e-4, "Jacobian discrepancy at 128^2 seeds " + fmt("%.3g", disc[2]) + " (limit 1e-4)");
  o.check(disc[0] / disc[1] >= 4.0 && disc[1] / disc[2] >= 4.0,
          "refinement factors " + fmt("%.4f", disc[0] / disc[1]) + ", " + fmt("%.4f", disc[1] / disc[2]) + " (need >= 4)");
  return o;
}

Outcome ins_exactness(Context&) {
  Outcome o;
  const Grid g(64);
  {
    InitialDataSpec spec;
    spec.generator = "taylor-green";
    spec.velocity_h1 = 0.0;
    const InitialData d = make_initial_data(g, spec);
    InsParams p;
    p.dt = 5e-4;
    p.t_end = 0.5;
    p.time_order = 2;
    const InsState s0{d.rho, d.v, 0.0};
    const InsTrajectory traj = ins_run(s0, p);
    const VectorField2D diff = traj.final_state->u - s0.u * std::exp(-1.0);
    const double rel = std::sqrt(l2_inner(diff, diff) / l2_inner(s0.u, s0.u)) * std::exp(1.0);
    o.check(rel <= 1e-6, "Taylor-Green relative error at t=0.5 " + fmt("%.3g", rel));
  }
  InitialDataSpec spec;
  spec.rho_amplitude = 0.2;
  spec.velocity_h1 = 4.0;
  const InitialData d = make_initial_data(g, spec);
  InsParams p;
  p.dt = 1e-3;
  p.t_end = 1.0;
  p.time_order = 2;
  double worst_div = 0.0;
  InsHooks hooks;
  hooks.on_step = [&](const InsState&, const InsState& after, const ProjectionReport&) {
    worst_div = std::max(worst_div, lp_norm(divergence(after.u), 2.0) / h1_norm(after.u));
  };
  const InsTrajectory traj = ins_run(InsState{d.rho, d.v, 0.0}, p, {}, hooks);
  o.check(worst_div <= 1e-10, "max ||div u||/||u||_H1 over steps " + fmt("%.3g", worst_div));
  const auto& first = traj.records.front();
  double drift = 0.0;
  for (const auto& r : traj.records) {
    drift = std::max({drift, std::abs(r.eta_l2 / first.eta_l2 - 1.0), std::abs(r.eta_l4 / first.eta_l4 - 1.0),
                      std::abs(r.eta_sup / first.eta_sup - 1.0)});
  }
  o.check(drift <= 1e-8, "max relative drift of ||eta||_2, ||eta||_4, ||eta||_inf " + fmt("%.3g", drift));
  return o;
}

Outcome projectors(Context&) {
  Outcome o;
  const Grid g(64);
  double idem = 0.0;
  double comp = 0.0;
  double orth = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const VectorField2D v = random_vector(g, seed, 1 + static_cast<int>(seed % 21));
    const double scale = std::max(max_abs(v.x), max_abs(v.y));
    const VectorField2D p = p_project(v);
    const VectorField2D q = q_project(v);
    idem = std::max({idem, max_abs_diff(p_project(p), p) / scale, max_abs_diff(q_project(q), q) / scale});
    comp = std::max(comp, max_abs_diff(p + q, v) / scale);
    orth = std::max(orth, std::abs(l2_inner(p, q)) / l2_inner(v, v));
  }
  o.check(idem <= 1e-10, "idempotence " + fmt("%.3g", idem));
  o.check(comp <= 1e-10, "complementarity " + fmt("%.3g", comp));
  o.check(orth <= 1e-10, "orthogonality " + fmt("%.3g", orth));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(Context& ctx) {
  Outcome o;
  const fs::path config = ctx.source / "configs/sweep.toml";
  std::vector<fs::path> dirs;
  for (int threads : {1, 3}) {
    const fs::path dir = ctx.work / ("determinism_" + std::to_string(dirs.size()) + "_t" + std::to_string(threads));
    fs::remove_all(dir);
    const std::string cmd = "VISLIM_THREADS=" + std::to_string(threads) + " \"" + ctx.cli.string() + "\" sweep --config \"" +
                            config.string() + "\" --out \"" + dir.string() + "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      o.check(false, "cli sweep failed: " + cmd);
      return o;
    }
    dirs.push_back(dir);
  }
  std::set<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
    if (e.is_regular_file()) files.insert(fs::relative(e.path(), dirs[0]));
  }
  int differing = 0;
  for (const auto& f : files) {
    const std::string ref = slurp(dirs[0] / f);
    for (std::size_t k = 1; k < dirs.size(); ++k) differing += slurp(dirs[k] / f) != ref;
  }
  o.check(files.size() >= 10 && differing == 0,
          std::to_string(files.size()) + " files compared between runs with 1 and 3 threads, " +
              std::to_string(differing) + " differ");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  Context ctx;
  std::string source = VISLIM_SOURCE_DIR;
  std::string cli;
  std::string work = (fs::temp_directory_path() / "vislim_acceptance").string();
  std::vector<int> only;
  app.add_option("--source", source, "Source tree (configs/)");
  app.add_option("--cli", cli, "Path of the vislim executable")->required();
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  ctx.source = source;
  ctx.cli = cli;
  ctx.work = work;
  fs::create_directories(ctx.work);

  const std::vector<Criterion> criteria = {
      {1, "convergence-metric rate", metric_rate},
      {2, "divergence rates", div_rates},
      {3, "auxiliary-density rate", remainder_rate},
      {4, "energy inequality", energy_inequality},
      {5, "energy equivalence", energy_equivalence},
      {6, "linear oracle", linear_oracle},
      {7, "characteristics oracle", characteristics},
      {8, "incompressible exactness", ins_exactness},
      {9, "projector suite", projectors},
      {10, "determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

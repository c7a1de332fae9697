// shnse: eigen | run | sweep | verify | pressure
#include "CLI11.hpp"

#include "shnse/acceptance.hpp"
#include "shnse/harness.hpp"

#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace shnse;

namespace {

struct Common {
  std::string config;
  std::string out;
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "plan file (INI)");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory (overrides SHNSE_OUT_DIR and output.dir)");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "run with this single seed");
}

ExperimentPlan load_plan(const Common& c) {
  ExperimentPlan p = load_config(c.config);
  if (c.seed) p.seeds = {*c.seed};
  for (const auto& w : p.warnings) std::cerr << "warning: " << w << '\n';
  return p;
}

void echo_plan(const ExperimentPlan& p) {
  for (const auto& [k, v] : p.echo()) std::cout << "  " << k << " = " << v << '\n';
}

int cmd_eigen(const Common& c) {
  const ExperimentPlan p = load_plan(c);
  const std::string out = resolve_out_dir(p, c.out);
  const std::string cache = p.cache_dir.empty() ? (fs::path(out) / "cache").string() : p.cache_dir;
  const Grid g = build_grid(p.grid);
  const PlanSpectrum ps = plan_spectrum(g, p.modes, cache);
  fs::create_directories(out);
  std::vector<std::vector<std::string>> rows;
  for (int j = 0; j < ps.spectrum.size(); ++j)
    rows.push_back({std::to_string(j + 1), fmt_double(ps.spectrum.lambdas[j])});
  write_csv((fs::path(out) / "eigenvalues.csv").string(), {"j", "lambda"}, rows);
  std::cout << "grid " << grid_label(p.grid) << ", " << ps.spectrum.size() << " modes\n";
  for (int j = 0; j < std::min(5, ps.spectrum.size()); ++j)
    std::cout << "  lambda_" << j + 1 << " = " << fmt_double(ps.spectrum.lambdas[j]) << '\n';
  std::cout << "cache " << ps.cache_path << "\nsha256 " << ps.cache_hash << '\n';
  return 0;
}

int cmd_run(const Common& c, bool sweep) {
  ExperimentPlan p = load_plan(c);
  if (!sweep) {
    p.axis = SweepAxis::None;
    p.values.clear();
  } else if (p.axis == SweepAxis::None) {
    std::cerr << "warning: plan has no sweep axis; running a single point\n";
  }
  const std::string out = resolve_out_dir(p, c.out);
  std::cout << "plan:\n";
  echo_plan(p);
  const ResultBundle b = run_experiment(p, c.threads, &std::cout);
  emit_outputs(b, out);
  for (const auto& t : b.trends) {
    std::cout << "theta=" << fmt_double(t.theta) << " rho(T):";
    for (std::size_t i = 0; i < t.values.size(); ++i)
      std::cout << ' ' << fmt_double(t.values[i]) << ':' << fmt_double(t.rho[i]);
    if (!std::isnan(t.slope)) std::cout << "  slope " << fmt_double(t.slope);
    std::cout << '\n';
  }
  std::cout << "outputs in " << out << (b.partial ? " (partial)" : "") << '\n';
  return b.partial ? 2 : 0;
}

int cmd_verify(const Common& c, const std::vector<int>& only) {
  AcceptanceOptions o;
  o.threads = c.threads;
  if (!c.out.empty()) o.work_dir = c.out;
  else if (const char* env = std::getenv("SHNSE_OUT_DIR"); env && *env) o.work_dir = env;
  o.only = only;
  o.log = &std::cout;
  const auto res = run_acceptance(o);
  int passed = 0;
  for (const auto& r : res) passed += r.pass;
  std::cout << passed << "/" << res.size() << " criteria passed\n";
  return passed == static_cast<int>(res.size()) ? 0 : 2;
}

int cmd_pressure(const Common& c, const std::vector<int>& grids, int modes, const std::string& flux) {
  GridSpec base{2, {16, 16, 1}, {1.0, 1.0, 1.0}};
  std::string out = c.out;
  std::string cache;
  if (!c.config.empty()) {
    const ExperimentPlan p = load_plan(c);
    base = p.grid;
    out = resolve_out_dir(p, c.out);
    cache = p.cache_dir;
  } else if (out.empty()) {
    const char* env = std::getenv("SHNSE_OUT_DIR");
    out = env && *env ? env : "out";
  }
  const FluxRule rule = parse_flux_rule(flux);
  fs::create_directories(out);
  std::vector<std::vector<std::string>> rows;
  for (int N : grids) {
    GridSpec s = base;
    for (int a = 0; a < s.dim; ++a) s.cells[a] = N;
    const Grid g = build_grid(s);
    const NeumannPoisson P(g);
    const StokesSpectrum sp = plan_spectrum(g, modes, cache).spectrum;
    for (int j = 0; j < sp.size(); ++j) {
      const VelocityField e = sp.E.col(j);
      const double ra = stokes_apply_via_pressure(g, P, sp, e, rule).residual;
      const double rb = biharmonic_identity_residual(g, P, sp, e, 1);
      const VelocityField ref = spectral_apply_power(g, sp, e, 2.0);
      const double rc = g.norm(biharmonic_composed(g, P, e, rule) - ref) / g.norm(ref);
      rows.push_back({std::to_string(N), std::to_string(j + 1), fmt_double(sp.lambdas[j]), fmt_double(ra),
                      fmt_double(rb), fmt_double(rc)});
      std::cout << N << "^" << s.dim << " mode " << j + 1 << ": A " << ra << "  A^2 " << rb << "  A_h(A_h) " << rc
                << '\n';
    }
  }
  write_csv((fs::path(out) / "pressure_identities.csv").string(),
            {"cells", "mode", "lambda", "residual_A", "residual_A2", "residual_A2_composed"}, rows);
  std::cout << "wrote " << (fs::path(out) / "pressure_identities.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-Galerkin laboratory for hyperviscous Navier-Stokes on a MAC grid"};
  app.require_subcommand(1);
  Common eigen, run, sweep, verify, pressure;
  auto* se = app.add_subcommand("eigen", "build and cache the Stokes spectrum");
  add_common(se, eigen, true);
  auto* sr = app.add_subcommand("run", "single simulation");
  add_common(sr, run, true);
  auto* ss = app.add_subcommand("sweep", "experiment plan with a sweep axis");
  add_common(ss, sweep, true);
  auto* sv = app.add_subcommand("verify", "acceptance suite");
  add_common(sv, verify, false);
  std::vector<int> only;
  sv->add_option("--only", only, "criteria to run (1-10)")->check(CLI::Range(1, 10));
  auto* sp = app.add_subcommand("pressure", "Stokes-pressure identity residual study");
  add_common(sp, pressure, false);
  std::vector<int> grids{16, 32, 48};
  int modes = 10;
  std::string flux = "one_sided";
  sp->add_option("--grids", grids, "cells per axis")->check(CLI::Range(8, 4096));
  sp->add_option("--modes", modes, "eigenfields per grid")->check(CLI::PositiveNumber);
  sp->add_option("--flux", flux, "one_sided | conservative");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    if (*se) return cmd_eigen(eigen);
    if (*sr) return cmd_run(run, false);
    if (*ss) return cmd_run(sweep, true);
    if (*sv) return cmd_verify(verify, only);
    if (*sp) return cmd_pressure(pressure, grids, modes, flux);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

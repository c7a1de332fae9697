#include "shnse/harness.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <ostream>
#include <thread>

namespace shnse {

namespace fs = std::filesystem;

std::string grid_label(const GridSpec& s) {
  std::string l = std::to_string(s.dim) + "d_";
  for (int a = 0; a < s.dim; ++a) l += (a ? "x" : "") + std::to_string(s.cells[a]);
  l += "_L";
  for (int a = 0; a < s.dim; ++a) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.6g", a ? "x" : "", s.lengths[a]);
    l += buf;
  }
  return l;
}

PlanSpectrum plan_spectrum(const Grid& g, int modes, const std::string& cache_dir) {
  PlanSpectrum out;
  if (cache_dir.empty()) {
    out.spectrum = compute_stokes_spectrum(g, modes);
    return out;
  }
  fs::create_directories(cache_dir);
  out.cache_path = (fs::path(cache_dir) / ("stokes_" + grid_label(g.spec()) + ".bin")).string();
  out.spectrum = load_or_compute_spectrum(g, modes, out.cache_path);
  out.cache_hash = load_spectrum(out.cache_path, g.spec()).hash_hex();
  return out;
}

std::string resolve_out_dir(const ExperimentPlan& plan, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SHNSE_OUT_DIR"); env && *env) return env;
  return plan.out_dir;
}

namespace {

struct GridContext {
  explicit GridContext(const GridSpec& s) : g(build_grid(s)), poisson(g) {}
  Grid g;
  NeumannPoisson poisson;
  PlanSpectrum ps;
};

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

GridSpec point_grid(const ExperimentPlan& p, double value) {
  GridSpec s = p.grid;
  if (p.axis == SweepAxis::Grid)
    for (int a = 0; a < s.dim; ++a) s.cells[a] = static_cast<int>(value);
  return s;
}

SimulationConfig spectral_config(const ExperimentPlan& p, const Vec& lambdas, double mu, int m, std::uint64_t seed,
                                 bool estimate) {
  SimulationConfig c;
  c.nu = p.nu;
  c.n = p.modes;
  c.dt = p.dt;
  c.T = p.T;
  c.sample_every = p.sample_every;
  c.nonlinear = p.nonlinear;
  c.seed = seed;
  c.estimate_error = estimate;
  c.initial = make_initial(lambdas, p.modes, p.initial_gamma, p.initial_scale, seed);
  c.forcing = make_forcing(p.modes, p.forcing_band, p.forcing_amplitude, seed);
  c.profile = build_dissipation_profile(p.alpha, std::min(p.m0, m), m, p.ramp, mu, lambdas);
  return c;
}

double point_mu(const ExperimentPlan& p, double value) { return p.axis == SweepAxis::Mu ? value : p.mu; }
int point_m(const ExperimentPlan& p, double value) {
  return p.axis == SweepAxis::M ? static_cast<int>(value) : p.effective_m();
}

bool needs_reference(const ExperimentPlan& p) {
  return p.axis == SweepAxis::Mu || p.axis == SweepAxis::M || p.mu > 0.0;
}

void run_pool(std::vector<std::function<void()>>& tasks, int threads) {
  const int k = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) tasks[i]();
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < k; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

void run_grid_path(const ExperimentPlan& p, const GridContext& ctx, const GalerkinModel& model,
                   const SimulationConfig& sc, int m, PointResult& r) {
  if (p.alpha != 2) throw ConfigError("grid path supports alpha = 2 only");
  GridRunConfig gc;
  gc.nu = p.nu;
  gc.mu = sc.profile.mu;
  gc.dt = p.grid_dt > 0.0 ? p.grid_dt : p.dt;
  gc.T = p.T;
  const double ratio = p.sample_every * p.dt / gc.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw ConfigError("grid_path.dt must divide the spectral sampling interval");
  gc.sample_every = static_cast<int>(std::lround(ratio));
  gc.nonlinear = p.nonlinear;
  gc.extended = p.grid_extended;
  gc.flux = p.effective_flux();
  const int nstar = p.grid_truncation.value_or(m);
  if (nstar > 0) gc.truncation = nstar;
  gc.initial = model.reconstruct(sc.initial);
  gc.forcing = model.reconstruct(sc.forcing);
  const GridModel gm(ctx.g, ctx.poisson, &ctx.ps.spectrum, gc);
  const GridTrajectory gt = gm.simulate();
  if (gt.blew_up) throw std::runtime_error("grid path: " + gt.failure);
  r.grid_ran = true;
  r.grid_div = divergence_monitor(ctx.g, gt);
  r.grid_gn = gt.gn_norm;
  if (p.formulation == Formulation::Both) {
    const std::size_t S = std::min(gt.fields.size(), r.traj.samples());
    for (std::size_t s = 0; s < S; ++s) {
      const VelocityField us = model.reconstruct(r.traj.coeffs.col(static_cast<Eigen::Index>(s)));
      const double den = ctx.g.norm(us);
      const double d = ctx.g.norm(gt.fields[s] - us);
      r.grid_gap.push_back(den > 0.0 ? d / den : d);
    }
  }
}

std::vector<SweepTrend> compute_trends(const ExperimentPlan& p, const std::vector<PointResult>& pts) {
  std::vector<SweepTrend> out;
  if (p.axis != SweepAxis::Mu && p.axis != SweepAxis::M) return out;
  for (std::size_t t = 0; t < p.thetas.size(); ++t) {
    SweepTrend tr;
    tr.theta = p.thetas[t];
    for (double v : p.values) {
      double sum = 0.0;
      int cnt = 0;
      for (const auto& r : pts)
        if (r.value == v && r.ok && r.has_reference) {
          sum += r.conv[t].rho_T;
          ++cnt;
        }
      if (cnt == 0) continue;
      tr.values.push_back(v);
      tr.rho.push_back(sum / cnt);
    }
    // ordered by decreasing mu / increasing m
    std::vector<double> seq = tr.rho;
    if (p.axis == SweepAxis::Mu) std::reverse(seq.begin(), seq.end());
    tr.strictly_decreasing = seq.size() >= 2;
    tr.nonincreasing = true;
    for (std::size_t i = 1; i < seq.size(); ++i) {
      if (!(seq[i] < seq[i - 1])) tr.strictly_decreasing = false;
      if (seq[i] > seq[i - 1]) tr.nonincreasing = false;
    }
    if (p.axis == SweepAxis::Mu) {
      std::vector<double> x, y;
      for (std::size_t i = 0; i < tr.values.size(); ++i)
        if (tr.values[i] > 0.0 && tr.rho[i] > 0.0) {
          x.push_back(tr.values[i]);
          y.push_back(tr.rho[i]);
        }
      tr.slope = x.size() >= 2 ? loglog_slope(x, y) : std::nan("");
    } else {
      tr.slope = std::nan("");
    }
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace

ResultBundle run_experiment(const ExperimentPlan& plan, int threads, std::ostream* log) {
  ResultBundle b;
  b.plan = plan;
  std::mutex log_mu;
  auto say = [&](const std::string& s) {
    if (!log) return;
    std::lock_guard<std::mutex> lk(log_mu);
    *log << s << '\n';
  };
  for (const auto& w : plan.warnings) say("warning: " + w);

  std::vector<double> values = plan.values;
  if (plan.axis == SweepAxis::None) values = {0.0};

  // one context per distinct grid; spectra are built sequentially before the pool starts
  std::map<std::string, std::unique_ptr<GridContext>> grids;
  std::map<std::string, std::string> grid_failure;
  for (double v : values) {
    const GridSpec s = point_grid(plan, v);
    const std::string label = grid_label(s);
    if (grids.count(label) || grid_failure.count(label)) continue;
    try {
      auto ctx = std::make_unique<GridContext>(s);
      ctx->ps = plan_spectrum(ctx->g, plan.modes, plan.cache_dir);
      b.spectrum_hashes[label] = ctx->ps.spectrum.hash_hex();
      if (!ctx->ps.cache_path.empty()) b.cache_files[label] = ctx->ps.cache_path + " " + ctx->ps.cache_hash;
      say("spectrum " + label + " lambda_1=" + fmt_double(ctx->ps.spectrum.lambdas[0]) +
          " sha256=" + b.spectrum_hashes[label]);
      grids[label] = std::move(ctx);
    } catch (const std::exception& e) {
      grid_failure[label] = e.what();
      say("spectrum " + label + " failed: " + e.what());
    }
  }

  // reference runs: mu = 0, one per (grid, seed)
  std::map<std::pair<std::string, std::uint64_t>, Trajectory> refs;
  std::map<std::pair<std::string, std::uint64_t>, std::string> ref_failure;
  if (needs_reference(plan)) {
    std::vector<std::pair<std::string, std::uint64_t>> keys;
    for (const auto& [label, _] : grids)
      for (auto seed : plan.seeds) keys.emplace_back(label, seed);
    std::vector<Trajectory> out(keys.size());
    std::vector<std::string> err(keys.size());
    std::vector<std::function<void()>> tasks;
    for (std::size_t i = 0; i < keys.size(); ++i)
      tasks.emplace_back([&, i] {
        try {
          const GridContext& ctx = *grids.at(keys[i].first);
          const SimulationConfig c =
              spectral_config(plan, ctx.ps.spectrum.lambdas, 0.0, plan.effective_m(), keys[i].second, false);
          out[i] = GalerkinModel(ctx.g, ctx.ps.spectrum, c).simulate();
          if (out[i].blew_up) err[i] = "reference run: " + out[i].failure;
        } catch (const std::exception& e) {
          err[i] = std::string("reference run: ") + e.what();
        }
      });
    run_pool(tasks, threads);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (err[i].empty()) refs[keys[i]] = std::move(out[i]);
      else ref_failure[keys[i]] = err[i];
    }
  }

  std::vector<PointResult> pts;
  for (double v : values)
    for (auto seed : plan.seeds) {
      PointResult r;
      r.value = v;
      r.seed = seed;
      r.run_id = plan.axis == SweepAxis::None
                     ? "run_s" + std::to_string(seed)
                     : std::string(sweep_axis_name(plan.axis)) + "_" + fmt_short(v) + "_s" + std::to_string(seed);
      pts.push_back(std::move(r));
    }

  std::vector<std::function<void()>> tasks;
  for (auto& r : pts)
    tasks.emplace_back([&] {
      try {
        const std::string label = grid_label(point_grid(plan, r.value));
        if (grid_failure.count(label)) throw std::runtime_error("spectrum: " + grid_failure.at(label));
        const GridContext& ctx = *grids.at(label);
        r.spectrum_hash = ctx.ps.spectrum.hash_hex();
        const int m = point_m(plan, r.value);
        const SimulationConfig c =
            spectral_config(plan, ctx.ps.spectrum.lambdas, point_mu(plan, r.value), m, r.seed, plan.estimate_error);
        const GalerkinModel model(ctx.g, ctx.ps.spectrum, c);
        r.traj = model.simulate();
        if (r.traj.blew_up) throw std::runtime_error(r.traj.failure);
        r.diag = norms_and_energy(r.traj, ctx.ps.spectrum.lambdas, plan.thetas, audit_params(c));
        if (needs_reference(plan)) {
          const auto key = std::make_pair(label, r.seed);
          if (ref_failure.count(key)) throw std::runtime_error(ref_failure.at(key));
          for (double th : plan.thetas)
            r.conv.push_back(convergence_metric(r.traj, refs.at(key), ctx.ps.spectrum.lambdas, th));
          r.has_reference = true;
        }
        if (plan.formulation != Formulation::Spectral) run_grid_path(plan, ctx, model, c, m, r);
        r.ok = true;
        say("point " + r.run_id + " ok");
      } catch (const std::exception& e) {
        r.ok = false;
        r.failure = e.what();
        say("point " + r.run_id + " failed: " + r.failure);
      }
    });
  run_pool(tasks, threads);

  std::sort(pts.begin(), pts.end(), [](const PointResult& a, const PointResult& b) {
    return a.value != b.value ? a.value < b.value : a.seed < b.seed;
  });
  b.points = std::move(pts);
  std::vector<DiagnosticsRecord> recs;
  for (const auto& r : b.points) {
    if (r.ok) recs.push_back(r.diag);
    else b.partial = true;
  }
  b.certificate = certificate_check(recs);
  b.trends = compute_trends(plan, b.points);
  if (plan.formulation != Formulation::Spectral && plan.ramp.schedule != RampSchedule::Plain && plan.mu > 0.0)
    b.plan.warnings.push_back("grid path applies a plain Q_n* cutoff; the spectral ramp is not mirrored");
  return b;
}

namespace {

std::string theta_tag(double th) { return fmt_short(th); }

void write_run_csv(const ExperimentPlan& p, const PointResult& r, const std::string& path) {
  std::vector<std::string> h{"time", "energy", "h1"};
  for (double th : p.thetas) h.push_back("norm_theta_" + theta_tag(th));
  for (const char* c : {"diss_low", "diss_ramp", "diss_high", "margin_bound", "margin_energy", "truncation_estimate",
                        "local_error"})
    h.push_back(c);
  if (r.has_reference)
    for (double th : p.thetas) h.push_back("rho_theta_" + theta_tag(th));
  if (r.grid_ran) {
    h.push_back("grid_div_sup");
    h.push_back("grid_div_mean");
    h.push_back("grid_gn_norm");
    if (!r.grid_gap.empty()) h.push_back("grid_gap");
  }
  const auto& d = r.diag;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t s = 0; s < d.times.size(); ++s) {
    std::vector<std::string> row{fmt_double(d.times[s]), fmt_double(d.energy[s]), fmt_double(d.h1[s])};
    for (std::size_t t = 0; t < p.thetas.size(); ++t) row.push_back(fmt_double(d.higher[t][s]));
    row.push_back(fmt_double(d.diss_low[s]));
    row.push_back(fmt_double(d.diss_ramp[s]));
    row.push_back(fmt_double(d.diss_high[s]));
    row.push_back(fmt_double(d.margin_bound[s]));
    row.push_back(s < d.margin_energy.size() ? fmt_double(d.margin_energy[s]) : "");
    row.push_back(s < d.truncation_estimate.size() ? fmt_double(d.truncation_estimate[s]) : "");
    row.push_back(s < r.traj.local_error.size() ? fmt_double(r.traj.local_error[s]) : "");
    if (r.has_reference)
      for (const auto& c : r.conv) row.push_back(fmt_double(c.rho[s]));
    if (r.grid_ran) {
      row.push_back(s < r.grid_div.sup.size() ? fmt_double(r.grid_div.sup[s]) : "");
      row.push_back(s < r.grid_div.mean.size() ? fmt_double(r.grid_div.mean[s]) : "");
      row.push_back(s < r.grid_gn.size() ? fmt_double(r.grid_gn[s]) : "");
      if (!r.grid_gap.empty()) row.push_back(s < r.grid_gap.size() ? fmt_double(r.grid_gap[s]) : "");
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, h, rows);
}

}  // namespace

void emit_outputs(const ResultBundle& b, const std::string& dir) {
  const ExperimentPlan& p = b.plan;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "runs", ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  {
    const fs::path probe = fs::path(dir) / ".write_probe";
    std::ofstream os(probe);
    if (!os) throw std::runtime_error("output directory not writable: " + dir);
    os.close();
    fs::remove(probe, ec);
  }

  nlohmann::json files = nlohmann::json::array();
  std::vector<std::vector<std::string>> long_rows;
  const char* axis = sweep_axis_name(p.axis);
  for (const auto& r : b.points) {
    if (!r.ok) continue;
    const std::string rel = "runs/" + r.run_id + ".csv";
    write_run_csv(p, r, (fs::path(dir) / rel).string());
    files.push_back(rel);
    const std::string relc = "runs/" + r.run_id + "_coeffs.csv";
    write_trajectory_csv(r.traj, (fs::path(dir) / relc).string());
    files.push_back(relc);
    const auto& d = r.diag;
    auto add = [&](std::size_t s, const std::string& q, double v) {
      long_rows.push_back({r.run_id, axis, fmt_double(r.value), std::to_string(r.seed), fmt_double(d.times[s]), q,
                           fmt_double(v)});
    };
    for (std::size_t s = 0; s < d.times.size(); ++s) {
      add(s, "energy", d.energy[s]);
      add(s, "h1", d.h1[s]);
      for (std::size_t t = 0; t < p.thetas.size(); ++t) add(s, "norm_theta_" + theta_tag(p.thetas[t]), d.higher[t][s]);
      add(s, "margin_bound", d.margin_bound[s]);
      if (r.has_reference)
        for (std::size_t t = 0; t < p.thetas.size(); ++t)
          add(s, "rho_theta_" + theta_tag(p.thetas[t]), r.conv[t].rho[s]);
      if (r.grid_ran && s < r.grid_div.sup.size()) add(s, "grid_div_sup", r.grid_div.sup[s]);
      if (s < r.grid_gap.size()) add(s, "grid_gap", r.grid_gap[s]);
    }
  }
  write_csv((fs::path(dir) / "long_table.csv").string(), {"run_id", "axis", "value", "seed", "time", "quantity", "val"},
            long_rows);
  files.push_back("long_table.csv");

  {
    std::vector<std::string> h{"axis", "value", "seed", "status", "reason"};
    for (double th : p.thetas) h.push_back("rho_T_theta_" + theta_tag(th));
    h.push_back("l2_proxy");
    h.push_back("U1_emp");
    for (double th : p.thetas) h.push_back("Utheta_emp_" + theta_tag(th));
    for (double th : p.thetas) h.push_back("dissipation_integral_" + theta_tag(th));
    for (const char* c : {"bound_ok", "audit_ok", "worst_bound_margin", "worst_audit_excess", "grid_gap_T",
                          "grid_div_sup_max", "grid_div_increased"})
      h.push_back(c);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : b.points) {
      std::vector<std::string> row{axis, fmt_double(r.value), std::to_string(r.seed), r.ok ? "ok" : "failed",
                                   r.failure};
      const auto& d = r.diag;
      auto opt = [&](bool have, double v) { return have ? fmt_double(v) : std::string(); };
      const bool conv = r.ok && r.has_reference;
      for (std::size_t t = 0; t < p.thetas.size(); ++t) row.push_back(opt(conv, conv ? r.conv[t].rho_T : 0.0));
      row.push_back(opt(conv, conv ? r.conv[0].l2_proxy : 0.0));
      row.push_back(opt(r.ok, d.U1_emp));
      for (std::size_t t = 0; t < p.thetas.size(); ++t) row.push_back(opt(r.ok, r.ok ? d.Utheta_emp[t] : 0));
      for (std::size_t t = 0; t < p.thetas.size(); ++t) row.push_back(opt(r.ok, r.ok ? d.dissipation_integral[t] : 0));
      row.push_back(r.ok ? (d.bound_ok ? "true" : "false") : "");
      row.push_back(r.ok ? (d.audit_ok ? "true" : "false") : "");
      row.push_back(opt(r.ok, d.worst_bound_margin));
      row.push_back(opt(r.ok, d.worst_audit_excess));
      row.push_back(opt(!r.grid_gap.empty(), r.grid_gap.empty() ? 0 : r.grid_gap.back()));
      double dmax = 0.0;
      for (double x : r.grid_div.sup) dmax = std::max(dmax, x);
      row.push_back(opt(r.grid_ran, dmax));
      row.push_back(r.grid_ran ? (r.grid_div.increased ? "true" : "false") : "");
      rows.push_back(std::move(row));
    }
    write_csv((fs::path(dir) / "sweep_summary.csv").string(), h, rows);
    files.push_back("sweep_summary.csv");
  }

  nlohmann::json m;
  m["version"] = kVersion;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : p.echo()) cfg[k] = v;
  m["config"] = cfg;
  m["seeds"] = p.seeds;
  m["spectrum_sha256"] = b.spectrum_hashes;
  m["spectrum_cache"] = b.cache_files;
  m["warnings"] = p.warnings;
  m["partial"] = b.partial;
  nlohmann::json runs = nlohmann::json::array(), failed = nlohmann::json::array();
  for (const auto& r : b.points) {
    nlohmann::json j;
    j["run_id"] = r.run_id;
    j["value"] = r.value;
    j["seed"] = r.seed;
    j["status"] = r.ok ? "ok" : "failed";
    j["spectrum_sha256"] = r.spectrum_hash;
    if (r.ok) {
      nlohmann::json c;
      c["U1_emp"] = r.diag.U1_emp;
      c["Utheta_emp"] = r.diag.Utheta_emp;
      c["U_L2"] = r.diag.U_L2;
      c["bound_ok"] = r.diag.bound_ok;
      c["audit_ok"] = r.diag.audit_ok;
      c["worst_audit_excess"] = r.diag.worst_audit_excess;
      j["certificate"] = c;
      if (r.has_reference) {
        nlohmann::json rho = nlohmann::json::object();
        for (std::size_t t = 0; t < p.thetas.size(); ++t) rho[theta_tag(p.thetas[t])] = r.conv[t].rho_T;
        j["rho_T"] = rho;
      }
    } else {
      j["reason"] = r.failure;
      failed.push_back({{"run_id", r.run_id}, {"reason", r.failure}});
    }
    runs.push_back(j);
  }
  m["runs"] = runs;
  m["failed"] = failed;
  nlohmann::json cert;
  cert["U1_min"] = b.certificate.U1_min;
  cert["U1_max"] = b.certificate.U1_max;
  cert["U1_spread"] = b.certificate.U1_spread;
  cert["uniform_within_10pct"] = b.certificate.uniform;
  cert["Utheta_spread"] = b.certificate.Utheta_spread;
  cert["all_bounds_ok"] = b.certificate.all_bounds_ok;
  m["certificate"] = cert;
  nlohmann::json trends = nlohmann::json::array();
  for (const auto& t : b.trends) {
    nlohmann::json j;
    j["theta"] = t.theta;
    j["values"] = t.values;
    j["rho_T_mean"] = t.rho;
    if (!std::isnan(t.slope)) j["loglog_slope"] = t.slope;
    j["strictly_decreasing"] = t.strictly_decreasing;
    j["nonincreasing"] = t.nonincreasing;
    trends.push_back(j);
  }
  m["trends"] = trends;
  m["files"] = files;
  std::ofstream os(fs::path(dir) / "manifest.json");
  if (!os) throw std::runtime_error("cannot write manifest in " + dir);
  os << m.dump(2) << '\n';
}

}  // namespace shnse

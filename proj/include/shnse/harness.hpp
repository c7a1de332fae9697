// Experiment orchestration: sweeps over mu, m or grid size, reference runs, and result files.
#pragma once

#include "shnse/config.hpp"
#include "shnse/diagnostics.hpp"
#include "shnse/dynamics_grid.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace shnse {

inline constexpr const char* kVersion = "1.0.0";

struct PointResult {
  std::string run_id;
  double value = 0.0;  // sweep coordinate (0 for a single run)
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;
  std::string spectrum_hash;

  Trajectory traj;
  DiagnosticsRecord diag;
  bool has_reference = false;
  std::vector<ConvergenceResult> conv;  // one per theta, against the mu = 0 run

  bool grid_ran = false;
  DivergenceSeries grid_div;
  std::vector<double> grid_gn;
  std::vector<double> grid_gap;  // relative L2 distance to the spectral run, per sample
};

struct SweepTrend {
  double theta = 1.0;
  std::vector<double> values;  // sweep coordinate
  std::vector<double> rho;     // seed-averaged rho(T)
  double slope = 0.0;          // log-log, mu axis only (points with mu > 0)
  bool strictly_decreasing = false;  // as mu decreases (mu axis) / as m increases (m axis)
  bool nonincreasing = false;
};

struct ResultBundle {
  ExperimentPlan plan;
  std::vector<PointResult> points;  // sorted by (value, seed)
  std::map<std::string, std::string> spectrum_hashes;  // grid label -> SHA-256 hex of the pairs used
  std::map<std::string, std::string> cache_files;      // grid label -> "path sha256" of the cache
  std::vector<SweepTrend> trends;
  CertificateReport certificate;
  bool partial = false;
};

// Output directory: explicit flag, else $SHNSE_OUT_DIR, else the plan's output.dir.
std::string resolve_out_dir(const ExperimentPlan& plan, const std::string& flag);

ResultBundle run_experiment(const ExperimentPlan& plan, int threads = 1, std::ostream* log = nullptr);

// Writes runs/<id>.csv, runs/<id>_coeffs.csv, sweep_summary.csv, long_table.csv and manifest.json.
void emit_outputs(const ResultBundle& bundle, const std::string& dir);

struct PlanSpectrum {
  StokesSpectrum spectrum;  // first `modes` pairs
  std::string cache_path;   // empty without a cache directory
  std::string cache_hash;   // hash stored in the cache file (covers every cached pair)
};

// Spectrum for a grid, through the cache directory when one is configured.
PlanSpectrum plan_spectrum(const Grid& g, int modes, const std::string& cache_dir);
std::string grid_label(const GridSpec& s);

}  // namespace shnse

// Experiment plans and their INI-style configuration files.
#pragma once

#include "shnse/grid_ops.hpp"
#include "shnse/spectral_calculus.hpp"
#include "shnse/stokes_pressure.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace shnse {

enum class SweepAxis { None, Mu, M, Grid };
enum class Formulation { Spectral, Grid, Both };

const char* sweep_axis_name(SweepAxis a);
const char* formulation_name(Formulation f);

struct ExperimentPlan {
  GridSpec grid;
  int modes = 128;
  std::string cache_dir;  // empty: no spectrum cache

  double nu = 1e-2;
  double mu = 0.0;
  int alpha = 2;
  int m0 = 1;
  int m = -1;  // -1: equal to modes
  RampSpec ramp;
  bool nonlinear = true;

  double dt = 1e-3;
  double T = 1.0;
  int sample_every = 10;
  bool estimate_error = true;

  double initial_gamma = 3.0;
  double initial_scale = 1.0;
  int forcing_band = 8;
  double forcing_amplitude = 1.0;
  std::vector<std::uint64_t> seeds{1};

  SweepAxis axis = SweepAxis::None;
  std::vector<double> values;  // sorted ascending
  Formulation formulation = Formulation::Spectral;

  bool grid_extended = false;
  std::optional<FluxRule> grid_flux;  // unset: conservative
  std::optional<int> grid_truncation;  // unset: m
  double grid_dt = 0.0;                // 0: same as dt

  std::vector<double> thetas{1.0, 2.0};

  std::string out_dir = "out";

  std::vector<std::string> warnings;

  int effective_m() const { return m < 0 ? modes : m; }
  FluxRule effective_flux() const { return grid_flux.value_or(FluxRule::Conservative); }
  // Flat key -> value listing of every effective setting, sorted by key.
  std::vector<std::pair<std::string, std::string>> echo() const;
  void validate();  // throws PlanError naming the field; sorts unsorted lists with a warning
};

class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ExperimentPlan load_config(const std::string& path);
ExperimentPlan parse_config(const std::string& text);

}  // namespace shnse

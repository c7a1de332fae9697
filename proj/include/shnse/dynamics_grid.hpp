// Explicit time integration of the Stokes-pressure form of the equations on grid unknowns.
#pragma once

#include "shnse/stokes_pressure.hpp"

#include <optional>
#include <string>
#include <vector>

namespace shnse {

struct GridRunConfig {
  double nu = 1e-2;
  double mu = 0.0;
  double dt = 1e-3;
  double T = 1.0;
  int sample_every = 10;
  bool nonlinear = true;
  bool extended = false;  // keep the grad-div terms so non-solenoidal data is admissible
  FluxRule flux = FluxRule::OneSided;
  std::optional<int> truncation;  // n*: apply Q_{n*} to the hyperviscous bracket
  VelocityField forcing;
  VelocityField initial;

  long steps() const;
};

struct GridTrajectory {
  std::vector<double> times;
  std::vector<VelocityField> fields;
  std::vector<double> gn_norm;  // mu ||P_{n*}[bracket]|| at each sample (0 without truncation)
  int stride = 1;
  bool blew_up = false;
  std::string failure;
};

class GridModel {
 public:
  // `spectrum` is required when truncation is configured.
  GridModel(const Grid& g, const NeumannPoisson& poisson, const StokesSpectrum* spectrum, GridRunConfig cfg);

  const GridRunConfig& config() const { return cfg_; }

  // Hyperviscous bracket (-Delta)^2 u + grad p_s((-Delta)u), evaluated as A_h(A_h u) with
  // the grid Stokes operator; with `extended` it also carries grad div(-Delta)u written
  // as -G L D u. Q_{n*} applied when truncating; the removed part is returned in gn.
  VelocityField hyperviscous_bracket(const VelocityField& u, const VelocityField& Au,
                                     VelocityField* gn = nullptr) const;
  VelocityField reformulated_rhs(const VelocityField& u, VelocityField* gn = nullptr) const;
  VelocityField step_rk4(const VelocityField& u, double dt) const;

  // Largest dt inside the RK4 stability region for the linear part (Gershgorin-type bound).
  double stability_limit() const;
  GridTrajectory simulate() const;

 private:
  const Grid& g_;
  const NeumannPoisson& poisson_;
  const StokesSpectrum* spectrum_;
  GridRunConfig cfg_;
  Mat Etr_;  // first n* eigenfields when truncating
};

struct DivergenceSeries {
  std::vector<double> times;
  std::vector<double> sup;
  std::vector<double> mean;
  bool increased = false;
  double worst_increase = 0.0;
};

// sup-norm and mean of D u per sample; flags any increase above 1e-10 + tolerance.
DivergenceSeries divergence_monitor(const Grid& g, const GridTrajectory& tr, double integrator_tolerance = 0.0);

// Container "SHNSEGRD1": u32 dim, u32 cells[3], f64 lengths[3], u64 samples, u64 face_dofs,
// 32-byte SHA-256 of the payload, then times[samples], then the sampled fields.
void save_grid_trajectory(const Grid& g, const GridTrajectory& tr, const std::string& path);

}  // namespace shnse

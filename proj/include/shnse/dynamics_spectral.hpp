// Galerkin system in the Stokes eigenbasis with an integrating-factor RK4 stepper.
#pragma once

#include "shnse/leray_stokes.hpp"
#include "shnse/spectral_calculus.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace shnse {

struct SimulationConfig {
  double nu = 1e-2;
  DissipationProfile profile;  // mu lives here; phi has length n
  int n = 0;                   // Galerkin dimension
  double dt = 1e-3;
  double T = 1.0;
  int sample_every = 10;
  bool nonlinear = true;
  Vec forcing;  // f_j, length n
  Vec initial;  // a_j(0), length n
  std::uint64_t seed = 0;
  bool estimate_error = true;  // step-doubling local error estimate at each sample

  double forcing_bound() const { return forcing.norm(); }  // L = ||f||
  long steps() const;
  void validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// a_j(0) = scale (lambda_j/lambda_1)^(-gamma) xi_j with xi_j standard normal.
Vec make_initial(const Vec& lambdas, int n, double gamma, double scale, std::uint64_t seed);
// Random coefficients on modes 1..band, normalised to ||f|| = amplitude; zero beyond.
Vec make_forcing(int n, int band, double amplitude, std::uint64_t seed);

struct Trajectory {
  std::vector<double> times;
  Mat coeffs;                       // n x samples
  std::vector<double> local_error;  // one-step error estimate at each sample (0 if off)
  int stride = 1;
  double dt = 0.0;
  bool blew_up = false;
  std::string failure;

  std::size_t samples() const { return times.size(); }
};

class GalerkinModel {
 public:
  GalerkinModel(const Grid& g, const StokesSpectrum& spectrum, SimulationConfig cfg);

  const SimulationConfig& config() const { return cfg_; }
  const Vec& lambdas() const { return lambdas_; }

  VelocityField reconstruct(const SpectralCoeffs& a) const;
  SpectralCoeffs project(const VelocityField& u) const;

  // b_j = (e_j, N(u)), N the skew-symmetric advection of u by itself.
  SpectralCoeffs nonlinear_coeffs(const SpectralCoeffs& a) const;
  SpectralCoeffs galerkin_rhs(const SpectralCoeffs& a, double t) const;
  SpectralCoeffs step_ifrk4(const SpectralCoeffs& a, double t, double dt) const;
  Trajectory simulate() const;

 private:
  SpectralCoeffs explicit_part(const SpectralCoeffs& a) const;

  const Grid& g_;
  SimulationConfig cfg_;
  Vec lambdas_;
  Mat E_;
};

void write_trajectory_csv(const Trajectory& tr, const std::string& path);

}  // namespace shnse

// Norms, energy audits, a priori bound certificates and convergence metrics.
#pragma once

#include "shnse/dynamics_spectral.hpp"

#include <vector>

namespace shnse {

struct AuditParams {
  double nu = 1e-2;
  double mu = 0.0;
  Vec phi;       // per-mode dissipation multiplier (may be empty when mu = 0)
  int m0 = 0;
  int m = 0;
  double L = 0.0;  // ||f||
};

AuditParams audit_params(const SimulationConfig& cfg);

struct DiagnosticsRecord {
  std::vector<double> times;
  std::vector<double> energy;  // ||u||^2
  std::vector<double> h1;      // ||A^{1/2} u||
  std::vector<double> thetas;
  std::vector<std::vector<double>> higher;  // ||A^{theta/2} u|| per theta
  std::vector<double> diss_low, diss_ramp, diss_high;  // sum over band of (nu lambda + mu phi) a^2

  double U_L2 = 0.0;                // ||u0||^2 + (L/(nu lambda_1))^2
  std::vector<double> margin_bound;  // U_L2 - ||u||^2 at every sample
  // Per sampling interval k -> k+1:
  // L^2/(nu lambda_1) - [(E_{k+1}-E_k)/Dt + nu (g_k + g_{k+1})/2], g = ||A^{1/2}u||^2
  std::vector<double> margin_energy;
  std::vector<double> truncation_estimate;

  double U1_emp = 0.0;
  std::vector<double> Utheta_emp;
  std::vector<double> dissipation_integral;  // int ||A^{(theta+1)/2} u||^2 dt, per theta

  double worst_bound_margin = 0.0;  // min of margin_bound relative to U_L2
  double worst_audit_excess = 0.0;  // max over k of (slack_k - estimate_k); <= 0 passes
  bool bound_ok = true;
  bool audit_ok = true;
};

class DiagnosticsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

DiagnosticsRecord norms_and_energy(const Trajectory& tr, const Vec& lambdas, const std::vector<double>& thetas,
                                   const AuditParams& p);

// ||A^{theta/2} a||.
double sobolev_norm(const Vec& a, const Vec& lambdas, double theta);

struct ConvergenceResult {
  std::vector<double> times;
  std::vector<double> rho;  // running supremum
  double rho_T = 0.0;
  double l2_proxy = 0.0;  // int_0^T ||w||^2 dt, trapezoidal
};

ConvergenceResult convergence_metric(const Trajectory& u, const Trajectory& v, const Vec& lambdas, double theta);

struct CertificateReport {
  double U1_min = 0.0, U1_max = 0.0;
  double U1_spread = 0.0;  // (max - min) / max
  bool uniform = false;    // spread < 10%
  std::vector<double> Utheta_spread;
  bool all_bounds_ok = true;
};

CertificateReport certificate_check(const std::vector<DiagnosticsRecord>& records);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace shnse

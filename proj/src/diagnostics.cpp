#include "shnse/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace shnse {

AuditParams audit_params(const SimulationConfig& cfg) {
  AuditParams p;
  p.nu = cfg.nu;
  p.mu = cfg.profile.mu;
  p.phi = cfg.profile.phi;
  p.m0 = cfg.profile.m0;
  p.m = cfg.profile.m;
  p.L = cfg.forcing_bound();
  return p;
}

double sobolev_norm(const Vec& a, const Vec& lambdas, double theta) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) s += std::pow(lambdas[j], theta) * a[j] * a[j];
  return std::sqrt(s);
}

DiagnosticsRecord norms_and_energy(const Trajectory& tr, const Vec& lambdas, const std::vector<double>& thetas,
                                   const AuditParams& p) {
  if (thetas.empty()) throw DiagnosticsError("theta list is empty");
  if (tr.samples() == 0) throw DiagnosticsError("empty trajectory");
  const Eigen::Index n = tr.coeffs.rows();
  if (lambdas.size() < n) throw DiagnosticsError("trajectory has more modes than the spectrum");
  const Vec lam = lambdas.head(n);
  Vec phi = p.phi.size() == n ? p.phi : Vec::Zero(n);

  DiagnosticsRecord r;
  r.times = tr.times;
  r.thetas = thetas;
  r.higher.assign(thetas.size(), {});
  const std::size_t S = tr.samples();
  for (std::size_t s = 0; s < S; ++s) {
    const Vec a = tr.coeffs.col(static_cast<Eigen::Index>(s));
    r.energy.push_back(a.squaredNorm());
    r.h1.push_back(sobolev_norm(a, lam, 1.0));
    for (std::size_t t = 0; t < thetas.size(); ++t) r.higher[t].push_back(sobolev_norm(a, lam, thetas[t]));
    double lo = 0.0, mid = 0.0, hi = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = (p.nu * lam[j] + p.mu * phi[j]) * a[j] * a[j];
      if (j < p.m0) lo += d;
      else if (j < p.m) mid += d;
      else hi += d;
    }
    r.diss_low.push_back(lo);
    r.diss_ramp.push_back(mid);
    r.diss_high.push_back(hi);
  }

  const double lam1 = lam[0];
  const double forcing_term = p.L * p.L / (p.nu * lam1);
  r.U_L2 = r.energy[0] + std::pow(p.L / (p.nu * lam1), 2);
  r.worst_bound_margin = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < S; ++s) {
    const double m = r.U_L2 - r.energy[s];
    r.margin_bound.push_back(m);
    r.worst_bound_margin = std::min(r.worst_bound_margin, m / r.U_L2);
    if (r.energy[s] > r.U_L2 * (1.0 + 1e-6)) r.bound_ok = false;
  }

  std::vector<double> g(S);
  for (std::size_t s = 0; s < S; ++s) g[s] = r.h1[s] * r.h1[s];
  r.worst_audit_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < S; ++k) {
    const double Dt = r.times[k + 1] - r.times[k];
    const double lhs = (r.energy[k + 1] - r.energy[k]) / Dt + p.nu * 0.5 * (g[k] + g[k + 1]);
    const double margin = forcing_term - lhs;
    r.margin_energy.push_back(margin);
    // trapezoid error from the second difference of g, plus the accumulated RK4 local error
    const std::size_t c = std::clamp<std::size_t>(k, 1, S >= 3 ? S - 2 : 1);
    const double quad = S >= 3 ? p.nu * std::abs(g[c + 1] - 2.0 * g[c] + g[c - 1]) / 12.0 : 0.0;
    const double loc = tr.local_error.size() > k ? tr.local_error[k] : 0.0;
    const double integ = 2.0 * tr.stride * std::sqrt(r.energy[k]) * loc / Dt;
    const double est = quad + integ;
    r.truncation_estimate.push_back(est);
    const double slack = std::max(0.0, -margin);
    r.worst_audit_excess = std::max(r.worst_audit_excess, slack - est);
    if (slack > est) r.audit_ok = false;
  }

  r.U1_emp = *std::max_element(r.h1.begin(), r.h1.end());
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    r.Utheta_emp.push_back(*std::max_element(r.higher[t].begin(), r.higher[t].end()));
    double integral = 0.0;
    for (std::size_t s = 0; s + 1 < S; ++s) {
      const double f0 = std::pow(sobolev_norm(tr.coeffs.col(static_cast<Eigen::Index>(s)), lam, thetas[t] + 1.0), 2);
      const double f1 =
          std::pow(sobolev_norm(tr.coeffs.col(static_cast<Eigen::Index>(s + 1)), lam, thetas[t] + 1.0), 2);
      integral += 0.5 * (r.times[s + 1] - r.times[s]) * (f0 + f1);
    }
    r.dissipation_integral.push_back(integral);
  }
  return r;
}

ConvergenceResult convergence_metric(const Trajectory& u, const Trajectory& v, const Vec& lambdas, double theta) {
  if (u.samples() != v.samples() || u.coeffs.rows() != v.coeffs.rows())
    throw DiagnosticsError("convergence_metric: trajectories are sampled differently");
  for (std::size_t s = 0; s < u.samples(); ++s)
    if (u.times[s] != v.times[s]) throw DiagnosticsError("convergence_metric: sample times differ");
  const Vec lam = lambdas.head(u.coeffs.rows());
  ConvergenceResult r;
  r.times = u.times;
  double sup = 0.0, prev_w2 = 0.0;
  for (std::size_t s = 0; s < u.samples(); ++s) {
    const Vec w = u.coeffs.col(static_cast<Eigen::Index>(s)) - v.coeffs.col(static_cast<Eigen::Index>(s));
    sup = std::max(sup, sobolev_norm(w, lam, theta));
    r.rho.push_back(sup);
    const double w2 = w.squaredNorm();
    if (s > 0) r.l2_proxy += 0.5 * (u.times[s] - u.times[s - 1]) * (prev_w2 + w2);
    prev_w2 = w2;
  }
  r.rho_T = sup;
  return r;
}

CertificateReport certificate_check(const std::vector<DiagnosticsRecord>& records) {
  CertificateReport c;
  if (records.empty()) return c;
  c.U1_min = c.U1_max = records[0].U1_emp;
  for (const auto& r : records) {
    c.U1_min = std::min(c.U1_min, r.U1_emp);
    c.U1_max = std::max(c.U1_max, r.U1_emp);
    c.all_bounds_ok = c.all_bounds_ok && r.bound_ok;
  }
  c.U1_spread = c.U1_max > 0.0 ? (c.U1_max - c.U1_min) / c.U1_max : 0.0;
  c.uniform = c.U1_spread < 0.1;
  for (std::size_t t = 0; t < records[0].Utheta_emp.size(); ++t) {
    double lo = records[0].Utheta_emp[t], hi = lo;
    for (const auto& r : records) {
      lo = std::min(lo, r.Utheta_emp[t]);
      hi = std::max(hi, r.Utheta_emp[t]);
    }
    c.Utheta_spread.push_back(hi > 0.0 ? (hi - lo) / hi : 0.0);
  }
  return c;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw DiagnosticsError("loglog_slope: need matching series of length >= 2");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double d = n * sxx - sx * sx;
  return (n * sxy - sx * sy) / d;
}

}  // namespace shnse

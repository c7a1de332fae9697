#include "doctest.h"
#include "shnse/diagnostics.hpp"

#include <cmath>

using namespace shnse;

namespace {

Vec lambdas(int n) {
  Vec l(n);
  for (int j = 0; j < n; ++j) l[j] = 50.0 * (1.0 + 0.7 * j);
  return l;
}

// Exact solution of the unforced linear system a_j' = -nu lambda_j a_j.
Trajectory decay(const Vec& lam, const Vec& a0, double nu, double T, int samples) {
  Trajectory tr;
  tr.coeffs.resize(a0.size(), samples);
  for (int s = 0; s < samples; ++s) {
    const double t = T * s / (samples - 1);
    tr.times.push_back(t);
    for (Eigen::Index j = 0; j < a0.size(); ++j) tr.coeffs(j, s) = a0[j] * std::exp(-nu * lam[j] * t);
    tr.local_error.push_back(0.0);
  }
  tr.stride = 10;
  tr.dt = T / (samples - 1) / 10;
  return tr;
}

Trajectory constant(const Vec& a, int samples) {
  Trajectory tr;
  tr.coeffs.resize(a.size(), samples);
  for (int s = 0; s < samples; ++s) {
    tr.times.push_back(0.1 * s);
    tr.coeffs.col(s) = a;
  }
  tr.local_error.assign(static_cast<std::size_t>(samples), 0.0);
  return tr;
}

}  // namespace

TEST_CASE("sobolev norm of a single mode") {
  const Vec lam = lambdas(10);
  Vec a = Vec::Zero(10);
  a[4] = -3.0;
  for (double th : {0.0, 1.0, 2.0, 3.0})
    CHECK(sobolev_norm(a, lam, th) == doctest::Approx(3.0 * std::pow(lam[4], th / 2.0)).epsilon(1e-14));
  // monotone in theta for lambda_1 >= 1
  const Vec b = Vec::LinSpaced(10, 1.0, -1.0);
  CHECK(sobolev_norm(b, lam, 1.0) <= sobolev_norm(b, lam, 2.0));
}

TEST_CASE("norms, dissipation bands and bound on an exact decaying solution") {
  const Vec lam = lambdas(12);
  const Vec a0 = Vec::LinSpaced(12, 1.0, 0.1);
  const double nu = 1e-2;
  const Trajectory tr = decay(lam, a0, nu, 1.0, 21);
  AuditParams p;
  p.nu = nu;
  p.mu = 1e-3;
  p.phi = Vec::Zero(12);
  for (int j = 6; j < 12; ++j) p.phi[j] = lam[j] * lam[j];
  p.m0 = 3;
  p.m = 8;
  const DiagnosticsRecord r = norms_and_energy(tr, lam, {1.0, 2.0}, p);
  REQUIRE(r.energy.size() == 21u);
  for (std::size_t s = 0; s < 21; ++s) {
    const Vec a = tr.coeffs.col(static_cast<Eigen::Index>(s));
    CHECK(r.energy[s] == doctest::Approx(a.squaredNorm()).epsilon(1e-14));
    CHECK(r.h1[s] == doctest::Approx(sobolev_norm(a, lam, 1.0)).epsilon(1e-14));
    double lo = 0, mid = 0, hi = 0;
    for (int j = 0; j < 12; ++j) {
      const double d = (nu * lam[j] + p.mu * p.phi[j]) * a[j] * a[j];
      (j < 3 ? lo : j < 8 ? mid : hi) += d;
    }
    CHECK(r.diss_low[s] == doctest::Approx(lo).epsilon(1e-13));
    CHECK(r.diss_ramp[s] == doctest::Approx(mid).epsilon(1e-13));
    CHECK(r.diss_high[s] == doctest::Approx(hi).epsilon(1e-13));
    if (s > 0) CHECK(r.energy[s] < r.energy[s - 1]);
  }
  CHECK(r.U_L2 == doctest::Approx(a0.squaredNorm()));
  CHECK(r.bound_ok);
  CHECK(r.worst_bound_margin == doctest::Approx(0.0));
  for (double m : r.margin_bound) CHECK(m >= 0.0);
  // unforced linear decay: dE/dt = -2 nu g, so the audited quantity is about -nu g < 0
  for (double m : r.margin_energy) CHECK(m >= 0.0);
  CHECK(r.audit_ok);
  CHECK(r.U1_emp == doctest::Approx(r.h1[0]));
  CHECK(r.Utheta_emp[1] == doctest::Approx(sobolev_norm(a0, lam, 2.0)));
  // int_0^T ||A^{(theta+1)/2} u||^2 against the closed form sum a_j^2 lambda_j^{theta+1} (1-e^{-2 nu lambda T})/(2 nu lambda)
  double exact = 0.0;
  for (int j = 0; j < 12; ++j)
    exact += a0[j] * a0[j] * std::pow(lam[j], 2.0) * (1.0 - std::exp(-2.0 * nu * lam[j])) / (2.0 * nu * lam[j]);
  CHECK(r.dissipation_integral[0] == doctest::Approx(exact).epsilon(1e-2));
}

TEST_CASE("bound violation and audit slack are detected") {
  const Vec lam = lambdas(6);
  Vec a = Vec::Ones(6);
  Trajectory tr = constant(a, 5);
  tr.coeffs.col(3) *= 2.0;  // energy jumps with no forcing
  AuditParams p;
  p.nu = 1e-2;
  const DiagnosticsRecord r = norms_and_energy(tr, lam, {1.0}, p);
  CHECK_FALSE(r.bound_ok);
  CHECK_FALSE(r.audit_ok);
  CHECK(r.worst_audit_excess > 0.0);
  CHECK(r.worst_bound_margin < 0.0);
}

TEST_CASE("forcing enters the bound") {
  const Vec lam = lambdas(6);
  const Trajectory tr = constant(Vec::Ones(6), 3);
  AuditParams p;
  p.nu = 0.5;
  p.L = 2.0;
  const DiagnosticsRecord r = norms_and_energy(tr, lam, {1.0}, p);
  CHECK(r.U_L2 == doctest::Approx(6.0 + std::pow(2.0 / (0.5 * lam[0]), 2)));
  // constant state: margin = L^2/(nu lambda_1) - nu g
  const double g = sobolev_norm(Vec::Ones(6), lam, 1.0);
  CHECK(r.margin_energy[0] == doctest::Approx(4.0 / (0.5 * lam[0]) - 0.5 * g * g));
}

TEST_CASE("diagnostics input errors") {
  const Vec lam = lambdas(4);
  AuditParams p;
  CHECK_THROWS_AS(norms_and_energy(constant(Vec::Ones(4), 3), lam, {}, p), DiagnosticsError);
  CHECK_THROWS_AS(norms_and_energy(Trajectory{}, lam, {1.0}, p), DiagnosticsError);
  CHECK_THROWS_AS(norms_and_energy(constant(Vec::Ones(5), 3), lam, {1.0}, p), DiagnosticsError);
  CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), DiagnosticsError);
}

TEST_CASE("convergence metric") {
  const Vec lam = lambdas(8);
  const Trajectory u = decay(lam, Vec::LinSpaced(8, 1.0, 2.0), 1e-2, 1.0, 11);
  const ConvergenceResult z = convergence_metric(u, u, lam, 1.0);
  CHECK(z.rho_T == 0.0);
  CHECK(z.l2_proxy == 0.0);

  Trajectory v = u;
  for (Eigen::Index s = 0; s < v.coeffs.cols(); ++s) v.coeffs(2, s) += 0.01 * static_cast<double>(s);
  const ConvergenceResult c = convergence_metric(u, v, lam, 2.0);
  for (std::size_t s = 1; s < c.rho.size(); ++s) CHECK(c.rho[s] >= c.rho[s - 1]);
  CHECK(c.rho_T == doctest::Approx(0.1 * lam[2]).epsilon(1e-12));
  // trapezoid of (0.01 s)^2 over unit spacing 0.1
  double l2 = 0.0;
  for (int s = 1; s <= 10; ++s) l2 += 0.05 * (std::pow(0.01 * (s - 1), 2) + std::pow(0.01 * s, 2));
  CHECK(c.l2_proxy == doctest::Approx(l2).epsilon(1e-12));

  Trajectory shorter = u;
  shorter.times.pop_back();
  shorter.coeffs.conservativeResize(Eigen::NoChange, 10);
  CHECK_THROWS_AS(convergence_metric(u, shorter, lam, 1.0), DiagnosticsError);
  Trajectory shifted = u;
  shifted.times[3] += 1e-3;
  CHECK_THROWS_AS(convergence_metric(u, shifted, lam, 1.0), DiagnosticsError);
}

TEST_CASE("certificate spread") {
  DiagnosticsRecord a, b, c;
  a.U1_emp = 10.0;
  b.U1_emp = 9.5;
  c.U1_emp = 8.0;
  a.Utheta_emp = {10.0, 100.0};
  b.Utheta_emp = {9.5, 50.0};
  c.Utheta_emp = {8.0, 100.0};
  const CertificateReport ab = certificate_check({a, b});
  CHECK(ab.U1_spread == doctest::Approx(0.05));
  CHECK(ab.uniform);
  CHECK(ab.Utheta_spread[1] == doctest::Approx(0.5));
  CHECK(ab.all_bounds_ok);
  c.bound_ok = false;
  const CertificateReport abc = certificate_check({a, b, c});
  CHECK(abc.U1_spread == doctest::Approx(0.2));
  CHECK_FALSE(abc.uniform);
  CHECK_FALSE(abc.all_bounds_ok);
}

TEST_CASE("log-log slope of exact power laws") {
  const std::vector<double> x{1e-5, 1e-4, 1e-3, 1e-2};
  for (double k : {0.5, 1.0, 0.3}) {
    std::vector<double> y;
    for (double v : x) y.push_back(7.0 * std::pow(v, k));
    CHECK(loglog_slope(x, y) == doctest::Approx(k).epsilon(1e-12));
  }
}

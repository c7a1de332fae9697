#include "shnse/dynamics_spectral.hpp"

#include <cmath>
#include <random>

namespace shnse {

long SimulationConfig::steps() const { return std::lround(T / dt); }

void SimulationConfig::validate() const {
  if (!(nu > 0.0)) throw ConfigError("nu must be > 0");
  if (!(dt > 0.0) || !(T > 0.0) || dt > T) throw ConfigError("need 0 < dt <= T");
  const double r = T / dt;
  if (std::abs(r - std::round(r)) > 1e-9 * r) throw ConfigError("T must be an integer multiple of dt");
  if (sample_every < 1 || steps() % sample_every != 0)
    throw ConfigError("sample_every must divide the number of steps");
  if (n < 1) throw ConfigError("Galerkin dimension must be >= 1");
  if (profile.phi.size() != n) throw ConfigError("profile length differs from n");
  if (forcing.size() != n || initial.size() != n) throw ConfigError("forcing/initial length differs from n");
  if (!forcing.allFinite() || !initial.allFinite()) throw ConfigError("forcing/initial must be finite");
}

Vec make_initial(const Vec& lambdas, int n, double gamma, double scale, std::uint64_t seed) {
  if (n > lambdas.size()) throw ConfigError("initial data: n exceeds spectrum size");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> xi(0.0, 1.0);
  Vec a(n);
  for (int j = 0; j < n; ++j) a[j] = scale * std::pow(lambdas[j] / lambdas[0], -gamma) * xi(rng);
  return a;
}

Vec make_forcing(int n, int band, double amplitude, std::uint64_t seed) {
  Vec f = Vec::Zero(n);
  const int b = std::min(band, n);
  if (b <= 0 || amplitude == 0.0) return f;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> eta(0.0, 1.0);
  Vec full(band);
  for (int j = 0; j < band; ++j) full[j] = eta(rng);
  full *= amplitude / full.norm();
  f.head(b) = full.head(b);
  return f;
}

GalerkinModel::GalerkinModel(const Grid& g, const StokesSpectrum& spectrum, SimulationConfig cfg)
    : g_(g), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.n > spectrum.size()) throw ConfigError("Galerkin dimension exceeds the computed spectrum");
  if (spectrum.E.rows() != static_cast<Eigen::Index>(g.face_dofs()))
    throw ConfigError("spectrum does not belong to this grid");
  lambdas_ = spectrum.lambdas.head(cfg_.n);
  E_ = spectrum.E.leftCols(cfg_.n);
}

VelocityField GalerkinModel::reconstruct(const SpectralCoeffs& a) const { return E_ * a; }

SpectralCoeffs GalerkinModel::project(const VelocityField& u) const {
  return g_.cell_volume() * (E_.transpose() * u);
}

SpectralCoeffs GalerkinModel::nonlinear_coeffs(const SpectralCoeffs& a) const {
  const VelocityField u = reconstruct(a);
  return project(skew_advection(g_, u, u));
}

SpectralCoeffs GalerkinModel::explicit_part(const SpectralCoeffs& a) const {
  if (!cfg_.nonlinear) return cfg_.forcing;
  return cfg_.forcing - nonlinear_coeffs(a);
}

SpectralCoeffs GalerkinModel::galerkin_rhs(const SpectralCoeffs& a, double) const {
  const Vec lin = cfg_.nu * lambdas_.array() + cfg_.profile.mu * cfg_.profile.phi.array();
  return explicit_part(a) - (lin.array() * a.array()).matrix();
}

SpectralCoeffs GalerkinModel::step_ifrk4(const SpectralCoeffs& a, double, double dt) const {
  if (dt == 0.0) return a;
  const Vec E1 = if_exponential(cfg_.profile, lambdas_, cfg_.nu, 0.5 * dt);
  const Vec E2 = if_exponential(cfg_.profile, lambdas_, cfg_.nu, dt);
  auto mul = [](const Vec& x, const Vec& y) -> Vec { return (x.array() * y.array()).matrix(); };
  const Vec k1 = explicit_part(a);
  const Vec k2 = explicit_part(mul(E1, a + 0.5 * dt * k1));
  const Vec k3 = explicit_part(mul(E1, a) + 0.5 * dt * k2);
  const Vec k4 = explicit_part(mul(E2, a) + dt * mul(E1, k3));
  return mul(E2, a) + (dt / 6.0) * (mul(E2, k1) + 2.0 * mul(E1, k2 + k3) + k4);
}

Trajectory GalerkinModel::simulate() const {
  Trajectory tr;
  tr.stride = cfg_.sample_every;
  tr.dt = cfg_.dt;
  const long nsteps = cfg_.steps();
  const long nsamples = nsteps / cfg_.sample_every + 1;
  tr.coeffs.resize(cfg_.n, nsamples);
  Vec a = cfg_.initial;
  auto record = [&](long k, long col) {
    tr.times.push_back(static_cast<double>(k) * cfg_.dt);
    tr.coeffs.col(col) = a;
    double err = 0.0;
    if (cfg_.estimate_error) {
      const double t = static_cast<double>(k) * cfg_.dt;
      const Vec coarse = step_ifrk4(a, t, cfg_.dt);
      const Vec fine = step_ifrk4(step_ifrk4(a, t, 0.5 * cfg_.dt), t + 0.5 * cfg_.dt, 0.5 * cfg_.dt);
      err = (fine - coarse).norm() * 16.0 / 15.0;
    }
    tr.local_error.push_back(err);
  };
  record(0, 0);
  for (long k = 1; k <= nsteps; ++k) {
    const Vec next = step_ifrk4(a, static_cast<double>(k - 1) * cfg_.dt, cfg_.dt);
    if (!next.allFinite()) {
      tr.blew_up = true;
      tr.failure = "non-finite state at t=" + std::to_string(static_cast<double>(k) * cfg_.dt);
      tr.coeffs.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(tr.times.size()));
      return tr;
    }
    a = next;
    if (k % cfg_.sample_every == 0) record(k, k / cfg_.sample_every);
  }
  return tr;
}

void write_trajectory_csv(const Trajectory& tr, const std::string& path) {
  std::vector<std::string> header{"time"};
  for (Eigen::Index j = 0; j < tr.coeffs.rows(); ++j) header.push_back("a_" + std::to_string(j + 1));
  std::vector<std::vector<std::string>> rows;
  for (std::size_t s = 0; s < tr.samples(); ++s) {
    std::vector<std::string> r{fmt_double(tr.times[s])};
    for (Eigen::Index j = 0; j < tr.coeffs.rows(); ++j)
      r.push_back(fmt_double(tr.coeffs(j, static_cast<Eigen::Index>(s))));
    rows.push_back(std::move(r));
  }
  write_csv(path, header, rows);
}

}  // namespace shnse

#include "shnse/dynamics_grid.hpp"
#include "shnse/dynamics_spectral.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace shnse {

long GridRunConfig::steps() const { return std::lround(T / dt); }

GridModel::GridModel(const Grid& g, const NeumannPoisson& poisson, const StokesSpectrum* spectrum,
                     GridRunConfig cfg)
    : g_(g), poisson_(poisson), spectrum_(spectrum), cfg_(std::move(cfg)) {
  if (!(cfg_.nu >= 0.0) || !(cfg_.mu >= 0.0)) throw ConfigError("grid run: nu, mu must be >= 0");
  if (!(cfg_.dt > 0.0) || !(cfg_.T >= cfg_.dt)) throw ConfigError("grid run: need 0 < dt <= T");
  const double r = cfg_.T / cfg_.dt;
  if (std::abs(r - std::round(r)) > 1e-9 * r) throw ConfigError("grid run: T must be a multiple of dt");
  if (cfg_.sample_every < 1 || cfg_.steps() % cfg_.sample_every != 0) throw ConfigError("grid run: sample_every must divide steps");
  if (cfg_.forcing.size() == 0) cfg_.forcing = g.zero_velocity();
  g.check_velocity(cfg_.forcing);
  g.check_velocity(cfg_.initial);
  if (cfg_.truncation) {
    if (!spectrum_) throw ConfigError("grid run: truncation needs a spectrum");
    if (*cfg_.truncation < 0 || *cfg_.truncation > spectrum_->size())
      throw ConfigError("grid run: truncation index outside the computed spectrum");
    Etr_ = spectrum_->E.leftCols(*cfg_.truncation);
  }
}

VelocityField GridModel::hyperviscous_bracket(const VelocityField& u, const VelocityField& Au,
                                              VelocityField* gn) const {
  VelocityField H = stokes_operator_grid(g_, poisson_, Au, true, cfg_.flux);
  if (cfg_.extended) H -= gradient(g_, neumann_laplacian(g_, divergence(g_, u)));
  if (cfg_.truncation) {
    const VelocityField low = Etr_ * (g_.cell_volume() * (Etr_.transpose() * H));
    H -= low;
    if (gn) *gn = cfg_.mu * low;
  } else if (gn) {
    *gn = g_.zero_velocity();
  }
  return H;
}

VelocityField GridModel::reformulated_rhs(const VelocityField& u, VelocityField* gn) const {
  const VelocityField Au = stokes_operator_grid(g_, poisson_, u, cfg_.extended, cfg_.flux);
  VelocityField rhs = cfg_.forcing - cfg_.nu * Au;
  if (cfg_.mu != 0.0) rhs -= cfg_.mu * hyperviscous_bracket(u, Au, gn);
  else if (gn) *gn = g_.zero_velocity();
  if (cfg_.nonlinear) rhs -= leray_project(g_, poisson_, skew_advection(g_, u, u));
  if (!rhs.allFinite()) throw std::runtime_error("non-finite right-hand side");
  return rhs;
}

VelocityField GridModel::step_rk4(const VelocityField& u, double dt) const {
  const VelocityField k1 = reformulated_rhs(u);
  const VelocityField k2 = reformulated_rhs(u + 0.5 * dt * k1);
  const VelocityField k3 = reformulated_rhs(u + 0.5 * dt * k2);
  const VelocityField k4 = reformulated_rhs(u + dt * k3);
  return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double GridModel::stability_limit() const {
  double lmax = 0.0;
  for (int a = 0; a < g_.dim(); ++a) lmax += 4.0 / (g_.h(a) * g_.h(a));
  const double rho = cfg_.nu * lmax + cfg_.mu * lmax * lmax;
  return rho > 0.0 ? 2.5 / rho : std::numeric_limits<double>::infinity();
}

GridTrajectory GridModel::simulate() const {
  if (cfg_.dt > stability_limit())
    throw ConfigError("grid run: dt=" + std::to_string(cfg_.dt) + " exceeds the explicit stability bound " +
                      std::to_string(stability_limit()));
  GridTrajectory tr;
  tr.stride = cfg_.sample_every;
  VelocityField u = cfg_.initial;
  const long nsteps = cfg_.steps();
  auto record = [&](long k) {
    tr.times.push_back(static_cast<double>(k) * cfg_.dt);
    tr.fields.push_back(u);
    VelocityField gn;
    reformulated_rhs(u, &gn);
    tr.gn_norm.push_back(g_.norm(gn));
  };
  record(0);
  for (long k = 1; k <= nsteps; ++k) {
    VelocityField next;
    try {
      next = step_rk4(u, cfg_.dt);
    } catch (const std::runtime_error& e) {
      tr.blew_up = true;
      tr.failure = std::string(e.what()) + " at t=" + std::to_string(static_cast<double>(k) * cfg_.dt);
      return tr;
    }
    if (!next.allFinite()) {
      tr.blew_up = true;
      tr.failure = "non-finite state at t=" + std::to_string(static_cast<double>(k) * cfg_.dt);
      return tr;
    }
    u = std::move(next);
    if (k % cfg_.sample_every == 0) record(k);
  }
  return tr;
}

DivergenceSeries divergence_monitor(const Grid& g, const GridTrajectory& tr, double integrator_tolerance) {
  DivergenceSeries s;
  s.times = tr.times;
  for (const auto& u : tr.fields) {
    const ScalarField d = divergence(g, u);
    s.sup.push_back(d.cwiseAbs().maxCoeff());
    s.mean.push_back(d.mean());
  }
  const double tol = 1e-10 + integrator_tolerance;
  for (std::size_t k = 1; k < s.sup.size(); ++k) {
    const double inc = s.sup[k] - s.sup[k - 1];
    s.worst_increase = std::max(s.worst_increase, inc);
    if (inc > tol) s.increased = true;
  }
  return s;
}

void save_grid_trajectory(const Grid& g, const GridTrajectory& tr, const std::string& path) {
  static const char magic[9] = {'S', 'H', 'N', 'S', 'E', 'G', 'R', 'D', '1'};
  Sha256 h;
  const Vec times = Eigen::Map<const Vec>(tr.times.data(), static_cast<Eigen::Index>(tr.times.size()));
  h.update(times);
  for (const auto& f : tr.fields) h.update(f);
  const Digest d = h.finish();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_bytes(os, magic, sizeof magic);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  for (int a = 0; a < 3; ++a) write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(g.spec().cells[a]));
  for (int a = 0; a < 3; ++a) write_pod<double>(os, g.spec().lengths[a]);
  write_pod<std::uint64_t>(os, tr.times.size());
  write_pod<std::uint64_t>(os, g.face_dofs());
  write_bytes(os, d.data(), d.size());
  write_bytes(os, times.data(), tr.times.size() * sizeof(double));
  for (const auto& f : tr.fields) write_bytes(os, f.data(), static_cast<std::size_t>(f.size()) * sizeof(double));
}

}  // namespace shnse

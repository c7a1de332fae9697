#include "shnse/stokes_pressure.hpp"

#include <cmath>

namespace shnse {

namespace {

std::size_t stride_of(const std::array<int, 3>& s, int a) {
  if (a == 0) return 1;
  if (a == 1) return static_cast<std::size_t>(s[0]);
  return static_cast<std::size_t>(s[0]) * static_cast<std::size_t>(s[1]);
}

// f(c, idx, face, high) for every boundary-normal face.
template <class F>
void for_each_wall_face(const Grid& g, F&& f) {
  for (int c = 0; c < g.dim(); ++c) {
    const auto& s = g.face_shape(c);
    for (int side = 0; side < 2; ++side) {
      std::array<int, 3> idx{0, 0, 0};
      idx[c] = side == 0 ? 0 : s[c] - 1;
      const int a1 = (c + 1) % 3, a2 = (c + 2) % 3;
      for (int p = 0; p < s[a1]; ++p)
        for (int q = 0; q < s[a2]; ++q) {
          idx[a1] = p;
          idx[a2] = q;
          f(c, idx, g.face_index(c, idx[0], idx[1], idx[2]), side == 1);
        }
    }
  }
}

// Cell adjacent to a wall face, k layers inward.
std::size_t inward_cell(const Grid& g, int c, std::array<int, 3> idx, bool high, int k) {
  idx[c] = high ? g.n(c) - 1 - k : k;
  return g.cell_index(idx[0], idx[1], idx[2]);
}

double at(const Vec& v, std::size_t i) { return v[static_cast<Eigen::Index>(i)]; }

VelocityField one_sided_flux(const Grid& g, const VelocityField& u, bool general) {
  VelocityField B = g.zero_velocity();
  const ScalarField theta = general ? divergence(g, u) : ScalarField();
  for_each_wall_face(g, [&](int c, const std::array<int, 3>& idx, std::size_t f, bool high) {
    const auto& s = g.face_shape(c);
    const std::size_t st = stride_of(s, c);
    auto in = [&](int k) { return at(u, high ? f - k * st : f + k * st); };
    double val = (2.0 * in(0) - 5.0 * in(1) + 4.0 * in(2) - in(3)) / (g.h(c) * g.h(c));
    for (int d = 0; d < g.dim(); ++d) {
      if (d == c) continue;
      const std::size_t sd = stride_of(s, d);
      const double uf = at(u, f);
      const double lo = idx[d] > 0 ? at(u, f - sd) : -uf;
      const double hi = idx[d] < s[d] - 1 ? at(u, f + sd) : -uf;
      val += (lo - 2.0 * uf + hi) / (g.h(d) * g.h(d));
    }
    if (general) {
      const double t0 = at(theta, inward_cell(g, c, idx, high, 0));
      const double t1 = at(theta, inward_cell(g, c, idx, high, 1));
      const double t2 = at(theta, inward_cell(g, c, idx, high, 2));
      const double dn = (-2.0 * t0 + 3.0 * t1 - t2) / g.h(c);  // inward derivative
      val -= high ? -dn : dn;
    }
    B[static_cast<Eigen::Index>(f)] = val;
  });
  return B;
}

VelocityField conservative_flux(const Grid& g, const VelocityField& u, bool general) {
  ScalarField target = -divergence(g, apply_laplacian(g, u));
  if (general) target += neumann_laplacian(g, divergence(g, u));
  std::vector<int> walls(g.cell_count(), 0);
  for_each_wall_face(g, [&](int c, const std::array<int, 3>& idx, std::size_t, bool high) {
    ++walls[inward_cell(g, c, idx, high, 0)];
  });
  VelocityField B = g.zero_velocity();
  for_each_wall_face(g, [&](int c, const std::array<int, 3>& idx, std::size_t f, bool high) {
    const std::size_t cell = inward_cell(g, c, idx, high, 0);
    const double share = at(target, cell) / walls[cell];
    B[static_cast<Eigen::Index>(f)] = (high ? 1.0 : -1.0) * g.h(c) * share;
  });
  return B;
}

}  // namespace

const char* flux_rule_name(FluxRule r) { return r == FluxRule::OneSided ? "one_sided" : "conservative"; }

FluxRule parse_flux_rule(const std::string& s) {
  if (s == "one_sided") return FluxRule::OneSided;
  if (s == "conservative") return FluxRule::Conservative;
  throw std::invalid_argument("unknown flux rule '" + s + "' (one_sided|conservative)");
}

VelocityField stokes_pressure_flux(const Grid& g, const VelocityField& u, bool general, FluxRule rule) {
  g.check_velocity(u);
  return rule == FluxRule::OneSided ? one_sided_flux(g, u, general) : conservative_flux(g, u, general);
}

PressureSolution stokes_pressure_solve(const Grid& g, const NeumannPoisson& poisson, const VelocityField& u,
                                       bool general, FluxRule rule) {
  PressureSolution out;
  if (!general) {
    double hmin = g.h(0);
    for (int a = 1; a < g.dim(); ++a) hmin = std::min(hmin, g.h(a));
    const double scale = u.cwiseAbs().maxCoeff() / hmin;
    out.divergence_warning = divergence(g, u).cwiseAbs().maxCoeff() > 1e-8 * scale;
  }
  const PoissonResult r = poisson.solve(g.zero_scalar(), stokes_pressure_flux(g, u, general, rule));
  out.p_s = r.q;
  out.compat_correction = r.compat_correction;
  out.residual = r.residual;
  return out;
}

VelocityField stokes_operator_grid(const Grid& g, const NeumannPoisson& poisson, const VelocityField& u,
                                   bool general, FluxRule rule) {
  const PressureSolution ps = stokes_pressure_solve(g, poisson, u, general, rule);
  return gradient(g, ps.p_s) - apply_laplacian(g, u);
}

VelocityField spectral_apply_power(const Grid& g, const StokesSpectrum& s, const VelocityField& u, double power) {
  const Vec c = g.cell_volume() * (s.E.transpose() * u);
  Vec w(c.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) w[j] = std::pow(s.lambdas[j], power) * c[j];
  return s.E * w;
}

double span_defect(const Grid& g, const StokesSpectrum& s, const VelocityField& u) {
  const double nu = g.norm(u);
  if (nu == 0.0) return 0.0;
  return g.norm(u - spectral_apply_power(g, s, u, 0.0)) / nu;
}

StokesApplyResult stokes_apply_via_pressure(const Grid& g, const NeumannPoisson& poisson,
                                            const StokesSpectrum& s, const VelocityField& u, FluxRule rule) {
  StokesApplyResult out;
  const PressureSolution ps = stokes_pressure_solve(g, poisson, u, false, rule);
  out.divergence_warning = ps.divergence_warning;
  out.Au = gradient(g, ps.p_s) - apply_laplacian(g, u);
  const VelocityField ref = spectral_apply_power(g, s, u, 1.0);
  out.in_span = span_defect(g, s, u) <= 1e-8;
  const double den = g.norm(ref);
  out.residual = den > 0.0 ? g.norm(out.Au - ref) / den : g.norm(out.Au);
  return out;
}

VelocityField biharmonic_via_pressure(const Grid& g, const NeumannPoisson& poisson, const VelocityField& u,
                                      int sign) {
  const VelocityField L1 = apply_laplacian(g, u);
  VelocityField w = -L1;
  for_each_wall_face(g, [&](int c, const std::array<int, 3>&, std::size_t f, bool high) {
    const std::size_t st = stride_of(g.face_shape(c), c);
    auto in = [&](int k) { return at(L1, high ? f - k * st : f + k * st); };
    w[static_cast<Eigen::Index>(f)] = -(3.0 * in(1) - 3.0 * in(2) + in(3));
  });
  const VelocityField X = -apply_laplacian(g, w, TangentialClosure::Extrapolated);
  const PoissonResult phi = poisson.solve(divergence(g, X));
  return X - static_cast<double>(sign) * gradient(g, phi.q);
}

VelocityField biharmonic_composed(const Grid& g, const NeumannPoisson& poisson, const VelocityField& u,
                                  FluxRule rule) {
  const VelocityField A1 = stokes_operator_grid(g, poisson, u, false, rule);
  return stokes_operator_grid(g, poisson, A1, true, rule);
}

double biharmonic_identity_residual(const Grid& g, const NeumannPoisson& poisson, const StokesSpectrum& s,
                                    const VelocityField& u, int sign) {
  const VelocityField ref = spectral_apply_power(g, s, u, 2.0);
  const VelocityField val = biharmonic_via_pressure(g, poisson, u, sign);
  const double den = g.norm(ref);
  return den > 0.0 ? g.norm(val - ref) / den : g.norm(val);
}

HelmholtzSplit helmholtz_decompose(const Grid& g, const NeumannPoisson& poisson, const VelocityField& h) {
  HelmholtzSplit out;
  out.Ph = leray_project(g, poisson, h, &out.phi);
  return out;
}

ScalarField recover_pressure(const Grid& g, const NeumannPoisson& poisson, const VelocityField& u,
                             const VelocityField& gforce, const PressureConfig& cfg) {
  ScalarField p = cfg.nu * stokes_pressure_solve(g, poisson, u, cfg.extended, cfg.rule).p_s;
  if (cfg.mu != 0.0) {
    const VelocityField A1 = stokes_operator_grid(g, poisson, u, cfg.extended, cfg.rule);
    p += cfg.mu * stokes_pressure_solve(g, poisson, A1, true, cfg.rule).p_s;
    if (cfg.extended) p -= cfg.mu * neumann_laplacian(g, divergence(g, u));
  }
  p += helmholtz_decompose(g, poisson, gforce - skew_advection(g, u, u)).phi;
  p.array() -= p.mean();
  return p;
}

}  // namespace shnse

#include "shnse/grid_ops.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace shnse {

namespace {

std::size_t axis_stride(const std::array<int, 3>& s, int a) {
  if (a == 0) return 1;
  if (a == 1) return static_cast<std::size_t>(s[0]);
  return static_cast<std::size_t>(s[0]) * static_cast<std::size_t>(s[1]);
}

template <class F>
void for_each_index(const std::array<int, 3>& s, F&& f) {
  for (int k = 0; k < s[2]; ++k)
    for (int j = 0; j < s[1]; ++j)
      for (int i = 0; i < s[0]; ++i) f(std::array<int, 3>{i, j, k});
}

}  // namespace

Grid::Grid(const GridSpec& spec) : spec_(spec) {
  if (spec.dim != 2 && spec.dim != 3)
    throw GridError("grid: dim must be 2 or 3, got " + std::to_string(spec.dim));
  for (int a = 0; a < spec.dim; ++a) {
    if (spec.cells[a] < 8)
      throw GridError("grid: need at least 8 cells per axis, axis " + std::to_string(a) + " has " +
                      std::to_string(spec.cells[a]));
    if (!(spec.lengths[a] > 0.0) || !std::isfinite(spec.lengths[a]))
      throw GridError("grid: length along axis " + std::to_string(a) + " must be positive");
  }
  if (spec.dim == 2) {
    spec_.cells[2] = 1;
    spec_.lengths[2] = 1.0;
  }
  vol_ = 1.0;
  ncell_ = 1;
  for (int a = 0; a < 3; ++a) {
    h_[a] = a < spec_.dim ? spec_.lengths[a] / spec_.cells[a] : 1.0;
    if (a < spec_.dim) vol_ *= h_[a];
    ncell_ *= static_cast<std::size_t>(spec_.cells[a]);
  }
  nface_ = 0;
  for (int c = 0; c < 3; ++c) {
    fshape_[c] = spec_.cells;
    if (c < spec_.dim) {
      fshape_[c][c] += 1;
      fcount_[c] = static_cast<std::size_t>(fshape_[c][0]) * fshape_[c][1] * fshape_[c][2];
    } else {
      fcount_[c] = 0;
    }
    foff_[c] = nface_;
    nface_ += fcount_[c];
  }
  boundary_.assign(nface_, 0);
  for (int c = 0; c < spec_.dim; ++c) {
    const auto& s = fshape_[c];
    for_each_index(s, [&](const std::array<int, 3>& idx) {
      const std::size_t f = face_index(c, idx[0], idx[1], idx[2]);
      if (idx[c] == 0 || idx[c] == s[c] - 1) {
        boundary_[f] = 1;
        bfaces_.push_back(f);
      } else {
        interior_.push_back(f);
      }
    });
  }
}

double Grid::domain_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) v *= length(a);
  return v;
}

double Grid::norm(const Vec& a) const { return std::sqrt(vol_ * a.squaredNorm()); }

void Grid::check_scalar(const ScalarField& q) const {
  if (static_cast<std::size_t>(q.size()) != ncell_)
    throw GridError("scalar field has " + std::to_string(q.size()) + " entries, grid has " +
                    std::to_string(ncell_) + " cells");
}

void Grid::check_velocity(const VelocityField& u) const {
  if (static_cast<std::size_t>(u.size()) != nface_)
    throw GridError("velocity field has " + std::to_string(u.size()) + " entries, grid has " +
                    std::to_string(nface_) + " faces");
}

Grid build_grid(const GridSpec& spec) { return Grid(spec); }

VelocityField apply_laplacian(const Grid& g, const VelocityField& u, TangentialClosure closure) {
  g.check_velocity(u);
  VelocityField out = g.zero_velocity();
  for (int c = 0; c < g.dim(); ++c) {
    const auto& s = g.face_shape(c);
    for_each_index(s, [&](const std::array<int, 3>& idx) {
      if (idx[c] == 0 || idx[c] == s[c] - 1) return;
      const std::size_t f = g.face_index(c, idx[0], idx[1], idx[2]);
      const double uf = u[static_cast<Eigen::Index>(f)];
      auto at = [&](std::size_t i) { return u[static_cast<Eigen::Index>(i)]; };
      double acc = 0.0;
      for (int a = 0; a < g.dim(); ++a) {
        const std::size_t st = axis_stride(s, a);
        double lo, hi;
        if (a == c) {
          lo = at(f - st);
          hi = at(f + st);
        } else {
          const int ia = idx[a], na = s[a];
          if (ia > 0) {
            lo = at(f - st);
          } else if (closure == TangentialClosure::Odd) {
            lo = -uf;
          } else {
            lo = 4.0 * uf - 6.0 * at(f + st) + 4.0 * at(f + 2 * st) - at(f + 3 * st);
          }
          if (ia < na - 1) {
            hi = at(f + st);
          } else if (closure == TangentialClosure::Odd) {
            hi = -uf;
          } else {
            hi = 4.0 * uf - 6.0 * at(f - st) + 4.0 * at(f - 2 * st) - at(f - 3 * st);
          }
        }
        acc += (lo - 2.0 * uf + hi) / (g.h(a) * g.h(a));
      }
      out[static_cast<Eigen::Index>(f)] = acc;
    });
  }
  return out;
}

ScalarField divergence(const Grid& g, const VelocityField& u) {
  g.check_velocity(u);
  ScalarField d = g.zero_scalar();
  const std::array<int, 3> cs = g.spec().cells;
  for (int c = 0; c < g.dim(); ++c) {
    const std::size_t st = axis_stride(g.face_shape(c), c);
    const double ih = 1.0 / g.h(c);
    for_each_index(cs, [&](const std::array<int, 3>& idx) {
      const std::size_t f = g.face_index(c, idx[0], idx[1], idx[2]);
      d[static_cast<Eigen::Index>(g.cell_index(idx[0], idx[1], idx[2]))] +=
          (u[static_cast<Eigen::Index>(f + st)] - u[static_cast<Eigen::Index>(f)]) * ih;
    });
  }
  return d;
}

VelocityField gradient(const Grid& g, const ScalarField& q) {
  g.check_scalar(q);
  VelocityField out = g.zero_velocity();
  for (int c = 0; c < g.dim(); ++c) {
    const auto& s = g.face_shape(c);
    const std::size_t cst = axis_stride(g.spec().cells, c);
    const double ih = 1.0 / g.h(c);
    for_each_index(s, [&](const std::array<int, 3>& idx) {
      if (idx[c] == 0 || idx[c] == s[c] - 1) return;
      const std::size_t cell = g.cell_index(idx[0], idx[1], idx[2]);
      out[static_cast<Eigen::Index>(g.face_index(c, idx[0], idx[1], idx[2]))] =
          (q[static_cast<Eigen::Index>(cell)] - q[static_cast<Eigen::Index>(cell - cst)]) * ih;
    });
  }
  return out;
}

ScalarField neumann_laplacian(const Grid& g, const ScalarField& q) {
  return divergence(g, gradient(g, q));
}

ScalarField dirichlet_laplacian(const Grid& g, const ScalarField& q) {
  g.check_scalar(q);
  ScalarField out = g.zero_scalar();
  const std::array<int, 3> cs = g.spec().cells;
  for_each_index(cs, [&](const std::array<int, 3>& idx) {
    const std::size_t i = g.cell_index(idx[0], idx[1], idx[2]);
    const double qi = q[static_cast<Eigen::Index>(i)];
    double acc = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const std::size_t st = axis_stride(cs, a);
      const double lo = idx[a] > 0 ? q[static_cast<Eigen::Index>(i - st)] : -qi;
      const double hi = idx[a] < cs[a] - 1 ? q[static_cast<Eigen::Index>(i + st)] : -qi;
      acc += (lo - 2.0 * qi + hi) / (g.h(a) * g.h(a));
    }
    out[static_cast<Eigen::Index>(i)] = acc;
  });
  return out;
}

VelocityField skew_advection(const Grid& g, const VelocityField& a, const VelocityField& phi) {
  g.check_velocity(a);
  g.check_velocity(phi);
  VelocityField out = g.zero_velocity();
  auto A = [&](std::size_t i) { return a[static_cast<Eigen::Index>(i)]; };
  auto P = [&](std::size_t i) { return phi[static_cast<Eigen::Index>(i)]; };
  for (int c = 0; c < g.dim(); ++c) {
    const auto& s = g.face_shape(c);
    for_each_index(s, [&](const std::array<int, 3>& idx) {
      if (idx[c] == 0 || idx[c] == s[c] - 1) return;
      const std::size_t f = g.face_index(c, idx[0], idx[1], idx[2]);
      double acc = 0.0;
      for (int d = 0; d < g.dim(); ++d) {
        const std::size_t st = axis_stride(s, d);
        double a_hi, a_lo, p_hi, p_lo;
        if (d == c) {
          // control-volume faces sit at the two neighbouring cell centres
          a_hi = 0.5 * (A(f) + A(f + st));
          a_lo = 0.5 * (A(f - st) + A(f));
          p_hi = P(f + st);
          p_lo = P(f - st);
        } else {
          // control-volume faces sit on cell edges; average the d-velocity of the two
          // cells sharing face f
          std::array<int, 3> hi_cell = idx, lo_cell = idx;
          lo_cell[c] -= 1;
          auto dface = [&](std::array<int, 3> cell, int off) {
            cell[d] += off;
            return g.face_index(d, cell[0], cell[1], cell[2]);
          };
          a_hi = 0.5 * (A(dface(hi_cell, 1)) + A(dface(lo_cell, 1)));
          a_lo = 0.5 * (A(dface(hi_cell, 0)) + A(dface(lo_cell, 0)));
          const double pf = P(f);
          p_hi = idx[d] < s[d] - 1 ? P(f + st) : -pf;
          p_lo = idx[d] > 0 ? P(f - st) : -pf;
        }
        acc += (a_hi * p_hi - a_lo * p_lo) / (2.0 * g.h(d));
      }
      out[static_cast<Eigen::Index>(f)] = acc;
    });
  }
  return out;
}

VelocityField boundary_part(const Grid& g, const VelocityField& u) {
  g.check_velocity(u);
  VelocityField b = g.zero_velocity();
  for (std::size_t f : g.boundary_faces()) b[static_cast<Eigen::Index>(f)] = u[static_cast<Eigen::Index>(f)];
  return b;
}

VelocityField interior_part(const Grid& g, const VelocityField& u) {
  g.check_velocity(u);
  VelocityField b = u;
  for (std::size_t f : g.boundary_faces()) b[static_cast<Eigen::Index>(f)] = 0.0;
  return b;
}

double boundary_max(const Grid& g, const VelocityField& u) {
  double m = 0.0;
  for (std::size_t f : g.boundary_faces()) m = std::max(m, std::abs(u[static_cast<Eigen::Index>(f)]));
  return m;
}

NeumannPoisson::NeumannPoisson(const Grid& g, double tol_residual, double tol_compat)
    : g_(g), tol_res_(tol_residual), tol_compat_(tol_compat) {
  for (int a = 0; a < 3; ++a) {
    const int n = a < g.dim() ? g.n(a) : 1;
    Mat C(n, n);
    Vec ev(n);
    for (int k = 0; k < n; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      for (int i = 0; i < n; ++i) C(k, i) = scale * std::cos(std::numbers::pi * k * (i + 0.5) / n);
      const double s = std::sin(std::numbers::pi * k / (2.0 * n));
      ev[k] = a < g.dim() ? -4.0 / (g.h(a) * g.h(a)) * s * s : 0.0;
    }
    C_[a] = std::move(C);
    ev_[a] = std::move(ev);
  }
}

ScalarField NeumannPoisson::transform(const ScalarField& x, bool forward) const {
  ScalarField y = x;
  const Eigen::Index nx = g_.n(0), ny = g_.n(1), nz = g_.dim() == 3 ? g_.n(2) : 1;
  {
    Eigen::Map<Mat> M(y.data(), nx, ny * nz);
    Mat t = forward ? Mat(C_[0] * M) : Mat(C_[0].transpose() * M);
    M = t;
  }
  for (Eigen::Index k = 0; k < nz; ++k) {
    Eigen::Map<Mat> S(y.data() + k * nx * ny, nx, ny);
    Mat t = forward ? Mat(S * C_[1].transpose()) : Mat(S * C_[1]);
    S = t;
  }
  if (g_.dim() == 3) {
    Eigen::Map<Mat> M(y.data(), nx * ny, nz);
    Mat t = forward ? Mat(M * C_[2].transpose()) : Mat(M * C_[2]);
    M = t;
  }
  return y;
}

PoissonResult NeumannPoisson::solve(const ScalarField& rhs) const {
  return solve(rhs, g_.zero_velocity());
}

PoissonResult NeumannPoisson::solve(const ScalarField& rhs, const VelocityField& flux) const {
  g_.check_scalar(rhs);
  g_.check_velocity(flux);
  const VelocityField B = boundary_part(g_, flux);
  ScalarField r = rhs - divergence(g_, B);

  PoissonResult out;
  const double total = r.sum();
  out.compat_correction = std::abs(total) * g_.cell_volume();
  out.compat_exceeded = out.compat_correction > tol_compat_ * (g_.norm(rhs) + g_.norm(B));
  r.array() -= total / static_cast<double>(r.size());

  ScalarField rh = transform(r, true);
  const Eigen::Index nx = g_.n(0), ny = g_.n(1), nz = g_.dim() == 3 ? g_.n(2) : 1;
  for (Eigen::Index k = 0; k < nz; ++k)
    for (Eigen::Index j = 0; j < ny; ++j)
      for (Eigen::Index i = 0; i < nx; ++i) {
        const Eigen::Index id = i + nx * (j + ny * k);
        const double e = ev_[0][i] + ev_[1][j] + ev_[2][k];
        rh[id] = id == 0 ? 0.0 : rh[id] / e;
      }
  out.q = transform(rh, false);
  out.q.array() -= out.q.mean();

  const ScalarField DB = divergence(g_, B);
  const ScalarField res = neumann_laplacian(g_, out.q) - r;
  const double scale = g_.norm(rhs) + g_.norm(DB);
  out.residual = scale > 0.0 ? g_.norm(res) / scale : g_.norm(res);
  if (!(out.residual <= tol_res_))
    throw PoissonError("neumann poisson: residual " + std::to_string(out.residual) +
                       " above tolerance " + std::to_string(tol_res_));
  return out;
}

}  // namespace shnse

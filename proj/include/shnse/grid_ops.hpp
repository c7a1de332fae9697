// Staggered (MAC) grid on a box, fields, and the finite-difference operators.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace shnse {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Cell-centred values, x index fastest.
using ScalarField = Vec;
// Face-normal values, component-major (all x-faces, then y-faces, then z-faces).
// Boundary-normal faces are part of the layout; a no-slip field stores zeros there.
using VelocityField = Vec;

struct GridSpec {
  int dim = 2;
  std::array<int, 3> cells{32, 32, 1};
  std::array<double, 3> lengths{1.0, 1.0, 1.0};
};

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Grid {
 public:
  explicit Grid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int n(int axis) const { return spec_.cells[axis]; }
  double h(int axis) const { return h_[axis]; }
  double length(int axis) const { return spec_.lengths[axis]; }
  double cell_volume() const { return vol_; }
  double domain_volume() const;

  std::size_t cell_count() const { return ncell_; }
  std::size_t cell_index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n(0)) *
        (static_cast<std::size_t>(j) + static_cast<std::size_t>(n(1)) * static_cast<std::size_t>(k));
  }

  // Component c has n(c)+1 faces along axis c.
  const std::array<int, 3>& face_shape(int c) const { return fshape_[c]; }
  std::size_t face_count(int c) const { return fcount_[c]; }
  std::size_t face_offset(int c) const { return foff_[c]; }
  std::size_t face_dofs() const { return nface_; }
  std::size_t face_index(int c, int i, int j, int k) const {
    const auto& s = fshape_[c];
    return foff_[c] + static_cast<std::size_t>(i) + static_cast<std::size_t>(s[0]) *
        (static_cast<std::size_t>(j) + static_cast<std::size_t>(s[1]) * static_cast<std::size_t>(k));
  }
  bool is_boundary_face(std::size_t f) const { return boundary_[f] != 0; }
  // Indices of faces that are not boundary-normal (the velocity unknowns).
  const std::vector<std::size_t>& interior_faces() const { return interior_; }
  const std::vector<std::size_t>& boundary_faces() const { return bfaces_; }

  ScalarField zero_scalar() const { return ScalarField::Zero(static_cast<Eigen::Index>(ncell_)); }
  VelocityField zero_velocity() const { return VelocityField::Zero(static_cast<Eigen::Index>(nface_)); }

  // Volume-weighted inner products.
  double inner(const Vec& a, const Vec& b) const { return vol_ * a.dot(b); }
  double norm(const Vec& a) const;

  void check_scalar(const ScalarField& q) const;
  void check_velocity(const VelocityField& u) const;

 private:
  GridSpec spec_;
  std::array<double, 3> h_{1.0, 1.0, 1.0};
  double vol_ = 1.0;
  std::size_t ncell_ = 0, nface_ = 0;
  std::array<std::array<int, 3>, 3> fshape_{};
  std::array<std::size_t, 3> fcount_{}, foff_{};
  std::vector<char> boundary_;
  std::vector<std::size_t> interior_, bfaces_;
};

Grid build_grid(const GridSpec& spec);

// Treatment of the tangential neighbour that falls outside the domain.
enum class TangentialClosure {
  Odd,          // ghost = -u: zero trace on the wall (no-slip)
  Extrapolated  // cubic extrapolation from the first four interior values
};

// Delta_h u on interior faces; boundary faces of the result are zero.
VelocityField apply_laplacian(const Grid& g, const VelocityField& u,
                              TangentialClosure closure = TangentialClosure::Odd);
ScalarField divergence(const Grid& g, const VelocityField& u);
// Face gradient; zero on boundary faces.
VelocityField gradient(const Grid& g, const ScalarField& q);
// D G q, the cell-centred Neumann Laplacian.
ScalarField neumann_laplacian(const Grid& g, const ScalarField& q);
// Cell-centred Laplacian with homogeneous Dirichlet walls (odd ghost cells).
ScalarField dirichlet_laplacian(const Grid& g, const ScalarField& q);

// Skew-symmetric advection of the face field phi by the face field a:
// half the sum of the conservative and advective central forms on momentum control volumes.
// For no-slip a, (N(a; phi), phi) = 0 exactly up to round-off.
VelocityField skew_advection(const Grid& g, const VelocityField& a, const VelocityField& phi);

VelocityField boundary_part(const Grid& g, const VelocityField& u);
VelocityField interior_part(const Grid& g, const VelocityField& u);
// Largest |u| over boundary-normal faces.
double boundary_max(const Grid& g, const VelocityField& u);

struct PoissonResult {
  ScalarField q;
  double compat_correction = 0.0;  // |sum (rhs - D B)| * cell volume
  bool compat_exceeded = false;
  double residual = 0.0;  // relative residual of the corrected system
};

class PoissonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Cell-centred Neumann problem D(G q + B) = rhs, diagonalised by the DCT-II.
// B is the boundary-face part of `flux` and holds the axis-direction component of grad q
// on the wall. The rhs is made compatible by removing its mean; the size of that
// correction is reported.
class NeumannPoisson {
 public:
  explicit NeumannPoisson(const Grid& g, double tol_residual = 1e-10, double tol_compat = 1e-8);

  PoissonResult solve(const ScalarField& rhs) const;
  PoissonResult solve(const ScalarField& rhs, const VelocityField& flux) const;

  const Grid& grid() const { return g_; }

 private:
  ScalarField transform(const ScalarField& x, bool forward) const;

  Grid g_;
  double tol_res_, tol_compat_;
  std::array<Mat, 3> C_;   // orthonormal DCT-II per axis
  std::array<Vec, 3> ev_;  // 1-D Neumann eigenvalues per axis
};

// Dense matrix of a linear map on the given index set, assembled column by column.
template <class Op>
Mat assemble_dense(const std::vector<std::size_t>& dofs, std::size_t full_size, Op op) {
  const auto n = static_cast<Eigen::Index>(dofs.size());
  Mat M(n, n);
  Vec x = Vec::Zero(static_cast<Eigen::Index>(full_size));
  for (Eigen::Index c = 0; c < n; ++c) {
    x[static_cast<Eigen::Index>(dofs[c])] = 1.0;
    const Vec y = op(x);
    for (Eigen::Index r = 0; r < n; ++r) M(r, c) = y[static_cast<Eigen::Index>(dofs[r])];
    x[static_cast<Eigen::Index>(dofs[c])] = 0.0;
  }
  return M;
}

}  // namespace shnse

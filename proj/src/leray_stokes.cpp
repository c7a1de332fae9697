#include "shnse/leray_stokes.hpp"

#include <lapacke.h>

#include <Eigen/QR>
#include <filesystem>
#include <fstream>
#include <mutex>

extern "C" void openblas_set_num_threads(int);

namespace shnse {

namespace {

const char kMagic[9] = {'S', 'H', 'N', 'S', 'E', 'E', 'I', 'G', '1'};

void single_threaded_blas() {
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

Mat scatter_rows(const Mat& rows, const std::vector<std::size_t>& dofs, std::size_t full) {
  Mat out = Mat::Zero(static_cast<Eigen::Index>(full), rows.cols());
  for (std::size_t r = 0; r < dofs.size(); ++r)
    out.row(static_cast<Eigen::Index>(dofs[r])) = rows.row(static_cast<Eigen::Index>(r));
  return out;
}

}  // namespace

Mat streamfunction_curl(const Grid& g) {
  if (g.dim() != 2) throw BasisError("stream-function curl basis is two-dimensional");
  const int nx = g.n(0), ny = g.n(1);
  const double hx = g.h(0), hy = g.h(1);
  Mat C = Mat::Zero(static_cast<Eigen::Index>(g.face_dofs()), static_cast<Eigen::Index>((nx - 1) * (ny - 1)));
  for (int b = 1; b < ny; ++b)
    for (int a = 1; a < nx; ++a) {
      const Eigen::Index col = (a - 1) + static_cast<Eigen::Index>(nx - 1) * (b - 1);
      C(static_cast<Eigen::Index>(g.face_index(0, a, b - 1, 0)), col) += 1.0 / hy;
      C(static_cast<Eigen::Index>(g.face_index(0, a, b, 0)), col) -= 1.0 / hy;
      C(static_cast<Eigen::Index>(g.face_index(1, a - 1, b, 0)), col) -= 1.0 / hx;
      C(static_cast<Eigen::Index>(g.face_index(1, a, b, 0)), col) += 1.0 / hx;
    }
  return C;
}

DivFreeBasis build_divfree_basis(const Grid& g) {
  DivFreeBasis out;
  const double inv_sqrt_vol = 1.0 / std::sqrt(g.cell_volume());
  if (g.dim() == 2) {
    const Mat C = streamfunction_curl(g);
    const Mat gram = C.transpose() * C;
    Eigen::LLT<Mat> chol(gram);
    if (chol.info() != Eigen::Success) throw BasisError("stream-function Gram matrix is not positive definite");
    // Z = C L^{-T}
    Mat Zt = chol.matrixL().solve(C.transpose());
    out.Z = Zt.transpose() * inv_sqrt_vol;
  } else {
    const auto& dofs = g.interior_faces();
    const Eigen::Index nif = static_cast<Eigen::Index>(dofs.size());
    Mat Dt(nif, static_cast<Eigen::Index>(g.cell_count()));
    VelocityField e = g.zero_velocity();
    for (Eigen::Index r = 0; r < nif; ++r) {
      e[static_cast<Eigen::Index>(dofs[r])] = 1.0;
      Dt.row(r) = divergence(g, e).transpose();
      e[static_cast<Eigen::Index>(dofs[r])] = 0.0;
    }
    Eigen::ColPivHouseholderQR<Mat> qr(Dt);
    const Eigen::Index rank = qr.rank();
    if (rank != static_cast<Eigen::Index>(g.cell_count()) - 1)
      throw BasisError("rank of D is " + std::to_string(rank) + ", expected cells-1 = " +
                       std::to_string(g.cell_count() - 1));
    const Mat Q = qr.householderQ() * Mat::Identity(nif, nif);
    out.Z = scatter_rows(Q.rightCols(nif - rank), dofs, g.face_dofs()) * inv_sqrt_vol;
  }
  out.n_free = static_cast<std::size_t>(out.Z.cols());
  const std::size_t expected = g.interior_faces().size() - (g.cell_count() - 1);
  if (out.n_free != expected)
    throw BasisError("divergence-free dimension " + std::to_string(out.n_free) + " differs from " +
                     std::to_string(expected));
  return out;
}

VelocityField leray_project(const Grid& g, const NeumannPoisson& poisson, const VelocityField& v,
                            ScalarField* potential) {
  const PoissonResult r = poisson.solve(divergence(g, v), v);
  VelocityField Pv = v - gradient(g, r.q) - boundary_part(g, v);
  if (potential) *potential = r.q;
  return Pv;
}

SymmetricEigen symmetric_eigen_lowest(Mat S, int k, bool want_vectors) {
  single_threaded_blas();
  const lapack_int n = static_cast<lapack_int>(S.rows());
  if (S.cols() != S.rows()) throw std::invalid_argument("symmetric_eigen_lowest: matrix not square");
  if (k < 1 || k > n) throw std::invalid_argument("symmetric_eigen_lowest: k out of range");
  std::vector<double> w(static_cast<std::size_t>(n));
  Mat Zv(n, want_vectors ? k : 1);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
  lapack_int m = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'I', 'L', n, S.data(), n, 0.0,
                                         0.0, 1, k, 0.0, &m, w.data(), Zv.data(), n, isuppz.data());
  if (info != 0 || m != k)
    throw std::runtime_error("dsyevr failed: info=" + std::to_string(info) + " found=" + std::to_string(m));
  SymmetricEigen out;
  out.values = Eigen::Map<Vec>(w.data(), k);
  if (want_vectors) out.vectors = std::move(Zv);
  return out;
}

Digest spectrum_digest(const Vec& lambdas, const Mat& E) {
  Sha256 h;
  h.update(lambdas);
  h.update(E);
  return h.finish();
}

StokesSpectrum compute_stokes_spectrum(const Grid& g, const DivFreeBasis& basis, int n_modes) {
  if (n_modes < 1 || static_cast<std::size_t>(n_modes) > basis.n_free)
    throw std::invalid_argument("n_modes must lie in [1, n_free=" + std::to_string(basis.n_free) + "]");
  const double sv = std::sqrt(g.cell_volume());
  const Mat Ze = basis.Z * sv;  // Euclidean-orthonormal
  Mat LZ(Ze.rows(), Ze.cols());
  for (Eigen::Index c = 0; c < Ze.cols(); ++c) LZ.col(c) = -apply_laplacian(g, Ze.col(c));
  Mat S = Ze.transpose() * LZ;
  S = (0.5 * (S + S.transpose())).eval();
  SymmetricEigen eig = symmetric_eigen_lowest(std::move(S), n_modes);
  if (!(eig.values[0] > 0.0)) throw std::runtime_error("non-positive Stokes eigenvalue: assembly error");
  StokesSpectrum out;
  out.spec = g.spec();
  out.lambdas = eig.values;
  out.E = basis.Z * eig.vectors;
  out.hash = spectrum_digest(out.lambdas, out.E);
  return out;
}

StokesSpectrum compute_stokes_spectrum(const Grid& g, int n_modes) {
  return compute_stokes_spectrum(g, build_divfree_basis(g), n_modes);
}

void save_spectrum(const StokesSpectrum& s, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CacheError("cannot open cache for writing: " + path);
  write_bytes(os, kMagic, sizeof kMagic);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.spec.dim));
  for (int a = 0; a < 3; ++a) write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(s.spec.cells[a]));
  for (int a = 0; a < 3; ++a) write_pod<double>(os, s.spec.lengths[a]);
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(s.lambdas.size()));
  write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(s.E.rows()));
  write_bytes(os, s.hash.data(), s.hash.size());
  write_bytes(os, s.lambdas.data(), static_cast<std::size_t>(s.lambdas.size()) * sizeof(double));
  write_bytes(os, s.E.data(), static_cast<std::size_t>(s.E.size()) * sizeof(double));
}

StokesSpectrum load_spectrum(const std::string& path, const GridSpec& expected) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CacheError("cannot open cache: " + path);
  const Grid g(expected);
  const GridSpec& want = g.spec();
  StokesSpectrum s;
  try {
    char magic[9];
    read_bytes(is, magic, sizeof magic);
    if (!std::equal(magic, magic + 9, kMagic)) throw CacheError("not a spectrum cache: " + path);
    s.spec.dim = static_cast<int>(read_pod<std::uint32_t>(is));
    for (int a = 0; a < 3; ++a) s.spec.cells[a] = static_cast<int>(read_pod<std::uint32_t>(is));
    for (int a = 0; a < 3; ++a) s.spec.lengths[a] = read_pod<double>(is);
    const auto N = read_pod<std::uint64_t>(is);
    const auto rows = read_pod<std::uint64_t>(is);
    if (s.spec.dim != want.dim || s.spec.cells != want.cells || s.spec.lengths != want.lengths ||
        rows != g.face_dofs())
      throw CacheError("cache header does not match the requested grid: " + path);
    read_bytes(is, s.hash.data(), s.hash.size());
    s.lambdas.resize(static_cast<Eigen::Index>(N));
    s.E.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(N));
    read_bytes(is, s.lambdas.data(), N * sizeof(double));
    read_bytes(is, s.E.data(), N * rows * sizeof(double));
  } catch (const CacheError&) {
    throw;
  } catch (const std::exception& e) {
    throw CacheError(std::string("truncated cache: ") + e.what());
  }
  if (spectrum_digest(s.lambdas, s.E) != s.hash) throw CacheError("cache content hash mismatch (corrupted): " + path);
  return s;
}

StokesSpectrum truncate_spectrum(const StokesSpectrum& s, int n) {
  if (n < 1 || n > s.size()) throw std::invalid_argument("truncate_spectrum: n out of range");
  if (n == s.size()) return s;
  StokesSpectrum t;
  t.spec = s.spec;
  t.lambdas = s.lambdas.head(n);
  t.E = s.E.leftCols(n);
  t.hash = spectrum_digest(t.lambdas, t.E);
  return t;
}

StokesSpectrum load_or_compute_spectrum(const Grid& g, int n_modes, const std::string& cache_path) {
  if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
    StokesSpectrum s = load_spectrum(cache_path, g.spec());
    if (s.size() >= n_modes) return truncate_spectrum(s, n_modes);
  }
  StokesSpectrum s = compute_stokes_spectrum(g, n_modes);
  if (!cache_path.empty()) save_spectrum(s, cache_path);
  return s;
}

}  // namespace shnse

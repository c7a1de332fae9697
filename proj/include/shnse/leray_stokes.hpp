// Discrete solenoidal subspace, Leray projector and the Stokes eigenbasis.
#pragma once

#include "shnse/grid_ops.hpp"
#include "shnse/io.hpp"

#include <string>

namespace shnse {

// Columns are volume-orthonormal no-slip face fields spanning ker D.
struct DivFreeBasis {
  Mat Z;
  std::size_t n_free = 0;
};

class BasisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 2-D spanning set: discrete curl of unit stream functions at interior nodes.
Mat streamfunction_curl(const Grid& g);

// 2-D: orthonormalised stream-function curls. 3-D: kernel of D from a
// column-pivoted QR of D^T restricted to interior faces.
DivFreeBasis build_divfree_basis(const Grid& g);

// P v = v - (G q + B), q solving D(G q + B) = D v with B = boundary part of v.
VelocityField leray_project(const Grid& g, const NeumannPoisson& poisson, const VelocityField& v,
                            ScalarField* potential = nullptr);

struct StokesSpectrum {
  GridSpec spec;
  Vec lambdas;  // ascending
  Mat E;        // face_dofs x N, volume-orthonormal columns
  Digest hash{};

  int size() const { return static_cast<int>(lambdas.size()); }
  std::string hash_hex() const { return to_hex(hash); }
};

struct SymmetricEigen {
  Vec values;
  Mat vectors;
};

// Lowest k eigenpairs of a dense symmetric matrix (LAPACK dsyevr).
SymmetricEigen symmetric_eigen_lowest(Mat S, int k, bool want_vectors = true);

StokesSpectrum compute_stokes_spectrum(const Grid& g, const DivFreeBasis& basis, int n_modes);
StokesSpectrum compute_stokes_spectrum(const Grid& g, int n_modes);

Digest spectrum_digest(const Vec& lambdas, const Mat& E);

class CacheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Container: "SHNSEEIG1", u32 dim, u32 cells[3], f64 lengths[3], u64 N, u64 face_dofs,
// 32-byte SHA-256 of the payload, then lambdas[N], then eigenfields one after another,
// each a full component-major face vector. All little-endian.
void save_spectrum(const StokesSpectrum& s, const std::string& path);
StokesSpectrum load_spectrum(const std::string& path, const GridSpec& expected);

// Loads a matching cache when present and holding at least n_modes, else computes and saves.
StokesSpectrum load_or_compute_spectrum(const Grid& g, int n_modes, const std::string& cache_path);

// Keeps the first n modes.
StokesSpectrum truncate_spectrum(const StokesSpectrum& s, int n);

}  // namespace shnse

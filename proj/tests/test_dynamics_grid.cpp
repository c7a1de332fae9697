#include "doctest.h"
#include "shnse/dynamics_grid.hpp"
#include "shnse/dynamics_spectral.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

using namespace shnse;
namespace fs = std::filesystem;

namespace {

struct Setup {
  Grid g = build_grid(GridSpec{2, {16, 16, 1}, {1.0, 1.0, 1.0}});
  NeumannPoisson P{g};
  DivFreeBasis basis = build_divfree_basis(g);
  StokesSpectrum s = compute_stokes_spectrum(g, basis, static_cast<int>(basis.n_free));
};

const Setup& S() {
  static const Setup s;
  return s;
}

Vec randn(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// Smooth solenoidal field from the lowest modes.
VelocityField smooth_field(std::uint64_t seed, int modes = 12) {
  std::mt19937_64 rng(seed);
  return S().s.E.leftCols(modes) * randn(modes, rng);
}

GridRunConfig base(double mu, FluxRule rule, bool extended) {
  GridRunConfig c;
  c.nu = 1e-2;
  c.mu = mu;
  c.dt = 1e-4;
  c.T = 1e-2;
  c.sample_every = 10;
  c.flux = rule;
  c.extended = extended;
  c.initial = smooth_field(1);
  c.forcing = smooth_field(2, 6);
  return c;
}

}  // namespace

TEST_CASE("mu = 0 right-hand side is forcing minus viscous Stokes minus projected advection") {
  const GridRunConfig c = base(0.0, FluxRule::Conservative, false);
  const GridModel m(S().g, S().P, nullptr, c);
  const VelocityField u = c.initial;
  const VelocityField Au = leray_project(S().g, S().P, VelocityField(-apply_laplacian(S().g, u)));
  const VelocityField want = c.forcing - c.nu * Au - leray_project(S().g, S().P, skew_advection(S().g, u, u));
  CHECK(S().g.norm(m.reformulated_rhs(u) - want) <= 1e-10 * S().g.norm(want));
}

TEST_CASE("extended and plain forms agree on solenoidal data") {
  for (FluxRule r : {FluxRule::OneSided, FluxRule::Conservative}) {
    const GridModel a(S().g, S().P, nullptr, base(1e-4, r, false));
    const GridModel b(S().g, S().P, nullptr, base(1e-4, r, true));
    const VelocityField u = smooth_field(3);
    const VelocityField ra = a.reformulated_rhs(u), rb = b.reformulated_rhs(u);
    CHECK(S().g.norm(ra - rb) <= 1e-9 * S().g.norm(ra));
  }
}

TEST_CASE("truncation removes exactly the low-mode part of the bracket") {
  // modes beyond n* so that Q_20 of the bracket is not round-off
  const VelocityField u = smooth_field(4, 40);
  GridRunConfig c = base(1e-4, FluxRule::Conservative, false);
  c.truncation = 20;
  const GridModel m(S().g, S().P, &S().s, c);
  const GridModel full(S().g, S().P, nullptr, base(1e-4, FluxRule::Conservative, false));
  const VelocityField Au = stokes_operator_grid(S().g, S().P, u, false, FluxRule::Conservative);
  VelocityField gn;
  const VelocityField H = m.hyperviscous_bracket(u, Au, &gn);
  const VelocityField Hfull = full.hyperviscous_bracket(u, Au);
  // Q_20 H is orthogonal to the first 20 eigenfields and H + gn/mu recovers the full bracket
  const Vec low = S().g.cell_volume() * (S().s.E.leftCols(20).transpose() * H);
  CHECK(low.cwiseAbs().maxCoeff() <= 1e-10 * S().g.norm(Hfull));
  CHECK(S().g.norm(H + gn / c.mu - Hfull) <= 1e-12 * S().g.norm(Hfull));
  CHECK(std::abs(S().g.inner(H, gn)) <= 1e-10 * S().g.norm(H) * S().g.norm(gn));

  // truncating at the full dimension removes the bracket entirely
  GridRunConfig all = base(1e-4, FluxRule::Conservative, false);
  all.truncation = S().s.size();
  const GridModel mall(S().g, S().P, &S().s, all);
  const GridModel nse(S().g, S().P, nullptr, base(0.0, FluxRule::Conservative, false));
  CHECK(S().g.norm(mall.reformulated_rhs(u) - nse.reformulated_rhs(u)) <=
        1e-9 * 1e-4 * S().g.norm(Hfull));
}

TEST_CASE("unforced energy decays with the conservative flux") {
  GridRunConfig c = base(1e-5, FluxRule::Conservative, false);
  c.forcing = S().g.zero_velocity();
  c.initial = 5.0 * smooth_field(5, 30);
  c.T = 5e-2;
  const GridTrajectory tr = GridModel(S().g, S().P, nullptr, c).simulate();
  REQUIRE_FALSE(tr.blew_up);
  for (std::size_t k = 1; k < tr.fields.size(); ++k)
    CHECK(S().g.norm(tr.fields[k]) <= S().g.norm(tr.fields[k - 1]) * (1.0 + 1e-13));
}

TEST_CASE("grid runs are deterministic") {
  GridRunConfig c = base(1e-5, FluxRule::OneSided, true);
  c.truncation = 16;
  const GridTrajectory a = GridModel(S().g, S().P, &S().s, c).simulate();
  const GridTrajectory b = GridModel(S().g, S().P, &S().s, c).simulate();
  REQUIRE(a.fields.size() == b.fields.size());
  for (std::size_t k = 0; k < a.fields.size(); ++k)
    CHECK(std::memcmp(a.fields[k].data(), b.fields[k].data(), sizeof(double) * static_cast<std::size_t>(a.fields[k].size())) == 0);
  CHECK(a.gn_norm == b.gn_norm);
  CHECK(a.gn_norm[1] > 0.0);
}

TEST_CASE("divergence of solenoidal data stays at round-off") {
  const GridTrajectory tr = GridModel(S().g, S().P, nullptr, base(1e-5, FluxRule::Conservative, true)).simulate();
  const DivergenceSeries d = divergence_monitor(S().g, tr);
  for (double v : d.sup) CHECK(v <= 1e-10);
  CHECK_FALSE(d.increased);
}

TEST_CASE("extended linear run carries its divergence by the discrete Neumann heat equation") {
  const Grid& g = S().g;
  std::mt19937_64 rng(12);
  ScalarField q = randn(static_cast<Eigen::Index>(g.cell_count()), rng);
  GridRunConfig c = base(0.0, FluxRule::Conservative, true);
  c.nonlinear = false;
  c.forcing = g.zero_velocity();
  c.initial = smooth_field(6) + gradient(g, q) * 1e-3;
  c.dt = 2e-4;
  c.T = 2e-2;
  const GridTrajectory tr = GridModel(g, S().P, nullptr, c).simulate();

  // independent propagator: dense Neumann Laplacian, same RK4
  const auto nc = static_cast<Eigen::Index>(g.cell_count());
  Mat L(nc, nc);
  for (Eigen::Index k = 0; k < nc; ++k) {
    ScalarField e = g.zero_scalar();
    e[k] = 1.0;
    L.col(k) = neumann_laplacian(g, e);
  }
  const Mat A = c.nu * L, I = Mat::Identity(nc, nc);
  const double h = c.dt;
  const Mat R = I + h * A + (h * h / 2) * A * A + (h * h * h / 6) * A * A * A + (h * h * h * h / 24) * A * A * A * A;
  ScalarField d = divergence(g, c.initial);
  const DivergenceSeries mon = divergence_monitor(g, tr);
  for (std::size_t s = 0; s < tr.fields.size(); ++s) {
    const ScalarField got = divergence(g, tr.fields[s]);
    CHECK((got - d).cwiseAbs().maxCoeff() <= 1e-10 * d.cwiseAbs().maxCoeff() + 1e-13);
    for (int k = 0; k < c.sample_every; ++k) d = R * d;
  }
  CHECK_FALSE(mon.increased);
  CHECK(mon.sup.back() < mon.sup.front());
}

TEST_CASE("grid path reproduces the spectral path on the same discrete system") {
  // conservative flux, full spectrum, mu = 0: only the integrators differ
  const int n = S().s.size();
  SimulationConfig sc;
  sc.nu = 1e-2;
  sc.profile = build_dissipation_profile(2, n, n, RampSpec{RampSchedule::Plain, 1.0, {}, RampIndex::Mode}, 0.0,
                                         S().s.lambdas);
  sc.n = n;
  sc.dt = 1e-4;
  sc.T = 2e-2;
  sc.sample_every = 200;
  sc.estimate_error = false;
  GridRunConfig gc = base(0.0, FluxRule::Conservative, false);
  gc.T = sc.T;
  gc.sample_every = 200;
  gc.initial = smooth_field(7, 20);
  sc.initial = S().g.cell_volume() * (S().s.E.transpose() * gc.initial);
  sc.forcing = S().g.cell_volume() * (S().s.E.transpose() * gc.forcing);
  const Trajectory st = GalerkinModel(S().g, S().s, sc).simulate();
  const GridTrajectory gt = GridModel(S().g, S().P, nullptr, gc).simulate();
  const VelocityField us = S().s.E * st.coeffs.col(1);
  CHECK(S().g.norm(us - gt.fields.back()) <= 1e-8 * S().g.norm(us));
}

TEST_CASE("grid run validation") {
  GridRunConfig c = base(1e-3, FluxRule::Conservative, false);
  c.dt = 1e-3;
  c.T = 1e-2;
  const GridModel m(S().g, S().P, nullptr, c);
  CHECK(m.stability_limit() < c.dt);
  CHECK_THROWS_AS(m.simulate(), ConfigError);
  GridRunConfig t = base(1e-5, FluxRule::Conservative, false);
  t.truncation = 10;
  CHECK_THROWS_AS(GridModel(S().g, S().P, nullptr, t), ConfigError);
  t.truncation = S().s.size() + 1;
  CHECK_THROWS_AS(GridModel(S().g, S().P, &S().s, t), ConfigError);
  GridRunConfig s = base(1e-5, FluxRule::Conservative, false);
  s.sample_every = 7;
  CHECK_THROWS_AS(GridModel(S().g, S().P, nullptr, s), ConfigError);
  GridRunConfig w = base(1e-5, FluxRule::Conservative, false);
  w.initial = Vec::Zero(5);
  CHECK_THROWS(GridModel(S().g, S().P, nullptr, w));
}

TEST_CASE("grid trajectory container") {
  const GridTrajectory tr = GridModel(S().g, S().P, nullptr, base(1e-5, FluxRule::Conservative, false)).simulate();
  const fs::path p = fs::temp_directory_path() / "shnse_test_grid.bin";
  save_grid_trajectory(S().g, tr, p.string());
  std::ifstream in(p, std::ios::binary);
  char magic[9];
  in.read(magic, 9);
  CHECK(std::string(magic, 9) == "SHNSEGRD1");
  const std::uintmax_t header = 9 + 4 + 12 + 24 + 8 + 8 + 32;
  const std::uintmax_t payload = 8 * (tr.times.size() + tr.fields.size() * S().g.face_dofs());
  CHECK(fs::file_size(p) == header + payload);
  fs::remove(p);
}

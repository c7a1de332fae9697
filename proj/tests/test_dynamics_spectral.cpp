#include "doctest.h"
#include "shnse/dynamics_spectral.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

using namespace shnse;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  Grid g = build_grid(GridSpec{2, {16, 16, 1}, {1.0, 1.0, 1.0}});
  StokesSpectrum s = compute_stokes_spectrum(g, 40);
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

SimulationConfig base_config(int n, double mu, int m0, int m, RampSchedule sched = RampSchedule::Linear) {
  const Vec lam = fx().s.lambdas.head(n);
  SimulationConfig c;
  c.nu = 1e-2;
  RampSpec r;
  r.schedule = sched;
  c.profile = build_dissipation_profile(2, m0, m, r, mu, lam);
  c.n = n;
  c.dt = 1e-3;
  c.T = 0.1;
  c.sample_every = 10;
  c.forcing = make_forcing(n, 6, 1.0, 5);
  c.initial = make_initial(lam, n, 1.0, 1.0, 5);
  c.estimate_error = false;
  return c;
}

bool bitwise_equal(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_CASE("nonlinear term: zero, energy neutral, quadratic") {
  const GalerkinModel m(fx().g, fx().s, base_config(40, 0.0, 1, 40));
  CHECK(m.nonlinear_coeffs(Vec::Zero(40)).isZero(0.0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d(0.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    Vec a(40);
    for (int j = 0; j < 40; ++j) a[j] = d(rng);
    const Vec b = m.nonlinear_coeffs(a);
    CHECK(std::abs(a.dot(b)) <= 1e-12 * a.norm() * b.norm());
    CHECK((m.nonlinear_coeffs(2.5 * a) - 6.25 * b).norm() <= 1e-12 * 6.25 * b.norm());
    // independent assembly through the grid operator
    const VelocityField u = fx().s.E.leftCols(40) * a;
    const Vec ref = fx().g.cell_volume() * (fx().s.E.leftCols(40).transpose() * skew_advection(fx().g, u, u));
    CHECK((b - ref).norm() <= 1e-12 * ref.norm());
  }
}

TEST_CASE("right-hand side reduces to the Navier-Stokes Galerkin system at mu = 0") {
  SimulationConfig c = base_config(40, 0.0, 1, 20);
  const GalerkinModel m(fx().g, fx().s, c);
  const Vec a = c.initial;
  const Vec lam = fx().s.lambdas.head(40);
  const Vec want = c.forcing - c.nu * (lam.array() * a.array()).matrix() - m.nonlinear_coeffs(a);
  CHECK((m.galerkin_rhs(a, 0.0) - want).norm() <= 1e-13 * want.norm());

  SimulationConfig c2 = base_config(40, 1e-3, 1, 20);
  const GalerkinModel m2(fx().g, fx().s, c2);
  const Vec extra = m2.galerkin_rhs(a, 0.0) - m.galerkin_rhs(a, 0.0);
  CHECK((extra + 1e-3 * (c2.profile.phi.array() * a.array()).matrix()).norm() <= 1e-12 * want.norm());
  // diagonal flow: each mode's linear part acts on that mode only
  Vec e5 = Vec::Zero(40);
  e5[4] = 1.0;
  SimulationConfig lin = c2;
  lin.nonlinear = false;
  lin.forcing.setZero();
  const Vec r = GalerkinModel(fx().g, fx().s, lin).galerkin_rhs(e5, 0.0);
  for (int j = 0; j < 40; ++j)
    if (j != 4) CHECK(r[j] == 0.0);
  CHECK(r[4] == doctest::Approx(-(1e-2 * lam[4] + 1e-3 * c2.profile.phi[4])).epsilon(1e-14));
}

TEST_CASE("integrating factor is exact for the unforced linear system") {
  SimulationConfig c = base_config(40, 1e-2, 4, 30);
  c.nonlinear = false;
  c.forcing.setZero();
  c.T = 1.0;
  c.dt = 0.05;
  c.sample_every = 20;
  const GalerkinModel m(fx().g, fx().s, c);
  const Trajectory tr = m.simulate();
  const Vec lam = fx().s.lambdas.head(40);
  for (int j = 0; j < 40; ++j) {
    const double ex = std::exp(-(c.nu * lam[j] + 1e-2 * c.profile.phi[j]) * 1.0) * c.initial[j];
    CHECK(std::abs(tr.coeffs(j, 1) - ex) <= 1e-12 * std::max(std::abs(c.initial[j]), 1e-300));
  }
  CHECK((m.step_ifrk4(c.initial, 0.0, 0.0) - c.initial).norm() == 0.0);
}

TEST_CASE("constant forcing, linear: steady state approached at fourth order") {
  SimulationConfig c = base_config(20, 1e-4, 2, 10);
  c.nonlinear = false;
  c.T = 1.0;
  c.sample_every = 1000;
  const GalerkinModel m(fx().g, fx().s, c);
  const Trajectory tr = m.simulate();
  const Vec lam = fx().s.lambdas.head(20);
  for (int j = 0; j < 20; ++j) {
    const double k = c.nu * lam[j] + 1e-4 * c.profile.phi[j];
    const double ex = c.forcing[j] / k + (c.initial[j] - c.forcing[j] / k) * std::exp(-k);
    CHECK(std::abs(tr.coeffs(j, 1) - ex) <= 1e-9 * (std::abs(ex) + 1.0));
  }
}

TEST_CASE("IFRK4 converges at fourth order on the nonlinear system") {
  auto end_state = [](double dt) {
    SimulationConfig c = base_config(30, 1e-3, 1, 25);
    c.initial *= 20.0;
    c.T = 0.2;
    c.dt = dt;
    c.sample_every = static_cast<int>(std::lround(0.2 / dt));
    return Vec(GalerkinModel(fx().g, fx().s, c).simulate().coeffs.col(1));
  };
  const Vec ref = end_state(0.2 / 640);
  const double e1 = (end_state(0.2 / 20) - ref).norm();
  const double e2 = (end_state(0.2 / 40) - ref).norm();
  const double e3 = (end_state(0.2 / 80) - ref).norm();
  CHECK(e1 > 0.0);
  CHECK(std::log2(e1 / e2) >= 3.6);
  CHECK(std::log2(e2 / e3) >= 3.6);
}

TEST_CASE("unforced energy is nonincreasing, forced energy respects the a-priori envelope") {
  SimulationConfig c = base_config(40, 1e-3, 1, 30);
  c.forcing.setZero();
  c.initial *= 10.0;
  c.T = 0.5;
  const Trajectory tr = GalerkinModel(fx().g, fx().s, c).simulate();
  for (std::size_t s = 1; s < tr.samples(); ++s)
    CHECK(tr.coeffs.col(static_cast<Eigen::Index>(s)).squaredNorm() <=
          tr.coeffs.col(static_cast<Eigen::Index>(s - 1)).squaredNorm() * (1.0 + 1e-14));

  SimulationConfig f = base_config(40, 1e-3, 1, 30);
  f.forcing *= 5.0;
  f.T = 1.0;
  const Trajectory tf = GalerkinModel(fx().g, fx().s, f).simulate();
  const double l1 = fx().s.lambdas[0], L = f.forcing.norm();
  const double E0 = f.initial.squaredNorm();
  for (std::size_t s = 0; s < tf.samples(); ++s) {
    const double t = tf.times[s], decay = std::exp(-f.nu * l1 * t);
    const double env = E0 * decay + L * L / (f.nu * f.nu * l1 * l1) * (1.0 - decay);
    CHECK(tf.coeffs.col(static_cast<Eigen::Index>(s)).squaredNorm() <= env * (1.0 + 1e-10));
  }
}

TEST_CASE("no dissipation beyond n: m = n reproduces the mu = 0 run bit for bit") {
  const SimulationConfig c0 = base_config(40, 0.0, 40, 40, RampSchedule::Plain);
  const SimulationConfig c1 = base_config(40, 1e-2, 40, 40, RampSchedule::Plain);
  const Trajectory a = GalerkinModel(fx().g, fx().s, c0).simulate();
  const Trajectory b = GalerkinModel(fx().g, fx().s, c1).simulate();
  CHECK(bitwise_equal(a.coeffs, b.coeffs));
}

TEST_CASE("runs are deterministic") {
  SimulationConfig c = base_config(40, 1e-3, 1, 30);
  c.estimate_error = true;
  const Trajectory a = GalerkinModel(fx().g, fx().s, c).simulate();
  const Trajectory b = GalerkinModel(fx().g, fx().s, c).simulate();
  CHECK(bitwise_equal(a.coeffs, b.coeffs));
  CHECK(a.local_error == b.local_error);
  CHECK(a.samples() == 11u);
  CHECK(a.times.back() == doctest::Approx(0.1));
  CHECK(a.local_error[3] > 0.0);
}

TEST_CASE("stronger hyperviscosity damps the linear unforced state more") {
  double prev = 1e300;
  for (double mu : {0.0, 1e-4, 1e-3, 1e-2}) {
    SimulationConfig c = base_config(40, mu, 1, 30);
    c.nonlinear = false;
    c.forcing.setZero();
    const double e = GalerkinModel(fx().g, fx().s, c).simulate().coeffs.col(10).norm();
    CHECK(e <= prev);
    prev = e;
  }
}

TEST_CASE("initial data and forcing generators") {
  const Vec lam = fx().s.lambdas;
  const Vec a = make_initial(lam, 40, 2.0, 1.0, 9), b = make_initial(lam, 40, 2.0, 1.0, 9);
  CHECK(bitwise_equal(a, b));
  CHECK_FALSE(bitwise_equal(a, make_initial(lam, 40, 2.0, 1.0, 10)));
  // same draws, rescaled by (lambda_j / lambda_1)^-gamma
  const Vec a0 = make_initial(lam, 40, 0.0, 1.0, 9);
  for (int j = 0; j < 40; ++j) CHECK(a[j] == doctest::Approx(a0[j] * std::pow(lam[j] / lam[0], -2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(make_initial(lam, 41, 2.0, 1.0, 9), ConfigError);

  const Vec f = make_forcing(40, 8, 3.0, 4);
  CHECK(f.norm() == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(f.tail(32).isZero(0.0));
  CHECK(make_forcing(40, 8, 0.0, 4).isZero(0.0));
  CHECK(make_forcing(40, 0, 1.0, 4).isZero(0.0));
}

TEST_CASE("configuration validation") {
  auto bad = [](auto edit) {
    SimulationConfig c = base_config(40, 1e-3, 1, 30);
    edit(c);
    return c;
  };
  CHECK_THROWS_AS(GalerkinModel(fx().g, fx().s, bad([](SimulationConfig& c) { c.dt = 0.2; })), ConfigError);
  CHECK_THROWS_AS(GalerkinModel(fx().g, fx().s, bad([](SimulationConfig& c) { c.dt = 3e-3; })), ConfigError);
  CHECK_THROWS_AS(GalerkinModel(fx().g, fx().s, bad([](SimulationConfig& c) { c.sample_every = 7; })), ConfigError);
  CHECK_THROWS_AS(GalerkinModel(fx().g, fx().s, bad([](SimulationConfig& c) { c.nu = 0.0; })), ConfigError);
  CHECK_THROWS_AS(GalerkinModel(fx().g, fx().s, bad([](SimulationConfig& c) { c.forcing = Vec::Zero(3); })),
                  ConfigError);
  CHECK_THROWS_AS(GalerkinModel(fx().g, fx().s, bad([](SimulationConfig& c) { c.initial[0] = NAN; })), ConfigError);
  SimulationConfig big = base_config(40, 1e-3, 1, 30);
  StokesSpectrum small = truncate_spectrum(fx().s, 20);
  CHECK_THROWS_AS(GalerkinModel(fx().g, small, big), ConfigError);
}

TEST_CASE("trajectory CSV round trips every sample exactly") {
  const Trajectory tr = GalerkinModel(fx().g, fx().s, base_config(40, 1e-3, 1, 30)).simulate();
  const fs::path p = fs::temp_directory_path() / "shnse_test_traj.csv";
  write_trajectory_csv(tr, p.string());
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("time,a_1,a_2", 0) == 0);
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    CHECK(std::stod(cell) == tr.times[static_cast<std::size_t>(rows)]);
    for (int j = 0; j < 40; ++j) {
      std::getline(ss, cell, ',');
      CHECK(std::stod(cell) == tr.coeffs(j, rows));
    }
    ++rows;
  }
  CHECK(rows == static_cast<int>(tr.samples()));
  fs::remove(p);
}

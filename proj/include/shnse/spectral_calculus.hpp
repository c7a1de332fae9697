// Diagonal functional calculus on the Stokes spectrum.
#pragma once

#include "shnse/grid_ops.hpp"
#include "shnse/io.hpp"

#include <string>
#include <utility>

namespace shnse {

// Coefficients in the Stokes eigenbasis; entry j-1 belongs to mode j.
using SpectralCoeffs = Vec;

// (P_m a, Q_m a).
std::pair<SpectralCoeffs, SpectralCoeffs> mode_split(const SpectralCoeffs& a, int m);

// lambda_j^theta a_j.
SpectralCoeffs apply_power(const SpectralCoeffs& a, const Vec& lambdas, double theta);

enum class RampSchedule {
  Linear,  // d_j = (j-m0)/(m+1-m0)
  Power,   // d_j = ((j-m0)/(m+1-m0))^p
  Plain,   // d_j = 0, i.e. pure Q_m A^alpha
  Custom   // explicit values
};

// Index used inside the ramp: the mode index, or the first index of the
// eigenvalue cluster (relative gap < 1e-8) the mode belongs to.
enum class RampIndex { Mode, Cluster };

struct RampSpec {
  RampSchedule schedule = RampSchedule::Linear;
  double power = 1.0;
  Vec custom;
  RampIndex index = RampIndex::Mode;
};

std::string ramp_name(const RampSpec& r);

struct DissipationProfile {
  int alpha = 2;
  int m0 = 0;
  int m = 0;
  double mu = 0.0;
  RampSpec ramp;
  Vec d;    // ramp values for modes m0+1..m
  Vec phi;  // per-mode multiplier
  bool degenerate = false;  // m0 == 0 (no pass band)
  Digest phi_hash{};
};

class ProfileError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

DissipationProfile build_dissipation_profile(int alpha, int m0, int m, const RampSpec& ramp, double mu,
                                             const Vec& lambdas);
// m = 0: phi_j = lambda_j^alpha for every mode.
DissipationProfile hnse_profile(int alpha, double mu, const Vec& lambdas);

// [j > m] lambda_j^alpha.
Vec truncation_multiplier(const Vec& lambdas, int alpha, int m);

// (phi v, v) with phi a per-mode multiplier.
double quadratic_form(const Vec& phi, const Vec& v);

// First mode index (1-based) of the cluster containing each mode.
std::vector<int> cluster_leaders(const Vec& lambdas, double rel_gap = 1e-8);

// exp(-dt (nu lambda_j + mu phi_j)), flushed to 0 when the exponent is below -700.
Vec if_exponential(const DissipationProfile& p, const Vec& lambdas, double nu, double dt);

}  // namespace shnse

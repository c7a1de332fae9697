#include "shnse/spectral_calculus.hpp"

#include <cmath>
#include <string>

namespace shnse {

std::pair<SpectralCoeffs, SpectralCoeffs> mode_split(const SpectralCoeffs& a, int m) {
  if (m < 0 || m > a.size()) throw std::out_of_range("mode_split: m outside [0, n]");
  SpectralCoeffs p = SpectralCoeffs::Zero(a.size()), q = SpectralCoeffs::Zero(a.size());
  p.head(m) = a.head(m);
  q.tail(a.size() - m) = a.tail(a.size() - m);
  return {p, q};
}

SpectralCoeffs apply_power(const SpectralCoeffs& a, const Vec& lambdas, double theta) {
  if (a.size() > lambdas.size()) throw std::invalid_argument("apply_power: more coefficients than eigenvalues");
  SpectralCoeffs out(a.size());
  for (Eigen::Index j = 0; j < a.size(); ++j) out[j] = std::pow(lambdas[j], theta) * a[j];
  return out;
}

std::string ramp_name(const RampSpec& r) {
  std::string s;
  switch (r.schedule) {
    case RampSchedule::Linear: s = "linear"; break;
    case RampSchedule::Power: s = "power"; break;
    case RampSchedule::Plain: s = "plain"; break;
    case RampSchedule::Custom: s = "custom"; break;
  }
  if (r.index == RampIndex::Cluster) s += "/cluster";
  return s;
}

std::vector<int> cluster_leaders(const Vec& lambdas, double rel_gap) {
  std::vector<int> lead(static_cast<std::size_t>(lambdas.size()));
  for (Eigen::Index j = 0; j < lambdas.size(); ++j) {
    if (j > 0 && lambdas[j] - lambdas[j - 1] < rel_gap * std::abs(lambdas[j]))
      lead[static_cast<std::size_t>(j)] = lead[static_cast<std::size_t>(j - 1)];
    else
      lead[static_cast<std::size_t>(j)] = static_cast<int>(j) + 1;
  }
  return lead;
}

DissipationProfile build_dissipation_profile(int alpha, int m0, int m, const RampSpec& ramp, double mu,
                                             const Vec& lambdas) {
  const int n = static_cast<int>(lambdas.size());
  if (alpha < 2) throw ProfileError("alpha must be an integer >= 2");
  if (m0 < 0 || m < m0 || m > n)
    throw ProfileError("need 0 <= m0 <= m <= n; got m0=" + std::to_string(m0) + " m=" + std::to_string(m) +
                       " n=" + std::to_string(n));
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ProfileError("mu must be finite and >= 0");
  if (ramp.schedule == RampSchedule::Power && !(ramp.power > 0.0)) throw ProfileError("ramp power must be > 0");

  DissipationProfile p;
  p.alpha = alpha;
  p.m0 = m0;
  p.m = m;
  p.mu = mu;
  p.ramp = ramp;
  p.degenerate = m0 == 0;

  const auto lead = cluster_leaders(lambdas);
  const double width = static_cast<double>(m + 1 - m0);
  p.d = Vec::Zero(m - m0);
  if (ramp.schedule == RampSchedule::Custom) {
    if (ramp.custom.size() != m - m0)
      throw ProfileError("custom ramp needs m-m0 = " + std::to_string(m - m0) + " values");
    p.d = ramp.custom;
    for (Eigen::Index i = 0; i < p.d.size(); ++i) {
      if (!(p.d[i] > 0.0 && p.d[i] < 1.0)) throw ProfileError("custom ramp values must lie in (0,1)");
      if (i > 0 && !(p.d[i] > p.d[i - 1])) throw ProfileError("custom ramp must be strictly increasing");
    }
  } else if (ramp.schedule != RampSchedule::Plain) {
    for (int j = m0 + 1; j <= m; ++j) {
      int k = j;
      if (ramp.index == RampIndex::Cluster) k = std::max(lead[static_cast<std::size_t>(j - 1)], m0 + 1);
      double t = (k - m0) / width;
      if (ramp.schedule == RampSchedule::Power) t = std::pow(t, ramp.power);
      p.d[j - m0 - 1] = t;
    }
  }

  p.phi = Vec::Zero(n);
  for (int j = m0 + 1; j <= n; ++j) {
    const double la = std::pow(lambdas[j - 1], alpha);
    p.phi[j - 1] = j <= m ? p.d[j - m0 - 1] * la : la;
  }
  p.phi_hash = sha256_of(p.phi);
  return p;
}

DissipationProfile hnse_profile(int alpha, double mu, const Vec& lambdas) {
  return build_dissipation_profile(alpha, 0, 0, RampSpec{}, mu, lambdas);
}

Vec truncation_multiplier(const Vec& lambdas, int alpha, int m) {
  Vec t = Vec::Zero(lambdas.size());
  for (Eigen::Index j = m; j < lambdas.size(); ++j) t[j] = std::pow(lambdas[j], alpha);
  return t;
}

double quadratic_form(const Vec& phi, const Vec& v) {
  return (phi.array() * v.array().square()).sum();
}

Vec if_exponential(const DissipationProfile& p, const Vec& lambdas, double nu, double dt) {
  if (!(dt >= 0.0)) throw std::invalid_argument("if_exponential: dt must be >= 0");
  Vec f(lambdas.size());
  for (Eigen::Index j = 0; j < lambdas.size(); ++j) {
    const double x = -dt * (nu * lambdas[j] + p.mu * p.phi[j]);
    f[j] = x < -700.0 ? 0.0 : std::exp(x);
  }
  return f;
}

}  // namespace shnse

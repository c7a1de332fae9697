// Stokes pressure: harmonic scalar whose gradient turns -Delta into the Stokes operator.
#pragma once

#include "shnse/leray_stokes.hpp"

namespace shnse {

// How the wall-normal datum n.Delta u (or n.(Delta - grad div) u) is evaluated.
enum class FluxRule {
  // Pointwise one-sided differences at the boundary faces.
  OneSided,
  // Chosen so that the discrete divergence of Delta_h u + B equals L(Du) (general) or 0
  // on every wall-adjacent cell; corner cells split the datum evenly between their walls.
  Conservative
};

const char* flux_rule_name(FluxRule r);
FluxRule parse_flux_rule(const std::string& s);

struct PressureSolution {
  ScalarField p_s;
  double compat_correction = 0.0;
  double residual = 0.0;
  bool divergence_warning = false;  // non-general solve on a field that is not solenoidal
};

// Axis-direction component of grad p_s on boundary faces (interior entries zero).
VelocityField stokes_pressure_flux(const Grid& g, const VelocityField& u, bool general, FluxRule rule);

PressureSolution stokes_pressure_solve(const Grid& g, const NeumannPoisson& poisson, const VelocityField& u,
                                       bool general, FluxRule rule = FluxRule::OneSided);

// -Delta_h u + G p_s(u).
VelocityField stokes_operator_grid(const Grid& g, const NeumannPoisson& poisson, const VelocityField& u,
                                   bool general, FluxRule rule);

// sum_j lambda_j^power (e_j, u) e_j over the computed spectrum.
VelocityField spectral_apply_power(const Grid& g, const StokesSpectrum& s, const VelocityField& u, double power);
// ||u - sum_j (e_j,u) e_j|| / ||u||.
double span_defect(const Grid& g, const StokesSpectrum& s, const VelocityField& u);

struct StokesApplyResult {
  VelocityField Au;
  double residual = 0.0;     // relative to the spectral A u
  bool in_span = true;       // false: residual is only a lower bound
  bool divergence_warning = false;
};

StokesApplyResult stokes_apply_via_pressure(const Grid& g, const NeumannPoisson& poisson,
                                            const StokesSpectrum& s, const VelocityField& u,
                                            FluxRule rule = FluxRule::OneSided);

// (-Delta)^2 u + G p_s((-Delta) u).
// The first Laplacian uses the no-slip closure. Its result w carries a wall-normal trace
// (third-order extrapolation of Delta_h u) and its tangential ghosts are extrapolated,
// so the second Laplacian sees w as a field without boundary conditions. p_s((-Delta)u)
// is harmonic away from the wall layers, and its Neumann datum -n.(-Delta)^2 u enters
// through the discrete divergence of (-Delta)^2 u. sign = -1 flips that datum.
VelocityField biharmonic_via_pressure(const Grid& g, const NeumannPoisson& poisson, const VelocityField& u,
                                      int sign = 1);
// The same bracket evaluated as A_h(A_h u) with the grid Stokes operator (composition route).
VelocityField biharmonic_composed(const Grid& g, const NeumannPoisson& poisson, const VelocityField& u,
                                  FluxRule rule);

// ||bracket - A^2 u|| / ||A^2 u||.
double biharmonic_identity_residual(const Grid& g, const NeumannPoisson& poisson, const StokesSpectrum& s,
                                    const VelocityField& u, int sign = 1);

struct HelmholtzSplit {
  VelocityField Ph;
  ScalarField phi;
};

// h = Ph + grad phi with n.Ph = 0, i.e. n.grad phi = n.h on the wall.
HelmholtzSplit helmholtz_decompose(const Grid& g, const NeumannPoisson& poisson, const VelocityField& h);

struct PressureConfig {
  double nu = 1e-2;
  double mu = 0.0;
  bool extended = false;
  FluxRule rule = FluxRule::OneSided;
};

// p = p_s(nu u + mu(-Delta)u) + phi(g - (u.grad)u), plus mu div(-Delta u) when extended.
// p_s((-Delta) u) is realised as p_s(A_h u), equal up to a constant since p_s(grad p_s(u))
// is constant. Mean zero.
ScalarField recover_pressure(const Grid& g, const NeumannPoisson& poisson, const VelocityField& u,
                             const VelocityField& gforce, const PressureConfig& cfg);

}  // namespace shnse

#pragma once

// Rescaled norms, energy norms and the explicit dissipation constants of the
// absorbing-set estimates.

#include <span>

#include "thinlab/mesh.hpp"
#include "thinlab/trajectory.hpp"

namespace thinlab {

// Lumped-quadrature norm under rho_eps (thin) or g dx (limit); q >= 1.
double scaled_lp_norm(const ThinMesh& mesh, const Field& u, double q);
double scaled_lp_norm(const LimitMesh& mesh, const Field& u, double q);

// Energy norm || u ||_E = [ eps^{-1} int ( |grad u|^p + a |u|^p ) ]^{1/p}.
// By construction e_norm(u)^p equals the duality pairing <A u, u>.
double e_norm(const ThinMesh& mesh, const Field& u);
double e_norm(const LimitMesh& mesh, const Field& u);

// Smallest ratio <A u, u> / ||| u |||_{L^2}^p over the ensemble, reduced by a
// 10% safety margin. Realizes the embedding constant of the L^2 absorbing
// estimate without Sobolev theory.
double measure_embedding_c(const ThinMesh& mesh, std::span<const Field> ens);
double measure_embedding_c(const LimitMesh& mesh, std::span<const Field> ens);

// Same minimum taken over the per-step logs of already-computed trajectories
// (uses the identity e_norm^p = <A u, u>; zero states are skipped). No
// safety margin is applied here.
double min_coercivity_ratio(const TrajectoryRecord& traj);

struct DissipationConstants {
  double p = 0.0;
  double L = 0.0;
  double c = 0.0;
  double theta = 0.0;        // p/2
  double theta_prime = 0.0;  // p/(p-2)
  double eta = 0.0;          // Young parameter
  double gamma = 0.0;        // c - eta^theta/theta, must be > 0
  double delta = 0.0;        // (1/theta') (L/eta)^{theta'}
  double beta = 0.0;         // (delta/gamma)^{2/p} + 1, bound on (1/2)|||u|||_2^2
  double T = 0.0;            // 2 / (gamma (p-2)), absorbing time
};

enum class EtaPolicy {
  kHalfCoercivity,  // eta = (theta c / 2)^{1/theta}, so gamma = c/2
  kExplicit,        // eta given by the caller
};

DissipationConstants dissipation_constants(double p, double L, double c,
                                           EtaPolicy policy,
                                           double eta_explicit = 0.0);

struct UniformGronwallConstants {
  double p = 0.0;
  double R = 0.0;      // window length
  double a1 = 0.0;     // R p / (2 theta)
  double a2 = 0.0;     // (R p / (2 theta')) L^{2 theta'}
  double a3 = 0.0;     // time-integrated energy bound over a window
  double beta2 = 0.0;  // (a3/R + a2) e^{a1}
  double beta1 = 0.0;  // beta2^{1/p}, E-norm absorbing radius
};

UniformGronwallConstants uniform_gronwall_constants(double p, double L,
                                                    double R, double a3);

// Trapezoidal integral of e_norm(u(s))^p over [t, t+R] along a logged
// trajectory, together with the analytic window bound
// (1/2)|||u(t)|||_2^2 + L int_t^{t+R} |||u(s)|||_2^2 ds.
struct EnergyWindow {
  double integral = 0.0;
  double analytic_bound = 0.0;
};
EnergyWindow time_integrated_energy(const TrajectoryRecord& traj, double t,
                                    double R);

// max of the window integral over all logged windows of length R.
double max_energy_window(const TrajectoryRecord& traj, double R);

}  // namespace thinlab

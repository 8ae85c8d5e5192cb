#pragma once

// Implicit time stepping for u_t + A u = B(u) on both meshes.
//
// One backward-Euler step solves, in the lumped weak sense,
//
//   M (u+ - u)/dt + A(u+) = M f(u+),
//
// by damped Newton on the mu-regularized Jacobian, with a coefficient-frozen
// (Kachanov) fixed-point fallback when Newton stalls. Implicit Euler keeps
// the discrete flow unconditionally dissipative, mirroring the continuous
// energy estimates.

#include <vector>

#include "thinlab/mesh.hpp"
#include "thinlab/norms.hpp"
#include "thinlab/trajectory.hpp"

namespace thinlab {

struct StepControl {
  double dt = 0.05;
  double newton_tol = 1e-10;  // absolute, on the M^{-1}-weighted dual norm
  int max_newton = 50;
  double mu = 1e-8;
  bool fixed_point_fallback = true;
  int store_stride = 10;

  static StepControl from_config(const ProblemConfig& cfg) {
    StepControl c;
    c.dt = cfg.dt;
    c.newton_tol = cfg.newton_tol;
    c.max_newton = cfg.max_newton;
    c.mu = cfg.mu;
    c.fixed_point_fallback = cfg.fixed_point_fallback;
    c.store_stride = cfg.store_stride;
    return c;
  }
};

struct StepResult {
  Field u;
  int iterations = 0;
  double residual = 0.0;
};

StepResult step_implicit(const ThinMesh& mesh, const Field& u,
                         const StepControl& ctrl);
StepResult step_implicit(const LimitMesh& mesh, const Field& u,
                         const StepControl& ctrl);

TrajectoryRecord solve_trajectory(const ThinMesh& mesh, const Field& u0,
                                  double t_end, const StepControl& ctrl);
TrajectoryRecord solve_trajectory(const LimitMesh& mesh, const Field& u0,
                                  double t_end, const StepControl& ctrl);

// Co-evolution of the thin and limit problems with synchronized steps.
// Reports the squared gap ||| u_eps(t) - E_eps u(t) |||_2^2 per step, the
// weight discrepancy, and the fitted comparison constant
// M~ = max_t gap(t) / (gap(0) + ||a - E_eps abar||_inf).
struct GapReport {
  std::vector<double> times;
  std::vector<double> gap_sq;
  double initial_gap_sq = 0.0;
  double weight_gap = 0.0;  // ||a - E_eps abar||_inf over thin nodes
  double max_gap_sq = 0.0;
  double m_tilde = 0.0;
  Field final_thin;
  Field final_limit;
};

GapReport trajectory_gap(const ThinMesh& thin, const Field& u0_thin,
                         const LimitMesh& limit, const Field& u0_limit,
                         double horizon, const StepControl& ctrl);

}  // namespace thinlab

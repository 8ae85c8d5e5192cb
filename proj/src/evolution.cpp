#include "thinlab/evolution.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/SparseLU>

#include "thinlab/format.hpp"
#include "thinlab/operators.hpp"

namespace thinlab {

namespace {

const std::vector<double>& lumped_mass(const ThinMesh& m) {
  return m.mass_rho;
}
const std::vector<double>& lumped_mass(const LimitMesh& m) {
  return m.mass_g;
}

DualField apply_A(const ThinMesh& m, const Field& u) {
  return apply_A_thin(m, u);
}
DualField apply_A(const LimitMesh& m, const Field& u) {
  return apply_A_limit(m, u);
}

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// Residual of the backward-Euler step equation
//   M (w - u)/dt + A(w) - M f(w) = 0
// in dual coefficients (already eps-scaled on thin meshes).
template <class Mesh>
Vec step_residual(const Mesh& mesh, const Field& w, const Field& u,
                  double dt, const NonlinearityF& f) {
  DualField aw = apply_A(mesh, w);
  const std::vector<double>& mass = lumped_mass(mesh);
  Vec r(w.size());
  for (int i = 0; i < w.size(); ++i) {
    r[i] = aw.r[i] + mass[i] * ((w.v[i] - u.v[i]) / dt - f(w.v[i]));
  }
  return r;
}

// Dual norm weighted by the inverse lumped mass (dual of the scaled L^2).
template <class Mesh>
double dual_norm(const Mesh& mesh, const Vec& r) {
  const std::vector<double>& mass = lumped_mass(mesh);
  double s = 0.0;
  for (int i = 0; i < r.size(); ++i) s += r[i] * r[i] / mass[i];
  return std::sqrt(s);
}

template <class Mesh>
SpMat step_jacobian(const Mesh& mesh, const Field& w, double dt, double mu,
                    const NonlinearityF& f) {
  SpMat J = assemble_A_jacobian(mesh, w, mu);
  const std::vector<double>& mass = lumped_mass(mesh);
  std::vector<Eigen::Triplet<double>> diag;
  diag.reserve(w.size());
  for (int i = 0; i < w.size(); ++i) {
    diag.emplace_back(i, i, mass[i] * (1.0 / dt - f.deriv(w.v[i])));
  }
  SpMat D(w.size(), w.size());
  D.setFromTriplets(diag.begin(), diag.end());
  return J + D;
}

template <class Mesh>
bool sparse_solve(const SpMat& A, const Vec& b, Vec& x) {
  Eigen::SparseLU<SpMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) return false;
  x = lu.solve(b);
  return lu.info() == Eigen::Success && x.allFinite();
}

// Coefficient-frozen fixed-point sweep: solve
//   [M/dt + K(w)] w_next = M (u/dt + f(w)).
// Strong monotonicity makes this a contraction for the frozen step.
template <class Mesh>
bool kachanov_sweeps(const Mesh& mesh, Field& w, const Field& u,
                     const StepControl& ctrl, const NonlinearityF& f,
                     int max_sweeps, double& rn, int& iters) {
  const std::vector<double>& mass = lumped_mass(mesh);
  double mu = std::max(ctrl.mu, 1e-12);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    SpMat K = assemble_A_picard(mesh, w, mu);
    std::vector<Eigen::Triplet<double>> diag;
    diag.reserve(w.size());
    for (int i = 0; i < w.size(); ++i) {
      diag.emplace_back(i, i, mass[i] / ctrl.dt);
    }
    SpMat D(static_cast<int>(w.size()), static_cast<int>(w.size()));
    D.setFromTriplets(diag.begin(), diag.end());
    SpMat S = K + D;
    Vec rhs(w.size());
    for (int i = 0; i < w.size(); ++i) {
      rhs[i] = mass[i] * (u.v[i] / ctrl.dt + f(w.v[i]));
    }
    Vec x;
    if (!sparse_solve<Mesh>(S, rhs, x)) return false;
    for (int i = 0; i < w.size(); ++i) w.v[i] = x[i];
    ++iters;
    Vec r = step_residual(mesh, w, u, ctrl.dt, f);
    double rn_new = dual_norm(mesh, r);
    bool stalled = rn_new > 0.9 * rn && sweep >= 2;
    rn = rn_new;
    if (rn <= ctrl.newton_tol || stalled) return true;
  }
  return true;
}

template <class Mesh>
StepResult step_impl(const Mesh& mesh, const Field& u, const StepControl& ctrl,
                     double t_for_error) {
  check_field(mesh, u);
  if (!(ctrl.dt > 0.0) || !(ctrl.newton_tol > 0.0)) {
    throw Error("step_implicit: dt and newton_tol must be positive");
  }
  const NonlinearityF& f = mesh.problem->nonlinearity;

  Field w = u;  // warm start
  Vec r = step_residual(mesh, w, u, ctrl.dt, f);
  double rn = dual_norm(mesh, r);
  int iters = 0;
  int failed_rounds = 0;
  bool fallback_used = false;
  int budget = ctrl.max_newton;

  while (rn > ctrl.newton_tol && std::isfinite(rn)) {
    if (iters >= budget) {
      if (!fallback_used && ctrl.fixed_point_fallback) {
        fallback_used = true;
        if (!kachanov_sweeps(mesh, w, u, ctrl, f, 40, rn, iters)) {
          throw NonlinearSolveFailure(t_for_error, iters, rn);
        }
        r = step_residual(mesh, w, u, ctrl.dt, f);
        rn = dual_norm(mesh, r);
        budget = iters + ctrl.max_newton;  // fresh Newton budget after polish
        continue;
      }
      throw NonlinearSolveFailure(t_for_error, iters, rn);
    }

    SpMat J = step_jacobian(mesh, w, ctrl.dt, ctrl.mu, f);
    Vec d;
    bool solved = sparse_solve<Mesh>(J, Vec(-r), d);
    ++iters;
    if (solved) {
      // Armijo on the residual norm, halving the step.
      double alpha = 1.0;
      bool accepted = false;
      for (int tries = 0; tries < 12; ++tries) {
        Field w_try = w;
        for (int i = 0; i < w.size(); ++i) w_try.v[i] += alpha * d[i];
        Vec r_try = step_residual(mesh, w_try, u, ctrl.dt, f);
        double rn_try = dual_norm(mesh, r_try);
        if (std::isfinite(rn_try) && rn_try <= (1.0 - 1e-4 * alpha) * rn) {
          w = std::move(w_try);
          r = std::move(r_try);
          rn = rn_try;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (accepted) {
        failed_rounds = 0;
        continue;
      }
    }
    // A failed damping round (or a failed factorization).
    ++failed_rounds;
    if (failed_rounds >= 3 || !solved) {
      if (!fallback_used && ctrl.fixed_point_fallback) {
        fallback_used = true;
        failed_rounds = 0;
        if (!kachanov_sweeps(mesh, w, u, ctrl, f, 40, rn, iters)) {
          throw NonlinearSolveFailure(t_for_error, iters, rn);
        }
        r = step_residual(mesh, w, u, ctrl.dt, f);
        rn = dual_norm(mesh, r);
        budget = iters + ctrl.max_newton;
        continue;
      }
      throw NonlinearSolveFailure(t_for_error, iters, rn);
    }
  }
  if (!std::isfinite(rn)) throw NonlinearSolveFailure(t_for_error, iters, rn);

  StepResult out;
  out.u = std::move(w);
  out.iterations = iters;
  out.residual = rn;
  return out;
}

template <class Mesh>
TrajectoryRecord solve_impl(const Mesh& mesh, const Field& u0, double t_end,
                            const StepControl& ctrl) {
  check_field(mesh, u0);
  if (!(t_end > 0.0)) throw Error("solve_trajectory: t_end must be positive");
  if (!u0.all_finite()) throw Error("solve_trajectory: initial data not finite");

  int n_steps = static_cast<int>(std::ceil(t_end / ctrl.dt - 1e-9));
  n_steps = std::max(n_steps, 1);
  int stride = std::max(ctrl.store_stride, 1);

  TrajectoryRecord traj;
  traj.problem_name = mesh.problem ? mesh.problem->name : "";
  traj.mesh_id = mesh.id;
  traj.dt = ctrl.dt;
  traj.p = mesh.p;
  traj.lipschitz = mesh.problem ? mesh.problem->nonlinearity.lipschitz : 0.0;
  traj.logs.reserve(n_steps + 1);

  Field u = u0;
  traj.logs.push_back({0.0, scaled_lp_norm(mesh, u, 2.0), e_norm(mesh, u), 0,
                       0.0});
  traj.stored_times.push_back(0.0);
  traj.stored_states.push_back(u);

  for (int k = 1; k <= n_steps; ++k) {
    double t = k * ctrl.dt;
    StepResult res = step_impl(mesh, u, ctrl, t);
    u = std::move(res.u);
    if (!u.all_finite()) {
      throw NonlinearSolveFailure(t, res.iterations, res.residual);
    }
    traj.logs.push_back({t, scaled_lp_norm(mesh, u, 2.0), e_norm(mesh, u),
                         res.iterations, res.residual});
    if (k % stride == 0 || k == n_steps) {
      traj.stored_times.push_back(t);
      traj.stored_states.push_back(u);
    }
  }
  return traj;
}

}  // namespace

StepResult step_implicit(const ThinMesh& mesh, const Field& u,
                         const StepControl& ctrl) {
  return step_impl(mesh, u, ctrl, 0.0);
}

StepResult step_implicit(const LimitMesh& mesh, const Field& u,
                         const StepControl& ctrl) {
  return step_impl(mesh, u, ctrl, 0.0);
}

TrajectoryRecord solve_trajectory(const ThinMesh& mesh, const Field& u0,
                                  double t_end, const StepControl& ctrl) {
  return solve_impl(mesh, u0, t_end, ctrl);
}

TrajectoryRecord solve_trajectory(const LimitMesh& mesh, const Field& u0,
                                  double t_end, const StepControl& ctrl) {
  return solve_impl(mesh, u0, t_end, ctrl);
}

GapReport trajectory_gap(const ThinMesh& thin, const Field& u0_thin,
                         const LimitMesh& limit, const Field& u0_limit,
                         double horizon, const StepControl& ctrl) {
  check_field(thin, u0_thin);
  check_field(limit, u0_limit);
  if (limit.nx != thin.nx || limit.x != thin.x) {
    throw MeshMismatchError("trajectory_gap: meshes do not share the x-grid");
  }

  int n_steps = std::max(
      static_cast<int>(std::ceil(horizon / ctrl.dt - 1e-9)), 1);

  GapReport rep;
  rep.weight_gap = weight_gap_inf(thin);

  auto gap_sq_now = [&](const Field& ut, const Field& ul) {
    Field lifted = extend(limit, ul, thin);
    Field diff = ut;
    for (int i = 0; i < diff.size(); ++i) diff.v[i] -= lifted.v[i];
    double g = scaled_lp_norm(thin, diff, 2.0);
    return g * g;
  };

  Field ut = u0_thin;
  Field ul = u0_limit;
  rep.initial_gap_sq = gap_sq_now(ut, ul);
  rep.times.push_back(0.0);
  rep.gap_sq.push_back(rep.initial_gap_sq);

  for (int k = 1; k <= n_steps; ++k) {
    double t = k * ctrl.dt;
    ut = step_impl(thin, ut, ctrl, t).u;
    ul = step_impl(limit, ul, ctrl, t).u;
    rep.times.push_back(t);
    rep.gap_sq.push_back(gap_sq_now(ut, ul));
  }

  rep.max_gap_sq = 0.0;
  for (double g : rep.gap_sq) rep.max_gap_sq = std::max(rep.max_gap_sq, g);
  double denom = rep.initial_gap_sq + rep.weight_gap;
  rep.m_tilde = denom > 0.0 ? rep.max_gap_sq / denom : 0.0;
  rep.final_thin = std::move(ut);
  rep.final_limit = std::move(ul);
  return rep;
}

void write_trajectory_csv(const std::string& path,
                          const TrajectoryRecord& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write trajectory CSV '" + path + "'");
  out << "t,l2_scaled,e_norm,newton_iters,residual" << kCsvEol;
  for (const StepLog& log : traj.logs) {
    out << fmt_double(log.t) << ',' << fmt_double(log.l2_scaled) << ','
        << fmt_double(log.e_norm) << ',' << log.newton_iters << ','
        << fmt_double(log.residual) << kCsvEol;
  }
}

}  // namespace thinlab

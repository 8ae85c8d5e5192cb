#include "thinlab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "thinlab/operators.hpp"

namespace thinlab {

namespace {

template <class Mesh>
double lp_norm_impl(const Mesh& mesh, const std::vector<double>& mass,
                    const Field& u, double q) {
  check_field(mesh, u);
  if (!(q >= 1.0)) throw InvalidExponentError("scaled_lp_norm: need q >= 1");
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    s += mass[i] * std::pow(std::abs(u.v[i]), q);
  }
  return std::pow(s, 1.0 / q);
}

}  // namespace

double scaled_lp_norm(const ThinMesh& mesh, const Field& u, double q) {
  return lp_norm_impl(mesh, mesh.mass_rho, u, q);
}

double scaled_lp_norm(const LimitMesh& mesh, const Field& u, double q) {
  return lp_norm_impl(mesh, mesh.mass_g, u, q);
}

double e_norm(const ThinMesh& mesh, const Field& u) {
  // Same quadrature as the operator, so e_norm^p == <A u, u> exactly.
  return std::pow(pair(apply_A_thin(mesh, u), u), 1.0 / mesh.p);
}

double e_norm(const LimitMesh& mesh, const Field& u) {
  return std::pow(pair(apply_A_limit(mesh, u), u), 1.0 / mesh.p);
}

namespace {

template <class Mesh>
double measure_c_impl(const Mesh& mesh, std::span<const Field> ens) {
  if (ens.empty()) {
    throw EmptyEnsembleError("measure_embedding_c: empty ensemble");
  }
  double cmin = std::numeric_limits<double>::infinity();
  for (const Field& u : ens) {
    double l2 = scaled_lp_norm(mesh, u, 2.0);
    if (l2 == 0.0) {
      throw EmptyEnsembleError("measure_embedding_c: ensemble contains a "
                               "zero field");
    }
    double ratio = std::pow(e_norm(mesh, u), mesh.p) / std::pow(l2, mesh.p);
    cmin = std::min(cmin, ratio);
  }
  return 0.9 * cmin;  // 10% safety margin
}

}  // namespace

double measure_embedding_c(const ThinMesh& mesh, std::span<const Field> ens) {
  return measure_c_impl(mesh, ens);
}

double measure_embedding_c(const LimitMesh& mesh, std::span<const Field> ens) {
  return measure_c_impl(mesh, ens);
}

double min_coercivity_ratio(const TrajectoryRecord& traj) {
  double rmin = std::numeric_limits<double>::infinity();
  for (const StepLog& log : traj.logs) {
    if (log.l2_scaled == 0.0) continue;
    rmin = std::min(rmin, log.e_norm / log.l2_scaled);
  }
  // <A u, u> / |||u|||_2^p = (e_norm / l2)^p, and x -> x^p is monotone.
  return std::pow(rmin, traj.p);
}

DissipationConstants dissipation_constants(double p, double L, double c,
                                           EtaPolicy policy,
                                           double eta_explicit) {
  if (!(p > 2.0)) {
    throw InvalidExponentError("dissipation_constants: need p > 2");
  }
  if (!(L > 0.0) || !(c > 0.0)) {
    throw InvalidExponentError("dissipation_constants: need L > 0 and c > 0");
  }
  DissipationConstants k;
  k.p = p;
  k.L = L;
  k.c = c;
  k.theta = p / 2.0;
  k.theta_prime = p / (p - 2.0);
  if (policy == EtaPolicy::kHalfCoercivity) {
    // eta^theta / theta = c/2, i.e. gamma = c/2.
    k.eta = std::pow(k.theta * c / 2.0, 1.0 / k.theta);
  } else {
    k.eta = eta_explicit;
  }
  if (!(k.eta > 0.0)) {
    throw ChooseSmallerEtaError("dissipation_constants: eta must be > 0");
  }
  k.gamma = c - std::pow(k.eta, k.theta) / k.theta;
  if (!(k.gamma > 0.0)) {
    throw ChooseSmallerEtaError(
        "dissipation_constants: gamma = c - eta^theta/theta <= 0, choose a "
        "smaller eta");
  }
  k.delta = std::pow(L / k.eta, k.theta_prime) / k.theta_prime;
  k.beta = std::pow(k.delta / k.gamma, 2.0 / p) + 1.0;
  k.T = 2.0 / (k.gamma * (p - 2.0));
  return k;
}

UniformGronwallConstants uniform_gronwall_constants(double p, double L,
                                                    double R, double a3) {
  if (!(p > 2.0)) {
    throw InvalidExponentError("uniform_gronwall_constants: need p > 2");
  }
  if (!(R > 0.0) || !(a3 >= 0.0) || !(L >= 0.0)) {
    throw InvalidExponentError(
        "uniform_gronwall_constants: need R > 0, a3 >= 0, L >= 0");
  }
  UniformGronwallConstants k;
  k.p = p;
  k.R = R;
  double theta = p / 2.0;
  double theta_prime = p / (p - 2.0);
  k.a1 = R * p / (2.0 * theta);
  k.a2 = R * p / (2.0 * theta_prime) * std::pow(L, 2.0 * theta_prime);
  k.a3 = a3;
  k.beta2 = (a3 / R + k.a2) * std::exp(k.a1);
  k.beta1 = std::pow(k.beta2, 1.0 / p);
  return k;
}

EnergyWindow time_integrated_energy(const TrajectoryRecord& traj, double t,
                                    double R) {
  if (traj.logs.size() < 2) {
    throw WindowOutOfRangeError("time_integrated_energy: trajectory too short");
  }
  double t0 = traj.logs.front().t;
  double t1 = traj.logs.back().t;
  double tol = 1e-9 * std::max(1.0, t1);
  if (t < t0 - tol || t + R > t1 + tol) {
    throw WindowOutOfRangeError("time_integrated_energy: window [t, t+R] not "
                                "covered by the trajectory");
  }

  EnergyWindow w;
  double l2_int = 0.0;
  bool started = false;
  double l2_at_t = 0.0;
  for (std::size_t k = 0; k + 1 < traj.logs.size(); ++k) {
    const StepLog& a = traj.logs[k];
    const StepLog& b = traj.logs[k + 1];
    if (b.t <= t + tol) continue;
    if (a.t >= t + R - tol) break;
    if (!started) {
      started = true;
      l2_at_t = a.l2_scaled;
    }
    double dt = b.t - a.t;
    double pa = std::pow(a.e_norm, traj.p);
    double pb = std::pow(b.e_norm, traj.p);
    w.integral += 0.5 * dt * (pa + pb);
    l2_int += 0.5 * dt * (a.l2_scaled * a.l2_scaled + b.l2_scaled * b.l2_scaled);
  }
  w.analytic_bound = 0.5 * l2_at_t * l2_at_t + traj.lipschitz * l2_int;
  return w;
}

double max_energy_window(const TrajectoryRecord& traj, double R) {
  double best = 0.0;
  double t_end = traj.logs.back().t;
  for (const StepLog& log : traj.logs) {
    if (log.t + R > t_end + 1e-9 * std::max(1.0, t_end)) break;
    best = std::max(best, time_integrated_energy(traj, log.t, R).integral);
  }
  return best;
}

}  // namespace thinlab

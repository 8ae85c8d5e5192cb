#include "thinlab/attractor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "thinlab/format.hpp"
#include "thinlab/operators.hpp"
#include "thinlab/rng.hpp"

namespace thinlab {

namespace {

// Index-ordered parallel map; results and the first thrown exception are
// collected per index, so the outcome does not depend on the worker count.
template <class Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<int> next{0};
  int nw = std::min(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (int w = 0; w < nw; ++w) {
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (int i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
  }
}

}  // namespace

double detect_absorption(const TrajectoryRecord& traj,
                         const DissipationConstants& consts) {
  if (traj.logs.empty()) {
    throw NoAbsorptionError("detect_absorption: empty trajectory");
  }
  // Last index violating (1/2)|||u|||_2^2 <= beta; entry is the next log.
  int last_out = -1;
  for (int k = 0; k < static_cast<int>(traj.logs.size()); ++k) {
    double half_sq = 0.5 * traj.logs[k].l2_scaled * traj.logs[k].l2_scaled;
    if (half_sq > consts.beta) last_out = k;
  }
  int entry = last_out + 1;
  if (entry >= static_cast<int>(traj.logs.size())) {
    throw NoAbsorptionError(
        "trajectory never settles in the beta-ball (T_end too small or "
        "constants inconsistent)");
  }
  return traj.logs[entry].t;
}

// ---------------------------------------------------------------------------
// Random initial data

namespace {

void smooth_once_thin(const ThinMesh& mesh, Field& u) {
  Field out = u;
  for (int i = 0; i <= mesh.nx; ++i) {
    for (int j = 0; j <= mesh.nz; ++j) {
      double sum = 0.0;
      int count = 0;
      auto add = [&](int ii, int jj) {
        if (ii < 0 || ii > mesh.nx || jj < 0 || jj > mesh.nz) return;
        sum += u.v[mesh.node(ii, jj)];
        ++count;
      };
      add(i - 1, j);
      add(i + 1, j);
      add(i, j - 1);
      add(i, j + 1);
      int n = mesh.node(i, j);
      out.v[n] = 0.5 * u.v[n] + 0.5 * sum / count;
    }
  }
  u = std::move(out);
}

void smooth_once_limit(const LimitMesh& mesh, Field& u) {
  Field out = u;
  for (int i = 0; i <= mesh.nx; ++i) {
    double sum = 0.0;
    int count = 0;
    if (i > 0) {
      sum += u.v[i - 1];
      ++count;
    }
    if (i < mesh.nx) {
      sum += u.v[i + 1];
      ++count;
    }
    out.v[i] = 0.5 * u.v[i] + 0.5 * sum / count;
  }
  u = std::move(out);
}

template <class Mesh>
void scale_to(const Mesh& mesh, Field& u, double target) {
  double n = scaled_lp_norm(mesh, u, 2.0);
  if (n > 0.0) {
    double s = target / n;
    for (double& x : u.v) x *= s;
  }
}

}  // namespace

std::vector<Field> random_ensemble(const LimitMesh& mesh, int n,
                                   std::uint64_t seed, double radius) {
  std::vector<Field> out;
  out.reserve(n);
  Rng base(seed);
  for (int m = 0; m < n; ++m) {
    Rng rng = base.fork(static_cast<std::uint64_t>(m));
    Field u = make_field(mesh);
    for (double& x : u.v) x = rng.symmetric();
    smooth_once_limit(mesh, u);
    scale_to(mesh, u, radius * rng.uniform(0.1, 1.0));
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<Field> random_ensemble(const ThinMesh& mesh, int n,
                                   std::uint64_t seed, double radius,
                                   bool y_independent,
                                   const LimitMesh* companion) {
  std::vector<Field> out;
  out.reserve(n);
  Rng base(seed);
  for (int m = 0; m < n; ++m) {
    Rng rng = base.fork(static_cast<std::uint64_t>(m));
    Field u = make_field(mesh);
    if (y_independent) {
      if (!companion) {
        throw Error("random_ensemble: y-independent sampling needs the "
                    "companion limit mesh");
      }
      Field profile = make_field(*companion);
      for (double& x : profile.v) x = rng.symmetric();
      smooth_once_limit(*companion, profile);
      u = extend(*companion, profile, mesh);
    } else {
      for (double& x : u.v) x = rng.symmetric();
      smooth_once_thin(mesh, u);
    }
    scale_to(mesh, u, radius * rng.uniform(0.1, 1.0));
    out.push_back(std::move(u));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Attractor sampling

namespace {

double mesh_epsilon(const ThinMesh& m) { return m.epsilon; }
double mesh_epsilon(const LimitMesh&) { return 0.0; }

std::vector<Field> base_measurement_ensemble(const ThinMesh& mesh,
                                             std::uint64_t seed) {
  auto ens = random_ensemble(mesh, 8, seed ^ 0xC0FFEEull, 1.0, false, nullptr);
  // A constant and a centered smooth hump widen the search for the worst
  // coercivity ratio; rough noise alone overestimates it badly.
  ens.push_back(make_field(mesh, 1.0));
  Field hump = make_field(mesh);
  for (int n = 0; n < mesh.node_count(); ++n) {
    double x = mesh.node_x(n);
    hump.v[n] = 1.0 / std::cosh(x);
  }
  ens.push_back(std::move(hump));
  return ens;
}

std::vector<Field> base_measurement_ensemble(const LimitMesh& mesh,
                                             std::uint64_t seed) {
  auto ens = random_ensemble(mesh, 8, seed ^ 0xC0FFEEull, 1.0);
  ens.push_back(make_field(mesh, 1.0));
  Field hump = make_field(mesh);
  for (int i = 0; i <= mesh.nx; ++i) hump.v[i] = 1.0 / std::cosh(mesh.x[i]);
  ens.push_back(std::move(hump));
  return ens;
}

template <class Mesh>
double raw_min_ratio(const Mesh& mesh, std::span<const Field> fields) {
  double rmin = std::numeric_limits<double>::infinity();
  for (const Field& u : fields) {
    double l2 = scaled_lp_norm(mesh, u, 2.0);
    if (l2 == 0.0) continue;
    rmin = std::min(rmin, std::pow(e_norm(mesh, u) / l2, mesh.p));
  }
  return rmin;
}

std::vector<Field> make_initial_members(const ThinMesh& mesh,
                                        const EnsembleConfig& cfg,
                                        double radius,
                                        const LimitMesh* companion) {
  return random_ensemble(mesh, cfg.size, cfg.seed, radius, cfg.y_independent,
                         companion);
}

std::vector<Field> make_initial_members(const LimitMesh& mesh,
                                        const EnsembleConfig& cfg,
                                        double radius, const LimitMesh*) {
  return random_ensemble(mesh, cfg.size, cfg.seed, radius);
}

template <class Mesh>
SampleResult sample_attractor_impl(const Mesh& mesh, const EnsembleConfig& cfg,
                                   const LimitMesh* companion,
                                   const std::vector<Field>* initial) {
  if (cfg.size < 1) throw Error("sample_attractor: ensemble size must be >= 1");
  if (!mesh.problem) throw Error("sample_attractor: mesh has no problem");
  const double p = mesh.p;
  const double L = mesh.problem->nonlinearity.lipschitz;

  auto base = base_measurement_ensemble(mesh, cfg.seed);
  double rmin = raw_min_ratio(mesh, base);

  DissipationConstants pre =
      dissipation_constants(p, L, 0.9 * rmin, EtaPolicy::kHalfCoercivity);
  double radius = 2.0 * std::sqrt(2.0 * pre.beta);

  std::vector<Field> members;
  if (initial) {
    members = *initial;
    for (const Field& u : members) check_field(mesh, u);
  } else {
    members = make_initial_members(mesh, cfg, radius, companion);
  }
  int n = static_cast<int>(members.size());

  double horizon = cfg.horizon_factor * pre.T;
  std::vector<TrajectoryRecord> trajs(n);
  DissipationConstants consts = pre;

  for (int attempt = 0; attempt < 3; ++attempt) {
    parallel_for(n, cfg.workers, [&](int m) {
      trajs[m] = solve_trajectory(mesh, members[m], horizon, cfg.ctrl);
    });
    double rmin_run = rmin;
    for (const auto& traj : trajs) {
      rmin_run = std::min(rmin_run, min_coercivity_ratio(traj));
    }
    consts = dissipation_constants(p, L, 0.9 * rmin_run,
                                   EtaPolicy::kHalfCoercivity);
    if (1.2 * consts.T <= horizon) break;
    // Trajectory states revealed a smaller coercivity constant; the
    // absorbing time grew past the horizon. Re-run longer.
    horizon = cfg.horizon_factor * consts.T;
  }

  SampleResult res;
  res.consts = consts;
  res.horizon = horizon;

  res.entry_times.resize(n);
  for (int m = 0; m < n; ++m) {
    res.entry_times[m] = detect_absorption(trajs[m], consts);
    res.beta_entry_max = std::max(res.beta_entry_max, res.entry_times[m]);
  }

  // Uniform-Gronwall window R = T; a3 is the worst logged window integral.
  double a3 = 0.0;
  for (const auto& traj : trajs) {
    a3 = std::max(a3, max_energy_window(traj, consts.T));
  }
  res.gronwall = uniform_gronwall_constants(p, L, consts.T, a3);

  res.sample.problem_name = mesh.problem->name;
  res.sample.epsilon = mesh_epsilon(mesh);
  res.sample.mesh_id = mesh.id;
  res.sample.seed = cfg.seed;
  res.sample.transient_cutoff = std::max(2.0 * consts.T, horizon / 2.0);
  res.sample.members.reserve(n);
  double sqrt_2beta = std::sqrt(2.0 * consts.beta);
  res.members_absorbed = true;
  for (int m = 0; m < n; ++m) {
    const Field& last = trajs[m].final_state();
    double l2 = scaled_lp_norm(mesh, last, 2.0);
    double en = e_norm(mesh, last);
    res.max_member_l2 = std::max(res.max_member_l2, l2);
    res.max_member_enorm = std::max(res.max_member_enorm, en);
    if (l2 > 1.05 * sqrt_2beta + 1e-12 ||
        en > 1.05 * res.gronwall.beta1 + 1e-12) {
      res.members_absorbed = false;
    }
    res.sample.members.push_back(last);
  }
  return res;
}

}  // namespace

SampleResult sample_attractor(const ThinMesh& mesh, const EnsembleConfig& cfg,
                              const LimitMesh* companion,
                              const std::vector<Field>* initial) {
  return sample_attractor_impl(mesh, cfg, companion, initial);
}

SampleResult sample_attractor(const LimitMesh& mesh, const EnsembleConfig& cfg,
                              const std::vector<Field>* initial) {
  return sample_attractor_impl(mesh, cfg, nullptr, initial);
}

// ---------------------------------------------------------------------------
// Hausdorff semidistance

namespace {

template <class Mesh>
double semidistance_impl(std::span<const Field> a, std::span<const Field> b,
                         const Mesh& mesh) {
  if (a.empty() || b.empty()) {
    throw EmptySampleError("hausdorff_semidistance: empty sample");
  }
  for (const Field& u : a) check_field(mesh, u);
  for (const Field& u : b) check_field(mesh, u);
  double dist = 0.0;
  Field diff = make_field(mesh);
  for (const Field& u : a) {
    double closest = std::numeric_limits<double>::infinity();
    for (const Field& v : b) {
      for (int i = 0; i < diff.size(); ++i) diff.v[i] = u.v[i] - v.v[i];
      closest = std::min(closest, scaled_lp_norm(mesh, diff, 2.0));
    }
    dist = std::max(dist, closest);
  }
  return dist;
}

}  // namespace

double hausdorff_semidistance(std::span<const Field> a,
                              std::span<const Field> b, const ThinMesh& mesh) {
  return semidistance_impl(a, b, mesh);
}

double hausdorff_semidistance(std::span<const Field> a,
                              std::span<const Field> b, const LimitMesh& mesh) {
  return semidistance_impl(a, b, mesh);
}

// ---------------------------------------------------------------------------
// The eps-sweep

SweepReport eps_sweep(const ValidatedProblem& prob,
                      std::span<const double> eps_list,
                      const EnsembleConfig& ens) {
  if (eps_list.empty()) throw Error("eps_sweep: empty eps list");
  for (std::size_t k = 0; k + 1 < eps_list.size(); ++k) {
    if (!(eps_list[k] > eps_list[k + 1])) {
      throw Error("eps_sweep: eps list must be sorted descending");
    }
  }
  for (double e : eps_list) {
    if (!(e > 0.0 && e < 1.0)) {
      throw Error("eps_sweep: eps values must lie in (0, 1)");
    }
  }

  const ProblemConfig& cfg = prob.config();
  SweepReport rep;
  rep.problem_name = cfg.name;
  rep.seed = ens.seed;
  rep.eps_list.assign(eps_list.begin(), eps_list.end());

  LimitMesh limit = build_limit_mesh(prob, cfg.nx);

  // Limit attractor, sampled once. The sweep always carries the limit
  // problem alongside the thin family.
  SampleResult limit_res;
  std::vector<Field> limit_initial;
  try {
    limit_initial = random_ensemble(limit, ens.size, ens.seed, 1.0);
    // sample_attractor rescales nothing when initial data is supplied, so
    // scale the shared profiles into the limit ball here.
    {
      auto base = base_measurement_ensemble(limit, ens.seed);
      double rmin = raw_min_ratio(limit, base);
      DissipationConstants pre =
          dissipation_constants(cfg.p, cfg.nonlinearity.lipschitz, 0.9 * rmin,
                                EtaPolicy::kHalfCoercivity);
      double radius = 2.0 * std::sqrt(2.0 * pre.beta);
      Rng base_rng(ens.seed ^ 0x5CA1Eull);
      for (Field& u : limit_initial) {
        scale_to(limit, u, radius * base_rng.uniform(0.1, 1.0));
      }
    }
    limit_res = sample_attractor(limit, ens, &limit_initial);
    rep.limit_consts = limit_res.consts;
    rep.limit_beta_entry_max = limit_res.beta_entry_max;
    rep.limit_ok = true;
  } catch (const std::exception& e) {
    rep.limit_ok = false;
    rep.limit_error = e.what();
  }

  bool all_ok = rep.limit_ok;
  bool absorbed = rep.limit_ok && limit_res.members_absorbed;
  bool decomp_ok = true;

  for (double eps : eps_list) {
    SweepRow row;
    row.eps = eps;
    if (!rep.limit_ok) {
      row.error = "limit attractor unavailable";
      rep.rows.push_back(row);
      all_ok = false;
      continue;
    }
    try {
      ThinMesh thin = build_thin_mesh_raw(prob.shared_config(), cfg.nx,
                                          cfg.nz, eps);
      row.weight_gap_inf = weight_gap_inf(thin);

      // Paired initial data: the limit profiles extended across columns.
      std::vector<Field> thin_initial;
      thin_initial.reserve(limit_initial.size());
      for (const Field& u0 : limit_initial) {
        thin_initial.push_back(extend(limit, u0, thin));
      }
      SampleResult thin_res =
          sample_attractor(thin, ens, &limit, &thin_initial);
      row.beta_entry_max = thin_res.beta_entry_max;
      if (!thin_res.members_absorbed) absorbed = false;

      // dist_{H_eps}(A_eps, E_eps A_0)
      std::vector<Field> lifted;
      lifted.reserve(limit_res.sample.members.size());
      for (const Field& v : limit_res.sample.members) {
        lifted.push_back(extend(limit, v, thin));
      }
      row.semidistance =
          hausdorff_semidistance(thin_res.sample.members, lifted, thin);

      // Comparison runs (xi, M_eps xi) up to the limit absorbing time.
      double t_eval = rep.limit_consts.T;
      StepControl gap_ctrl = ens.ctrl;
      std::vector<Field> evolved_limit;
      double term1 = 0.0;
      double drift = 0.0;
      Field diff = make_field(thin);
      for (const Field& xi : thin_res.sample.members) {
        Field xi0 = average_project(thin, xi, limit);
        GapReport gap =
            trajectory_gap(thin, xi, limit, xi0, t_eval, gap_ctrl);
        row.traj_gap_max = std::max(row.traj_gap_max, gap.max_gap_sq);
        term1 = std::max(term1, std::sqrt(gap.gap_sq.back()));
        for (int i = 0; i < diff.size(); ++i) {
          diff.v[i] = gap.final_thin.v[i] - xi.v[i];
        }
        drift = std::max(drift, scaled_lp_norm(thin, diff, 2.0));
        evolved_limit.push_back(gap.final_limit);
      }
      double term2 = hausdorff_semidistance(evolved_limit,
                                            limit_res.sample.members, limit);
      row.decomp_lhs = row.semidistance;
      row.decomp_term1 = term1;
      row.decomp_term2 = term2;
      row.decomp_drift = drift;
      if (row.decomp_lhs > term1 + term2 + drift + 1e-9) decomp_ok = false;

      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      all_ok = false;
    }
    rep.rows.push_back(row);
  }

  // Monotone-trend assertion with 10% noise slack, successful rows only.
  bool monotone = true;
  const SweepRow* prev = nullptr;
  for (const SweepRow& row : rep.rows) {
    if (!row.ok) continue;
    if (prev && row.semidistance > 1.1 * prev->semidistance + 1e-12) {
      monotone = false;
    }
    prev = &row;
  }

  rep.asserts.all_runs_ok = all_ok;
  rep.asserts.semidistance_monotone = monotone;
  rep.asserts.members_absorbed = absorbed;
  rep.asserts.decomposition = decomp_ok && rep.limit_ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Report serialization

std::string SweepReport::to_csv() const {
  std::ostringstream os;
  os << "eps,weight_gap_inf,traj_gap_max,semidistance,beta_entry_max"
     << kCsvEol;
  for (const SweepRow& row : rows) {
    os << fmt_double(row.eps) << ',' << fmt_double(row.weight_gap_inf) << ','
       << fmt_double(row.traj_gap_max) << ',' << fmt_double(row.semidistance)
       << ',' << fmt_double(row.beta_entry_max) << kCsvEol;
  }
  return os.str();
}

namespace {

nlohmann::json consts_json(const DissipationConstants& k) {
  return {{"p", k.p},         {"L", k.L},       {"c", k.c},
          {"theta", k.theta}, {"theta_prime", k.theta_prime},
          {"eta", k.eta},     {"gamma", k.gamma},
          {"delta", k.delta}, {"beta", k.beta}, {"T", k.T}};
}

}  // namespace

std::string SweepReport::to_json() const {
  nlohmann::json j;
  j["problem"] = problem_name;
  j["seed"] = seed;
  j["eps_list"] = eps_list;
  j["dissipation"] = consts_json(limit_consts);
  j["limit"] = {{"ok", limit_ok},
                {"error", limit_error},
                {"beta_entry_max", limit_beta_entry_max}};
  nlohmann::json rows_json = nlohmann::json::array();
  for (const SweepRow& row : rows) {
    rows_json.push_back({{"eps", row.eps},
                         {"ok", row.ok},
                         {"error", row.error},
                         {"weight_gap_inf", row.weight_gap_inf},
                         {"traj_gap_max", row.traj_gap_max},
                         {"semidistance", row.semidistance},
                         {"beta_entry_max", row.beta_entry_max},
                         {"decomposition",
                          {{"lhs", row.decomp_lhs},
                           {"term1", row.decomp_term1},
                           {"term2", row.decomp_term2},
                           {"drift", row.decomp_drift}}}});
  }
  j["rows"] = rows_json;
  j["assertions"] = {{"all_runs_ok", asserts.all_runs_ok},
                     {"semidistance_monotone", asserts.semidistance_monotone},
                     {"members_absorbed", asserts.members_absorbed},
                     {"decomposition", asserts.decomposition}};
  return j.dump(2) + "\n";
}

}  // namespace thinlab

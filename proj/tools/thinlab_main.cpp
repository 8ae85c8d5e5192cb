// thinlab command-line front end.
//
// Subcommands:
//   validate  check a problem config against every hypothesis
//   solve     run one trajectory, write per-step CSV + final checkpoint
//   sweep     attractor sweep over a descending eps list, write report
//
// Exit codes: 0 ok, 1 hypothesis violation, 2 I/O or parse error,
// 3 solver failure, 4 assertion-suite failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "thinlab/attractor.hpp"
#include "thinlab/checkpoint.hpp"
#include "thinlab/evolution.hpp"
#include "thinlab/format.hpp"
#include "thinlab/manifest.hpp"
#include "thinlab/norms.hpp"
#include "thinlab/operators.hpp"

namespace fs = std::filesystem;
using namespace thinlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitHypothesis = 1;
constexpr int kExitParse = 2;
constexpr int kExitSolver = 3;
constexpr int kExitAssertion = 4;

std::string default_out_dir(const std::string& command, std::uint64_t seed) {
  std::string stamp = iso8601_now();
  for (char& c : stamp) {
    if (c == ':') c = '-';
  }
  return command + "-" + stamp + "-seed" + std::to_string(seed);
}

ProblemConfig load_or_die(const std::string& path) {
  return load_config(path);  // throws ConfigParseError
}

int cmd_validate(const std::string& config_path) {
  ProblemConfig cfg;
  try {
    cfg = load_or_die(config_path);
  } catch (const ConfigParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  }
  ValidationReport rep = validate_config(cfg);
  if (rep.ok()) {
    std::cout << "config ok: problem '" << cfg.name << "', p = " << cfg.p
              << ", epsilon = " << cfg.epsilon << "\n";
    return kExitOk;
  }
  for (const auto& v : rep.violations) {
    std::cout << v.message() << "\n";
  }
  return kExitHypothesis;
}

struct SolveOptions {
  std::string config_path;
  double eps = -1.0;  // <0: take from config
  double tend = -1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  std::string u0_path;
  int workers = 1;
};

Field initial_field(const ThinMesh& mesh, std::uint64_t seed) {
  return random_ensemble(mesh, 1, seed, 1.0, false, nullptr).front();
}

Field initial_field(const LimitMesh& mesh, std::uint64_t seed) {
  return random_ensemble(mesh, 1, seed, 1.0).front();
}

// Measured embedding constant for one mesh: base ensemble plus the states a
// trajectory actually visited.
template <class Mesh>
DissipationConstants run_constants(const Mesh& mesh,
                                   const TrajectoryRecord& traj,
                                   std::uint64_t seed) {
  std::vector<Field> ens;
  ens.push_back(make_field(mesh, 1.0));
  for (const Field& s : traj.stored_states) {
    if (scaled_lp_norm(mesh, s, 2.0) > 0.0) ens.push_back(s);
  }
  double c_measured = measure_embedding_c(mesh, ens);
  double c_logs = min_coercivity_ratio(traj);
  double c = std::min(c_measured, 0.9 * c_logs);
  if (!std::isfinite(c) || c <= 0.0) c = c_measured;
  return dissipation_constants(mesh.p, mesh.problem->nonlinearity.lipschitz,
                               c, EtaPolicy::kHalfCoercivity);
}

template <class Mesh>
int solve_on_mesh(const Mesh& mesh, const ProblemConfig& cfg,
                  const SolveOptions& opt, const std::string& out_dir,
                  RunManifest& manifest) {
  StepControl ctrl = StepControl::from_config(cfg);
  double tend = opt.tend > 0.0 ? opt.tend : cfg.tend;
  std::uint64_t seed = opt.seed_set ? opt.seed : cfg.seed;

  Field u0;
  if (!opt.u0_path.empty()) {
    u0 = bind_checkpoint(load_checkpoint(opt.u0_path), mesh);
  } else {
    u0 = initial_field(mesh, seed);
  }

  TrajectoryRecord traj;
  try {
    traj = solve_trajectory(mesh, u0, tend, ctrl);
  } catch (const NonlinearSolveFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }

  DissipationConstants consts = run_constants(mesh, traj, seed);
  std::cout << "beta = " << fmt_double(consts.beta)
            << "  T = " << fmt_double(consts.T);
  try {
    double entry = detect_absorption(traj, consts);
    std::cout << "  entry_time = " << fmt_double(entry) << "\n";
  } catch (const NoAbsorptionError&) {
    std::cout << "  entry_time = not reached (tend too small)\n";
  }

  std::string csv_path = out_dir + "/trajectory.csv";
  std::string ckpt_path = out_dir + "/final_state.thl";
  write_trajectory_csv(csv_path, traj);
  save_checkpoint(ckpt_path, mesh, &traj.final_state());
  manifest.outputs.push_back("trajectory.csv");
  manifest.outputs.push_back("final_state.thl");
  return kExitOk;
}

int cmd_solve(const SolveOptions& opt) {
  ProblemConfig cfg;
  try {
    cfg = load_or_die(opt.config_path);
  } catch (const ConfigParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  }
  if (opt.eps >= 0.0) cfg.epsilon = opt.eps;
  ValidationReport rep = validate_config(cfg);
  if (!rep.ok()) {
    for (const auto& v : rep.violations) std::cout << v.message() << "\n";
    return kExitHypothesis;
  }

  std::uint64_t seed = opt.seed_set ? opt.seed : cfg.seed;
  std::string out_dir =
      opt.out_dir.empty() ? default_out_dir("solve", seed) : opt.out_dir;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory '" << out_dir << "'\n";
    return kExitParse;
  }

  RunManifest manifest;
  manifest.command = "solve";
  manifest.config_snapshot = serialize_config(cfg);
  manifest.seed = seed;
  manifest.started_at = iso8601_now();

  int code;
  if (cfg.epsilon == 0.0) {
    LimitMesh mesh = build_limit_mesh(*rep.problem, cfg.nx);
    code = solve_on_mesh(mesh, cfg, opt, out_dir, manifest);
  } else {
    ThinMesh mesh = build_thin_mesh(*rep.problem, cfg.nx, cfg.nz);
    code = solve_on_mesh(mesh, cfg, opt, out_dir, manifest);
  }

  save_config(cfg, out_dir + "/config.cfg");
  manifest.outputs.push_back("config.cfg");
  manifest.finished_at = iso8601_now();
  write_manifest(out_dir + "/manifest.json", manifest);
  return code;
}

struct SweepOptions {
  std::string config_path;
  std::vector<double> eps_list = {0.4, 0.2, 0.1, 0.05};
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  int workers = 1;
};

int cmd_sweep(const SweepOptions& opt) {
  ProblemConfig cfg;
  try {
    cfg = load_or_die(opt.config_path);
  } catch (const ConfigParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  }
  ValidationReport rep = validate_config(cfg);
  if (!rep.ok()) {
    for (const auto& v : rep.violations) std::cout << v.message() << "\n";
    return kExitHypothesis;
  }

  std::uint64_t seed = opt.seed_set ? opt.seed : cfg.seed;
  std::string out_dir =
      opt.out_dir.empty() ? default_out_dir("sweep", seed) : opt.out_dir;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory '" << out_dir << "'\n";
    return kExitParse;
  }

  EnsembleConfig ens;
  ens.size = cfg.ensemble;
  ens.seed = seed;
  ens.horizon_factor = cfg.horizon_factor;
  ens.ctrl = StepControl::from_config(cfg);
  ens.ctrl.store_stride = 1 << 30;  // endpoints only; logs carry the rest
  ens.workers = opt.workers;
  ens.y_independent = true;  // paired thin/limit sampling across the sweep

  RunManifest manifest;
  manifest.command = "sweep";
  manifest.config_snapshot = serialize_config(cfg);
  manifest.seed = seed;
  manifest.started_at = iso8601_now();

  SweepReport report;
  try {
    report = eps_sweep(*rep.problem, opt.eps_list, ens);
  } catch (const NonlinearSolveFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }

  {
    std::ofstream csv(out_dir + "/report.csv", std::ios::binary);
    csv << report.to_csv();
    std::ofstream json(out_dir + "/report.json", std::ios::binary);
    json << report.to_json();
  }
  save_config(cfg, out_dir + "/config.cfg");
  manifest.outputs = {"report.csv", "report.json", "config.cfg"};
  manifest.assertion_suites["all_runs_ok"] = report.asserts.all_runs_ok;
  manifest.assertion_suites["semidistance_monotone"] =
      report.asserts.semidistance_monotone;
  manifest.assertion_suites["members_absorbed"] =
      report.asserts.members_absorbed;
  manifest.assertion_suites["decomposition"] = report.asserts.decomposition;
  manifest.finished_at = iso8601_now();
  write_manifest(out_dir + "/manifest.json", manifest);

  std::cout << report.to_csv();
  for (auto& [name, passed] : manifest.assertion_suites) {
    std::cout << (passed ? "[PASS] " : "[FAIL] ") << name << "\n";
  }
  return report.asserts.all() ? kExitOk : kExitAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thinlab: p-Laplacian dynamics on thin strips and their 1D "
               "weighted limit"};
  app.require_subcommand(1);

  std::string config_path;
  SolveOptions solve_opt;
  SweepOptions sweep_opt;

  auto* validate = app.add_subcommand("validate", "check a problem config");
  validate->add_option("--config", config_path, "config file")->required();

  auto* solve = app.add_subcommand("solve", "run one trajectory");
  solve->add_option("--config", solve_opt.config_path, "config file")
      ->required();
  solve->add_option("--eps", solve_opt.eps,
                    "thinness parameter (0 = limit problem)");
  solve->add_option("--tend", solve_opt.tend, "final time");
  auto* solve_seed = solve->add_option("--seed", solve_opt.seed, "RNG seed");
  solve->add_option("--out", solve_opt.out_dir, "output directory");
  solve->add_option("--u0", solve_opt.u0_path, "initial-state checkpoint");
  solve->add_option("--workers", solve_opt.workers, "worker cap");

  auto* sweep = app.add_subcommand("sweep", "attractor sweep over eps");
  sweep->add_option("--config", sweep_opt.config_path, "config file")
      ->required();
  sweep->add_option("--eps-list", sweep_opt.eps_list,
                    "descending eps values (comma separated)")
      ->delimiter(',');
  auto* sweep_seed = sweep->add_option("--seed", sweep_opt.seed, "RNG seed");
  sweep->add_option("--out", sweep_opt.out_dir, "output directory");
  sweep->add_option("--workers", sweep_opt.workers,
                    "worker cap (1 = deterministic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitParse;
  }

  solve_opt.seed_set = solve_seed->count() > 0;
  sweep_opt.seed_set = sweep_seed->count() > 0;

  try {
    if (validate->parsed()) return cmd_validate(config_path);
    if (solve->parsed()) return cmd_solve(solve_opt);
    if (sweep->parsed()) return cmd_sweep(sweep_opt);
  } catch (const ConfigParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const NonlinearSolveFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  }
  return kExitOk;
}

#pragma once

// Absorbing-set detection, finite attractor sampling by long-horizon
// ensembles, and the Hausdorff semidistance machinery for the eps-sweep.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thinlab/evolution.hpp"
#include "thinlab/norms.hpp"

namespace thinlab {

// First logged time with (1/2)|||u(t)|||_2^2 <= beta that persists to the
// end of the log. Throws NoAbsorption if the trajectory never settles.
double detect_absorption(const TrajectoryRecord& traj,
                         const DissipationConstants& consts);

struct AttractorSample {
  std::string problem_name;
  double epsilon = 0.0;  // 0 = limit problem
  std::uint64_t mesh_id = 0;
  std::vector<Field> members;
  double transient_cutoff = 0.0;
  std::uint64_t seed = 0;
};

struct EnsembleConfig {
  int size = 32;
  std::uint64_t seed = 1;
  double horizon_factor = 10.0;
  StepControl ctrl;
  int workers = 1;
  bool y_independent = false;  // sample x-profiles and extend across columns
};

// Seeded pseudo-random initial data: nodal noise, one neighbor-averaging
// smoothing pass, scaled into the ball of the given radius.
std::vector<Field> random_ensemble(const ThinMesh& mesh, int n,
                                   std::uint64_t seed, double radius,
                                   bool y_independent,
                                   const LimitMesh* companion = nullptr);
std::vector<Field> random_ensemble(const LimitMesh& mesh, int n,
                                   std::uint64_t seed, double radius);

struct SampleResult {
  AttractorSample sample;
  DissipationConstants consts;       // refined with trajectory logs
  UniformGronwallConstants gronwall; // window R = consts.T
  double beta_entry_max = 0.0;
  double max_member_l2 = 0.0;
  double max_member_enorm = 0.0;
  bool members_absorbed = true;      // the AttractorSample invariants
  double horizon = 0.0;
  std::vector<double> entry_times;
};

SampleResult sample_attractor(const ThinMesh& mesh, const EnsembleConfig& cfg,
                              const LimitMesh* companion = nullptr,
                              const std::vector<Field>* initial = nullptr);
SampleResult sample_attractor(const LimitMesh& mesh, const EnsembleConfig& cfg,
                              const std::vector<Field>* initial = nullptr);

// max over a in A of min over b in B of ||| a - b |||_2.
double hausdorff_semidistance(std::span<const Field> a,
                              std::span<const Field> b, const ThinMesh& mesh);
double hausdorff_semidistance(std::span<const Field> a,
                              std::span<const Field> b, const LimitMesh& mesh);

struct SweepRow {
  double eps = 0.0;
  bool ok = false;
  std::string error;
  double weight_gap_inf = 0.0;
  double traj_gap_max = 0.0;    // squared comparison gap, max over members
  double semidistance = 0.0;    // dist_{H_eps}(A_eps, E_eps A_0)
  double beta_entry_max = 0.0;
  // Decomposition check pieces (distances, not squared):
  double decomp_lhs = 0.0;
  double decomp_term1 = 0.0;
  double decomp_term2 = 0.0;
  double decomp_drift = 0.0;
};

struct SweepAssertions {
  bool all_runs_ok = false;
  bool semidistance_monotone = false;  // non-increasing with 10% slack
  bool members_absorbed = false;
  bool decomposition = false;

  bool all() const {
    return all_runs_ok && semidistance_monotone && members_absorbed &&
           decomposition;
  }
};

struct SweepReport {
  std::string problem_name;
  std::uint64_t seed = 0;
  std::vector<double> eps_list;
  std::vector<SweepRow> rows;
  DissipationConstants limit_consts;
  double limit_beta_entry_max = 0.0;
  bool limit_ok = false;
  std::string limit_error;
  SweepAssertions asserts;

  std::string to_json() const;
  std::string to_csv() const;
};

// Samples the limit attractor once, then every thin attractor along the
// descending eps list; computes semidistances, comparison gaps and the
// absorbing diagnostics. Per-eps failures are recorded, not fatal.
SweepReport eps_sweep(const ValidatedProblem& prob,
                      std::span<const double> eps_list,
                      const EnsembleConfig& ens);

}  // namespace thinlab

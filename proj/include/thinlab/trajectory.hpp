#pragma once

// Per-trajectory logs shared by the evolution, norms and attractor modules.

#include <string>
#include <vector>

#include "thinlab/mesh.hpp"

namespace thinlab {

struct StepLog {
  double t = 0.0;
  double l2_scaled = 0.0;  // ||| u |||_{L^2}
  double e_norm = 0.0;     // || u ||_E
  int newton_iters = 0;
  double residual = 0.0;   // final dual-norm residual of the step
};

struct TrajectoryRecord {
  std::string problem_name;
  std::uint64_t mesh_id = 0;
  double dt = 0.0;
  double p = 3.0;          // exponent of the run, for e_norm^p integrals
  double lipschitz = 0.0;  // declared Lipschitz constant of the run

  std::vector<StepLog> logs;           // one entry per step, including t = 0
  std::vector<double> stored_times;    // strided snapshots, first and last
  std::vector<Field> stored_states;

  double final_time() const { return logs.empty() ? 0.0 : logs.back().t; }
  const Field& final_state() const { return stored_states.back(); }
};

void write_trajectory_csv(const std::string& path,
                          const TrajectoryRecord& traj);

}  // namespace thinlab

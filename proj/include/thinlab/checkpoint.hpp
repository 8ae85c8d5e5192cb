#pragma once

// Binary checkpoint container for meshes and fields, plus a CSV export for
// plotting.
//
// Layout (little-endian):
//   bytes 0..3   magic "THL1"
//   u32          mesh kind: 1 = thin strip, 2 = limit interval
//   u64          nx cells
//   u64          nz cells (0 for the limit mesh)
//   f64          epsilon
//   f64          p
//   u64          node count
//   f64 ...      node coordinates (x,y interleaved for thin, x for limit)
//   u8           1 if a coefficient vector follows
//   f64 ...      node coefficients (node count entries)

#include <optional>
#include <string>
#include <vector>

#include "thinlab/mesh.hpp"

namespace thinlab {

struct CheckpointData {
  int kind = 0;  // 1 thin, 2 limit
  std::uint64_t nx = 0;
  std::uint64_t nz = 0;
  double epsilon = 0.0;
  double p = 0.0;
  std::vector<double> coords;
  std::optional<std::vector<double>> values;
};

void save_checkpoint(const std::string& path, const ThinMesh& mesh,
                     const Field* field = nullptr);
void save_checkpoint(const std::string& path, const LimitMesh& mesh,
                     const Field* field = nullptr);

CheckpointData load_checkpoint(const std::string& path);

// Re-binds checkpointed coefficients to a freshly built mesh; geometry must
// agree exactly.
Field bind_checkpoint(const CheckpointData& data, const ThinMesh& mesh);
Field bind_checkpoint(const CheckpointData& data, const LimitMesh& mesh);

// CSV export: header "index,x,y,value", one row per node (y = 0 on the
// limit mesh).
void export_field_csv(const std::string& path, const ThinMesh& mesh,
                      const Field& field);
void export_field_csv(const std::string& path, const LimitMesh& mesh,
                      const Field& field);

}  // namespace thinlab

#pragma once

// Discretizations of the truncated thin strip and of the limit interval.
//
// The thin mesh is terrain-following: reference cells [x_i, x_{i+1}] x
// [z_j, z_{j+1}] are mapped by (x, z) -> (x, eps * g(x) * z) and split into
// two triangles with a consistent diagonal. The eps-dependence enters only
// through node coordinates, so one topology serves every eps.
//
// Norm and mass bookkeeping uses the rescaled measure rho_eps = Lebesgue/eps
// on the strip and the weighted measure g dx on the limit interval. Per-node
// lumped masses are chosen so that the total rho_eps-mass is independent of
// eps and column sums on the strip reproduce the limit weights exactly.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "thinlab/problem.hpp"

namespace thinlab {

struct Triangle {
  int v[3];            // node indices, counterclockwise
  double area;         // physical area, > 0
  double grad[3][2];   // gradients of the P1 basis functions
};

struct ThinMesh {
  std::uint64_t id = 0;
  double epsilon = 0.0;
  double p = 3.0;
  double x_max = 0.0;
  int nx = 0;  // cells in x
  int nz = 0;  // cells in z

  std::vector<double> x;        // nx+1 grid abscissae
  std::vector<double> g_at_x;   // profile samples g(x_i)
  std::vector<double> coords;   // 2*(node count), interleaved (x, y)
  std::vector<Triangle> tris;

  std::vector<double> mass_rho;  // per-node lumped rho_eps-mass
  std::vector<double> weight_a;  // a sampled at nodes
  std::vector<double> z_weights; // trapezoid weights in z (sum to 1)

  std::shared_ptr<const ProblemConfig> problem;  // retained for refine()

  int node(int i, int j) const { return i * (nz + 1) + j; }
  int node_count() const { return (nx + 1) * (nz + 1); }
  double node_x(int n) const { return coords[2 * n]; }
  double node_y(int n) const { return coords[2 * n + 1]; }
  double total_mass() const;
};

struct LimitMesh {
  std::uint64_t id = 0;
  double p = 3.0;
  double x_max = 0.0;
  int nx = 0;

  std::vector<double> x;            // nx+1 abscissae
  std::vector<double> g_at_x;
  std::vector<double> mass_g;       // per-node weights int g_h phi_i dx
  std::vector<double> cell_g_int;   // per-cell int g_h dx
  std::vector<double> weight_abar;  // abar sampled at nodes

  std::shared_ptr<const ProblemConfig> problem;

  int node_count() const { return nx + 1; }
  double total_mass() const;
};

// Grid function bound to a mesh by id.
struct Field {
  std::uint64_t mesh_id = 0;
  std::vector<double> v;

  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }
  int size() const { return static_cast<int>(v.size()); }
  bool all_finite() const;
};

ThinMesh build_thin_mesh(const ValidatedProblem& prob, int nx, int nz);
LimitMesh build_limit_mesh(const ValidatedProblem& prob, int nx);

// Unvalidated entry point used by build_thin_mesh; kept callable so the
// degenerate-element guard stays testable.
ThinMesh build_thin_mesh_raw(std::shared_ptr<const ProblemConfig> cfg, int nx,
                             int nz, double epsilon);

// Nested refinement: resolution doubles, coarse nodes are a subset of the
// fine nodes.
ThinMesh refine(const ThinMesh& mesh);
LimitMesh refine(const LimitMesh& mesh);

Field make_field(const ThinMesh& mesh, double fill = 0.0);
Field make_field(const LimitMesh& mesh, double fill = 0.0);
Field interpolate(const ThinMesh& mesh,
                  const std::function<double(double, double)>& fn);
Field interpolate(const LimitMesh& mesh,
                  const std::function<double(double)>& fn);

void check_field(const ThinMesh& mesh, const Field& u);
void check_field(const LimitMesh& mesh, const Field& u);

}  // namespace thinlab

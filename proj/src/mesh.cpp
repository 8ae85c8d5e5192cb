#include "thinlab/mesh.hpp"

#include <atomic>
#include <cmath>
#include <numeric>

namespace thinlab {

namespace {

std::uint64_t next_mesh_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

// Signed area and P1 basis gradients of a triangle.
void triangle_geometry(const std::vector<double>& coords, Triangle& t) {
  double x1 = coords[2 * t.v[0]], y1 = coords[2 * t.v[0] + 1];
  double x2 = coords[2 * t.v[1]], y2 = coords[2 * t.v[1] + 1];
  double x3 = coords[2 * t.v[2]], y3 = coords[2 * t.v[2] + 1];
  double twice_area = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1);
  if (!(twice_area > 0.0) || !std::isfinite(twice_area)) {
    throw DegenerateMeshError("inverted or degenerate element (2A = " +
                              std::to_string(twice_area) + ")");
  }
  t.area = 0.5 * twice_area;
  t.grad[0][0] = (y2 - y3) / twice_area;
  t.grad[0][1] = (x3 - x2) / twice_area;
  t.grad[1][0] = (y3 - y1) / twice_area;
  t.grad[1][1] = (x1 - x3) / twice_area;
  t.grad[2][0] = (y1 - y2) / twice_area;
  t.grad[2][1] = (x2 - x1) / twice_area;
}

}  // namespace

double ThinMesh::total_mass() const {
  return std::accumulate(mass_rho.begin(), mass_rho.end(), 0.0);
}

double LimitMesh::total_mass() const {
  return std::accumulate(mass_g.begin(), mass_g.end(), 0.0);
}

bool Field::all_finite() const {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

ThinMesh build_thin_mesh_raw(std::shared_ptr<const ProblemConfig> cfg, int nx,
                             int nz, double epsilon) {
  if (nx < 2 || nz < 2) {
    throw Error("build_thin_mesh: need nx >= 2 and nz >= 2");
  }
  if (!(epsilon > 0.0)) {
    throw Error("build_thin_mesh: epsilon must be positive (use the limit "
                "mesh for epsilon = 0)");
  }

  ThinMesh m;
  m.id = next_mesh_id();
  m.epsilon = epsilon;
  m.p = cfg->p;
  m.x_max = cfg->x_max;
  m.nx = nx;
  m.nz = nz;
  m.problem = cfg;

  m.x.resize(nx + 1);
  m.g_at_x.resize(nx + 1);
  double hx = 2.0 * cfg->x_max / nx;
  for (int i = 0; i <= nx; ++i) {
    m.x[i] = -cfg->x_max + hx * i;
    m.g_at_x[i] = cfg->profile(m.x[i]);
  }

  // Terrain-following nodes: y = eps * g(x_i) * z_j, z uniform in [0, 1].
  int nn = (nx + 1) * (nz + 1);
  m.coords.resize(2 * nn);
  for (int i = 0; i <= nx; ++i) {
    for (int j = 0; j <= nz; ++j) {
      int n = m.node(i, j);
      double z = static_cast<double>(j) / nz;
      m.coords[2 * n] = m.x[i];
      m.coords[2 * n + 1] = epsilon * m.g_at_x[i] * z;
    }
  }

  // Two triangles per cell, diagonal from (i,j) to (i+1,j+1) everywhere.
  m.tris.reserve(2 * nx * nz);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < nz; ++j) {
      int p00 = m.node(i, j);
      int p10 = m.node(i + 1, j);
      int p01 = m.node(i, j + 1);
      int p11 = m.node(i + 1, j + 1);
      Triangle t1{{p00, p10, p11}, 0.0, {}};
      Triangle t2{{p00, p11, p01}, 0.0, {}};
      triangle_geometry(m.coords, t1);
      triangle_geometry(m.coords, t2);
      m.tris.push_back(t1);
      m.tris.push_back(t2);
    }
  }

  // Lumped rho_eps-mass: one third of the adjacent physical area, divided
  // by eps. Column sums then reproduce the limit weights int g_h phi_i dx
  // exactly, which is what keeps the scaled norms eps-independent on
  // y-independent data.
  m.mass_rho.assign(nn, 0.0);
  for (const Triangle& t : m.tris) {
    double share = t.area / (3.0 * epsilon);
    for (int k = 0; k < 3; ++k) m.mass_rho[t.v[k]] += share;
  }

  m.weight_a.resize(nn);
  for (int n = 0; n < nn; ++n) {
    m.weight_a[n] = cfg->weight(m.coords[2 * n], m.coords[2 * n + 1]);
  }

  m.z_weights.assign(nz + 1, 1.0 / nz);
  m.z_weights.front() = 0.5 / nz;
  m.z_weights.back() = 0.5 / nz;

  return m;
}

ThinMesh build_thin_mesh(const ValidatedProblem& prob, int nx, int nz) {
  return build_thin_mesh_raw(prob.shared_config(), nx, nz, prob.epsilon());
}

LimitMesh build_limit_mesh(const ValidatedProblem& prob, int nx) {
  if (nx < 2) throw Error("build_limit_mesh: need nx >= 2");
  const auto cfg = prob.shared_config();

  LimitMesh m;
  m.id = next_mesh_id();
  m.p = cfg->p;
  m.x_max = cfg->x_max;
  m.nx = nx;
  m.problem = cfg;

  m.x.resize(nx + 1);
  m.g_at_x.resize(nx + 1);
  double h = 2.0 * cfg->x_max / nx;
  for (int i = 0; i <= nx; ++i) {
    m.x[i] = -cfg->x_max + h * i;
    m.g_at_x[i] = cfg->profile(m.x[i]);
  }

  m.cell_g_int.resize(nx);
  for (int e = 0; e < nx; ++e) {
    m.cell_g_int[e] = h * 0.5 * (m.g_at_x[e] + m.g_at_x[e + 1]);
  }

  // int g_h phi_i dx with g_h piecewise linear: h (g_i/3 + g_{i +- 1}/6)
  // per adjacent cell.
  m.mass_g.assign(nx + 1, 0.0);
  for (int e = 0; e < nx; ++e) {
    m.mass_g[e] += h * (m.g_at_x[e] / 3.0 + m.g_at_x[e + 1] / 6.0);
    m.mass_g[e + 1] += h * (m.g_at_x[e + 1] / 3.0 + m.g_at_x[e] / 6.0);
  }

  m.weight_abar.resize(nx + 1);
  for (int i = 0; i <= nx; ++i) m.weight_abar[i] = cfg->weight.trace(m.x[i]);

  return m;
}

ThinMesh refine(const ThinMesh& mesh) {
  if (!mesh.problem) throw Error("refine: mesh has no attached problem");
  return build_thin_mesh_raw(mesh.problem, 2 * mesh.nx, 2 * mesh.nz,
                             mesh.epsilon);
}

LimitMesh refine(const LimitMesh& mesh) {
  if (!mesh.problem) throw Error("refine: mesh has no attached problem");
  ValidatedProblem prob(mesh.problem);
  return build_limit_mesh(prob, 2 * mesh.nx);
}

Field make_field(const ThinMesh& mesh, double fill) {
  Field f;
  f.mesh_id = mesh.id;
  f.v.assign(mesh.node_count(), fill);
  return f;
}

Field make_field(const LimitMesh& mesh, double fill) {
  Field f;
  f.mesh_id = mesh.id;
  f.v.assign(mesh.node_count(), fill);
  return f;
}

Field interpolate(const ThinMesh& mesh,
                  const std::function<double(double, double)>& fn) {
  Field f = make_field(mesh);
  for (int n = 0; n < mesh.node_count(); ++n) {
    f.v[n] = fn(mesh.node_x(n), mesh.node_y(n));
  }
  return f;
}

Field interpolate(const LimitMesh& mesh,
                  const std::function<double(double)>& fn) {
  Field f = make_field(mesh);
  for (int i = 0; i <= mesh.nx; ++i) f.v[i] = fn(mesh.x[i]);
  return f;
}

void check_field(const ThinMesh& mesh, const Field& u) {
  if (u.mesh_id != mesh.id || u.size() != mesh.node_count()) {
    throw MeshMismatchError("field does not belong to this thin mesh");
  }
}

void check_field(const LimitMesh& mesh, const Field& u) {
  if (u.mesh_id != mesh.id || u.size() != mesh.node_count()) {
    throw MeshMismatchError("field does not belong to this limit mesh");
  }
}

}  // namespace thinlab

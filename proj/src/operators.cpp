#include "thinlab/operators.hpp"

#include <cmath>
#include <vector>

namespace thinlab {

namespace {

// |s|^{p-2} s for scalars, safe at s = 0 for p > 2.
inline double phi_scalar(double s, double p) {
  if (s == 0.0) return 0.0;
  return std::pow(std::abs(s), p - 2.0) * s;
}

// (g . g)^{(p-2)/2} for the vector factor.
inline double grad_coeff(double g2, double p) {
  if (g2 == 0.0) return 0.0;
  return std::pow(g2, 0.5 * (p - 2.0));
}

}  // namespace

DualField apply_A_thin(const ThinMesh& mesh, const Field& u,
                       std::span<const double> wa) {
  check_field(mesh, u);
  if (wa.size() != static_cast<std::size_t>(mesh.node_count())) {
    throw MeshMismatchError("apply_A_thin: weight vector size mismatch");
  }
  const double p = mesh.p;
  DualField out;
  out.mesh_id = mesh.id;
  out.r.assign(mesh.node_count(), 0.0);

  // One-point gradient quadrature per triangle; P1 gradients are constant,
  // so the p-Laplacian term is exact per element.
  const double inv_eps = 1.0 / mesh.epsilon;
  for (const Triangle& t : mesh.tris) {
    double gx = 0.0, gy = 0.0;
    for (int k = 0; k < 3; ++k) {
      gx += u.v[t.v[k]] * t.grad[k][0];
      gy += u.v[t.v[k]] * t.grad[k][1];
    }
    double coeff = grad_coeff(gx * gx + gy * gy, p) * t.area * inv_eps;
    if (coeff != 0.0) {
      for (int k = 0; k < 3; ++k) {
        out.r[t.v[k]] += coeff * (gx * t.grad[k][0] + gy * t.grad[k][1]);
      }
    }
  }

  // Nodally lumped weighted mass term.
  for (int n = 0; n < mesh.node_count(); ++n) {
    out.r[n] += mesh.mass_rho[n] * wa[n] * phi_scalar(u.v[n], p);
  }
  return out;
}

DualField apply_A_thin(const ThinMesh& mesh, const Field& u) {
  return apply_A_thin(mesh, u, mesh.weight_a);
}

DualField apply_A_limit(const LimitMesh& mesh, const Field& u,
                        std::span<const double> wa) {
  check_field(mesh, u);
  if (wa.size() != static_cast<std::size_t>(mesh.node_count())) {
    throw MeshMismatchError("apply_A_limit: weight vector size mismatch");
  }
  const double p = mesh.p;
  DualField out;
  out.mesh_id = mesh.id;
  out.r.assign(mesh.node_count(), 0.0);

  double h = 2.0 * mesh.x_max / mesh.nx;
  for (int e = 0; e < mesh.nx; ++e) {
    double du = (u.v[e + 1] - u.v[e]) / h;
    double flux = mesh.cell_g_int[e] * phi_scalar(du, p) / h;
    out.r[e] -= flux;
    out.r[e + 1] += flux;
  }
  for (int i = 0; i <= mesh.nx; ++i) {
    out.r[i] += mesh.mass_g[i] * wa[i] * phi_scalar(u.v[i], p);
  }
  return out;
}

DualField apply_A_limit(const LimitMesh& mesh, const Field& u) {
  return apply_A_limit(mesh, u, mesh.weight_abar);
}

double pair(const DualField& r, const Field& v) {
  if (r.mesh_id != v.mesh_id || r.size() != v.size()) {
    throw MeshMismatchError("pair: dual field and field live on different "
                            "meshes");
  }
  double s = 0.0;
  for (int i = 0; i < r.size(); ++i) s += r.r[i] * v.v[i];
  return s;
}

Field nemitskii(const Field& u, const NonlinearityF& f) {
  Field out = u;
  for (double& x : out.v) x = f(x);
  return out;
}

Field average_project(const ThinMesh& thin, const Field& u,
                      const LimitMesh& limit) {
  check_field(thin, u);
  if (limit.nx != thin.nx || limit.x != thin.x) {
    throw MeshMismatchError("average_project: meshes do not share the x-grid");
  }
  Field out = make_field(limit);
  for (int i = 0; i <= thin.nx; ++i) {
    // Constant columns short-circuit so M_eps(E_eps u) = u bitwise.
    double first = u.v[thin.node(i, 0)];
    bool constant = true;
    for (int j = 1; j <= thin.nz; ++j) {
      if (u.v[thin.node(i, j)] != first) {
        constant = false;
        break;
      }
    }
    if (constant) {
      out.v[i] = first;
      continue;
    }
    double num = 0.0, den = 0.0;
    for (int j = 0; j <= thin.nz; ++j) {
      num += thin.z_weights[j] * u.v[thin.node(i, j)];
      den += thin.z_weights[j];
    }
    out.v[i] = num / den;
  }
  return out;
}

Field extend(const LimitMesh& limit, const Field& u, const ThinMesh& thin) {
  check_field(limit, u);
  if (limit.nx != thin.nx || limit.x != thin.x) {
    throw MeshMismatchError("extend: meshes do not share the x-grid");
  }
  Field out = make_field(thin);
  for (int i = 0; i <= thin.nx; ++i) {
    for (int j = 0; j <= thin.nz; ++j) out.v[thin.node(i, j)] = u.v[i];
  }
  return out;
}

TartarGap tartar_gap(const ThinMesh& mesh, const Field& u, const Field& v) {
  check_field(mesh, u);
  check_field(mesh, v);
  DualField au = apply_A_thin(mesh, u);
  DualField av = apply_A_thin(mesh, v);
  Field w = u;
  for (int i = 0; i < w.size(); ++i) w.v[i] -= v.v[i];
  DualField diff = au;
  for (int i = 0; i < diff.size(); ++i) diff.r[i] -= av.r[i];
  TartarGap gap;
  gap.pairing = pair(diff, w);
  double lp = 0.0;
  for (int i = 0; i < w.size(); ++i) {
    lp += mesh.mass_rho[i] * std::pow(std::abs(w.v[i]), mesh.p);
  }
  gap.lower_bound = std::pow(2.0, 2.0 - mesh.p) * lp;
  return gap;
}

TartarGap tartar_gap(const LimitMesh& mesh, const Field& u, const Field& v) {
  check_field(mesh, u);
  check_field(mesh, v);
  DualField au = apply_A_limit(mesh, u);
  DualField av = apply_A_limit(mesh, v);
  Field w = u;
  for (int i = 0; i < w.size(); ++i) w.v[i] -= v.v[i];
  DualField diff = au;
  for (int i = 0; i < diff.size(); ++i) diff.r[i] -= av.r[i];
  TartarGap gap;
  gap.pairing = pair(diff, w);
  double lp = 0.0;
  for (int i = 0; i < w.size(); ++i) {
    lp += mesh.mass_g[i] * std::pow(std::abs(w.v[i]), mesh.p);
  }
  gap.lower_bound = std::pow(2.0, 2.0 - mesh.p) * lp;
  return gap;
}

// ---------------------------------------------------------------------------
// Jacobians

Eigen::SparseMatrix<double> assemble_A_jacobian(const ThinMesh& mesh,
                                                const Field& u, double mu) {
  check_field(mesh, u);
  const double p = mesh.p;
  const double mu2 = mu * mu;
  const double inv_eps = 1.0 / mesh.epsilon;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * mesh.tris.size() + mesh.node_count());

  for (const Triangle& t : mesh.tris) {
    double gx = 0.0, gy = 0.0;
    for (int k = 0; k < 3; ++k) {
      gx += u.v[t.v[k]] * t.grad[k][0];
      gy += u.v[t.v[k]] * t.grad[k][1];
    }
    double s = gx * gx + gy * gy + mu2;
    double c1 = std::pow(s, 0.5 * (p - 2.0));
    double c2 = (p - 2.0) * std::pow(s, 0.5 * (p - 4.0));
    double w = t.area * inv_eps;
    for (int k = 0; k < 3; ++k) {
      double gk = gx * t.grad[k][0] + gy * t.grad[k][1];
      for (int l = 0; l < 3; ++l) {
        double gl = gx * t.grad[l][0] + gy * t.grad[l][1];
        double dot =
            t.grad[k][0] * t.grad[l][0] + t.grad[k][1] * t.grad[l][1];
        trips.emplace_back(t.v[k], t.v[l], w * (c1 * dot + c2 * gk * gl));
      }
    }
  }
  for (int n = 0; n < mesh.node_count(); ++n) {
    double d = (p - 1.0) * std::pow(u.v[n] * u.v[n] + mu2, 0.5 * (p - 2.0));
    trips.emplace_back(n, n, mesh.mass_rho[n] * mesh.weight_a[n] * d);
  }

  Eigen::SparseMatrix<double> J(mesh.node_count(), mesh.node_count());
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

Eigen::SparseMatrix<double> assemble_A_jacobian(const LimitMesh& mesh,
                                                const Field& u, double mu) {
  check_field(mesh, u);
  const double p = mesh.p;
  const double mu2 = mu * mu;
  double h = 2.0 * mesh.x_max / mesh.nx;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * mesh.nx + mesh.node_count());

  for (int e = 0; e < mesh.nx; ++e) {
    double du = (u.v[e + 1] - u.v[e]) / h;
    double c = (p - 1.0) * std::pow(du * du + mu2, 0.5 * (p - 2.0));
    double k = mesh.cell_g_int[e] * c / (h * h);
    trips.emplace_back(e, e, k);
    trips.emplace_back(e + 1, e + 1, k);
    trips.emplace_back(e, e + 1, -k);
    trips.emplace_back(e + 1, e, -k);
  }
  for (int i = 0; i <= mesh.nx; ++i) {
    double d = (p - 1.0) * std::pow(u.v[i] * u.v[i] + mu2, 0.5 * (p - 2.0));
    trips.emplace_back(i, i, mesh.mass_g[i] * mesh.weight_abar[i] * d);
  }

  Eigen::SparseMatrix<double> J(mesh.node_count(), mesh.node_count());
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

Eigen::SparseMatrix<double> assemble_A_picard(const ThinMesh& mesh,
                                              const Field& w, double mu) {
  check_field(mesh, w);
  const double p = mesh.p;
  const double mu2 = mu * mu;
  const double inv_eps = 1.0 / mesh.epsilon;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(9 * mesh.tris.size() + mesh.node_count());

  for (const Triangle& t : mesh.tris) {
    double gx = 0.0, gy = 0.0;
    for (int k = 0; k < 3; ++k) {
      gx += w.v[t.v[k]] * t.grad[k][0];
      gy += w.v[t.v[k]] * t.grad[k][1];
    }
    double c1 = std::pow(gx * gx + gy * gy + mu2, 0.5 * (p - 2.0));
    double s = t.area * inv_eps * c1;
    for (int k = 0; k < 3; ++k) {
      for (int l = 0; l < 3; ++l) {
        double dot =
            t.grad[k][0] * t.grad[l][0] + t.grad[k][1] * t.grad[l][1];
        trips.emplace_back(t.v[k], t.v[l], s * dot);
      }
    }
  }
  for (int n = 0; n < mesh.node_count(); ++n) {
    double d = std::pow(w.v[n] * w.v[n] + mu2, 0.5 * (p - 2.0));
    trips.emplace_back(n, n, mesh.mass_rho[n] * mesh.weight_a[n] * d);
  }

  Eigen::SparseMatrix<double> K(mesh.node_count(), mesh.node_count());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

Eigen::SparseMatrix<double> assemble_A_picard(const LimitMesh& mesh,
                                              const Field& w, double mu) {
  check_field(mesh, w);
  const double p = mesh.p;
  const double mu2 = mu * mu;
  double h = 2.0 * mesh.x_max / mesh.nx;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(4 * mesh.nx + mesh.node_count());

  for (int e = 0; e < mesh.nx; ++e) {
    double du = (w.v[e + 1] - w.v[e]) / h;
    double c = std::pow(du * du + mu2, 0.5 * (p - 2.0));
    double k = mesh.cell_g_int[e] * c / (h * h);
    trips.emplace_back(e, e, k);
    trips.emplace_back(e + 1, e + 1, k);
    trips.emplace_back(e, e + 1, -k);
    trips.emplace_back(e + 1, e, -k);
  }
  for (int i = 0; i <= mesh.nx; ++i) {
    double d = std::pow(w.v[i] * w.v[i] + mu2, 0.5 * (p - 2.0));
    trips.emplace_back(i, i, mesh.mass_g[i] * mesh.weight_abar[i] * d);
  }

  Eigen::SparseMatrix<double> K(mesh.node_count(), mesh.node_count());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

// ---------------------------------------------------------------------------
// Limit-residual liftings

DualField lift_limit_residual_assemble(const ThinMesh& thin,
                                       const LimitMesh& limit,
                                       const Field& u_limit) {
  Field lifted = extend(limit, u_limit, thin);
  // E_eps abar as the nodal weight.
  std::vector<double> wa(thin.node_count());
  for (int i = 0; i <= thin.nx; ++i) {
    double ab = limit.weight_abar[i];
    for (int j = 0; j <= thin.nz; ++j) wa[thin.node(i, j)] = ab;
  }
  return apply_A_thin(thin, lifted, wa);
}

DualField lift_limit_residual_extend(const ThinMesh& thin,
                                     const LimitMesh& limit,
                                     const Field& u_limit) {
  DualField r0 = apply_A_limit(limit, u_limit);
  DualField out;
  out.mesh_id = thin.id;
  out.r.assign(thin.node_count(), 0.0);
  // Distribute each 1D residual entry across its column with the lumped
  // mass ratios; column sums match the 1D residual by construction.
  for (int i = 0; i <= thin.nx; ++i) {
    double col_mass = 0.0;
    for (int j = 0; j <= thin.nz; ++j) col_mass += thin.mass_rho[thin.node(i, j)];
    for (int j = 0; j <= thin.nz; ++j) {
      int n = thin.node(i, j);
      out.r[n] = r0.r[i] * thin.mass_rho[n] / col_mass;
    }
  }
  return out;
}

double weight_gap_inf(const ThinMesh& thin) {
  double gap = 0.0;
  for (int i = 0; i <= thin.nx; ++i) {
    double ab = thin.problem ? thin.problem->weight.trace(thin.x[i])
                             : thin.weight_a[thin.node(i, 0)];
    for (int j = 0; j <= thin.nz; ++j) {
      gap = std::max(gap, std::abs(thin.weight_a[thin.node(i, j)] - ab));
    }
  }
  return gap;
}

}  // namespace thinlab

#pragma once

// Discrete monotone operators in weak form and the thin<->limit transfer
// operators.
//
// The thin operator pairs through the rescaled duality: for a field u the
// residual entry r_i is
//
//   r_i = eps^{-1} int_Omega |grad u|^{p-2} grad u . grad phi_i
//         + [lumped] a_i |u_i|^{p-2} u_i m_i / eps,
//
// with one-point gradient quadrature per triangle (exact for P1) and a
// nodally lumped weighted mass term. The lumping makes the duality identity
// <A u, u> = ||u||_E^p and the Tartar lower bound exact at the discrete
// level, not just in the limit.

#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "thinlab/mesh.hpp"

namespace thinlab {

// Weak-form residual against each nodal basis function, already divided by
// eps on thin meshes.
struct DualField {
  std::uint64_t mesh_id = 0;
  std::vector<double> r;

  int size() const { return static_cast<int>(r.size()); }
};

DualField apply_A_thin(const ThinMesh& mesh, const Field& u);
DualField apply_A_limit(const LimitMesh& mesh, const Field& u);

// Same operators with the nodal weight replaced (used to assemble with the
// extended trace weight E_eps abar instead of a).
DualField apply_A_thin(const ThinMesh& mesh, const Field& u,
                       std::span<const double> weight_override);
DualField apply_A_limit(const LimitMesh& mesh, const Field& u,
                        std::span<const double> weight_override);

// Duality pairing <r, v> = sum_i r_i v_i.
double pair(const DualField& r, const Field& v);

// Pointwise superposition (B u)_i = f(u_i).
Field nemitskii(const Field& u, const NonlinearityF& f);

// Average projector M_eps: column average by the z-trapezoid rule. Constant
// columns are returned bitwise unchanged, so M_eps o E_eps is the identity
// exactly.
Field average_project(const ThinMesh& thin, const Field& u,
                      const LimitMesh& limit);

// Extension operator E_eps: (E u)(x_i, y_ij) = u(x_i).
Field extend(const LimitMesh& limit, const Field& u, const ThinMesh& thin);

struct TartarGap {
  double pairing = 0.0;      // <A u - A v, u - v>
  double lower_bound = 0.0;  // 2^{2-p} ||| u - v |||_{L^p}^p
};
TartarGap tartar_gap(const ThinMesh& mesh, const Field& u, const Field& v);
TartarGap tartar_gap(const LimitMesh& mesh, const Field& u, const Field& v);

// Jacobian of A at u with the shifted factor (|grad u|^2 + mu^2)^{(p-2)/2};
// mu > 0 keeps Newton well-conditioned where the operator degenerates.
// Residuals always use mu = 0.
Eigen::SparseMatrix<double> assemble_A_jacobian(const ThinMesh& mesh,
                                                const Field& u, double mu);
Eigen::SparseMatrix<double> assemble_A_jacobian(const LimitMesh& mesh,
                                                const Field& u, double mu);

// Coefficient-frozen (Kachanov) linearization K(w): v -> -div(k(w) grad v)
// + a d(w) v with k = (|grad w|^2 + mu^2)^{(p-2)/2}, d = (w^2 + mu^2)^{(p-2)/2}.
// Note K(w) w = A_mu(w); it drives the fixed-point fallback.
Eigen::SparseMatrix<double> assemble_A_picard(const ThinMesh& mesh,
                                              const Field& w, double mu);
Eigen::SparseMatrix<double> assemble_A_picard(const LimitMesh& mesh,
                                              const Field& w, double mu);

// Two discrete liftings of the limit residual A_0 u onto the thin mesh:
// assemble on the strip from the extended field with weight E_eps abar
// (default route), or extend the 1D residual column-wise with the lumped
// mass ratios. They agree exactly for constant profiles.
DualField lift_limit_residual_assemble(const ThinMesh& thin,
                                       const LimitMesh& limit,
                                       const Field& u_limit);
DualField lift_limit_residual_extend(const ThinMesh& thin,
                                     const LimitMesh& limit,
                                     const Field& u_limit);

// max over thin-mesh nodes of |a - E_eps abar|.
double weight_gap_inf(const ThinMesh& thin);

}  // namespace thinlab

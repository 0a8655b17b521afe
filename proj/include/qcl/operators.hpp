#pragma once

#include <memory>

#include <Eigen/SparseCore>

#include "qcl/grid.hpp"

namespace qcl {

using SparseR = Eigen::SparseMatrix<double>;
using SparseC = Eigen::SparseMatrix<Complex>;

/// Sparse operators of the conservative five-point scheme on one grid.
///
/// Each grid edge ("face") joins nodes a < b. The discrete energy form is
///
///     P(u, phi) = sum_f weight_f * gamma_f * (u_b - u_a) * (phi_b - phi_a),
///
/// with gamma_f the arithmetic mean of the nodal conductivity at a and b and
/// weight_f = hy/hx (x-faces) or hx/hy (y-faces), halved on faces lying on the
/// boundary. The residual R = d/dphi P vanishes at interior nodes for a
/// discrete solution, so P depends on phi only through its boundary values.
struct SchemeOperators {
    Grid2D grid;
    SparseR difference;  ///< faces x nodes, (D u)_f = u_b - u_a
    RVector face_weight;
    SparseR average;     ///< faces x nodes, (M g)_f = (g_a + g_b) / 2
    SparseR grad_x;      ///< nodes x nodes, centered, second-order one-sided at the boundary
    SparseR grad_y;
    SparseR stiffness;   ///< D^T diag(weight) D

    explicit SchemeOperators(const Grid2D& g);

    int face_count() const { return static_cast<int>(face_weight.size()); }

    /// Nodal directional derivative omega . grad u.
    SparseR directional(const Vec2& omega) const { return omega.x() * grad_x + omega.y() * grad_y; }
};

/// Shared, immutable operators per grid (cached by grid size).
std::shared_ptr<const SchemeOperators> scheme_operators(const Grid2D& grid);

/// Discrete energy pairing sum_f w_f g_f (D u)_f (D phi)_f with nodal g averaged to faces.
Complex energy_pairing(const SchemeOperators& ops, const CVector& gamma_nodes, const CVector& u, const CVector& phi);

/// Five-point Laplacian scaled as hx*hy*Delta (interior rows only meaningful).
CVector discrete_laplacian(const SchemeOperators& ops, const CVector& u);

/// Splits interior/boundary unknowns and reassembles full nodal vectors.
CVector gather_interior(const Grid2D& grid, const CVector& full);
CVector scatter_full(const Grid2D& grid, const CVector& interior, const BoundaryValues& boundary);

}  // namespace qcl

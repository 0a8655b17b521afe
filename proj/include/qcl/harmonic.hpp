#pragma once

#include <memory>
#include <optional>

#include <Eigen/SparseCholesky>

#include "qcl/operators.hpp"

namespace qcl {

/// Factorized Dirichlet Laplacian on one grid; reusable across right-hand sides.
class DirichletLaplacian {
public:
    explicit DirichletLaplacian(const Grid2D& grid);

    const Grid2D& grid() const { return grid_; }

    /// Discrete harmonic extension of boundary data g.
    ScalarField solve(const BoundaryValues& g) const;

    /// Solves -Delta w = source in the interior with w = g on the boundary.
    ScalarField solve_poisson(const CVector& source, const BoundaryValues& g) const;

    /// Relative residual of the interior equations for a full nodal vector.
    double relative_residual(const CVector& u, const CVector& source) const;

    /// Solves the interior block K_II x = rhs (rhs already scaled by the cell area).
    CVector solve_interior(const CVector& rhs) const;

private:
    Grid2D grid_;
    std::shared_ptr<const SchemeOperators> ops_;
    SparseR interior_block_;
    SparseR coupling_block_;
    Eigen::SimplicialLDLT<SparseR> factor_;
};

/// Cached factorization per grid size.
std::shared_ptr<const DirichletLaplacian> dirichlet_laplacian(const Grid2D& grid);

/// Five-point solve with residual check (relative residual <= 1e-12).
ScalarField solve_laplace_dirichlet(const Grid2D& grid, const BoundaryValues& g);

/// xi, k real orthonormal; zeta = k + i xi is a null vector.
struct NullPair {
    Vec2 xi;
    Vec2 k;
    CVec2 zeta;
};

/// Builds the null pair for a unit direction; k is xi turned clockwise by 90 degrees.
NullPair null_vector(const Vec2& xi);

enum class CgoSign {
    plus,   ///< exp((1/h) (x - origin) . zeta)
    minus,  ///< exp(-(i/h) (x - origin) . zeta)
};

struct CGOSpec {
    CVec2 zeta;
    double h = 1.0;
    Vec2 origin = Vec2::Zero();
    /// Ramp width of the boundary cutoff; required by corrected_cgo.
    std::optional<double> cutoff_width;
};

constexpr double overflow_exponent_limit = 200.0;

/// Largest |Re exponent| of the CGO exponential over the nodes of the grid.
double max_real_exponent(const Grid2D& grid, const CGOSpec& spec, CgoSign sign);

/// Nodal values of the CGO exponential. Throws OverflowError past the guard.
ScalarField cgo_exponential(const Grid2D& grid, const CGOSpec& spec, CgoSign sign);

/// Piecewise-linear cutoff on the perimeter: 1 on the set, linear ramp of the
/// given width (measured in perimeter arclength), 0 beyond.
RVector cutoff_profile(const BoundarySet& set, double width);

struct CorrectedCgo {
    ScalarField v;  ///< discrete harmonic, zero where the cutoff equals 1
    ScalarField r;  ///< harmonic remainder with boundary data -exp * cutoff
};

/// CGO exponential (minus convention) corrected to vanish on gamma_tilde.
CorrectedCgo corrected_cgo(const Grid2D& grid, const CGOSpec& spec, const BoundarySet& gamma_tilde);

/// max|u| + max of forward-difference quotients.
double c1_surrogate_norm(const ScalarField& field);

/// z = zeta + eta with zeta, eta null vectors near (a gamma, -a conj(gamma)),
/// gamma = (i, 1).
struct FrequencySplit {
    CVec2 z;  ///< stored as zeta + eta, within rounding of the requested z
    double a = 1.0;
    CVec2 zeta;
    CVec2 eta;
    double zeta_residual = 0.0;  ///< |zeta . zeta|
    double eta_residual = 0.0;   ///< |eta . eta|
    int iterations = 0;
};

/// Base point (i, 1) of the splitting in two dimensions.
CVec2 split_base_vector();

/// Newton solve for the splitting, seeded at the base point. Requires
/// |z - 2 i a e1| < 2 epsilon a.
FrequencySplit split_frequency(const CVec2& z, double a, double epsilon);

}  // namespace qcl

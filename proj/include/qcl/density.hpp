#pragma once

#include <iosfwd>
#include <vector>

#include "qcl/harmonic.hpp"

namespace qcl {

/// Closed axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
    double x0 = 0.0;
    double x1 = 1.0;
    double y0 = 0.0;
    double y1 = 1.0;

    bool contains(const Vec2& p, double tol = 1e-12) const {
        return p.x() >= x0 - tol && p.x() <= x1 + tol && p.y() >= y0 - tol && p.y() <= y1 + tol;
    }
};

/// Discrete point density at node n: 1 / (hx hy) there, zero elsewhere.
ScalarField point_source(const Grid2D& grid, int node);

/// w with -Delta w = source in the interior of the unit square, w = 0 on its boundary.
/// Throws if the source touches the closed excluded rectangle.
ScalarField green_potential(const Grid2D& grid, const ScalarField& source, const Rect* excluded = nullptr);

struct RungeProblem {
    Grid2D grid;                 ///< Omega_2 = unit square
    Rect inner;                  ///< Omega_1, sharing part of the bottom edge with Omega_2
    std::vector<int> sources;    ///< node indices in Omega_2 outside closed Omega_1
    ScalarField target;          ///< only the values on Omega_1 are used
    double p = 2.0;

    /// Shared boundary portion as a perimeter arc of Omega_2.
    BoundarySet shared_portion() const;
    void validate() const;
};

/// Omega_1 = [0.25, 0.75] x [0, 0.5] inside the unit square; grid size must be a multiple of 4.
Rect default_inner_rect();

/// Interior nodes at least one cell away from closed inner, in van der Corput order of
/// their row-major index so every prefix is spread over the exterior.
std::vector<int> exterior_sources(const Grid2D& grid, const Rect& inner, int count);

struct RungeHistoryRow {
    int n_sources = 0;
    double p = 2.0;
    double residual = 0.0;  ///< relative discrete W^{1,p}(Omega_1) error
};

struct RungeResult {
    CVector weights;  ///< for the full dictionary
    std::vector<RungeHistoryRow> history;
};

/// Discrete W^{1,p}(Omega_1) norm: p-norm of node values and forward differences, cell-weighted.
double w1p_norm(const Grid2D& grid, const Rect& inner, const CVector& values, double p);

/// Fits sum_s w_s G(delta_s) to the target on Omega_1 over nested dictionary prefixes.
/// Prefix sizes default to 8, 16, 32, ... up to the dictionary size.
RungeResult runge_approximate(const RungeProblem& problem, std::vector<int> prefix_sizes = {});

void write_runge_csv(std::ostream& os, const std::vector<RungeHistoryRow>& rows);

/// Compactly supported bump (1 - r^2/rho^2)^4 centered at distance d + rho from the edge x1 = 1, at height 0.5.
ScalarField edge_bump(const Grid2D& grid, double distance, double rho = 0.1);

/// int f(x) exp(-(m i / h) (x - origin) . z) dx by the trapezoidal rule, with origin on the
/// distinguished edge x1 = 1. Requires split_frequency(z, a, epsilon) to succeed.
Complex local_identity_probe(const ScalarField& f, const CVec2& z, double a, double h, int m = 2,
                             double epsilon = 0.1, const Vec2& origin = Vec2(1.0, 0.5));

struct DecayRow {
    double h = 0.0;
    Complex value;
};

struct DecayFit {
    std::vector<DecayRow> rows;
    double rate = 0.0;       ///< minus the slope of log|value| against 1/h
    double intercept = 0.0;
};

DecayFit decay_sweep(const ScalarField& f, const CVec2& z, double a, const std::vector<double>& hs, int m = 2,
                     double epsilon = 0.1);

/// Writes `h,value_re,value_im,log_abs`.
void write_decay_csv(std::ostream& os, const DecayFit& fit);

struct RemainderRow {
    double h = 0.0;
    double r_norm = 0.0;    ///< C^1 surrogate norm of the remainder
    double envelope = 0.0;  ///< (1 + |zeta|^kappa / h^kappa) exp(-(c/h) Im zeta_1) exp((1/h) |Im zeta_2|)
    double ratio = 0.0;     ///< r_norm / (constant * envelope)
};

struct RemainderSweep {
    std::vector<RemainderRow> rows;
    double kappa = 0.0;
    double constant = 1.0;
};

/// Remainder of the corrected CGO exp(-(i/h)(x - origin) . zeta), zeta = (ia, a),
/// origin (1, 0.5), vanishing on gamma_tilde = {x1 <= 1 - 2c} with cutoff ramp width c.
/// kappa in [0, 4] and the constant are fitted by log-least-squares.
RemainderSweep remainder_sweep(const Grid2D& grid, double a, double c, const std::vector<double>& hs);

/// Boundary portion {x1 <= 1 - 2c} of the unit square.
BoundarySet left_of(const Grid2D& grid, double c);

/// Writes `h,r_norm,envelope,ratio`.
void write_remainder_csv(std::ostream& os, const RemainderSweep& sweep);

}  // namespace qcl

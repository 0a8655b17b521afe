#include "qcl/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

namespace qcl {

namespace {

SparseR selection(const Grid2D& grid, const std::vector<int>& nodes) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) t.emplace_back(static_cast<int>(k), nodes[k], 1.0);
    SparseR s(static_cast<Eigen::Index>(nodes.size()), grid.node_count());
    s.setFromTriplets(t.begin(), t.end());
    return s;
}

Complex exponent_at(const Vec2& x, const CGOSpec& spec, CgoSign sign) {
    const CVec2 d = (x - spec.origin).cast<Complex>();
    const Complex xz = bdot(d, spec.zeta) / spec.h;
    return sign == CgoSign::plus ? xz : Complex(0.0, -1.0) * xz;
}

}  // namespace

DirichletLaplacian::DirichletLaplacian(const Grid2D& grid)
    : grid_(grid), ops_(scheme_operators(grid)) {
    const SparseR si = selection(grid, grid.interior_nodes());
    const SparseR sb = selection(grid, grid.boundary_nodes());
    interior_block_ = si * ops_->stiffness * si.transpose();
    coupling_block_ = si * ops_->stiffness * sb.transpose();
    factor_.compute(interior_block_);
    if (factor_.info() != Eigen::Success) {
        throw SolverError("Laplacian factorization failed");
    }
}

CVector DirichletLaplacian::solve_interior(const CVector& rhs) const {
    const RVector re = factor_.solve(RVector(rhs.real()));
    const RVector im = factor_.solve(RVector(rhs.imag()));
    if (factor_.info() != Eigen::Success) throw SolverError("Laplacian solve failed");
    CVector out(rhs.size());
    out.real() = re;
    out.imag() = im;
    return out;
}

ScalarField DirichletLaplacian::solve(const BoundaryValues& g) const {
    return solve_poisson(CVector::Zero(grid_.node_count()), g);
}

ScalarField DirichletLaplacian::solve_poisson(const CVector& source, const BoundaryValues& g) const {
    if (g.size() != grid_.boundary_count()) throw std::invalid_argument("boundary data length mismatch");
    if (source.size() != grid_.node_count()) throw std::invalid_argument("source length mismatch");
    const double cell = grid_.hx() * grid_.hy();
    const CVector rhs = cell * gather_interior(grid_, source) - coupling_block_.cast<Complex>() * g;
    const CVector x = solve_interior(rhs);
    ScalarField out(grid_, scatter_full(grid_, x, g));
    const double res = relative_residual(out.values, source);
    if (!(res <= 1e-12)) {
        throw SolverError("Laplace solve residual " + format_double(res) + " above tolerance");
    }
    return out;
}

double DirichletLaplacian::relative_residual(const CVector& u, const CVector& source) const {
    const double cell = grid_.hx() * grid_.hy();
    const CVector ku = ops_->stiffness.cast<Complex>() * u;
    double num = 0.0;
    double scale = 0.0;
    for (int n : grid_.interior_nodes()) {
        num = std::max(num, std::abs(ku(n) - cell * source(n)));
        scale = std::max(scale, std::abs(cell * source(n)));
    }
    // Scale by the diagonal contribution of the solution itself.
    const double diag = ops_->stiffness.coeff(grid_.index(1, 1), grid_.index(1, 1));
    scale = std::max(scale, diag * u.cwiseAbs().maxCoeff());
    return scale > 0.0 ? num / scale : num;
}

std::shared_ptr<const DirichletLaplacian> dirichlet_laplacian(const Grid2D& grid) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const DirichletLaplacian>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[{grid.nx(), grid.ny()}];
    if (!slot) slot = std::make_shared<const DirichletLaplacian>(grid);
    return slot;
}

ScalarField solve_laplace_dirichlet(const Grid2D& grid, const BoundaryValues& g) {
    return dirichlet_laplacian(grid)->solve(g);
}

NullPair null_vector(const Vec2& xi) {
    if (std::abs(xi.norm() - 1.0) > 1e-12) throw std::invalid_argument("xi must be a unit vector");
    NullPair pair;
    pair.xi = xi;
    pair.k = Vec2(xi.y(), -xi.x());
    pair.zeta = pair.k.cast<Complex>() + Complex(0.0, 1.0) * xi.cast<Complex>();
    return pair;
}

double max_real_exponent(const Grid2D& grid, const CGOSpec& spec, CgoSign sign) {
    if (!(spec.h > 0.0)) throw std::invalid_argument("CGO scale h must be positive");
    // The real part is affine in x, so the extremes sit at the corners.
    double worst = 0.0;
    for (int n : {grid.index(0, 0), grid.index(grid.nx(), 0), grid.index(0, grid.ny()),
                  grid.index(grid.nx(), grid.ny())}) {
        worst = std::max(worst, std::abs(exponent_at(grid.point(n), spec, sign).real()));
    }
    return worst;
}

ScalarField cgo_exponential(const Grid2D& grid, const CGOSpec& spec, CgoSign sign) {
    if (std::abs(bdot(spec.zeta, spec.zeta)) > 1e-12 * std::max(1.0, spec.zeta.squaredNorm())) {
        throw std::invalid_argument("zeta is not a null vector");
    }
    const double worst = max_real_exponent(grid, spec, sign);
    if (worst > overflow_exponent_limit) {
        throw OverflowError("CGO exponent " + format_double(worst) + " exceeds guard 200");
    }
    ScalarField out(grid);
    for (int n = 0; n < grid.node_count(); ++n) out[n] = std::exp(exponent_at(grid.point(n), spec, sign));
    return out;
}

RVector cutoff_profile(const BoundarySet& set, double width) {
    if (width < 0.0) throw std::invalid_argument("cutoff width must be nonnegative");
    const Grid2D& grid = set.grid();
    RVector chi = RVector::Zero(grid.boundary_count());
    if (set.empty()) return chi;
    for (int p = 0; p < grid.boundary_count(); ++p) {
        if (set.contains_position(p)) {
            chi(p) = 1.0;
            continue;
        }
        if (width == 0.0) continue;
        const double s = grid.perimeter_coordinate(p);
        double d = 4.0;
        for (int q : set.positions()) {
            const double raw = std::abs(s - grid.perimeter_coordinate(q));
            d = std::min(d, std::min(raw, 4.0 - raw));
        }
        chi(p) = std::max(0.0, 1.0 - d / width);
    }
    return chi;
}

CorrectedCgo corrected_cgo(const Grid2D& grid, const CGOSpec& spec, const BoundarySet& gamma_tilde) {
    if (!spec.cutoff_width) throw std::invalid_argument("corrected CGO needs a cutoff width");
    if (gamma_tilde.grid() != grid) throw std::invalid_argument("boundary set on a different grid");
    const ScalarField e = cgo_exponential(grid, spec, CgoSign::minus);
    const RVector chi = cutoff_profile(gamma_tilde, *spec.cutoff_width);
    const BoundaryValues trace = boundary_trace(e);
    const BoundaryValues r_data = -(trace.array() * chi.cast<Complex>().array()).matrix();
    BoundaryValues v_data = (trace.array() * (1.0 - chi.array()).cast<Complex>()).matrix();
    // Exact zeros on the plateau.
    for (int p = 0; p < grid.boundary_count(); ++p) {
        if (chi(p) == 1.0) v_data(p) = 0.0;
    }
    const auto lap = dirichlet_laplacian(grid);
    return {lap->solve(v_data), lap->solve(r_data)};
}

double c1_surrogate_norm(const ScalarField& field) {
    const Grid2D& g = field.grid;
    double value = field.values.cwiseAbs().maxCoeff();
    double slope = 0.0;
    for (int j = 0; j <= g.ny(); ++j) {
        for (int i = 0; i <= g.nx(); ++i) {
            if (i < g.nx()) slope = std::max(slope, std::abs(field.at(i + 1, j) - field.at(i, j)) / g.hx());
            if (j < g.ny()) slope = std::max(slope, std::abs(field.at(i, j + 1) - field.at(i, j)) / g.hy());
        }
    }
    return value + slope;
}

CVec2 split_base_vector() { return CVec2(Complex(0.0, 1.0), Complex(1.0, 0.0)); }

FrequencySplit split_frequency(const CVec2& z, double a, double epsilon) {
    if (!(a > 0.0) || !(epsilon > 0.0)) throw std::invalid_argument("split scale and radius must be positive");
    const CVec2 center(Complex(0.0, 2.0 * a), Complex(0.0, 0.0));
    if (!((z - center).norm() < 2.0 * epsilon * a)) {
        throw std::invalid_argument("z outside the admissible ball |z - 2ia e1| < 2 eps a");
    }
    const CVec2 base = split_base_vector();
    FrequencySplit out;
    out.z = z;
    out.a = a;
    CVec2 zeta = a * base;
    const double tol = 1e-15 * a * a;
    bool converged = false;
    for (int it = 0; it <= 50; ++it) {
        const CVec2 eta = z - zeta;
        const Eigen::Vector2cd residual(bdot(zeta, zeta), bdot(eta, eta));
        out.iterations = it;
        if (residual.cwiseAbs().maxCoeff() <= tol) {
            converged = true;
            break;
        }
        Eigen::Matrix2cd jac;
        jac << 2.0 * zeta(0), 2.0 * zeta(1), -2.0 * eta(0), -2.0 * eta(1);
        const Eigen::PartialPivLU<Eigen::Matrix2cd> lu(jac);
        if (!(std::abs(lu.determinant()) > 1e-300)) break;
        zeta -= lu.solve(residual);
    }
    out.zeta = zeta;
    out.eta = z - zeta;
    out.z = out.zeta + out.eta;
    out.zeta_residual = std::abs(bdot(out.zeta, out.zeta));
    out.eta_residual = std::abs(bdot(out.eta, out.eta));
    const bool small = out.zeta_residual <= 1e-10 * a * a && out.eta_residual <= 1e-10 * a * a;
    const bool open = out.zeta(0).imag() > a / 2.0 && out.eta(0).imag() > a / 2.0 &&
                      std::abs(bdot(out.zeta, out.eta)) >= a * a;
    if (!(converged || small) || !open) {
        throw SolverError("frequency split: outside admissible neighborhood");
    }
    return out;
}

}  // namespace qcl

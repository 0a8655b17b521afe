#include "qcl/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Dense>

namespace qcl {

namespace {

using CMatrix = Eigen::MatrixXcd;

bool on_grid_line(double v, double h) { return std::abs(v / h - std::round(v / h)) < 1e-9; }

double van_der_corput(unsigned k) {
    double out = 0.0;
    double scale = 0.5;
    for (; k; k >>= 1, scale *= 0.5) {
        if (k & 1u) out += scale;
    }
    return out;
}

// Rows of the discrete W^{1,p}(Omega_1) surrogate: node values, then x- and y-forward differences.
struct SobolevRows {
    std::vector<int> nodes;
    std::vector<std::pair<int, int>> diffs;  // (from, to)
    std::vector<double> diff_scale;          // 1 / spacing
    double weight = 0.0;                     // cell area

    Eigen::Index size() const { return static_cast<Eigen::Index>(nodes.size() + diffs.size()); }

    template <typename Derived>
    CMatrix apply(const Eigen::MatrixBase<Derived>& values) const {
        CMatrix out(size(), values.cols());
        for (std::size_t r = 0; r < nodes.size(); ++r) out.row(r) = values.row(nodes[r]);
        for (std::size_t d = 0; d < diffs.size(); ++d) {
            out.row(nodes.size() + d) =
                (values.row(diffs[d].second) - values.row(diffs[d].first)) * diff_scale[d];
        }
        return out;
    }
};

SobolevRows sobolev_rows(const Grid2D& grid, const Rect& inner) {
    SobolevRows rows;
    rows.weight = grid.hx() * grid.hy();
    auto inside = [&](int i, int j) {
        return i >= 0 && j >= 0 && i <= grid.nx() && j <= grid.ny() && inner.contains(grid.point(grid.index(i, j)));
    };
    for (int j = 0; j <= grid.ny(); ++j) {
        for (int i = 0; i <= grid.nx(); ++i) {
            if (!inside(i, j)) continue;
            const int n = grid.index(i, j);
            rows.nodes.push_back(n);
            if (inside(i + 1, j)) {
                rows.diffs.emplace_back(n, grid.index(i + 1, j));
                rows.diff_scale.push_back(1.0 / grid.hx());
            }
            if (inside(i, j + 1)) {
                rows.diffs.emplace_back(n, grid.index(i, j + 1));
                rows.diff_scale.push_back(1.0 / grid.hy());
            }
        }
    }
    return rows;
}

double p_norm(const CVector& r, double weight, double p) {
    return std::pow(weight * r.cwiseAbs().array().pow(p).sum(), 1.0 / p);
}

// Minimizes sum_i rho_i |B c - b|_i^2 with the minimum-norm solution.
CVector weighted_least_squares(const CMatrix& b_mat, const CVector& b, const RVector& rho) {
    const RVector s = rho.cwiseSqrt();
    const CMatrix a = s.cast<Complex>().asDiagonal() * b_mat;
    const CVector rhs = (s.cast<Complex>().array() * b.array()).matrix();
    return a.completeOrthogonalDecomposition().solve(rhs);
}

CVector fit_prefix(const CMatrix& b_mat, const CVector& b, double p, const CVector& start) {
    const RVector ones = RVector::Ones(b.size());
    if (p == 2.0) return weighted_least_squares(b_mat, b, ones);
    // Damped IRLS with step 1/(p-1).
    const double theta = 1.0 / (p - 1.0);
    CVector c = start.size() == b_mat.cols() ? start : weighted_least_squares(b_mat, b, ones);
    for (int it = 0; it < 100; ++it) {
        const CVector r = b_mat * c - b;
        const double rmax = r.cwiseAbs().maxCoeff();
        if (rmax == 0.0) break;
        const RVector rho = r.cwiseAbs().array().pow(p - 2.0).max(std::pow(1e-8 * rmax, p - 2.0)).matrix();
        const CVector next = weighted_least_squares(b_mat, b, rho);
        const CVector updated = theta * next + (1.0 - theta) * c;
        const double change = (updated - c).norm();
        c = updated;
        if (change <= 1e-12 * std::max(1.0, c.norm())) break;
    }
    return c;
}

}  // namespace

ScalarField point_source(const Grid2D& grid, int node) {
    if (node < 0 || node >= grid.node_count()) throw std::out_of_range("source node outside the grid");
    ScalarField out(grid);
    out[node] = 1.0 / (grid.hx() * grid.hy());
    return out;
}

ScalarField green_potential(const Grid2D& grid, const ScalarField& source, const Rect* excluded) {
    if (source.grid != grid) throw std::invalid_argument("source on a different grid");
    if (excluded) {
        for (int n = 0; n < grid.node_count(); ++n) {
            if (source[n] != Complex(0.0) && excluded->contains(grid.point(n))) {
                throw std::invalid_argument("source touches the closed inner domain");
            }
        }
    }
    return dirichlet_laplacian(grid)->solve_poisson(source.values, BoundaryValues::Zero(grid.boundary_count()));
}

Rect default_inner_rect() { return Rect{0.25, 0.75, 0.0, 0.5}; }

BoundarySet RungeProblem::shared_portion() const { return boundary_arc(grid, {{inner.x0, inner.x1}}); }

void RungeProblem::validate() const {
    if (!(inner.y0 == 0.0 && inner.x0 > 0.0 && inner.x1 < 1.0 && inner.y1 < 1.0 && inner.x0 < inner.x1 &&
          inner.y0 < inner.y1)) {
        throw std::invalid_argument("inner rectangle must sit on the bottom edge strictly inside the square");
    }
    for (double v : {inner.x0, inner.x1}) {
        if (!on_grid_line(v, grid.hx())) throw std::invalid_argument("inner rectangle not aligned with the grid");
    }
    if (!on_grid_line(inner.y1, grid.hy())) throw std::invalid_argument("inner rectangle not aligned with the grid");
    if (!(p >= 2.0)) throw std::invalid_argument("integrability exponent p must be >= 2");
    if (sources.empty()) throw std::invalid_argument("empty source dictionary");
    if (target.grid != grid) throw std::invalid_argument("target on a different grid");
    for (int s : sources) {
        if (s < 0 || s >= grid.node_count() || grid.is_boundary(s) || inner.contains(grid.point(s))) {
            throw std::invalid_argument("source node not in the open exterior of the inner domain");
        }
    }
    double scale = 0.0;
    for (int n = 0; n < grid.node_count(); ++n) {
        if (inner.contains(grid.point(n))) scale = std::max(scale, std::abs(target[n]));
    }
    for (int n : shared_portion().nodes()) {
        if (std::abs(target[n]) > 1e-12 * std::max(scale, 1.0)) {
            throw std::invalid_argument("target does not vanish on the shared boundary portion");
        }
    }
    const CVector lap = discrete_laplacian(*scheme_operators(grid), target.values);
    const double cell = grid.hx() * grid.hy();
    for (int n = 0; n < grid.node_count(); ++n) {
        const Vec2 x = grid.point(n);
        const bool interior = x.x() > inner.x0 + 1e-12 && x.x() < inner.x1 - 1e-12 && x.y() > inner.y0 + 1e-12 &&
                              x.y() < inner.y1 - 1e-12;
        if (interior && std::abs(lap(n)) > 1e-8 * std::max(scale, 1.0) * cell / (grid.hx() * grid.hx())) {
            throw std::invalid_argument("target is not discrete harmonic on the inner domain");
        }
    }
}

std::vector<int> exterior_sources(const Grid2D& grid, const Rect& inner, int count) {
    const Rect margin{inner.x0 - grid.hx(), inner.x1 + grid.hx(), inner.y0 - grid.hy(), inner.y1 + grid.hy()};
    std::vector<int> candidates;
    for (int n : grid.interior_nodes()) {
        if (!margin.contains(grid.point(n))) candidates.push_back(n);
    }
    std::sort(candidates.begin(), candidates.end());
    if (count > static_cast<int>(candidates.size())) {
        throw std::invalid_argument("grid too coarse for " + std::to_string(count) + " exterior sources");
    }
    std::vector<char> used(candidates.size(), 0);
    std::vector<int> out;
    const std::size_t m = candidates.size();
    for (unsigned k = 0; static_cast<int>(out.size()) < count && k < 64 * m; ++k) {
        const std::size_t idx = std::min(m - 1, static_cast<std::size_t>(van_der_corput(k) * m));
        if (used[idx]) continue;
        used[idx] = 1;
        out.push_back(candidates[idx]);
    }
    for (std::size_t idx = 0; static_cast<int>(out.size()) < count && idx < m; ++idx) {
        if (!used[idx]) out.push_back(candidates[idx]);
    }
    return out;
}

double w1p_norm(const Grid2D& grid, const Rect& inner, const CVector& values, double p) {
    const SobolevRows rows = sobolev_rows(grid, inner);
    return p_norm(rows.apply(values), rows.weight, p);
}

RungeResult runge_approximate(const RungeProblem& problem, std::vector<int> prefix_sizes) {
    problem.validate();
    const Grid2D& grid = problem.grid;
    const int total = static_cast<int>(problem.sources.size());
    if (prefix_sizes.empty()) {
        for (int n = 8; n < total; n *= 2) prefix_sizes.push_back(n);
        prefix_sizes.push_back(total);
    }
    for (std::size_t i = 0; i < prefix_sizes.size(); ++i) {
        if (prefix_sizes[i] < 1 || prefix_sizes[i] > total || (i > 0 && prefix_sizes[i] <= prefix_sizes[i - 1])) {
            throw std::invalid_argument("prefix sizes must increase within the dictionary size");
        }
    }

    CMatrix potentials(grid.node_count(), total);
    for (int s = 0; s < total; ++s) {
        potentials.col(s) = green_potential(grid, point_source(grid, problem.sources[s]), &problem.inner).values;
    }
    const SobolevRows rows = sobolev_rows(grid, problem.inner);
    const CMatrix b_full = rows.apply(potentials);
    const CVector b = rows.apply(problem.target.values);
    const double target_norm = p_norm(b, rows.weight, problem.p);
    if (target_norm == 0.0) throw std::invalid_argument("target vanishes on the inner domain");

    RungeResult out;
    CVector best = CVector::Zero(0);
    double best_res = std::numeric_limits<double>::infinity();
    for (int n : prefix_sizes) {
        const CMatrix b_mat = b_full.leftCols(n);
        CVector start = CVector::Zero(n);
        start.head(best.size()) = best;
        CVector c = fit_prefix(b_mat, b, problem.p, start);
        const double res = p_norm(b_mat * c - b, rows.weight, problem.p) / target_norm;
        if (res <= best_res) {
            best = c;
            best_res = res;
        } else {
            best = start;
        }
        out.history.push_back({n, problem.p, best_res});
    }
    out.weights = CVector::Zero(total);
    out.weights.head(best.size()) = best;
    return out;
}

void write_runge_csv(std::ostream& os, const std::vector<RungeHistoryRow>& rows) {
    os << "n_sources,p,residual\n";
    for (const auto& r : rows) os << r.n_sources << ',' << format_double(r.p) << ',' << format_double(r.residual) << '\n';
}

ScalarField edge_bump(const Grid2D& grid, double distance, double rho) {
    if (!(rho > 0.0) || distance < 0.0 || distance + 2.0 * rho > 1.0) {
        throw std::invalid_argument("bump does not fit inside the square");
    }
    const Vec2 center(1.0 - distance - rho, 0.5);
    return sample_field(grid, [&](double x, double y) -> Complex {
        const double q = ((Vec2(x, y) - center).squaredNorm()) / (rho * rho);
        return q < 1.0 ? std::pow(1.0 - q, 4) : 0.0;
    });
}

Complex local_identity_probe(const ScalarField& f, const CVec2& z, double a, double h, int m, double epsilon,
                             const Vec2& origin) {
    if (!(h > 0.0)) throw std::invalid_argument("semiclassical parameter h must be positive");
    split_frequency(z, a, epsilon);
    const Grid2D& grid = f.grid;
    const RVector& w = grid.quadrature_weights();
    const Complex scale(0.0, -static_cast<double>(m) / h);
    Complex sum = 0.0;
    for (int n = 0; n < grid.node_count(); ++n) {
        if (f[n] == Complex(0.0)) continue;
        const Vec2 x = grid.point(n) - origin;
        sum += w(n) * f[n] * std::exp(scale * bdot(x.cast<Complex>(), z));
    }
    return sum;
}

DecayFit decay_sweep(const ScalarField& f, const CVec2& z, double a, const std::vector<double>& hs, int m,
                     double epsilon) {
    if (hs.size() < 2) throw std::invalid_argument("decay fit needs at least two h values");
    DecayFit fit;
    Eigen::MatrixXd design(hs.size(), 2);
    RVector logs(hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const Complex v = local_identity_probe(f, z, a, hs[i], m, epsilon);
        fit.rows.push_back({hs[i], v});
        if (v == Complex(0.0)) throw std::invalid_argument("probe vanished; no decay rate to fit");
        design(i, 0) = 1.0;
        design(i, 1) = 1.0 / hs[i];
        logs(i) = std::log(std::abs(v));
    }
    const RVector coef = design.colPivHouseholderQr().solve(logs);
    fit.intercept = coef(0);
    fit.rate = -coef(1);
    return fit;
}

void write_decay_csv(std::ostream& os, const DecayFit& fit) {
    os << "h,value_re,value_im,log_abs\n";
    for (const auto& r : fit.rows) {
        os << format_double(r.h) << ',' << format_double(r.value.real()) << ',' << format_double(r.value.imag()) << ','
           << format_double(std::log(std::abs(r.value))) << '\n';
    }
}

BoundarySet left_of(const Grid2D& grid, double c) {
    if (!(c > 0.0 && c < 0.5)) throw std::invalid_argument("need 0 < c < 1/2");
    return boundary_arc(grid, {{0.0, 1.0 - 2.0 * c}, {2.0 + 2.0 * c, 4.0}});
}

RemainderSweep remainder_sweep(const Grid2D& grid, double a, double c, const std::vector<double>& hs) {
    if (hs.size() < 2) throw std::invalid_argument("remainder fit needs at least two h values");
    if (!(a > 0.0)) throw std::invalid_argument("frequency scale a must be positive");
    const CVec2 zeta(Complex(0.0, a), Complex(a, 0.0));
    const double zeta_abs = zeta.norm();
    const BoundarySet gamma_tilde = left_of(grid, c);

    RemainderSweep sweep;
    std::vector<double> base;
    for (double h : hs) {
        const CGOSpec spec{zeta, h, Vec2(1.0, 0.5), c};
        const CorrectedCgo cgo = corrected_cgo(grid, spec, gamma_tilde);
        RemainderRow row;
        row.h = h;
        row.r_norm = c1_surrogate_norm(cgo.r);
        sweep.rows.push_back(row);
        base.push_back(std::exp(-(c / h) * zeta(0).imag() + std::abs(zeta(1).imag()) / h));
    }

    auto envelope = [&](std::size_t i, double kappa) {
        return (1.0 + std::pow(zeta_abs / hs[i], kappa)) * base[i];
    };
    double best_sse = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= 4000; ++step) {
        const double kappa = 1e-3 * step;
        double mean = 0.0;
        std::vector<double> d(hs.size());
        for (std::size_t i = 0; i < hs.size(); ++i) {
            d[i] = std::log(sweep.rows[i].r_norm) - std::log(envelope(i, kappa));
            mean += d[i];
        }
        mean /= static_cast<double>(hs.size());
        double sse = 0.0;
        for (double v : d) sse += (v - mean) * (v - mean);
        if (sse < best_sse) {
            best_sse = sse;
            sweep.kappa = kappa;
            sweep.constant = std::exp(mean);
        }
    }
    for (std::size_t i = 0; i < hs.size(); ++i) {
        sweep.rows[i].envelope = envelope(i, sweep.kappa);
        sweep.rows[i].ratio = sweep.rows[i].r_norm / (sweep.constant * sweep.rows[i].envelope);
    }
    return sweep;
}

void write_remainder_csv(std::ostream& os, const RemainderSweep& sweep) {
    os << "h,r_norm,envelope,ratio\n";
    for (const auto& r : sweep.rows) {
        os << format_double(r.h) << ',' << format_double(r.r_norm) << ',' << format_double(r.envelope) << ','
           << format_double(r.ratio) << '\n';
    }
}

}  // namespace qcl

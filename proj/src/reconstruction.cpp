#include "qcl/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>

namespace qcl {

namespace {

using CMatrix = Eigen::MatrixXcd;

constexpr double degenerate_direction = 1e-6;
constexpr double calibration_threshold = 0.25;
constexpr double min_direction_weight = 0.1;

CGOSpec input_spec(const NullPair& pair, double h) { return CGOSpec{pair.zeta, h, Vec2::Zero(), std::nullopt}; }

CGOSpec test_spec(const NullPair& pair, double h, int m) {
    const CVec2 dir = -pair.k.cast<Complex>() + Complex(0.0, 1.0) * pair.xi.cast<Complex>();
    return CGOSpec{static_cast<double>(m) * dir, h, Vec2::Zero(), std::nullopt};
}

// E(s, n) = exp(i k_s . x_n)
CMatrix exponential_matrix(const Grid2D& grid, const std::vector<Vec2>& frequencies) {
    CMatrix e(frequencies.size(), grid.node_count());
    for (int n = 0; n < grid.node_count(); ++n) {
        const Vec2 x = grid.point(n);
        for (std::size_t s = 0; s < frequencies.size(); ++s) {
            e(s, n) = std::exp(Complex(0.0, frequencies[s].dot(x)));
        }
    }
    return e;
}

CMatrix gram_matrix(const Grid2D& grid, const CMatrix& e) {
    const RVector& w = grid.quadrature_weights();
    return e * w.cast<Complex>().asDiagonal() * e.adjoint();
}

CVector pseudo_solve(const CMatrix& gram, const CVector& y) {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram);
    const RVector& ev = eig.eigenvalues();
    const double cutoff = 1e-10 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    CVector coeff = eig.eigenvectors().adjoint() * y;
    for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff(i) = ev(i) > cutoff ? coeff(i) / ev(i) : Complex(0.0);
    return eig.eigenvectors() * coeff;
}

bool same_frequency(const Vec2& a, const Vec2& b) {
    return (a - b).norm() <= 1e-9 * std::max(1.0, std::max(a.norm(), b.norm()));
}

double angle_of(const Vec2& v) {
    double a = std::atan2(v.y(), v.x());
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    return a;
}

ScalarField builtin_target(const Grid2D& grid) {
    return gaussian_bump(grid, Vec2(0.5, 0.5), 40.0, 0.3);
}

void append_estimate(ConductivityModel& surrogate, int m, const ScalarField& estimate) {
    if (surrogate.kind() == ModelKind::quasilinear) {
        surrogate.set_coefficient(0, m - 1, estimate);
    } else {
        surrogate.set_semilinear_coefficient(m - 1, estimate);
    }
}

}  // namespace

DtnOracle simulated_oracle(ConductivityModel model, SolveOptions options) {
    return [model = std::move(model), options](const MultilinearRequest& request) {
        return multilinear_form(model, request, options);
    };
}

double family_exponent(const NullPair& pair, double h, int m) {
    // Corners of the unit square bound |Re exponent| of both exponentials.
    double worst = 0.0;
    for (double x : {0.0, 1.0}) {
        for (double y : {0.0, 1.0}) {
            const double kx = std::abs(pair.k.dot(Vec2(x, y)));
            worst = std::max(worst, static_cast<double>(m) * kx / h);
        }
    }
    return worst;
}

CgoFamily cgo_boundary_family(const Grid2D& grid, const NullPair& pair, double h, int m) {
    if (m < 1) throw std::invalid_argument("linearization order m must be >= 1");
    if (!(h > 0.0)) throw std::invalid_argument("semiclassical parameter h must be positive");
    const BoundaryValues f = boundary_trace(cgo_exponential(grid, input_spec(pair, h), CgoSign::plus));
    CgoFamily out;
    out.f.assign(m, f);
    out.f_test = boundary_trace(cgo_exponential(grid, test_spec(pair, h, m), CgoSign::plus));
    return out;
}

Complex cgo_normalization(ModelKind kind, const Vec2& omega, const NullPair& pair, double h, int m) {
    const double base = static_cast<double>(m) * m * -2.0;
    if (kind == ModelKind::semilinear) return base / (h * h);
    const Complex oz = bdot(omega.cast<Complex>(), pair.zeta);
    if (std::abs(oz) < degenerate_direction) {
        throw std::invalid_argument("degenerate direction: |omega . zeta| below " + format_double(degenerate_direction));
    }
    return base * std::pow(oz, m - 1) / std::pow(h, m + 1);
}

FrequencySample fourier_sample(const DtnOracle& oracle, const ConductivityModel& surrogate, int m, Complex lambda,
                               const NullPair& pair, double h, const SamplerOptions& options) {
    if (m < 2) throw std::invalid_argument("coefficient recovery needs m >= 2");
    if (options.sign != 1 && options.sign != -1) throw std::invalid_argument("sign must be +1 or -1");
    const Complex norm = cgo_normalization(surrogate.kind(), surrogate.omega(), pair, h, m);
    const CgoFamily family = cgo_boundary_family(surrogate.grid(), pair, h, m);

    MultilinearRequest request;
    request.m = m;
    request.lambda = lambda;
    request.f = family.f;
    request.f_test = family.f_test;
    request.stencil = default_stencil(request.f, options.solve.delta);
    request.stencil.levels = options.richardson_levels;

    const Complex measured = oracle(request).value;
    const Complex modeled = multilinear_form(surrogate, request, options.solve).value;

    FrequencySample s;
    s.m = m;
    s.lambda = lambda;
    s.h = h;
    s.xi = pair.xi;
    s.k = pair.k;
    s.raw_form = measured - modeled;
    s.fourier_value = static_cast<double>(options.sign) * s.raw_form / norm;
    return s;
}

int calibrate_sign(int m, int grid_size, ModelKind kind) {
    const Grid2D grid(grid_size, grid_size);
    const ScalarField target = builtin_target(grid);
    const Vec2 omega(0.6, 0.8);
    ConductivityModel truth(kind, grid, omega);
    append_estimate(truth, m, target);
    const ConductivityModel surrogate(kind, grid, omega);

    const NullPair pair = null_vector(Vec2(0.0, 1.0));
    const double h = 0.5;
    const FrequencySample s = fourier_sample(simulated_oracle(truth), surrogate, m, 0.0, pair, h, {});
    const Complex expected = synthesize_transform(target, {s.frequency()})(0);

    const double err_plus = std::abs(s.fourier_value - expected) / std::abs(expected);
    const double err_minus = std::abs(-s.fourier_value - expected) / std::abs(expected);
    const double best = std::min(err_plus, err_minus);
    if (best > calibration_threshold) {
        throw SolverError("pipeline miscalibrated: best sign leaves relative error " + format_double(best));
    }
    return err_plus <= err_minus ? 1 : -1;
}

FrequencyPlan default_plan(int n_directions, int n_h, double h_min, double h_max) {
    if (n_directions < 1 || n_h < 1) throw std::invalid_argument("plan needs at least one direction and one h");
    if (!(h_min > 0.0) || h_max < h_min) throw std::invalid_argument("need 0 < h_min <= h_max");
    FrequencyPlan plan;
    for (int d = 0; d < n_directions; ++d) {
        const double a = 2.0 * std::numbers::pi * d / n_directions;
        plan.directions.emplace_back(std::cos(a), std::sin(a));
    }
    for (int i = 0; i < n_h; ++i) {
        const double frac = n_h == 1 ? 0.0 : static_cast<double>(i) / (n_h - 1);
        plan.hs.push_back(h_max * std::pow(h_min / h_max, frac));
    }
    return plan;
}

double default_reg_weight(std::size_t n_samples) { return 1e-3 * static_cast<double>(n_samples); }

CVector synthesize_transform(const ScalarField& field, const std::vector<Vec2>& frequencies) {
    const Grid2D& grid = field.grid;
    const CMatrix e = exponential_matrix(grid, frequencies);
    return e * (grid.quadrature_weights().cast<Complex>().array() * field.values.array()).matrix();
}

ScalarField band_projection(const ScalarField& field, const std::vector<Vec2>& frequencies) {
    if (frequencies.empty()) return ScalarField(field.grid);
    const CMatrix e = exponential_matrix(field.grid, frequencies);
    const CVector y = e * (field.grid.quadrature_weights().cast<Complex>().array() * field.values.array()).matrix();
    return ScalarField(field.grid, e.adjoint() * pseudo_solve(gram_matrix(field.grid, e), y));
}

double relative_band_error(const ScalarField& estimate, const ScalarField& truth,
                           const std::vector<Vec2>& frequencies) {
    const ScalarField band = band_projection(truth, frequencies);
    const double denom = l2_norm(truth.grid, band.values);
    if (denom == 0.0) throw std::invalid_argument("truth has no content in the sampled band");
    return l2_norm(truth.grid, (estimate.values - band.values).eval()) / denom;
}

ReconResult invert_fourier(const std::vector<FrequencySample>& samples, const Grid2D& grid, double reg_weight) {
    if (samples.empty()) throw std::invalid_argument("no Fourier samples to invert");
    if (!(reg_weight >= 0.0)) throw std::invalid_argument("regularization weight must be non-negative");
    ReconResult out(grid);
    out.samples = samples;
    out.reg_weight = reg_weight;

    std::vector<Complex> values;
    for (const auto& s : samples) {
        const Vec2 k = s.frequency();
        const bool seen = std::any_of(out.frequencies.begin(), out.frequencies.end(),
                                      [&](const Vec2& q) { return same_frequency(q, k); });
        if (seen) continue;
        out.frequencies.push_back(k);
        values.push_back(s.fourier_value);
    }
    if (reg_weight == 0.0 && static_cast<int>(out.frequencies.size()) < grid.node_count()) {
        throw std::invalid_argument("reg_weight = 0 needs at least as many distinct samples (" +
                                    std::to_string(out.frequencies.size()) + ") as grid nodes (" +
                                    std::to_string(grid.node_count()) + ")");
    }
    const CVector y = Eigen::Map<const CVector>(values.data(), static_cast<Eigen::Index>(values.size()));
    const CMatrix e = exponential_matrix(grid, out.frequencies);
    CMatrix gram = gram_matrix(grid, e);
    CVector dual;
    if (reg_weight > 0.0) {
        gram.diagonal().array() += reg_weight / static_cast<double>(out.frequencies.size());
        dual = gram.llt().solve(y);
    } else {
        dual = pseudo_solve(gram, y);
    }
    out.estimate.values = e.adjoint() * dual;
    const CVector fit = e * (grid.quadrature_weights().cast<Complex>().array() * out.estimate.values.array()).matrix();
    const double ny = y.norm();
    out.residual = ny > 0.0 ? (fit - y).norm() / ny : (fit - y).norm();
    return out;
}

std::vector<FrequencySample> collect_samples(const DtnOracle& oracle, const ConductivityModel& surrogate, int m,
                                             Complex lambda, const FrequencyPlan& plan, const SamplerOptions& options,
                                             std::vector<std::pair<double, Vec2>>* skipped) {
    std::vector<double> hs = plan.hs;
    std::sort(hs.begin(), hs.end());
    std::vector<Vec2> dirs;
    for (const Vec2& d : plan.directions) {
        if (!(d.norm() > 0.0)) throw std::invalid_argument("zero direction in frequency plan");
        dirs.push_back(d.normalized());
    }
    std::stable_sort(dirs.begin(), dirs.end(), [](const Vec2& a, const Vec2& b) { return angle_of(a) < angle_of(b); });

    std::vector<FrequencySample> out;
    for (double h : hs) {
        for (const Vec2& xi : dirs) {
            const NullPair pair = null_vector(xi);
            const bool weak_direction = surrogate.kind() == ModelKind::quasilinear &&
                                        std::abs(bdot(surrogate.omega().cast<Complex>(), pair.zeta)) < min_direction_weight;
            if (weak_direction || family_exponent(pair, h, m) > overflow_exponent_limit) {
                if (skipped) skipped->emplace_back(h, xi);
                continue;
            }
            try {
                out.push_back(fourier_sample(oracle, surrogate, m, lambda, pair, h, options));
            } catch (const OverflowError&) {
                if (skipped) skipped->emplace_back(h, xi);
            }
        }
    }
    return out;
}

ReconResult recover_coefficient(const DtnOracle& oracle, ConductivityModel& surrogate, int m, Complex lambda,
                                const FrequencyPlan& plan, const RecoveryOptions& options) {
    std::vector<std::pair<double, Vec2>> skipped;
    const auto samples = collect_samples(oracle, surrogate, m, lambda, plan, options.sampler, &skipped);
    if (samples.empty()) throw OverflowError("every plan entry exceeds the overflow guard");
    ReconResult result =
        invert_fourier(samples, surrogate.grid(), options.reg_weight.value_or(default_reg_weight(samples.size())));
    result.sign = options.sampler.sign;
    result.skipped = std::move(skipped);
    append_estimate(surrogate, m, result.estimate);
    return result;
}

LambdaRecovery recover_over_lambda_grid(const DtnOracle& oracle, const ConductivityModel& surrogate, int m,
                                        const std::vector<Complex>& lambdas, const FrequencyPlan& plan,
                                        std::optional<int> fit_degree, const RecoveryOptions& options) {
    LambdaRecovery out;
    if (lambdas.empty()) return out;
    if (fit_degree && (*fit_degree < 0 || *fit_degree + 1 > static_cast<int>(lambdas.size()))) {
        throw std::invalid_argument("polynomial fit of degree d needs at least d + 1 lambda values");
    }
    out.lambdas = lambdas;
    for (Complex lambda : lambdas) {
        ConductivityModel scratch = surrogate;
        out.results.push_back(recover_coefficient(oracle, scratch, m, lambda, plan, options));
    }
    if (!fit_degree) return out;

    const int deg = *fit_degree;
    const Grid2D& grid = surrogate.grid();
    CMatrix vander(lambdas.size(), deg + 1);
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
        Complex term = 1.0;
        for (int j = 0; j <= deg; ++j) {
            vander(l, j) = term;
            term *= lambdas[l] / static_cast<double>(j + 1);
        }
    }
    CMatrix rhs(lambdas.size(), grid.node_count());
    for (std::size_t l = 0; l < lambdas.size(); ++l) rhs.row(l) = out.results[l].estimate.values.transpose();
    const CMatrix coeffs = vander.completeOrthogonalDecomposition().solve(rhs);
    for (int j = 0; j <= deg; ++j) out.fitted.emplace_back(grid, coeffs.row(j).transpose());
    return out;
}

void write_samples_csv(std::ostream& os, const std::vector<FrequencySample>& samples) {
    os << "m,lambda_re,lambda_im,h,xi_x,xi_y,raw_re,raw_im,fourier_re,fourier_im\n";
    for (const auto& s : samples) {
        os << s.m << ',' << format_double(s.lambda.real()) << ',' << format_double(s.lambda.imag()) << ','
           << format_double(s.h) << ',' << format_double(s.xi.x()) << ',' << format_double(s.xi.y()) << ','
           << format_double(s.raw_form.real()) << ',' << format_double(s.raw_form.imag()) << ','
           << format_double(s.fourier_value.real()) << ',' << format_double(s.fourier_value.imag()) << '\n';
    }
}

}  // namespace qcl

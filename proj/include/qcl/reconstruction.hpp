#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "qcl/dtn.hpp"
#include "qcl/harmonic.hpp"

namespace qcl {

/// Black-box boundary measurement: the m-linear form for a request.
using DtnOracle = std::function<PairingValue(const MultilinearRequest&)>;

/// Oracle backed by forward solves of a known model.
DtnOracle simulated_oracle(ConductivityModel model, SolveOptions options = {});

/// f_1 = ... = f_m = trace of exp((1/h) x . (k + i xi)), f_test = trace of exp((m/h) x . (-k + i xi)).
struct CgoFamily {
    std::vector<BoundaryValues> f;
    BoundaryValues f_test;
};

CgoFamily cgo_boundary_family(const Grid2D& grid, const NullPair& pair, double h, int m);

/// Largest exponent magnitude the family would need on the unit square.
double family_exponent(const NullPair& pair, double h, int m);

/// Constant c in  m-form = c * int coefficient * exp((2mi/h) x . xi) dx  for CGO families.
Complex cgo_normalization(ModelKind kind, const Vec2& omega, const NullPair& pair, double h, int m);

struct FrequencySample {
    int m = 2;
    Complex lambda;
    double h = 1.0;
    Vec2 xi = Vec2::UnitX();
    Vec2 k = Vec2::UnitY();
    Complex raw_form;
    Complex fourier_value;

    /// (2m/h) xi
    Vec2 frequency() const { return (2.0 * m / h) * xi; }
};

struct SamplerOptions {
    int sign = +1;
    int richardson_levels = 2;
    SolveOptions solve;
};

/// One windowed Fourier value of the order-(m-1) coefficient difference oracle - surrogate.
FrequencySample fourier_sample(const DtnOracle& oracle, const ConductivityModel& surrogate, int m, Complex lambda,
                               const NullPair& pair, double h, const SamplerOptions& options = {});

/// Sign making the pipeline agree with direct quadrature on a built-in model.
int calibrate_sign(int m, int grid_size = 32, ModelKind kind = ModelKind::quasilinear);

struct FrequencyPlan {
    std::vector<Vec2> directions;
    std::vector<double> hs;
};

/// Uniform angular grid of directions, h log-spaced in [h_min, h_max].
FrequencyPlan default_plan(int n_directions = 16, int n_h = 3, double h_min = 0.25, double h_max = 0.5);

struct ReconResult {
    ScalarField estimate;
    std::vector<FrequencySample> samples;
    std::vector<Vec2> frequencies;
    double reg_weight = 0.0;
    double residual = 0.0;  ///< ||A c - y|| / ||y|| over the deduplicated samples
    int sign = +1;
    /// Plan entries (h, xi) rejected by the overflow or direction guard.
    std::vector<std::pair<double, Vec2>> skipped;

    explicit ReconResult(const Grid2D& grid) : estimate(grid) {}
};

/// 1e-3 * number of samples.
double default_reg_weight(std::size_t n_samples);

/// Tikhonov fit of nodal values to the sampled transforms int c exp(i k_s . x) dx
/// (trapezoidal rule): minimizes sum_s |A_s c - y_s|^2 + (reg_weight / S) ||c||^2_L2
/// over the S distinct frequencies. reg_weight = 0 needs at least as many
/// distinct samples as nodes.
ReconResult invert_fourier(const std::vector<FrequencySample>& samples, const Grid2D& grid, double reg_weight);

/// Trapezoidal transforms int c exp(i k . x) dx.
CVector synthesize_transform(const ScalarField& field, const std::vector<Vec2>& frequencies);

/// Orthogonal L2 projection onto span{exp(-i k_s . x)}: the band seen by a plan.
ScalarField band_projection(const ScalarField& field, const std::vector<Vec2>& frequencies);

/// ||estimate - P truth|| / ||P truth|| with P the band projection.
double relative_band_error(const ScalarField& estimate, const ScalarField& truth, const std::vector<Vec2>& frequencies);

/// Samples in lexicographic (h, angle) order, skipping overflowing entries and
/// quasilinear directions with |omega . zeta| < 0.1.
std::vector<FrequencySample> collect_samples(const DtnOracle& oracle, const ConductivityModel& surrogate, int m,
                                             Complex lambda, const FrequencyPlan& plan, const SamplerOptions& options,
                                             std::vector<std::pair<double, Vec2>>* skipped = nullptr);

struct RecoveryOptions {
    SamplerOptions sampler;
    /// Defaults to default_reg_weight(#samples) when unset.
    std::optional<double> reg_weight;
};

/// Recovers d_z^{m-1} gamma(., lambda, 0) (semilinear: d_tau^{m-1} gamma(., 0)) and
/// appends the estimate to the surrogate as a tau-independent coefficient.
ReconResult recover_coefficient(const DtnOracle& oracle, ConductivityModel& surrogate, int m, Complex lambda,
                                const FrequencyPlan& plan, const RecoveryOptions& options = {});

struct LambdaRecovery {
    std::vector<Complex> lambdas;
    std::vector<ReconResult> results;
    /// c_{j, m-1} for j = 0..degree from a least-squares fit in lambda (empty without a fit).
    std::vector<ScalarField> fitted;
};

/// One recovery per lambda (surrogate left unchanged); optional polynomial fit of the given degree.
LambdaRecovery recover_over_lambda_grid(const DtnOracle& oracle, const ConductivityModel& surrogate, int m,
                                        const std::vector<Complex>& lambdas, const FrequencyPlan& plan,
                                        std::optional<int> fit_degree = std::nullopt,
                                        const RecoveryOptions& options = {});

/// Writes `m,lambda_re,lambda_im,h,xi_x,xi_y,raw_re,raw_im,fourier_re,fourier_im`.
void write_samples_csv(std::ostream& os, const std::vector<FrequencySample>& samples);

}  // namespace qcl

#pragma once

#include <optional>
#include <vector>

#include "qcl/forward.hpp"

namespace qcl {

/// Central-difference step and number of Richardson extrapolation steps.
struct Stencil {
    double t = 1e-3;
    int levels = 2;
};

/// t = 1e-3 * delta / max_i max|f_i|, two Richardson steps.
Stencil default_stencil(const std::vector<BoundaryValues>& f, double delta = SolveOptions{}.delta);

struct MultilinearRequest {
    int m = 1;
    Complex lambda = 0.0;
    std::vector<BoundaryValues> f;
    BoundaryValues f_test;
    Stencil stencil;
    /// When set, every f_i and f_test must vanish outside this boundary portion.
    std::optional<BoundarySet> support;

    void validate(const Grid2D& grid, double delta) const;
};

/// One Richardson table entry.
struct LinearizationLogRow {
    int m = 0;
    double t = 0.0;
    int level = 0;       ///< extrapolation depth (0 = raw central difference)
    Complex value;
    double est_err = 0.0;
};

struct PairingValue {
    Complex value;
    double estimated_error = 0.0;
    std::vector<LinearizationLogRow> log;
};

/// <Lambda(lambda + f), f_test> in weak form: sum of gamma grad u . grad phi over
/// the faces, phi the discrete harmonic extension of f_test.
Complex dtn_pairing(const ConductivityModel& model, Complex lambda, const BoundaryValues& f,
                    const BoundaryValues& f_test, const SolveOptions& options = {});

/// Same pairing with the linear (gamma = 1) part removed: sum of (gamma - 1) grad u . grad phi.
/// Its mixed derivatives of order >= 2 coincide with those of dtn_pairing.
Complex nonlinear_pairing(const ConductivityModel& model, Complex lambda, const BoundaryValues& f,
                          const ScalarField& phi, const SolveOptions& options = {});

/// Raw mixed central difference (2t)^-m sum_sigma (prod sigma) P(sum sigma_i t f_i).
Complex mixed_difference(const ConductivityModel& model, const MultilinearRequest& request, double t,
                         const SolveOptions& options = {});

/// m-th mixed derivative of the boundary pairing at epsilon = 0, Richardson extrapolated.
PairingValue multilinear_form(const ConductivityModel& model, const MultilinearRequest& request,
                              const SolveOptions& options = {});

/// d/dt u(lambda + t f) at t = 0 by Richardson-extrapolated central differences.
ScalarField first_linearization_field(const ConductivityModel& model, Complex lambda, const BoundaryValues& f,
                                      const Stencil& stencil, const SolveOptions& options = {});

/// Writes `m,t,level,value_re,value_im,est_err`.
void write_linearization_log(std::ostream& os, const std::vector<LinearizationLogRow>& rows);

}  // namespace qcl

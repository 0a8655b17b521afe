#pragma once

#include "qcl/conductivity.hpp"
#include "qcl/operators.hpp"

namespace qcl {

struct SolveOptions {
    /// Interior residual relative to the stiffness scale of u - lambda.
    double tolerance = 1e-12;
    int max_iterations = 50;
    /// Smallness bound on max|f| for nonlinear models.
    double delta = 0.05;
};

struct SolveReport {
    int iterations = 0;
    double final_residual = 0.0;
    /// max|u - lambda| + max|grad u| (centered differences).
    double sup_deviation = 0.0;
};

struct ForwardSolution {
    ScalarField u;
    SolveReport report;
};

/// Newton solve of div(gamma(x, u, omega . grad u) grad u) = 0, u = lambda + f,
/// seeded at u = lambda. Throws WellPosednessError on divergence.
ForwardSolution solve_quasilinear(const ConductivityModel& model, Complex lambda, const BoundaryValues& f,
                                  const SolveOptions& options = {});

/// Newton solve of div(gamma(x, u) grad u) = 0, u = f, seeded at u = 0.
ForwardSolution solve_semilinear(const ConductivityModel& model, const BoundaryValues& f,
                                 const SolveOptions& options = {});

/// Dispatches on the model kind (lambda must be 0 for semilinear models).
ForwardSolution solve_forward(const ConductivityModel& model, Complex lambda, const BoundaryValues& f,
                              const SolveOptions& options = {});

/// Nodal conductivity of a state u under the model.
CVector nodal_gamma(const ConductivityModel& model, const CVector& u);

/// Residual of the conservative scheme at every node (boundary rows are discrete fluxes).
CVector scheme_residual(const ConductivityModel& model, const CVector& u);

/// max|u - lambda| + max|grad u|.
double sup_deviation(const ScalarField& u, Complex lambda);

}  // namespace qcl

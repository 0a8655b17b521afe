#include "qcl/forward.hpp"

#include <cmath>

#include <Eigen/SparseLU>

namespace qcl {

namespace {

struct NodalState {
    GammaEvaluation gamma;
    CVector du;  // face differences
};

NodalState evaluate_state(const ConductivityModel& model, const SchemeOperators& ops, const CVector& u) {
    CVector z = CVector::Zero(u.size());
    if (model.kind() == ModelKind::quasilinear && !model.terms().empty()) {
        z = ops.directional(model.omega()).cast<Complex>() * u;
    }
    return {model.evaluate(u, z), ops.difference.cast<Complex>() * u};
}

CVector residual_from(const SchemeOperators& ops, const NodalState& s) {
    const CVector gf = ops.average.cast<Complex>() * s.gamma.gamma;
    const CVector flux = (ops.face_weight.cast<Complex>().array() * gf.array() * s.du.array()).matrix();
    return ops.difference.cast<Complex>().transpose() * flux;
}

double interior_max(const Grid2D& grid, const CVector& r) {
    double m = 0.0;
    for (int n : grid.interior_nodes()) m = std::max(m, std::abs(r(n)));
    return m;
}

SparseC interior_jacobian(const ConductivityModel& model, const SchemeOperators& ops, const NodalState& s,
                          const SparseC& select_interior) {
    const SparseC d = ops.difference.cast<Complex>();
    const SparseC m = ops.average.cast<Complex>();
    const CVector gf = m * s.gamma.gamma;
    const CVector w_gamma = (ops.face_weight.cast<Complex>().array() * gf.array()).matrix();
    const CVector w_du = (ops.face_weight.cast<Complex>().array() * s.du.array()).matrix();

    SparseC jac = d.transpose() * w_gamma.asDiagonal() * d;
    if (!model.terms().empty()) {
        SparseC dgamma(s.gamma.d_tau.asDiagonal());
        if (model.kind() == ModelKind::quasilinear) {
            const SparseC zop = ops.directional(model.omega()).cast<Complex>();
            dgamma = dgamma + s.gamma.d_z.asDiagonal() * zop;
        }
        jac = jac + SparseC(d.transpose() * w_du.asDiagonal() * m * dgamma);
    }
    SparseC out = select_interior * jac * select_interior.transpose();
    out.makeCompressed();
    return out;
}

ForwardSolution newton_solve(const ConductivityModel& model, Complex lambda, const BoundaryValues& f,
                             const SolveOptions& options) {
    const Grid2D& grid = model.grid();
    if (f.size() != grid.boundary_count()) throw std::invalid_argument("boundary data length mismatch");
    if (!f.allFinite()) throw std::invalid_argument("boundary data not finite");
    const double fmax = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    const bool linear = model.is_identity();
    if (!linear && fmax > options.delta) {
        throw std::invalid_argument("boundary data max " + format_double(fmax) + " exceeds smallness bound " +
                                    format_double(options.delta));
    }

    const auto ops = scheme_operators(grid);
    const int n_int = grid.interior_count();
    std::vector<Eigen::Triplet<Complex>> sel;
    for (int k = 0; k < n_int; ++k) sel.emplace_back(k, grid.interior_nodes()[k], 1.0);
    SparseC select_interior(n_int, grid.node_count());
    select_interior.setFromTriplets(sel.begin(), sel.end());

    const BoundaryValues g = (f.array() + lambda).matrix();
    CVector u = scatter_full(grid, CVector::Constant(n_int, lambda), g);

    const double diag = ops->stiffness.coeff(grid.index(1, 1), grid.index(1, 1));
    const double scale = std::max(diag * fmax, 1e-300);

    NodalState state = evaluate_state(model, *ops, u);
    double res = interior_max(grid, residual_from(*ops, state)) / scale;
    ForwardSolution out{ScalarField(grid), {}};
    Eigen::SparseLU<SparseC> lu;
    bool analyzed = false;
    int it = 1;
    for (;; ++it) {
        if (res <= options.tolerance) break;
        if (it >= options.max_iterations) {
            throw WellPosednessError("data outside well-posedness ball: Newton did not converge in " +
                                     std::to_string(options.max_iterations) + " iterations");
        }
        const SparseC jac = interior_jacobian(model, *ops, state, select_interior);
        if (!analyzed) {
            lu.analyzePattern(jac);
            analyzed = true;
        }
        lu.factorize(jac);
        if (lu.info() != Eigen::Success) {
            throw WellPosednessError("data outside well-posedness ball: singular Jacobian");
        }
        const CVector r_int = select_interior * residual_from(*ops, state);
        const CVector step = lu.solve(-r_int);
        if (!step.allFinite()) throw WellPosednessError("data outside well-posedness ball: non-finite step");

        double damping = 1.0;
        bool accepted = false;
        for (int halvings = 0; halvings < 30; ++halvings, damping *= 0.5) {
            CVector trial = u;
            for (int k = 0; k < n_int; ++k) trial(grid.interior_nodes()[k]) += damping * step(k);
            NodalState trial_state = evaluate_state(model, *ops, trial);
            const double trial_res = interior_max(grid, residual_from(*ops, trial_state)) / scale;
            if (std::isfinite(trial_res) && trial_res < res) {
                u = std::move(trial);
                state = std::move(trial_state);
                res = trial_res;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // Stagnation at round-off is convergence if we are within a few ulps of the tolerance.
            if (res <= 1e3 * options.tolerance) break;
            throw WellPosednessError("data outside well-posedness ball: damping failed to reduce the residual");
        }
    }
    out.u.values = u;
    out.report.iterations = it;
    out.report.final_residual = res;
    out.report.sup_deviation = sup_deviation(out.u, lambda);
    return out;
}

}  // namespace

ForwardSolution solve_quasilinear(const ConductivityModel& model, Complex lambda, const BoundaryValues& f,
                                  const SolveOptions& options) {
    if (model.kind() != ModelKind::quasilinear) throw std::invalid_argument("expected a quasilinear model");
    return newton_solve(model, lambda, f, options);
}

ForwardSolution solve_semilinear(const ConductivityModel& model, const BoundaryValues& f, const SolveOptions& options) {
    if (model.kind() != ModelKind::semilinear) throw std::invalid_argument("expected a semilinear model");
    return newton_solve(model, 0.0, f, options);
}

ForwardSolution solve_forward(const ConductivityModel& model, Complex lambda, const BoundaryValues& f,
                              const SolveOptions& options) {
    if (model.kind() == ModelKind::semilinear) {
        if (lambda != Complex(0.0)) throw std::invalid_argument("semilinear solves are based at lambda = 0");
        return solve_semilinear(model, f, options);
    }
    return solve_quasilinear(model, lambda, f, options);
}

CVector nodal_gamma(const ConductivityModel& model, const CVector& u) {
    const auto ops = scheme_operators(model.grid());
    return evaluate_state(model, *ops, u).gamma.gamma;
}

CVector scheme_residual(const ConductivityModel& model, const CVector& u) {
    const auto ops = scheme_operators(model.grid());
    return residual_from(*ops, evaluate_state(model, *ops, u));
}

double sup_deviation(const ScalarField& u, Complex lambda) {
    const auto ops = scheme_operators(u.grid);
    const CVector gx = ops->grad_x.cast<Complex>() * u.values;
    const CVector gy = ops->grad_y.cast<Complex>() * u.values;
    const double grad = (gx.cwiseAbs2() + gy.cwiseAbs2()).cwiseSqrt().maxCoeff();
    return (u.values.array() - lambda).abs().maxCoeff() + grad;
}

}  // namespace qcl

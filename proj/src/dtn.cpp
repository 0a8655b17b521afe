#include "qcl/dtn.hpp"

#include <cmath>
#include <ostream>

#include "qcl/harmonic.hpp"

namespace qcl {

namespace {

constexpr double support_tolerance = 0.0;

double max_abs(const BoundaryValues& f) { return f.size() ? f.cwiseAbs().maxCoeff() : 0.0; }

// Richardson table for an O(t^2) central scheme; rows are halvings of t.
struct RichardsonResult {
    Complex value;
    double est_err;
    std::vector<std::vector<Complex>> table;
};

RichardsonResult richardson(const std::vector<Complex>& raw) {
    RichardsonResult out;
    out.table.resize(raw.size());
    for (std::size_t l = 0; l < raw.size(); ++l) {
        out.table[l].push_back(raw[l]);
        double factor = 4.0;
        for (std::size_t k = 1; k <= l; ++k, factor *= 4.0) {
            const Complex prev = out.table[l][k - 1];
            out.table[l].push_back(prev + (prev - out.table[l - 1][k - 1]) / (factor - 1.0));
        }
    }
    const auto& last = out.table.back();
    out.value = last.back();
    out.est_err = last.size() > 1 ? std::abs(last.back() - last[last.size() - 2]) : 0.0;
    return out;
}

}  // namespace

Stencil default_stencil(const std::vector<BoundaryValues>& f, double delta) {
    double fmax = 0.0;
    for (const auto& fi : f) fmax = std::max(fmax, max_abs(fi));
    Stencil s;
    s.t = fmax > 0.0 ? 1e-3 * delta / fmax : 1e-3 * delta;
    s.levels = 2;
    return s;
}

void MultilinearRequest::validate(const Grid2D& grid, double delta) const {
    if (m < 1) throw std::invalid_argument("linearization order m must be >= 1");
    if (static_cast<int>(f.size()) != m) throw std::invalid_argument("need exactly m boundary data");
    if (!(stencil.t > 0.0)) throw std::invalid_argument("stencil step must be positive");
    if (stencil.levels < 1) throw std::invalid_argument("need at least one Richardson level");
    if (f_test.size() != grid.boundary_count()) throw std::invalid_argument("test data length mismatch");
    double amplitude = 0.0;
    for (const auto& fi : f) {
        if (fi.size() != grid.boundary_count()) throw std::invalid_argument("boundary data length mismatch");
        amplitude += stencil.t * max_abs(fi);
    }
    if (amplitude > delta) throw std::invalid_argument("stencil amplitude outside the well-posedness range");
    if (support) {
        if (support->grid() != grid) throw std::invalid_argument("support on a different grid");
        auto check = [&](const BoundaryValues& g) {
            for (int p = 0; p < grid.boundary_count(); ++p) {
                if (!support->contains_position(p) && std::abs(g(p)) > support_tolerance) {
                    throw std::invalid_argument("boundary data not supported in Gamma");
                }
            }
        };
        for (const auto& fi : f) check(fi);
        check(f_test);
    }
}

Complex dtn_pairing(const ConductivityModel& model, Complex lambda, const BoundaryValues& f,
                    const BoundaryValues& f_test, const SolveOptions& options) {
    const ForwardSolution sol = solve_forward(model, lambda, f, options);
    const ScalarField phi = dirichlet_laplacian(model.grid())->solve(f_test);
    const auto ops = scheme_operators(model.grid());
    return energy_pairing(*ops, nodal_gamma(model, sol.u.values), sol.u.values, phi.values);
}

Complex nonlinear_pairing(const ConductivityModel& model, Complex lambda, const BoundaryValues& f,
                          const ScalarField& phi, const SolveOptions& options) {
    if (model.is_identity()) return 0.0;
    const ForwardSolution sol = solve_forward(model, lambda, f, options);
    const auto ops = scheme_operators(model.grid());
    const CVector excess = (nodal_gamma(model, sol.u.values).array() - 1.0).matrix();
    return energy_pairing(*ops, excess, sol.u.values, phi.values);
}

Complex mixed_difference(const ConductivityModel& model, const MultilinearRequest& request, double t,
                         const SolveOptions& options) {
    const Grid2D& grid = model.grid();
    const ScalarField phi = dirichlet_laplacian(grid)->solve(request.f_test);
    const auto ops = scheme_operators(grid);
    const int m = request.m;
    // Mixed differences of order >= 2 annihilate the linear part; drop it before differencing.
    const bool excess_only = m >= 2;
    if (excess_only && model.is_identity()) return 0.0;

    Complex sum = 0.0;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        BoundaryValues g = BoundaryValues::Zero(grid.boundary_count());
        double sign = 1.0;
        for (int i = 0; i < m; ++i) {
            const double s = (mask >> i) & 1u ? -1.0 : 1.0;
            sign *= s;
            g += (s * t) * request.f[i];
        }
        Complex p;
        if (excess_only) {
            p = nonlinear_pairing(model, request.lambda, g, phi, options);
        } else {
            const ForwardSolution sol = solve_forward(model, request.lambda, g, options);
            p = energy_pairing(*ops, nodal_gamma(model, sol.u.values), sol.u.values, phi.values);
        }
        sum += sign * p;
    }
    return sum / std::pow(2.0 * t, m);
}

PairingValue multilinear_form(const ConductivityModel& model, const MultilinearRequest& request,
                              const SolveOptions& options) {
    request.validate(model.grid(), options.delta);
    std::vector<Complex> raw;
    std::vector<double> steps;
    double t = request.stencil.t;
    for (int l = 0; l <= request.stencil.levels; ++l, t *= 0.5) {
        steps.push_back(t);
        raw.push_back(mixed_difference(model, request, t, options));
    }
    const RichardsonResult rr = richardson(raw);
    PairingValue out{rr.value, rr.est_err, {}};
    for (std::size_t l = 0; l < rr.table.size(); ++l) {
        for (std::size_t k = 0; k < rr.table[l].size(); ++k) {
            const double err = k > 0 ? std::abs(rr.table[l][k] - rr.table[l][k - 1]) : 0.0;
            out.log.push_back({request.m, steps[l], static_cast<int>(k), rr.table[l][k], err});
        }
    }
    return out;
}

ScalarField first_linearization_field(const ConductivityModel& model, Complex lambda, const BoundaryValues& f,
                                      const Stencil& stencil, const SolveOptions& options) {
    if (!(stencil.t > 0.0)) throw std::invalid_argument("stencil step must be positive");
    const Grid2D& grid = model.grid();
    if (max_abs(f) == 0.0) return ScalarField(grid);
    std::vector<CVector> raw;
    double t = stencil.t;
    for (int l = 0; l <= stencil.levels; ++l, t *= 0.5) {
        const CVector plus = solve_forward(model, lambda, (t * f).eval(), options).u.values;
        const CVector minus = solve_forward(model, lambda, (-t * f).eval(), options).u.values;
        raw.push_back((plus - minus) / (2.0 * t));
    }
    // Same extrapolation as the pairing, applied nodewise.
    std::vector<std::vector<CVector>> table(raw.size());
    for (std::size_t l = 0; l < raw.size(); ++l) {
        table[l].push_back(raw[l]);
        double factor = 4.0;
        for (std::size_t k = 1; k <= l; ++k, factor *= 4.0) {
            const CVector& prev = table[l][k - 1];
            table[l].push_back(prev + (prev - table[l - 1][k - 1]) / (factor - 1.0));
        }
    }
    return ScalarField(grid, table.back().back());
}

void write_linearization_log(std::ostream& os, const std::vector<LinearizationLogRow>& rows) {
    os << "m,t,level,value_re,value_im,est_err\n";
    for (const auto& r : rows) {
        os << r.m << ',' << format_double(r.t) << ',' << r.level << ',' << format_double(r.value.real()) << ','
           << format_double(r.value.imag()) << ',' << format_double(r.est_err) << '\n';
    }
}

}  // namespace qcl

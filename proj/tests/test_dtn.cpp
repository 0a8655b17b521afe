#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "qcl/dtn.hpp"
#include "qcl/harmonic.hpp"

using namespace qcl;

namespace {

BoundaryValues trace(const Grid2D& g, const oracle::Harmonic& h, double amp = 1.0) {
    return sample_boundary(g, [&](double x, double y) { return amp * h.value(x, y); });
}

MultilinearRequest request(int m, std::vector<BoundaryValues> f, BoundaryValues test, Complex lambda = 0.0) {
    MultilinearRequest r;
    r.m = m;
    r.lambda = lambda;
    r.stencil = default_stencil(f);
    r.f = std::move(f);
    r.f_test = std::move(test);
    return r;
}

double bump_q(double x, double y) { return oracle::bump(x, y); }

}  // namespace

TEST_CASE("zero data gives a zero pairing") {
    const Grid2D g(16, 16);
    const BoundaryValues test = trace(g, oracle::xy());
    CHECK(dtn_pairing(builtin::bump(g), Complex(0.2, 0.1), BoundaryValues::Zero(g.boundary_count()), test) == 0.0);
}

TEST_CASE("Dirichlet energy of x^2 - y^2 converges to 8/3") {
    std::vector<double> err;
    for (int n : {16, 32, 64}) {
        const Grid2D g(n, n);
        const BoundaryValues f = trace(g, oracle::x2_minus_y2());
        const Complex p = dtn_pairing(ConductivityModel::identity(ModelKind::quasilinear, g), 0.0, f, f);
        CHECK(std::abs(p.imag()) < 1e-14);
        err.push_back(std::abs(p.real() - 8.0 / 3.0));
    }
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.1));
    CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("pairing does not depend on the interior extension of the test data") {
    const Grid2D g(24, 24);
    const ConductivityModel m = builtin::two_order(g);
    const BoundaryValues f = trace(g, oracle::xy(), 0.03);
    const BoundaryValues test = trace(g, oracle::exp_cos());
    const ForwardSolution sol = solve_quasilinear(m, 0.1, f);
    const ScalarField phi = dirichlet_laplacian(g)->solve(test);
    const ScalarField wiggle = sample_field(g, [](double x, double y) {
        return Complex(std::sin(3 * x) * x * (1 - x) * y * (1 - y), std::cos(y) * x * (1 - x) * y * (1 - y));
    });
    const auto ops = scheme_operators(g);
    const CVector gamma = nodal_gamma(m, sol.u.values);
    const Complex a = energy_pairing(*ops, gamma, sol.u.values, phi.values);
    const Complex b = energy_pairing(*ops, gamma, sol.u.values, phi.values + 5.0 * wiggle.values);
    CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
    CHECK(std::abs(a - dtn_pairing(m, 0.1, f, test)) <= 1e-14 * std::abs(a));
}

TEST_CASE("pairing is bilinear for the linear model") {
    const Grid2D g(20, 20);
    const ConductivityModel id = ConductivityModel::identity(ModelKind::quasilinear, g);
    const BoundaryValues f1 = trace(g, oracle::xy()), f2 = trace(g, oracle::exp_cos());
    const BoundaryValues g1 = trace(g, oracle::linear_x()), g2 = trace(g, oracle::exp_sin_swapped());
    const Complex a(0.7, -0.3), b(-1.2, 0.4);
    auto P = [&](const BoundaryValues& f, const BoundaryValues& t) { return dtn_pairing(id, 0.0, f, t); };
    const Complex lhs1 = P((a * f1 + b * f2).eval(), g1);
    CHECK(std::abs(lhs1 - (a * P(f1, g1) + b * P(f2, g1))) <= 1e-12 * std::abs(lhs1));
    const Complex lhs2 = P(f1, (a * g1 + b * g2).eval());
    CHECK(std::abs(lhs2 - (a * P(f1, g1) + b * P(f1, g2))) <= 1e-12 * std::abs(lhs2));
}

TEST_CASE("first-order form of the linear model is the harmonic pairing") {
    const Grid2D g(20, 20);
    const ConductivityModel id = ConductivityModel::identity(ModelKind::quasilinear, g);
    const BoundaryValues f = trace(g, oracle::exp_cos()), test = trace(g, oracle::xy());
    const PairingValue v = multilinear_form(id, request(1, {f}, test));
    const auto lap = dirichlet_laplacian(g);
    const Complex direct = energy_pairing(*scheme_operators(g), CVector::Ones(g.node_count()), lap->solve(f).values,
                                          lap->solve(test).values);
    CHECK(std::abs(v.value - direct) <= 1e-8 * std::abs(direct));
}

TEST_CASE("second-order form matches the quadrature of the identity") {
    const Grid2D g(32, 32);
    const ConductivityModel m = builtin::bump(g);
    const double wx = m.omega().x(), wy = m.omega().y();
    struct Triple {
        oracle::Harmonic v1, v2, v3;
    };
    for (const Triple& tr : {Triple{oracle::xy(), oracle::x2_minus_y2(), oracle::linear_x()},
                             Triple{oracle::exp_cos(), oracle::xy(), oracle::exp_sin_swapped()},
                             Triple{oracle::linear_y(), oracle::exp_sin_swapped(), oracle::x2_minus_y2()}}) {
        const PairingValue v =
            multilinear_form(m, request(2, {trace(g, tr.v1), trace(g, tr.v2)}, trace(g, tr.v3)));
        const Complex expect = oracle::second_order_identity(bump_q, wx, wy, tr.v1, tr.v2, tr.v3);
        CHECK(std::abs(v.value - expect) <= 1e-2 * std::abs(expect));
        CHECK(std::isfinite(v.estimated_error));
    }
}

TEST_CASE("mixed forms are symmetric in their arguments") {
    const Grid2D g(16, 16);
    const ConductivityModel m = builtin::two_order(g);
    const BoundaryValues a = trace(g, oracle::xy()), b = trace(g, oracle::exp_cos()), c = trace(g, oracle::linear_y());
    const BoundaryValues test = trace(g, oracle::x2_minus_y2());
    const PairingValue abc = multilinear_form(m, request(3, {a, b, c}, test, 0.1));
    const PairingValue cab = multilinear_form(m, request(3, {c, a, b}, test, 0.1));
    const PairingValue bca = multilinear_form(m, request(3, {b, c, a}, test, 0.1));
    const double tol = 2.0 * std::max({abc.estimated_error, cab.estimated_error, bca.estimated_error}) +
                       1e-10 * std::abs(abc.value);
    CHECK(std::abs(abc.value - cab.value) <= tol);
    CHECK(std::abs(abc.value - bca.value) <= tol);
}

TEST_CASE("raw mixed differences converge at second order in t") {
    const Grid2D g(16, 16);
    const ConductivityModel m = builtin::two_order(g);
    MultilinearRequest r = request(2, {trace(g, oracle::xy()), trace(g, oracle::exp_cos())}, trace(g, oracle::linear_x()));
    const double t = 0.015 / std::max(r.f[0].cwiseAbs().maxCoeff(), r.f[1].cwiseAbs().maxCoeff());
    const Complex d0 = mixed_difference(m, r, t), d1 = mixed_difference(m, r, t / 2), d2 = mixed_difference(m, r, t / 4);
    CHECK(std::abs(d0 - d1) / std::abs(d1 - d2) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("lower-order forms only see the lower-order coefficients") {
    const Grid2D g(16, 16);
    ConductivityModel high(ModelKind::quasilinear, g, Vec2(0.6, 0.8));
    high.set_coefficient(0, 2, gaussian_bump(g, Vec2(0.45, 0.55), 30.0, 0.6));
    const ConductivityModel id = ConductivityModel::identity(ModelKind::quasilinear, g, Vec2(0.6, 0.8));
    const BoundaryValues f1 = trace(g, oracle::xy()), f2 = trace(g, oracle::exp_cos());
    const BoundaryValues test = trace(g, oracle::x2_minus_y2());
    const PairingValue scale = multilinear_form(builtin::bump(g), request(2, {f1, f2}, test));
    for (int order : {1, 2}) {
        std::vector<BoundaryValues> f{f1, f2};
        f.resize(order);
        const PairingValue a = multilinear_form(high, request(order, f, test));
        const PairingValue b = multilinear_form(id, request(order, f, test));
        CHECK(std::abs(a.value - b.value) <=
              2.0 * (a.estimated_error + b.estimated_error) + 1e-9 * std::abs(scale.value));
    }
}

TEST_CASE("first linearization is the harmonic extension") {
    const Grid2D g(24, 24);
    const BoundaryValues f = trace(g, oracle::xy());
    const ScalarField harmonic = solve_laplace_dirichlet(g, f);
    const Stencil one{1e-3, 1};
    const ScalarField id_field =
        first_linearization_field(ConductivityModel::identity(ModelKind::quasilinear, g), 0.0, f, one);
    CHECK((id_field.values - harmonic.values).cwiseAbs().maxCoeff() <= 1e-10);
    for (const ConductivityModel& m : {builtin::bump(g), builtin::two_order(g), builtin::tau_linear(g)}) {
        const ScalarField v = first_linearization_field(m, 0.2, f, one);
        CHECK((v.values - harmonic.values).cwiseAbs().maxCoeff() <= 1e-6);
    }
    CHECK(first_linearization_field(builtin::bump(g), 0.0, BoundaryValues::Zero(g.boundary_count()), one)
              .values.cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("request validation") {
    const Grid2D g(16, 16);
    const ConductivityModel m = builtin::bump(g);
    const BoundaryValues f = trace(g, oracle::xy());
    MultilinearRequest r = request(2, {f, f}, f);
    r.f.pop_back();
    CHECK_THROWS_AS(multilinear_form(m, r), std::invalid_argument);

    r = request(1, {f}, f);
    r.stencil.t = 1.0;
    CHECK_THROWS_AS(multilinear_form(m, r), std::invalid_argument);

    r = request(1, {f}, f);
    r.support = boundary_arc(g, {{0.0, 1.0}});
    CHECK_THROWS_AS(multilinear_form(m, r), std::invalid_argument);

    const RVector on_bottom = r.support->indicator();
    r.f[0] = (f.array() * on_bottom.cast<Complex>().array()).matrix();
    r.f_test = r.f[0];
    CHECK_NOTHROW(multilinear_form(m, r));
}

TEST_CASE("linearization log layout") {
    const Grid2D g(12, 12);
    const BoundaryValues f = trace(g, oracle::xy());
    MultilinearRequest r = request(2, {f, f}, f);
    r.stencil.levels = 3;
    const PairingValue v = multilinear_form(builtin::bump(g), r);
    CHECK(v.log.size() == 10);
    std::ostringstream os;
    write_linearization_log(os, v.log);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "m,t,level,value_re,value_im,est_err");
    int rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 5);
    }
    CHECK(rows == 10);
    CHECK(v.log.back().value == v.value);
}

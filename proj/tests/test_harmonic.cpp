#include <doctest.h>

#include <random>

#include "qcl/density.hpp"
#include "qcl/harmonic.hpp"

using namespace qcl;

namespace {

double max_diff(const ScalarField& a, const std::function<Complex(double, double)>& fn) {
    return (a.values - sample_field(a.grid, fn).values).cwiseAbs().maxCoeff();
}

const Complex I(0.0, 1.0);

}  // namespace

TEST_CASE("Laplace solve reproduces discrete-harmonic quadratics") {
    const Grid2D g(32, 32);
    const std::vector<std::function<Complex(double, double)>> fns = {
        [](double, double) -> Complex { return 1.0; },      [](double x, double) -> Complex { return x; },
        [](double, double y) -> Complex { return y; },      [](double x, double y) -> Complex { return x * y; },
        [](double x, double y) -> Complex { return x * x - y * y; }};
    for (const auto& fn : fns) {
        const ScalarField u = solve_laplace_dirichlet(g, sample_boundary(g, fn));
        CHECK(max_diff(u, fn) <= 1e-10);
    }
}

TEST_CASE("discrete maximum principle") {
    const Grid2D g(24, 24);
    const ScalarField u = solve_laplace_dirichlet(g, sample_boundary(g, [](double x, double) { return Complex(x * x * x); }));
    double interior = 0.0;
    for (int n : g.interior_nodes()) interior = std::max(interior, u[n].real());
    CHECK(interior <= 1.0);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        BoundaryValues f(g.boundary_count());
        for (int p = 0; p < f.size(); ++p) f(p) = d(rng);
        const ScalarField v = solve_laplace_dirichlet(g, f);
        for (int n : g.interior_nodes()) {
            CHECK(v[n].real() <= f.real().maxCoeff() + 1e-12);
            CHECK(v[n].real() >= f.real().minCoeff() - 1e-12);
        }
    }
}

TEST_CASE("null vectors") {
    const NullPair a = null_vector(Vec2(0.0, 1.0));
    CHECK(a.k.isApprox(Vec2(1.0, 0.0)));
    CHECK(std::abs(a.zeta(0) - Complex(1.0)) < 1e-15);
    CHECK(std::abs(a.zeta(1) - I) < 1e-15);
    const NullPair b = null_vector(Vec2(1.0, 0.0));
    CHECK(b.k.isApprox(Vec2(0.0, -1.0)));
    CHECK_THROWS_AS(null_vector(Vec2(1.0, 1.0)), std::invalid_argument);

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
    for (int trial = 0; trial < 100; ++trial) {
        const double t = ang(rng);
        const NullPair p = null_vector(Vec2(std::cos(t), std::sin(t)));
        CHECK(std::abs(p.xi.dot(p.k)) < 1e-12);
        CHECK(std::abs(p.k.norm() - 1.0) < 1e-12);
        CHECK(std::abs(bdot(p.zeta, p.zeta)) < 1e-12);
        const CVec2 other = -p.k.cast<Complex>() + I * p.xi.cast<Complex>();
        CHECK(std::abs(bdot(p.zeta, other) + 2.0) < 1e-12);
    }
}

TEST_CASE("CGO exponentials") {
    const Grid2D g(16, 16);
    const CVec2 zeta(1.0, I);
    const ScalarField e1 = cgo_exponential(g, CGOSpec{zeta, 1.0, Vec2::Zero(), std::nullopt}, CgoSign::plus);
    CHECK(std::abs(e1.at(0, 0) - 1.0) < 1e-15);
    const ScalarField e2 = cgo_exponential(g, CGOSpec{zeta, 0.5, Vec2::Zero(), std::nullopt}, CgoSign::plus);
    CHECK(std::abs(e2.at(16, 0) - std::exp(2.0)) < 1e-12);
    CHECK_THROWS_AS(cgo_exponential(g, CGOSpec{zeta, 0.001, Vec2::Zero(), std::nullopt}, CgoSign::plus), OverflowError);
    CHECK_THROWS_AS(cgo_exponential(g, CGOSpec{CVec2(1.0, 1.0), 1.0, Vec2::Zero(), std::nullopt}, CgoSign::plus),
                    std::invalid_argument);
}

TEST_CASE("CGO Laplacian residual is second order in the grid") {
    const CVec2 zeta(1.0, I);
    std::vector<double> res;
    for (int n : {16, 32, 64}) {
        const Grid2D g(n, n);
        const ScalarField e = cgo_exponential(g, CGOSpec{zeta, 0.5, Vec2::Zero(), std::nullopt}, CgoSign::plus);
        const CVector lap = discrete_laplacian(*scheme_operators(g), e.values) / (g.hx() * g.hy());
        double worst = 0.0;
        for (int k : g.interior_nodes()) worst = std::max(worst, std::abs(lap(k)));
        res.push_back(worst);
    }
    CHECK(res[0] / res[1] == doctest::Approx(4.0).epsilon(0.1));
    CHECK(res[1] / res[2] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("corrected CGO limits and plateau zeros") {
    const Grid2D g(32, 32);
    const CVec2 zeta(I, 1.0);
    const CGOSpec spec{zeta, 0.5, Vec2(1.0, 0.5), 0.1};
    const ScalarField e = cgo_exponential(g, spec, CgoSign::minus);

    const CorrectedCgo none = corrected_cgo(g, spec, BoundarySet(g, {}));
    CHECK(none.r.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK((boundary_trace(none.v) - boundary_trace(e)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((none.v.values - e.values).cwiseAbs().maxCoeff() < 1e-3);

    const CorrectedCgo all = corrected_cgo(g, spec, full_boundary(g));
    CHECK(all.v.values.cwiseAbs().maxCoeff() == 0.0);

    const BoundarySet left = left_of(g, 0.2);
    const CorrectedCgo part = corrected_cgo(g, spec, left);
    for (int n : left.nodes()) CHECK(part.v[n] == Complex(0.0));
    const CVector lap = discrete_laplacian(*scheme_operators(g), part.v.values);
    for (int n : g.interior_nodes()) CHECK(std::abs(lap(n)) < 1e-12);
}

TEST_CASE("frequency splitting at the base point") {
    const FrequencySplit s = split_frequency(CVec2(2.0 * I, 0.0), 1.0, 0.1);
    CHECK(std::abs(s.zeta(0) - I) < 1e-12);
    CHECK(std::abs(s.zeta(1) - 1.0) < 1e-12);
    CHECK(std::abs(s.eta(0) - I) < 1e-12);
    CHECK(std::abs(s.eta(1) + 1.0) < 1e-12);

    const double a = 2.5;
    const FrequencySplit t = split_frequency(CVec2(2.0 * I * a, 0.0), a, 0.1);
    CHECK((t.zeta - a * split_base_vector()).norm() < 1e-12);
    CHECK((t.eta + a * split_base_vector().conjugate()).norm() < 1e-12);

    const FrequencySplit u = split_frequency(CVec2(2.0 * I + 0.05, 0.0), 1.0, 0.1);
    CHECK(u.zeta_residual <= 1e-10);
    CHECK(u.eta_residual <= 1e-10);
    CHECK(u.zeta(0).imag() > 0.5);

    CHECK_THROWS_AS(split_frequency(CVec2(0.0, 0.0), 1.0, 0.1), std::invalid_argument);
}

TEST_CASE("frequency splitting over random admissible z") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = 0.5 + 2.0 * (u(rng) + 1.0);
        const double eps = 0.1;
        CVec2 dz(Complex(u(rng), u(rng)), Complex(u(rng), u(rng)));
        dz *= 0.99 * 2.0 * eps * a * std::abs(u(rng)) / dz.norm();
        const CVec2 z = CVec2(2.0 * I * a, 0.0) + dz;
        const FrequencySplit s = split_frequency(z, a, eps);
        CHECK(s.zeta + s.eta == s.z);
        CHECK((s.z - z).norm() <= 1e-14 * z.norm());
        CHECK(std::abs(bdot(s.zeta, s.zeta)) <= 1e-10 * a * a);
        CHECK(std::abs(bdot(s.eta, s.eta)) <= 1e-10 * a * a);
        CHECK(s.zeta(0).imag() > a / 2);
        CHECK(s.eta(0).imag() > a / 2);
        CHECK(std::abs(bdot(s.zeta, s.eta)) >= a * a);
    }
}

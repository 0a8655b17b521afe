#pragma once

// Reference computations that do not go through the library's discretization.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using Complex = std::complex<double>;

struct Rule {
    std::vector<double> x;  // nodes in [0, 1]
    std::vector<double> w;
};

// Gauss-Legendre rule on [0, 1] by Newton iteration on P_n.
inline Rule gauss_legendre(int n) {
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double step = p1 / dp;
            t -= step;
            if (std::abs(step) < 1e-16) break;
        }
        r.x[i] = 0.5 * (1.0 - t);
        r.w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
    }
    return r;
}

// Tensor Gauss-Legendre integral over the unit square.
inline Complex integrate(const std::function<Complex(double, double)>& f, int n = 60) {
    const Rule r = gauss_legendre(n);
    Complex sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) sum += r.w[i] * r.w[j] * f(r.x[i], r.x[j]);
    }
    return sum;
}

inline double bump(double x, double y, double cx = 0.5, double cy = 0.5, double width = 40.0, double amp = 0.3) {
    return amp * std::exp(-width * ((x - cx) * (x - cx) + (y - cy) * (y - cy)));
}

// Harmonic function with its gradient.
struct Harmonic {
    std::function<Complex(double, double)> value;
    std::function<Complex(double, double)> dx;
    std::function<Complex(double, double)> dy;
};

inline Harmonic x2_minus_y2() {
    return {[](double x, double y) -> Complex { return x * x - y * y; }, [](double x, double) -> Complex { return 2 * x; },
            [](double, double y) -> Complex { return -2 * y; }};
}
inline Harmonic xy() {
    return {[](double x, double y) -> Complex { return x * y; }, [](double, double y) -> Complex { return y; },
            [](double x, double) -> Complex { return x; }};
}
inline Harmonic linear_x() {
    return {[](double x, double) -> Complex { return x; }, [](double, double) -> Complex { return 1.0; },
            [](double, double) -> Complex { return 0.0; }};
}
inline Harmonic linear_y() {
    return {[](double, double y) -> Complex { return y; }, [](double, double) -> Complex { return 0.0; },
            [](double, double) -> Complex { return 1.0; }};
}
inline Harmonic exp_cos() {
    return {[](double x, double y) -> Complex { return std::exp(x) * std::cos(y); },
            [](double x, double y) -> Complex { return std::exp(x) * std::cos(y); },
            [](double x, double y) -> Complex { return -std::exp(x) * std::sin(y); }};
}
inline Harmonic exp_sin_swapped() {
    return {[](double x, double y) -> Complex { return std::exp(y) * std::sin(x); },
            [](double x, double y) -> Complex { return std::exp(y) * std::cos(x); },
            [](double x, double y) -> Complex { return std::exp(y) * std::sin(x); }};
}

// int q ((w . grad v1) grad v2 + (w . grad v2) grad v1) . grad v3
inline Complex second_order_identity(const std::function<double(double, double)>& q, double wx, double wy,
                                     const Harmonic& v1, const Harmonic& v2, const Harmonic& v3) {
    return integrate([&](double x, double y) {
        const Complex d1x = v1.dx(x, y), d1y = v1.dy(x, y);
        const Complex d2x = v2.dx(x, y), d2y = v2.dy(x, y);
        const Complex d3x = v3.dx(x, y), d3y = v3.dy(x, y);
        const Complex w1 = wx * d1x + wy * d1y;
        const Complex w2 = wx * d2x + wy * d2y;
        return q(x, y) * ((w1 * d2x + w2 * d1x) * d3x + (w1 * d2y + w2 * d1y) * d3y);
    });
}

}  // namespace oracle

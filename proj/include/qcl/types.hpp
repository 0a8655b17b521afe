#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace qcl {

using Complex = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using CVec2 = Eigen::Vector2cd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Bilinear dot product on C^2, no conjugation.
inline Complex bdot(const CVec2& a, const CVec2& b) { return a(0) * b(0) + a(1) * b(1); }

/// Linear solve broke down or an iteration failed to converge.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newton iteration left the neighborhood of the constant solution.
class WellPosednessError : public SolverError {
public:
    using SolverError::SolverError;
};

/// Exponential argument beyond the double-precision guard.
class OverflowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qcl

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qcl/grid.hpp"

namespace qcl {

enum class ModelKind { quasilinear, semilinear };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& s);

/// Nodal value of gamma together with its partial derivatives in tau and z.
struct GammaEvaluation {
    CVector gamma;
    CVector d_tau;
    CVector d_z;
};

/// Truncated double power series
///
///     gamma(x, tau, z) = 1 + sum_{j,k} c_{j,k}(x) tau^j z^k / (j! k!)
///
/// where c_{j,k} = d_tau^j d_z^k gamma(x, 0, 0). Quasilinear models store only
/// z-orders k >= 1, so gamma(x, tau, 0) = 1. Semilinear models depend on the
/// solution alone: they store z-order 0 with tau-orders j >= 1, so gamma(x, 0) = 1.
class ConductivityModel {
public:
    ConductivityModel(ModelKind kind, const Grid2D& grid, const Vec2& omega = Vec2(1.0, 0.0));

    static ConductivityModel identity(ModelKind kind, const Grid2D& grid, const Vec2& omega = Vec2(1.0, 0.0)) {
        return ConductivityModel(kind, grid, omega);
    }

    ModelKind kind() const { return kind_; }
    const Grid2D& grid() const { return grid_; }
    const Vec2& omega() const { return omega_; }

    /// Quasilinear: c_{tau_order, z_order} with z_order >= 1.
    void set_coefficient(int tau_order, int z_order, const ScalarField& field);
    /// Semilinear shorthand for c_{order} = d_tau^order gamma(x, 0), order >= 1.
    void set_semilinear_coefficient(int order, const ScalarField& field) { set_coefficient(order, 0, field); }

    /// Stored coefficient or zero.
    ScalarField coefficient(int tau_order, int z_order) const;
    bool has_coefficient(int tau_order, int z_order) const { return terms_.count({tau_order, z_order}) != 0; }
    const std::map<std::pair<int, int>, CVector>& terms() const { return terms_; }

    int tau_order() const;  ///< J
    int z_order() const;    ///< K

    /// True when every stored coefficient is identically zero.
    bool is_identity() const;

    /// Nodal gamma and partials for nodal tau and z.
    GammaEvaluation evaluate(const CVector& tau, const CVector& z) const;

    /// d_z^order gamma(x, lambda, 0) for quasilinear models, d_tau^order gamma(x, 0)
    /// for semilinear ones (lambda ignored).
    ScalarField taylor_field(int order, Complex lambda) const;

    /// Field this model would be recovered against at linearization order m.
    ScalarField recovery_target(int m, Complex lambda) const { return taylor_field(m - 1, lambda); }

private:
    ModelKind kind_;
    Grid2D grid_;
    Vec2 omega_;
    std::map<std::pair<int, int>, CVector> terms_;
};

/// gamma(x, tau, z) as a field.
ScalarField evaluate_gamma(const ConductivityModel& model, const ScalarField& tau, const ScalarField& zval);

/// exp(-width * |x - center|^2).
ScalarField gaussian_bump(const Grid2D& grid, const Vec2& center, double width, Complex amplitude);

/// Built-in models used by the CLI and the tests.
namespace builtin {
/// c_{0,1} = 0.3 exp(-40 |x - (0.5, 0.5)|^2), omega = (0.6, 0.8).
ConductivityModel bump(const Grid2D& grid);
/// bump plus c_{0,2} = 0.6 exp(-30 |x - (0.45, 0.55)|^2).
ConductivityModel two_order(const Grid2D& grid);
/// c_{1,1} = 0.3 exp(-40 |x - (0.5, 0.5)|^2): gamma = 1 + tau z q.
ConductivityModel tau_linear(const Grid2D& grid);
/// Semilinear c_1 = 0.3 exp(-40 |x - (0.5, 0.5)|^2).
ConductivityModel semilinear_bump(const Grid2D& grid);
/// Resolves "identity", "bump", "two-order", "tau-linear", "semilinear-bump",
/// "semilinear-identity".
ConductivityModel by_name(const std::string& name, const Grid2D& grid);
}  // namespace builtin

/// Loads a model manifest (JSON) with one field CSV per coefficient, paths relative to the manifest.
ConductivityModel load_model(const std::string& manifest_path, const Grid2D& grid, Complex* default_lambda = nullptr);
/// Writes manifest plus coefficient CSVs into a directory.
void save_model(const ConductivityModel& model, const std::string& directory, Complex default_lambda = 0.0);

}  // namespace qcl

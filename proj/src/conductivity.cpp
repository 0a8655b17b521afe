#include "qcl/conductivity.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace qcl {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

// tau^p for p = 0..order, elementwise.
std::vector<CVector> powers(const CVector& base, int order) {
    std::vector<CVector> out;
    out.reserve(static_cast<std::size_t>(order) + 1);
    out.push_back(CVector::Ones(base.size()));
    for (int p = 1; p <= order; ++p) out.push_back(out.back().cwiseProduct(base));
    return out;
}

}  // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::quasilinear ? "quasilinear" : "semilinear"; }

ModelKind parse_model_kind(const std::string& s) {
    if (s == "quasilinear") return ModelKind::quasilinear;
    if (s == "semilinear") return ModelKind::semilinear;
    throw std::invalid_argument("unknown model kind '" + s + "'");
}

ConductivityModel::ConductivityModel(ModelKind kind, const Grid2D& grid, const Vec2& omega)
    : kind_(kind), grid_(grid), omega_(omega) {
    if (std::abs(omega.norm() - 1.0) > 1e-12) throw std::invalid_argument("omega must be a unit vector");
}

void ConductivityModel::set_coefficient(int tau_order, int z_order, const ScalarField& field) {
    if (field.grid != grid_) throw std::invalid_argument("coefficient field on a different grid");
    if (tau_order < 0 || z_order < 0) throw std::invalid_argument("negative series order");
    if (kind_ == ModelKind::quasilinear && z_order < 1) {
        throw std::invalid_argument("quasilinear coefficients need z-order >= 1 (gamma(x, tau, 0) = 1)");
    }
    if (kind_ == ModelKind::semilinear && (z_order != 0 || tau_order < 1)) {
        throw std::invalid_argument("semilinear coefficients need order >= 1 and no z-dependence");
    }
    if (!field.all_finite()) throw std::invalid_argument("coefficient field has non-finite values");
    terms_[{tau_order, z_order}] = field.values;
}

ScalarField ConductivityModel::coefficient(int tau_order, int z_order) const {
    const auto it = terms_.find({tau_order, z_order});
    if (it == terms_.end()) return ScalarField(grid_);
    return ScalarField(grid_, it->second);
}

int ConductivityModel::tau_order() const {
    int j = 0;
    for (const auto& [key, _] : terms_) j = std::max(j, key.first);
    return j;
}

int ConductivityModel::z_order() const {
    int k = 0;
    for (const auto& [key, _] : terms_) k = std::max(k, key.second);
    return k;
}

bool ConductivityModel::is_identity() const {
    for (const auto& [_, field] : terms_) {
        if (field.cwiseAbs().maxCoeff() != 0.0) return false;
    }
    return true;
}

GammaEvaluation ConductivityModel::evaluate(const CVector& tau, const CVector& z) const {
    const Eigen::Index n = grid_.node_count();
    if (tau.size() != n || z.size() != n) throw std::invalid_argument("evaluation fields have wrong length");
    GammaEvaluation out{CVector::Ones(n), CVector::Zero(n), CVector::Zero(n)};
    if (terms_.empty()) return out;
    const auto tp = powers(tau, tau_order());
    const auto zp = powers(z, z_order());
    for (const auto& [key, c] : terms_) {
        const auto [j, k] = key;
        const double scale = 1.0 / (factorial(j) * factorial(k));
        out.gamma.array() += scale * c.array() * tp[j].array() * zp[k].array();
        if (j > 0) out.d_tau.array() += (scale * j) * c.array() * tp[j - 1].array() * zp[k].array();
        if (k > 0) out.d_z.array() += (scale * k) * c.array() * tp[j].array() * zp[k - 1].array();
    }
    return out;
}

ScalarField ConductivityModel::taylor_field(int order, Complex lambda) const {
    ScalarField out(grid_);
    if (order < 1) throw std::invalid_argument("Taylor order must be >= 1");
    if (kind_ == ModelKind::semilinear) {
        if (has_coefficient(order, 0)) out.values = terms_.at({order, 0});
        return out;
    }
    for (const auto& [key, c] : terms_) {
        if (key.second != order) continue;
        out.values += (std::pow(lambda, key.first) / factorial(key.first)) * c;
    }
    return out;
}

ScalarField evaluate_gamma(const ConductivityModel& model, const ScalarField& tau, const ScalarField& zval) {
    if (tau.grid != model.grid() || zval.grid != model.grid()) {
        throw std::invalid_argument("fields not on the model grid");
    }
    return ScalarField(model.grid(), model.evaluate(tau.values, zval.values).gamma);
}

ScalarField gaussian_bump(const Grid2D& grid, const Vec2& center, double width, Complex amplitude) {
    return sample_field(grid, [&](double x, double y) {
        const double r2 = (x - center.x()) * (x - center.x()) + (y - center.y()) * (y - center.y());
        return amplitude * std::exp(-width * r2);
    });
}

namespace builtin {

namespace {
const Vec2 default_omega(0.6, 0.8);
}

ConductivityModel bump(const Grid2D& grid) {
    ConductivityModel model(ModelKind::quasilinear, grid, default_omega);
    model.set_coefficient(0, 1, gaussian_bump(grid, {0.5, 0.5}, 40.0, 0.3));
    return model;
}

ConductivityModel two_order(const Grid2D& grid) {
    ConductivityModel model = bump(grid);
    model.set_coefficient(0, 2, gaussian_bump(grid, {0.45, 0.55}, 30.0, 0.6));
    return model;
}

ConductivityModel tau_linear(const Grid2D& grid) {
    ConductivityModel model(ModelKind::quasilinear, grid, default_omega);
    model.set_coefficient(1, 1, gaussian_bump(grid, {0.5, 0.5}, 40.0, 0.3));
    return model;
}

ConductivityModel semilinear_bump(const Grid2D& grid) {
    ConductivityModel model(ModelKind::semilinear, grid);
    model.set_semilinear_coefficient(1, gaussian_bump(grid, {0.5, 0.5}, 40.0, 0.3));
    return model;
}

ConductivityModel by_name(const std::string& name, const Grid2D& grid) {
    if (name == "identity") return ConductivityModel::identity(ModelKind::quasilinear, grid, default_omega);
    if (name == "semilinear-identity") return ConductivityModel::identity(ModelKind::semilinear, grid);
    if (name == "bump") return bump(grid);
    if (name == "two-order") return two_order(grid);
    if (name == "tau-linear") return tau_linear(grid);
    if (name == "semilinear-bump") return semilinear_bump(grid);
    throw std::invalid_argument("unknown built-in model '" + name + "'");
}

}  // namespace builtin

ConductivityModel load_model(const std::string& manifest_path, const Grid2D& grid, Complex* default_lambda) {
    namespace fs = std::filesystem;
    std::ifstream is(manifest_path);
    if (!is) throw std::runtime_error("cannot open model manifest " + manifest_path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("model manifest is not valid JSON: " + std::string(e.what()));
    }
    const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    Vec2 omega(1.0, 0.0);
    if (j.contains("omega")) {
        const auto w = j.at("omega").get<std::vector<double>>();
        if (w.size() != 2) throw std::runtime_error("omega must have two components");
        omega = Vec2(w[0], w[1]);
    }
    ConductivityModel model(kind, grid, omega);
    const fs::path base = fs::path(manifest_path).parent_path();
    for (const auto& term : j.value("coefficients", nlohmann::json::array())) {
        const int tau = term.value("j", 0);
        const int z = term.value("k", 0);
        const fs::path file = base / term.at("file").get<std::string>();
        model.set_coefficient(tau, z, read_field_csv(file.string(), grid));
    }
    if (j.contains("J") && j.at("J").get<int>() < model.tau_order()) {
        throw std::runtime_error("manifest J smaller than stored tau order");
    }
    if (j.contains("K") && j.at("K").get<int>() < model.z_order()) {
        throw std::runtime_error("manifest K smaller than stored z order");
    }
    if (default_lambda && j.contains("lambda")) {
        const auto l = j.at("lambda").get<std::vector<double>>();
        *default_lambda = Complex(l.at(0), l.size() > 1 ? l[1] : 0.0);
    }
    return model;
}

void save_model(const ConductivityModel& model, const std::string& directory, Complex default_lambda) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    nlohmann::json j;
    j["schema"] = "qcl-model/1";
    j["kind"] = to_string(model.kind());
    j["omega"] = {model.omega().x(), model.omega().y()};
    j["J"] = model.tau_order();
    j["K"] = model.z_order();
    j["lambda"] = {default_lambda.real(), default_lambda.imag()};
    j["coefficients"] = nlohmann::json::array();
    for (const auto& [key, c] : model.terms()) {
        const std::string file = "c_" + std::to_string(key.first) + "_" + std::to_string(key.second) + ".csv";
        write_field_csv((fs::path(directory) / file).string(), ScalarField(model.grid(), c));
        j["coefficients"].push_back({{"j", key.first}, {"k", key.second}, {"file", file}});
    }
    std::ofstream os(fs::path(directory) / "model.json");
    os << j.dump(2) << '\n';
}

}  // namespace qcl

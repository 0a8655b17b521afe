#include "qcl/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "qcl/density.hpp"
#include "qcl/reconstruction.hpp"

namespace qcl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* version = "qclab 1.0.0";
constexpr double runtime_threshold_seconds = 600.0;
// Measured cost of one Newton forward solve on a 32 x 32 grid; scales with the cube of the grid size.
constexpr double seconds_per_solve_32 = 0.012;

const std::vector<std::string> builtin_models = {"identity",  "semilinear-identity", "bump",
                                                 "two-order", "tau-linear",          "semilinear-bump"};

// Error raised inside a stage, tagged with the stage name.
struct StageError : std::runtime_error {
    std::string stage;
    std::string kind;
    StageError(std::string s, std::string k, const std::string& message)
        : std::runtime_error(message), stage(std::move(s)), kind(std::move(k)) {}
};

Complex parse_complex(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_array() && (j.size() == 1 || j.size() == 2)) {
        return {j.at(0).get<double>(), j.size() == 2 ? j.at(1).get<double>() : 0.0};
    }
    throw ConfigError("complex values are numbers or [re, im] arrays");
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }
json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

json section(const json& raw, const char* key) { return raw.contains(key) ? raw.at(key) : json::object(); }

SolveOptions solve_options(const json& raw) {
    const json s = section(raw, "solver");
    SolveOptions o;
    o.tolerance = get_or(s, "tolerance", o.tolerance);
    o.max_iterations = get_or(s, "max_iterations", o.max_iterations);
    o.delta = get_or(s, "delta", o.delta);
    return o;
}

int order_of(const json& raw) { return get_or(raw, "m", 2); }

std::vector<int> orders_of(const json& raw) {
    if (raw.contains("orders")) return raw.at("orders").get<std::vector<int>>();
    return {order_of(raw)};
}

FrequencyPlan plan_of(const json& raw, std::uint64_t seed) {
    const json p = section(raw, "plan");
    const int n_dir = get_or(p, "directions", 16);
    FrequencyPlan plan;
    if (p.contains("h")) {
        plan = default_plan(n_dir, 1, 0.5, 0.5);
        plan.hs = p.at("h").get<std::vector<double>>();
    } else {
        plan = default_plan(n_dir, get_or(p, "n_h", 3), get_or(p, "h_min", 0.25), get_or(p, "h_max", 0.5));
    }
    if (get_or(p, "random", false)) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
        plan.directions.clear();
        for (int d = 0; d < n_dir; ++d) {
            const double a = angle(rng);
            plan.directions.emplace_back(std::cos(a), std::sin(a));
        }
    }
    return plan;
}

json plan_json(const FrequencyPlan& plan) {
    json dirs = json::array();
    for (const auto& d : plan.directions) dirs.push_back(vec_json(d));
    return {{"directions", dirs}, {"h", plan.hs}};
}

BoundaryValues boundary_of(const json& spec, const Grid2D& grid) {
    const std::string kind = get_or<std::string>(spec, "kind", "fourier");
    const double amp = get_or(spec, "amplitude", 0.01);
    if (kind == "fourier") {
        const int mode = get_or(spec, "mode", 1);
        BoundaryValues f(grid.boundary_count());
        for (int p = 0; p < grid.boundary_count(); ++p) {
            f(p) = amp * std::cos(0.5 * std::numbers::pi * mode * grid.perimeter_coordinate(p));
        }
        return f;
    }
    if (kind == "linear") {
        const auto g = get_or(spec, "gradient", std::vector<double>{1.0, 0.0});
        if (g.size() != 2) throw ConfigError("linear boundary gradient needs two components");
        return sample_boundary(grid, [&](double x, double y) -> Complex { return amp * (g[0] * x + g[1] * y); });
    }
    throw ConfigError("unknown boundary kind '" + kind + "'");
}

json default_test_boundary() { return {{"kind", "linear"}, {"gradient", {1.0, 0.0}}, {"amplitude", 1.0}}; }

ConductivityModel model_of(const json& raw, const fs::path& base_dir, const Grid2D& grid) {
    const json m = raw.contains("model") ? raw.at("model") : json("bump");
    if (m.is_string()) return builtin::by_name(m.get<std::string>(), grid);
    return load_model((base_dir / m.at("manifest").get<std::string>()).string(), grid);
}

double solve_seconds(int grid) { return seconds_per_solve_32 * std::pow(grid / 32.0, 3); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw StageError("io", "io error", "cannot write " + path.string());
    os << text;
    if (!os) throw StageError("io", "io error", "write failed for " + path.string());
}

template <typename Writer>
void write_csv(const fs::path& path, Writer&& writer) {
    std::ostringstream os;
    writer(os);
    write_text(path, os.str());
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

class Timer {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct RunContext {
    const ExperimentConfig& config;
    fs::path dir;
    json manifest;
    std::string stage = "setup";
};

void run_forward(RunContext& ctx, const Grid2D& grid, const ConductivityModel& model) {
    const json& raw = ctx.config.raw;
    const Complex lambda = raw.contains("lambda") ? parse_complex(raw.at("lambda")) : Complex(0.0);
    const BoundaryValues f = boundary_of(section(raw, "boundary"), grid);
    ctx.stage = "forward";
    const ForwardSolution sol = solve_forward(model, lambda, f, solve_options(raw));
    write_csv(ctx.dir / "solution.csv", [&](std::ostream& os) { write_field_csv(os, sol.u); });
    ctx.manifest["results"] = {{"iterations", sol.report.iterations},
                               {"final_residual", sol.report.final_residual},
                               {"sup_deviation", sol.report.sup_deviation}};
}

void run_dtn(RunContext& ctx, const Grid2D& grid, const ConductivityModel& model) {
    const json& raw = ctx.config.raw;
    const Complex lambda = raw.contains("lambda") ? parse_complex(raw.at("lambda")) : Complex(0.0);
    const BoundaryValues f = boundary_of(section(raw, "boundary"), grid);
    const BoundaryValues g = boundary_of(raw.value("test_boundary", default_test_boundary()), grid);
    ctx.stage = "dtn";
    const Complex value = dtn_pairing(model, lambda, f, g, solve_options(raw));
    write_csv(ctx.dir / "dtn.csv", [&](std::ostream& os) {
        os << "lambda_re,lambda_im,value_re,value_im\n"
           << format_double(lambda.real()) << ',' << format_double(lambda.imag()) << ','
           << format_double(value.real()) << ',' << format_double(value.imag()) << '\n';
    });
    ctx.manifest["results"] = {{"pairing", complex_json(value)}};
}

void run_linearize(RunContext& ctx, const Grid2D& grid, const ConductivityModel& model) {
    const json& raw = ctx.config.raw;
    const int m = get_or(raw, "m", 1);
    MultilinearRequest request;
    request.m = m;
    request.lambda = raw.contains("lambda") ? parse_complex(raw.at("lambda")) : Complex(0.0);
    request.f.assign(m, boundary_of(section(raw, "boundary"), grid));
    request.f_test = boundary_of(raw.value("test_boundary", default_test_boundary()), grid);
    const SolveOptions options = solve_options(raw);
    request.stencil = default_stencil(request.f, options.delta);
    const json st = section(raw, "stencil");
    request.stencil.t = get_or(st, "t", request.stencil.t);
    request.stencil.levels = get_or(st, "levels", request.stencil.levels);
    ctx.stage = "linearize";
    const PairingValue value = multilinear_form(model, request, options);
    write_csv(ctx.dir / "linearization_log.csv", [&](std::ostream& os) { write_linearization_log(os, value.log); });
    if (m == 1) {
        const ScalarField field = first_linearization_field(model, request.lambda, request.f[0], request.stencil, options);
        write_csv(ctx.dir / "first_linearization.csv", [&](std::ostream& os) { write_field_csv(os, field); });
    }
    ctx.manifest["results"] = {{"value", complex_json(value.value)},
                               {"estimated_error", value.estimated_error},
                               {"stencil", {{"t", request.stencil.t}, {"levels", request.stencil.levels}}}};
}

void run_reconstruct(RunContext& ctx, const Grid2D& grid, const ConductivityModel& model) {
    const json& raw = ctx.config.raw;
    const SolveOptions options = solve_options(raw);
    const FrequencyPlan plan = plan_of(raw, ctx.config.seed);
    const Complex lambda = raw.contains("lambda") ? parse_complex(raw.at("lambda")) : Complex(0.0);
    const DtnOracle oracle = simulated_oracle(model, options);
    ConductivityModel surrogate(model.kind(), grid, model.omega());
    ctx.manifest["plan"] = plan_json(plan);

    json stages = json::array();
    json calibration = json::object();
    json skips = json::array();
    for (int m : orders_of(raw)) {
        ctx.stage = "calibration";
        const int sign = calibrate_sign(m, 32, model.kind());
        calibration[std::to_string(m)] = sign;

        ctx.stage = "reconstruct";
        RecoveryOptions ro;
        ro.sampler.sign = sign;
        ro.sampler.solve = options;
        if (raw.contains("reg_weight")) ro.reg_weight = raw.at("reg_weight").get<double>();
        const std::string tag = "m" + std::to_string(m);
        json stage = {{"m", m}};

        if (raw.contains("lambdas")) {
            std::vector<Complex> lambdas;
            for (const auto& l : raw.at("lambdas")) lambdas.push_back(parse_complex(l));
            std::optional<int> degree;
            if (raw.contains("fit_degree")) degree = raw.at("fit_degree").get<int>();
            const LambdaRecovery lr = recover_over_lambda_grid(oracle, surrogate, m, lambdas, plan, degree, ro);
            json per = json::array();
            for (std::size_t i = 0; i < lr.results.size(); ++i) {
                const auto& r = lr.results[i];
                const std::string name = tag + "_l" + std::to_string(i);
                write_csv(ctx.dir / ("samples_" + name + ".csv"), [&](std::ostream& os) { write_samples_csv(os, r.samples); });
                write_csv(ctx.dir / ("estimate_" + name + ".csv"), [&](std::ostream& os) { write_field_csv(os, r.estimate); });
                per.push_back({{"lambda", complex_json(lambdas[i])}, {"residual", r.residual}, {"reg_weight", r.reg_weight}});
            }
            for (std::size_t j = 0; j < lr.fitted.size(); ++j) {
                const std::string name = "fit_c_" + std::to_string(j) + "_" + std::to_string(m - 1) + ".csv";
                write_csv(ctx.dir / name, [&](std::ostream& os) { write_field_csv(os, lr.fitted[j]); });
            }
            stage["lambdas"] = per;
        } else {
            const ReconResult r = recover_coefficient(oracle, surrogate, m, lambda, plan, ro);
            const ScalarField truth = model.recovery_target(m, lambda);
            write_csv(ctx.dir / ("samples_" + tag + ".csv"), [&](std::ostream& os) { write_samples_csv(os, r.samples); });
            write_csv(ctx.dir / ("estimate_" + tag + ".csv"), [&](std::ostream& os) { write_field_csv(os, r.estimate); });
            write_csv(ctx.dir / ("truth_" + tag + ".csv"), [&](std::ostream& os) { write_field_csv(os, truth); });
            stage["residual"] = r.residual;
            stage["reg_weight"] = r.reg_weight;
            stage["sign"] = r.sign;
            stage["samples"] = r.samples.size();
            if (l2_norm(grid, band_projection(truth, r.frequencies).values) > 0.0) {
                stage["band_error"] = relative_band_error(r.estimate, truth, r.frequencies);
            }
            for (const auto& [h, xi] : r.skipped) skips.push_back({{"m", m}, {"h", h}, {"xi", vec_json(xi)}});
        }
        stages.push_back(stage);
    }
    ctx.manifest["sign_calibration"] = calibration;
    ctx.manifest["overflow_skips"] = skips;
    ctx.manifest["results"] = {{"stages", stages}};
}

ScalarField runge_target(const Grid2D& grid) {
    return sample_field(grid, [](double x, double y) -> Complex { return y * (1.0 + 2.0 * (x - 0.5)); });
}

void run_runge(RunContext& ctx, const Grid2D& grid) {
    const json r = section(ctx.config.raw, "runge");
    const int n_sources = get_or(r, "sources", 64);
    const auto ps = get_or(r, "p", std::vector<double>{2.0, 4.0});
    ctx.stage = "runge";
    const Rect inner = default_inner_rect();
    const std::vector<int> sources = exterior_sources(grid, inner, n_sources);
    std::vector<RungeHistoryRow> rows;
    json finals = json::object();
    for (double p : ps) {
        const RungeResult res = runge_approximate(RungeProblem{grid, inner, sources, runge_target(grid), p});
        rows.insert(rows.end(), res.history.begin(), res.history.end());
        finals[short_number(p)] = res.history.back().residual;
    }
    write_csv(ctx.dir / "runge_history.csv", [&](std::ostream& os) { write_runge_csv(os, rows); });
    ctx.manifest["results"] = {{"final_residual", finals}, {"sources", n_sources}};
}

void run_cgo_probe(RunContext& ctx, const Grid2D& grid) {
    const json c = section(ctx.config.raw, "cgo");
    const double a = get_or(c, "a", 1.0);
    const double width = get_or(c, "c", 0.15);
    const auto hs = get_or(c, "h", std::vector<double>{0.5, 0.35, 0.25, 0.18, 0.125});
    const auto decay_hs = get_or(c, "decay_h", std::vector<double>{0.5, 0.35, 0.25});
    const auto distances = get_or(c, "distances", std::vector<double>{0.2, 0.3, 0.4});
    const double epsilon = get_or(c, "epsilon", 0.1);

    ctx.stage = "cgo-probe";
    const Grid2D rgrid(get_or(c, "remainder_grid", grid.nx()), get_or(c, "remainder_grid", grid.ny()));
    const RemainderSweep sweep = remainder_sweep(rgrid, a, width, hs);
    write_csv(ctx.dir / "remainder_sweep.csv", [&](std::ostream& os) { write_remainder_csv(os, sweep); });

    const CVec2 z(Complex(0.0, 2.0 * a), Complex(0.0, 0.0));
    json rates = json::array();
    for (double d : distances) {
        const DecayFit fit = decay_sweep(edge_bump(grid, d), z, a, decay_hs, 2, epsilon);
        write_csv(ctx.dir / ("decay_d" + short_number(d) + ".csv"), [&](std::ostream& os) { write_decay_csv(os, fit); });
        rates.push_back({{"distance", d}, {"rate", fit.rate}});
    }

    std::mt19937_64 rng(ctx.config.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    json splits = json::array();
    for (int i = 0; i < 4; ++i) {
        CVec2 dz(Complex(unit(rng), unit(rng)), Complex(unit(rng), unit(rng)));
        dz *= 0.9 * epsilon * a / std::max(dz.norm(), 1.0);
        const FrequencySplit s = split_frequency(z + dz, a, epsilon);
        auto cv = [](const CVec2& v) { return json::array({complex_json(v(0)), complex_json(v(1))}); };
        splits.push_back({{"z", cv(s.z)},
                          {"a", s.a},
                          {"zeta", cv(s.zeta)},
                          {"eta", cv(s.eta)},
                          {"zeta_residual", s.zeta_residual},
                          {"eta_residual", s.eta_residual},
                          {"iterations", s.iterations}});
    }
    write_text(ctx.dir / "frequency_split.json", splits.dump(2) + "\n");
    ctx.manifest["results"] = {{"kappa", sweep.kappa}, {"constant", sweep.constant}, {"decay", rates}};
}

void check_number(std::vector<Diagnostic>& out, const json& j, const char* key, const std::string& where,
                  double lo, double hi, bool lo_open = true) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) {
        out.push_back({"error", where + key + " must be a number"});
        return;
    }
    const double v = j.at(key).get<double>();
    const bool low_ok = lo_open ? v > lo : v >= lo;
    if (!low_ok || !(v <= hi)) {
        out.push_back({"error", where + key + " = " + short_number(v) + " outside " + (lo_open ? "(" : "[") +
                                    short_number(lo) + ", " + short_number(hi) + "]"});
    }
}

bool is_run_command(const std::string& c) {
    const auto& cmds = run_commands();
    return std::find(cmds.begin(), cmds.end(), c) != cmds.end();
}

}  // namespace

const std::vector<std::string>& run_commands() {
    static const std::vector<std::string> cmds = {"forward", "dtn", "linearize", "reconstruct", "runge", "cgo-probe"};
    return cmds;
}

json to_json(const std::vector<Diagnostic>& diagnostics) {
    json out = json::array();
    for (const auto& d : diagnostics) out.push_back({{"severity", d.severity}, {"message", d.message}});
    return out;
}

json error_json(const std::string& stage, const std::string& kind, const std::string& message) {
    return {{"status", "error"}, {"stage", stage}, {"kind", kind}, {"message", message}};
}

std::vector<Diagnostic> validate(const json& raw, const fs::path& base_dir, const std::string& command) {
    std::vector<Diagnostic> out;
    try {
        if (!raw.is_object()) return {{"error", "config must be a JSON object"}};
        if (!raw.contains("schema")) {
            out.push_back({"error", "missing schema field (expected " + std::string(config_schema) + ")"});
        } else if (raw.at("schema") != config_schema) {
            out.push_back({"error", "unsupported schema " + raw.at("schema").dump()});
        }
        std::string cmd = command;
        if (raw.contains("command")) {
            const std::string c = raw.at("command").get<std::string>();
            if (!cmd.empty() && c != cmd) out.push_back({"error", "config command '" + c + "' differs from '" + cmd + "'"});
            if (cmd.empty()) cmd = c;
        }
        if (cmd.empty()) {
            out.push_back({"error", "no command given"});
        } else if (!is_run_command(cmd)) {
            out.push_back({"error", "unknown command '" + cmd + "'"});
        }

        const int grid = get_or(raw, "grid", 32);
        if (grid < Grid2D::min_nodes_per_axis) out.push_back({"error", "grid must be at least 8"});
        if (raw.contains("seed") && !raw.at("seed").is_number_integer()) out.push_back({"error", "seed must be an integer"});

        if (raw.contains("model")) {
            const json& m = raw.at("model");
            if (m.is_string()) {
                const auto name = m.get<std::string>();
                if (std::find(builtin_models.begin(), builtin_models.end(), name) == builtin_models.end()) {
                    out.push_back({"error", "unknown built-in model '" + name + "'"});
                }
            } else if (m.is_object() && m.contains("manifest") && m.at("manifest").is_string()) {
                const fs::path p = base_dir / m.at("manifest").get<std::string>();
                if (!fs::exists(p)) out.push_back({"error", "model manifest not found: " + p.string()});
            } else {
                out.push_back({"error", "model must be a built-in name or {\"manifest\": path}"});
            }
        }

        const json solver = section(raw, "solver");
        check_number(out, solver, "delta", "solver.", 0.0, 1.0);
        check_number(out, solver, "tolerance", "solver.", 0.0, 1e-2);
        check_number(out, solver, "max_iterations", "solver.", 1.0, 1e4, false);
        const double delta = get_or(solver, "delta", SolveOptions{}.delta);

        const json stencil = section(raw, "stencil");
        check_number(out, stencil, "t", "stencil.", 0.0, 1.0);
        check_number(out, stencil, "levels", "stencil.", 1.0, 8.0, false);
        const int levels = get_or(stencil, "levels", Stencil{}.levels);

        if (raw.contains("m")) check_number(out, raw, "m", "", 1.0, 8.0, false);
        if (raw.contains("boundary")) {
            const double amp = std::abs(get_or(section(raw, "boundary"), "amplitude", 0.01));
            if (cmd != "linearize" && amp > delta) {
                out.push_back({"warning", "boundary amplitude " + short_number(amp) + " exceeds delta " +
                                              short_number(delta) + "; nonlinear models will refuse it"});
            }
            const std::string kind = get_or<std::string>(section(raw, "boundary"), "kind", "fourier");
            if (kind != "fourier" && kind != "linear") out.push_back({"error", "unknown boundary kind '" + kind + "'"});
        }

        if (cmd == "reconstruct") {
            std::vector<int> orders;
            try {
                orders = orders_of(raw);
            } catch (const json::exception&) {
                out.push_back({"error", "orders must be a list of integers"});
            }
            for (int m : orders) {
                if (m < 2) out.push_back({"error", "reconstruction orders must be >= 2"});
            }
            const json p = section(raw, "plan");
            check_number(out, p, "directions", "plan.", 1.0, 1e4, false);
            check_number(out, p, "h_min", "plan.", 0.0, 10.0);
            check_number(out, p, "h_max", "plan.", 0.0, 10.0);
            FrequencyPlan plan;
            try {
                plan = plan_of(raw, get_or<std::uint64_t>(raw, "seed", 0));
            } catch (const std::exception& e) {
                out.push_back({"error", std::string("invalid plan: ") + e.what()});
            }
            for (double h : plan.hs) {
                if (!(h > 0.0)) out.push_back({"error", "plan h values must be positive"});
            }
            if (plan.directions.empty() || plan.hs.empty()) out.push_back({"error", "frequency plan is empty"});
            int max_m = 2;
            for (int m : orders) max_m = std::max(max_m, m);
            int skipped = 0;
            int kept = 0;
            for (double h : plan.hs) {
                if (!(h > 0.0)) continue;
                for (const Vec2& xi : plan.directions) {
                    if (family_exponent(null_vector(xi.normalized()), h, max_m) > overflow_exponent_limit) {
                        ++skipped;
                    } else {
                        ++kept;
                    }
                }
            }
            if (skipped > 0) out.push_back({"warning", "overflow guard will skip " + std::to_string(skipped) + " entries"});
            int aliased = 0;
            for (double h : plan.hs) {
                if (h > 0.0 && 2.0 * max_m / h > std::numbers::pi * grid) aliased += static_cast<int>(plan.directions.size());
            }
            if (aliased > 0) {
                out.push_back({"warning", std::to_string(aliased) + " plan entries sample frequencies above the grid Nyquist limit"});
            }
            double solves = 0.0;
            for (int m : orders) solves += std::pow(2.0, m) * (levels + 1) * 2.0 * kept;
            const double seconds = solves * solve_seconds(grid);
            if (seconds > runtime_threshold_seconds) {
                out.push_back({"warning", "estimated runtime above threshold: " + short_number(seconds) + " s > " +
                                              short_number(runtime_threshold_seconds) + " s"});
            }
        }
        if (cmd == "runge") {
            const json r = section(raw, "runge");
            check_number(out, r, "sources", "runge.", 1.0, 1e5, false);
            for (double p : get_or(r, "p", std::vector<double>{2.0})) {
                if (!(p >= 2.0)) out.push_back({"error", "runge.p values must be >= 2"});
            }
            if (grid % 4 != 0) out.push_back({"error", "runge needs a grid size divisible by 4"});
        }
        if (cmd == "cgo-probe") {
            const json c = section(raw, "cgo");
            check_number(out, c, "a", "cgo.", 0.0, 100.0);
            check_number(out, c, "c", "cgo.", 0.0, 0.5);
            for (double h : get_or(c, "h", std::vector<double>{0.5})) {
                if (!(h > 0.0)) out.push_back({"error", "cgo.h values must be positive"});
            }
        }
    } catch (const std::exception& e) {
        out.push_back({"error", std::string("malformed config: ") + e.what()});
    }
    return out;
}

ExperimentConfig load_config(const fs::path& path, const std::string& command, std::optional<int> grid_override,
                             std::optional<std::uint64_t> seed_override) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path.string());
    ExperimentConfig cfg;
    try {
        is >> cfg.raw;
    } catch (const json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    cfg.base_dir = path.parent_path();
    if (grid_override) cfg.raw["grid"] = *grid_override;
    if (seed_override) cfg.raw["seed"] = *seed_override;
    std::string errors;
    for (const auto& d : validate(cfg.raw, cfg.base_dir, command)) {
        if (d.severity == "error") errors += (errors.empty() ? "" : "; ") + d.message;
    }
    if (!errors.empty()) throw ConfigError(errors);
    cfg.command = command.empty() ? cfg.raw.at("command").get<std::string>() : command;
    cfg.grid = get_or(cfg.raw, "grid", 32);
    cfg.seed = get_or<std::uint64_t>(cfg.raw, "seed", 0);
    return cfg;
}

RunOutcome run(const ExperimentConfig& config, const fs::path& out_dir) {
    if (out_dir.empty()) return {exit_config, error_json("config", "config error", "no output directory given")};
    const fs::path target = fs::absolute(out_dir);
    const fs::path staging = target.parent_path() / (target.filename().string() + ".partial");
    RunContext ctx{config, staging, json::object()};
    try {
        if (fs::exists(target)) {
            const fs::path previous = target / "manifest.json";
            bool ours = false;
            if (fs::exists(previous)) {
                std::ifstream is(previous);
                json j = json::parse(is, nullptr, false);
                ours = !j.is_discarded() && j.is_object() && j.value("schema", "") == run_schema;
            }
            if (!ours) throw StageError("io", "io error", "output directory exists and is not a run artifact: " +
                                                              target.string());
        }
        fs::remove_all(staging);
        fs::create_directories(staging);

        ctx.manifest["schema"] = run_schema;
        ctx.manifest["version"] = version;
        ctx.manifest["command"] = config.command;
        ctx.manifest["config"] = config.raw;
        ctx.manifest["grid"] = config.grid;
        ctx.manifest["seed"] = config.seed;

        const Timer timer;
        const Grid2D grid(config.grid, config.grid);
        ctx.stage = "model";
        if (config.command == "forward" || config.command == "dtn" || config.command == "linearize" ||
            config.command == "reconstruct") {
            ConductivityModel model = [&] {
                try {
                    return model_of(config.raw, config.base_dir, grid);
                } catch (const std::exception& e) {
                    throw StageError("model", "config error", e.what());
                }
            }();
            ctx.manifest["model"] = {{"kind", to_string(model.kind())}, {"omega", vec_json(model.omega())}};
            if (config.command == "forward") run_forward(ctx, grid, model);
            if (config.command == "dtn") run_dtn(ctx, grid, model);
            if (config.command == "linearize") run_linearize(ctx, grid, model);
            if (config.command == "reconstruct") run_reconstruct(ctx, grid, model);
        } else if (config.command == "runge") {
            run_runge(ctx, grid);
        } else if (config.command == "cgo-probe") {
            run_cgo_probe(ctx, grid);
        } else {
            throw StageError("config", "config error", "unknown command '" + config.command + "'");
        }
        ctx.manifest["timings"] = {{"total_seconds", timer.seconds()}};
        ctx.stage = "io";
        write_text(staging / "manifest.json", ctx.manifest.dump(2) + "\n");
        if (fs::exists(target)) fs::remove_all(target);
        fs::rename(staging, target);
        json summary = {{"status", "ok"}, {"command", config.command}, {"out", target.string()}};
        if (ctx.manifest.contains("results")) summary["results"] = ctx.manifest["results"];
        return {exit_ok, summary};
    } catch (const StageError& e) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        const int code = e.kind == "config error" ? exit_config : e.kind == "io error" ? exit_io : exit_stage;
        return {code, error_json(e.stage, e.kind, e.what())};
    } catch (const ConfigError& e) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        return {exit_config, error_json(ctx.stage, "config error", e.what())};
    } catch (const fs::filesystem_error& e) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        return {exit_io, error_json("io", "io error", e.what())};
    } catch (const std::exception& e) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        return {exit_stage, error_json(ctx.stage, "stage error", e.what())};
    }
}

}  // namespace qcl::cli

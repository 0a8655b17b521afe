#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcl/cli.hpp"
#include "qcl/grid.hpp"

using namespace qcl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path root;
    explicit Scratch(const std::string& name) : root(fs::temp_directory_path() / ("qcl_cli_" + name)) {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Scratch() { fs::remove_all(root); }

    fs::path config(const json& raw, const std::string& name = "config.json") const {
        const fs::path p = root / name;
        std::ofstream(p) << raw.dump(2);
        return p;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string header(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

json base(const std::string& command) { return {{"schema", cli::config_schema}, {"command", command}}; }

bool has(const std::vector<cli::Diagnostic>& d, const std::string& severity, const std::string& fragment) {
    return std::any_of(d.begin(), d.end(), [&](const cli::Diagnostic& x) {
        return x.severity == severity && x.message.find(fragment) != std::string::npos;
    });
}

}  // namespace

TEST_CASE("validation diagnostics") {
    CHECK(cli::validate(base("forward"), ".").empty());
    CHECK(cli::validate(base("reconstruct"), ".").empty());

    json overflow = base("reconstruct");
    overflow["plan"] = {{"directions", 8}, {"h", {0.5, 0.01}}};
    const auto d1 = cli::validate(overflow, ".");
    CHECK(has(d1, "warning", "overflow guard will skip"));
    CHECK(has(d1, "warning", "Nyquist"));
    CHECK_FALSE(has(d1, "error", ""));

    json slow = base("reconstruct");
    slow["grid"] = 64;
    slow["orders"] = {2, 3, 4, 5};
    CHECK(has(cli::validate(slow, "."), "warning", "estimated runtime above threshold"));

    json no_schema = base("forward");
    no_schema.erase("schema");
    CHECK(has(cli::validate(no_schema, "."), "error", "schema"));
    CHECK(has(cli::validate(base("bogus"), "."), "error", "unknown command"));
    CHECK(has(cli::validate(base("forward"), ".", "dtn"), "error", "differs"));

    json coarse = base("runge");
    coarse["grid"] = 30;
    CHECK(has(cli::validate(coarse, "."), "error", "divisible by 4"));

    json wide = base("cgo-probe");
    wide["cgo"] = {{"c", 0.7}};
    CHECK(has(cli::validate(wide, "."), "error", "cgo.c"));

    json loud = base("forward");
    loud["boundary"] = {{"kind", "fourier"}, {"amplitude", 0.5}};
    CHECK(has(cli::validate(loud, "."), "warning", "exceeds delta"));

    CHECK(has(cli::validate(json::array(), "."), "error", "JSON object"));
    const json arr = cli::to_json({{"warning", "w"}});
    CHECK(arr.at(0).at("severity") == "warning");
}

TEST_CASE("missing model manifest is a config error and writes nothing") {
    Scratch s("missing_manifest");
    json raw = base("forward");
    raw["model"] = {{"manifest", "nowhere/model.json"}};
    const fs::path cfg = s.config(raw);
    CHECK_THROWS_AS(cli::load_config(cfg, "forward"), cli::ConfigError);
    CHECK_THROWS_AS(cli::load_config(s.root / "absent.json", "forward"), cli::ConfigError);
    CHECK_FALSE(fs::exists(s.root / "out"));
}

TEST_CASE("forward runs are deterministic and well formed") {
    Scratch s("forward");
    json raw = base("forward");
    raw["model"] = "two-order";
    raw["lambda"] = {0.1, -0.05};
    const cli::ExperimentConfig cfg = cli::load_config(s.config(raw), "forward", 16, 3);
    CHECK(cfg.grid == 16);
    CHECK(cfg.seed == 3);

    const cli::RunOutcome a = cli::run(cfg, s.root / "a");
    const cli::RunOutcome b = cli::run(cfg, s.root / "b");
    REQUIRE(a.exit_code == cli::exit_ok);
    REQUIRE(b.exit_code == cli::exit_ok);
    CHECK(slurp(s.root / "a" / "solution.csv") == slurp(s.root / "b" / "solution.csv"));
    CHECK(header(s.root / "a" / "solution.csv") == "i,j,x,y,value_re,value_im");
    CHECK_FALSE(fs::exists(s.root / "a.partial"));

    const json manifest = json::parse(slurp(s.root / "a" / "manifest.json"));
    CHECK(manifest.at("schema") == cli::run_schema);
    CHECK(manifest.at("grid") == 16);
    CHECK(manifest.at("seed") == 3);

    const ScalarField u = read_field_csv((s.root / "a" / "solution.csv").string(), Grid2D(16, 16));
    CHECK(u.all_finite());

    CHECK(cli::run(cfg, s.root / "a").exit_code == cli::exit_ok);
    fs::create_directories(s.root / "foreign");
    std::ofstream(s.root / "foreign" / "keep.txt") << "x";
    const cli::RunOutcome clash = cli::run(cfg, s.root / "foreign");
    CHECK(clash.exit_code == cli::exit_io);
    CHECK(fs::exists(s.root / "foreign" / "keep.txt"));
}

TEST_CASE("stage failures leave no output directory") {
    Scratch s("stage_error");
    json raw = base("forward");
    raw["model"] = "bump";
    raw["boundary"] = {{"kind", "linear"}, {"gradient", {1.0, 1.0}}, {"amplitude", 0.5}};
    const cli::RunOutcome r = cli::run(cli::load_config(s.config(raw), "forward", 16), s.root / "out");
    CHECK(r.exit_code == cli::exit_stage);
    CHECK(r.report.at("status") == "error");
    CHECK(r.report.at("stage") == "forward");
    CHECK_FALSE(fs::exists(s.root / "out"));
    CHECK_FALSE(fs::exists(s.root / "out.partial"));
}

TEST_CASE("artifacts of the remaining commands") {
    Scratch s("artifacts");
    auto run = [&](json raw, const std::string& name) {
        const std::string cmd = raw.at("command");
        const cli::RunOutcome r = cli::run(cli::load_config(s.config(raw, name + ".json"), cmd, 16), s.root / name);
        REQUIRE(r.exit_code == cli::exit_ok);
        return s.root / name;
    };

    json dtn = base("dtn");
    const fs::path d = run(dtn, "dtn");
    CHECK(header(d / "dtn.csv") == "lambda_re,lambda_im,value_re,value_im");

    json lin = base("linearize");
    lin["m"] = 1;
    const fs::path l = run(lin, "linearize");
    CHECK(header(l / "linearization_log.csv") == "m,t,level,value_re,value_im,est_err");
    CHECK(header(l / "first_linearization.csv") == "i,j,x,y,value_re,value_im");

    json rec = base("reconstruct");
    rec["plan"] = {{"directions", 4}, {"h", {0.5}}};
    const fs::path r = run(rec, "reconstruct");
    CHECK(header(r / "samples_m2.csv") == "m,lambda_re,lambda_im,h,xi_x,xi_y,raw_re,raw_im,fourier_re,fourier_im");
    CHECK(header(r / "estimate_m2.csv") == "i,j,x,y,value_re,value_im");
    CHECK(header(r / "truth_m2.csv") == "i,j,x,y,value_re,value_im");
    const json manifest = json::parse(slurp(r / "manifest.json"));
    CHECK(manifest.at("sign_calibration").at("2") == 1);
    CHECK(manifest.at("results").at("stages").at(0).contains("band_error"));

    json runge = base("runge");
    runge["runge"] = {{"sources", 16}, {"p", {2.0}}};
    CHECK(header(run(runge, "runge") / "runge_history.csv") == "n_sources,p,residual");

    json cgo = base("cgo-probe");
    const fs::path c = run(cgo, "cgo");
    CHECK(header(c / "remainder_sweep.csv") == "h,r_norm,envelope,ratio");
    CHECK(header(c / "decay_d0.2.csv") == "h,value_re,value_im,log_abs");
    CHECK(json::parse(slurp(c / "frequency_split.json")).size() == 4);
}

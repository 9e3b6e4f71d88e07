// Experiment runner for the solution-decomposition splitting schemes:
// parses a JSON run configuration, builds the grid/operator/decomposition,
// executes a scheme, a convergence study, or the dense theorem checks, and
// writes CSV reports plus a manifest of the resolved parameters.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include "ddsplit/config.hpp"
#include "ddsplit/runner.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 4;

int load_config(const std::string& path, ddsplit::RunConfig& out) {
    std::ifstream is(path);
    if (!is) {
        std::cerr << "error: cannot open '" << path << "'\n";
        return kExitIo;
    }
    try {
        nlohmann::json j = nlohmann::json::parse(is);
        out = ddsplit::config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << path << ": " << e.what() << '\n';
        return kExitValidation;
    }
    return 0;
}

void print_findings(const std::vector<ddsplit::Finding>& findings) {
    for (const auto& f : findings)
        std::cerr << (f.severity == ddsplit::Finding::Severity::error ? "error: " : "warning: ")
                  << f.message << '\n';
}

int execute(const ddsplit::RunConfig& cfg, const ddsplit::RunContext& ctx) {
    ddsplit::RunResult res = ddsplit::run(cfg, ctx);
    print_findings(res.findings);
    if (res.exit_code != 0) {
        std::cerr << "error: " << res.message << '\n';
        return res.exit_code;
    }
    for (const auto& a : res.artifacts) std::cout << "wrote " << a.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"solution-decomposition splitting schemes for a 2D parabolic problem"};
    app.require_subcommand(1);

    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    bool reproducible = false;
    app.add_option("--threads", threads, "threads for the independent subdomain solves");
    app.add_flag("--reproducible", reproducible,
                 "single-threaded execution with a fixed reduction order");

    std::string run_config, run_out = ".";
    auto* cmd_run = app.add_subcommand("run", "execute a run configuration (or a manifest)");
    cmd_run->add_option("config", run_config, "configuration JSON")->required();
    cmd_run->add_option("--out", run_out, "output directory");

    std::string val_config;
    auto* cmd_validate = app.add_subcommand("validate", "check a configuration without running");
    cmd_validate->add_option("config", val_config, "configuration JSON")->required();

    std::string preset_name, preset_out = ".";
    auto* cmd_preset = app.add_subcommand("preset", "materialize and run a builtin experiment");
    cmd_preset->add_option("name", preset_name, "preset name")->required();
    cmd_preset->add_option("--out", preset_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    ddsplit::RunContext ctx;
    ctx.threads = threads;
    ctx.reproducible = reproducible;

    if (cmd_run->parsed()) {
        ddsplit::RunConfig cfg;
        if (int rc = load_config(run_config, cfg); rc != 0) return rc;
        ctx.out_dir = run_out;
        return execute(cfg, ctx);
    }

    if (cmd_validate->parsed()) {
        ddsplit::RunConfig cfg;
        if (int rc = load_config(val_config, cfg); rc != 0) return rc;
        auto findings = ddsplit::validate(cfg);
        print_findings(findings);
        if (ddsplit::has_errors(findings)) return kExitValidation;
        std::cout << "configuration is valid\n";
        return 0;
    }

    // preset
    std::vector<ddsplit::RunConfig> configs;
    try {
        configs = ddsplit::make_preset(preset_name);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\navailable presets:";
        for (const auto& n : ddsplit::preset_names()) std::cerr << ' ' << n;
        std::cerr << '\n';
        return kExitValidation;
    }
    ctx.out_dir = preset_out;
    try {
        std::filesystem::create_directories(ctx.out_dir);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    for (const auto& cfg : configs) {
        const auto config_path =
            ctx.out_dir / (std::filesystem::path(cfg.outputs.report).stem().string() + ".config.json");
        std::ofstream os(config_path);
        if (!os) {
            std::cerr << "error: cannot open '" << config_path.string() << "'\n";
            return kExitIo;
        }
        os << ddsplit::to_json(cfg).dump(2) << '\n';
        std::cout << "wrote " << config_path.string() << '\n';
        if (int rc = execute(cfg, ctx); rc != 0) return rc;
    }
    return 0;
}

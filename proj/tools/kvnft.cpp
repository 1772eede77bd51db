// kvnft: validate, run and report phase-space field theory scenarios.

#include <algorithm>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "kvn/io.hpp"
#include "kvn/runner.hpp"
#include "kvn/scenario.hpp"

namespace fs = std::filesystem;

namespace {

struct Loaded {
    std::string text;
    std::optional<kvn::ScenarioConfig> config;
};

Loaded load(const std::string& path, bool strict)
{
    Loaded out;
    try {
        out.text = kvn::io::read_file(path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return out;
    }
    auto parsed = kvn::parse_config(out.text, strict);
    for (const auto& w : parsed.warnings) std::cerr << "warning: " << w.path << ": " << w.message << "\n";
    for (const auto& e : parsed.errors) std::cerr << "error: " << e.path << ": " << e.message << "\n";
    out.config = std::move(parsed.config);
    return out;
}

fs::path output_root(const std::string& flag, const kvn::ScenarioConfig& config)
{
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("KVN_OUTPUT_DIR"); env && *env) return env;
    return config.output_directory;
}

/// A directory without a manifest or error record is treated as a parent of runs.
std::vector<fs::path> expand_runs(const std::vector<std::string>& inputs)
{
    std::vector<fs::path> dirs;
    for (const auto& in : inputs) {
        const fs::path p(in);
        if (fs::exists(p / "manifest.json") || fs::exists(p / "error.json") || !fs::is_directory(p)) {
            dirs.push_back(p);
            continue;
        }
        std::vector<fs::path> children;
        for (const auto& entry : fs::directory_iterator(p)) {
            if (entry.is_directory()) children.push_back(entry.path());
        }
        std::sort(children.begin(), children.end());
        if (children.empty()) dirs.push_back(p);
        dirs.insert(dirs.end(), children.begin(), children.end());
    }
    return dirs;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Koopman-von Neumann phase-space field theory toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool strict = false;

    auto* validate = app.add_subcommand("validate", "Check a scenario configuration");
    validate->add_option("--config", config_path, "Scenario JSON file")->required();
    validate->add_flag("--strict", strict, "Treat unknown keys as errors");

    auto* run = app.add_subcommand("run", "Execute a scenario");
    run->add_option("--config", config_path, "Scenario JSON file")->required();
    run->add_option("--out", out_dir, "Output root (overrides KVN_OUTPUT_DIR and the config)");
    auto* seed_opt = run->add_option("--seed", seed, "Override the configured seed");
    run->add_flag("--strict", strict, "Treat unknown keys as errors");

    std::vector<std::string> run_dirs;
    std::string report_out = ".";
    auto* report = app.add_subcommand("report", "Verify and summarise run directories");
    report->add_option("runs", run_dirs, "Run directories, or parents of run directories")->required();
    report->add_option("--out", report_out, "Where summary.md and summary.json go");

    app.add_subcommand("version", "Print the tool version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kvn::exit_validation;
    }

    if (app.got_subcommand("version")) {
        std::cout << kvn::tool_name << " " << kvn::tool_version << "\n";
        return kvn::exit_ok;
    }

    if (app.got_subcommand(validate)) {
        const auto loaded = load(config_path, strict);
        if (!loaded.config) return kvn::exit_validation;
        std::cout << "ok: " << kvn::method_name(loaded.config->method) << "\n";
        return kvn::exit_ok;
    }

    if (app.got_subcommand(run)) {
        const auto loaded = load(config_path, strict);
        if (!loaded.config) return kvn::exit_validation;
        kvn::RunOptions options;
        options.out_root = output_root(out_dir, *loaded.config);
        if (seed_opt->count() > 0) options.seed = seed;
        try {
            const auto outcome = kvn::run_scenario(*loaded.config, loaded.text, options);
            if (outcome.exit_code != kvn::exit_ok) {
                std::cerr << "error: " << outcome.message << " (see " << (outcome.run_dir / "error.json").string()
                          << ")\n";
            } else {
                std::cout << outcome.run_dir.string() << "\n";
            }
            return outcome.exit_code;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kvn::exit_runtime;
        }
    }

    try {
        const auto outcome = kvn::report_runs(expand_runs(run_dirs), report_out);
        std::cout << outcome.summary_md.string() << "\n";
        if (outcome.exit_code != kvn::exit_ok) {
            std::cerr << outcome.failed_checks << " failed checks, " << outcome.checksum_mismatches
                      << " file problems, " << outcome.missing_manifests << " missing or corrupt manifests\n";
        }
        return outcome.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kvn::exit_runtime;
    }
}

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "epivolt/config.hpp"
#include "epivolt/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;

int do_validate(const std::string& config_path) {
    try {
        auto cfg = epivolt::load_config(config_path);
        (void)cfg;
        std::printf("ok: %s\n", config_path.c_str());
        return kExitOk;
    } catch (const epivolt::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntimeError;
    }
}

int do_run(const std::string& config_path, const std::string& out_dir, std::size_t threads) {
    epivolt::ExperimentConfig cfg;
    try {
        cfg = epivolt::load_config(config_path);
    } catch (const epivolt::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    }
    try {
        epivolt::run_experiment(cfg, out_dir, threads);
        return kExitOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime error: %s\n", e.what());
        return kExitRuntimeError;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"epivolt: varying-infectivity epidemic simulation and analysis"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::size_t threads = 0;

    auto* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");
    run->add_option("--threads", threads, "worker threads (0 = all cores)");

    auto* validate = app.add_subcommand("validate", "check a config file without running it");
    validate->add_option("config", config_path, "experiment config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitConfigError : kExitOk;
    }

    if (app.got_subcommand("validate")) return do_validate(config_path);
    return do_run(config_path, out_dir, threads);
}

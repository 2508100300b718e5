// dqpe: command-line driver for the experiments.
//
//   dqpe <tomography|sweep|ghz|gate-trace|potential|qpe> --config FILE [--out DIR] [--workers N] [--seed S]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <Eigen/Core>
#include <boost/version.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "dqpe/harness/config.hpp"
#include "dqpe/harness/experiments.hpp"
#include "dqpe/harness/output.hpp"

namespace fs = std::filesystem;
using namespace dqpe;
using namespace dqpe::harness;

namespace {

struct Options {
    std::string config;
    std::string out;
    int workers = 0;
    std::optional<std::uint64_t> seed;
};

int run(ExperimentKind kind, const Options& opt) {
    ExperimentConfig cfg = load_config(opt.config);
    if (cfg.kind != kind) {
        throw ConfigError(std::string("config describes a '") + kind_name(cfg.kind) + "' experiment, not '" + kind_name(kind) + "'");
    }
    if (opt.seed) cfg.seed = *opt.seed;

    std::string out_dir = cfg.out_dir;
    if (const char* env = std::getenv("DQPE_OUT"); env && *env) out_dir = env;
    if (!opt.out.empty()) out_dir = opt.out;
    int workers = cfg.workers;
    if (const char* env = std::getenv("DQPE_WORKERS"); env && *env) {
        workers = static_cast<int>(harness::detail::to_int("DQPE_WORKERS", env));
    }
    if (opt.workers > 0) workers = opt.workers;
    if (workers < 1) throw ConfigError("worker count must be >= 1");

    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentOutput result = run_experiment(cfg, workers, std::cerr);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path dir(out_dir);
    Json files = Json::array();
    for (const auto& [name, text] : result.files) {
        write_file(dir / name, text);
        files.push_back(name);
    }
    Json manifest;
    manifest["experiment"] = kind_name(kind);
    manifest["seed"] = cfg.seed;
    manifest["workers"] = workers;
    manifest["config_path"] = opt.config;
    manifest["config"] = cfg.source;
    manifest["versions"] = {{"dqpe", library_version()},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                          std::to_string(EIGEN_MINOR_VERSION)},
                            {"boost", BOOST_LIB_VERSION},
                            {"compiler", __VERSION__}};
    manifest["files"] = files;
    manifest["summary"] = result.summary;
    manifest["wall_seconds"] = wall;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");

    std::cout << kind_name(kind) << ": wrote " << result.files.size() << " files to " << dir.string() << "\n";
    std::cout << result.summary.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed quantum phase estimation experiments"};
    app.require_subcommand(1);
    Options opt;
    const std::vector<std::pair<ExperimentKind, const char*>> kinds{
        {ExperimentKind::tomography, "GRAPE-synthesize a gate over an (iterations, time steps) grid and run process tomography"},
        {ExperimentKind::sweep, "QPE accuracy over a (zeta, iterations, time steps) grid"},
        {ExperimentKind::ghz, "Bell/GHZ fidelity of the hybrid coupler over time"},
        {ExperimentKind::gate_trace, "fidelity traces of one GRAPE run at two iteration budgets"},
        {ExperimentKind::potential, "flux-qubit potential landscape, 1-D cut and its minima"},
        {ExperimentKind::qpe, "one distributed QPE run"}};
    std::map<CLI::App*, ExperimentKind> subs;
    for (const auto& [kind, help] : kinds) {
        CLI::App* sub = app.add_subcommand(kind_name(kind), help);
        sub->add_option("--config", opt.config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory (overrides DQPE_OUT and the config)");
        sub->add_option("--workers", opt.workers, "worker threads (overrides DQPE_WORKERS and the config)")->check(CLI::PositiveNumber);
        sub->add_option("--seed", opt.seed, "base seed (overrides the config)");
        subs[sub] = kind;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        for (const auto& [sub, kind] : subs) {
            if (sub->parsed()) return run(kind, opt);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "ksv/experiment.hpp"
#include "ksv/parallel.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Free-energy experiments for multi-population Keller-Segel systems"};
    std::string config_path;
    std::optional<std::string> out_dir;
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::optional<std::uint64_t> seed;
    bool dump_fields = false;
    bool print_config = false;
    app.add_option("--config", config_path, "Experiment configuration (INI)")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory (overrides [output] dir)");
    app.add_option("--threads", threads, "Worker threads inside numerical kernels")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Seed for randomized initial fields (overrides [run] seed)");
    app.add_flag("--dump-fields", dump_fields, "Write binary field dumps");
    app.add_flag("--print-config", print_config, "Print the normalized configuration and exit");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ksv::kExitConfig;
    }

    ksv::ExperimentConfig config;
    try {
        config = ksv::load_config(config_path);
    } catch (const ksv::ConfigError& e) {
        std::cerr << config_path << ": " << e.what() << "\n";
        return ksv::kExitConfig;
    }
    if (out_dir) config.output.dir = *out_dir;
    if (seed) config.seed = *seed;
    if (dump_fields) config.output.dump_fields = true;
    if (print_config) {
        std::cout << ksv::serialize_config(config);
        return ksv::kExitOk;
    }

    ksv::set_thread_count(threads);
    const auto outcome = ksv::run(config);
    std::cout << config.command << ": " << outcome.classification << " (exit " << outcome.exit_code << ")\n";
    if (!outcome.message.empty()) std::cerr << outcome.message << "\n";
    if (!outcome.result_path.empty()) std::cout << "result: " << outcome.result_path.string() << "\n";
    return outcome.exit_code;
}

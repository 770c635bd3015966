#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "trapwave/experiments.hpp"
#include "trapwave/parallel.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Billiard, Morawetz and exterior wave experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "trapwave_out";
    std::optional<std::uint64_t> seed;
    int threads = 0;
    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "Config file (key = value)")->required();
    run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--threads", threads, "Worker threads (default: TRAPWAVE_THREADS or hardware)");

    std::string report_dir;
    auto* rep = app.add_subcommand("report", "Summarise an artifact directory");
    rep->add_option("dir", report_dir, "Directory holding manifest.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (threads > 0) trapwave::set_thread_count(threads);
            trapwave::Config config = trapwave::Config::load(config_path);
            if (seed) config.set("seed", std::to_string(*seed));
            const trapwave::RunSummary s = trapwave::run_experiment(config, out_dir);
            std::cout << s.experiment << ": " << (s.pass ? "pass" : "checks failed") << ", wrote";
            for (const auto& f : s.files) std::cout << " " << f;
            std::cout << " to " << out_dir << "\n";
            return 0;
        }
        trapwave::report(report_dir, std::cout);
        return 0;
    } catch (const trapwave::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

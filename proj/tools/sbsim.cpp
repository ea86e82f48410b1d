#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "sbstack/sim.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo simulator for lattice and QAM tree decoders"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment and emit CSV");
    std::string config_path, preset_name, out_path;
    std::uint64_t seed = 0;
    bool have_seed = false;
    long trials = 0;
    int workers = 0;
    double snr_min = 0, snr_max = 0, snr_step = 0;
    auto* opt_config = run->add_option("--config", config_path, "config file path");
    auto* opt_preset = run->add_option("--preset", preset_name, "named preset");
    opt_config->excludes(opt_preset);
    run->add_option("--out", out_path, "write CSV here instead of stdout");
    run->add_option("--seed", seed, "override master seed")
        ->each([&](const std::string&) { have_seed = true; });
    run->add_option("--trials", trials, "override trial count");
    run->add_option("--workers", workers, "override worker count");
    auto* opt_min = run->add_option("--snr-min", snr_min, "override snr grid start");
    auto* opt_max = run->add_option("--snr-max", snr_max, "override snr grid end");
    auto* opt_step = run->add_option("--snr-step", snr_step, "override snr grid step");

    auto* list = app.add_subcommand("list-decoders", "print the decoder catalog");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        for (const auto& line : sbstack::decoder_catalog()) std::cout << line << '\n';
        return 0;
    }

    try {
        sbstack::ExperimentConfig cfg;
        if (!config_path.empty())
            cfg = sbstack::load_config(config_path);
        else if (!preset_name.empty())
            cfg = sbstack::preset(preset_name);
        else
            throw std::invalid_argument("run needs --config or --preset");

        if (have_seed) cfg.master_seed = seed;
        if (trials > 0) cfg.trials = trials;
        if (workers > 0) cfg.workers = workers;
        const int snr_flags =
            int(opt_min->count() > 0) + int(opt_max->count() > 0) + int(opt_step->count() > 0);
        if (snr_flags == 3) {
            if (snr_step <= 0) throw std::invalid_argument("--snr-step must be positive");
            cfg.snr_db.clear();
            for (double s = snr_min; s <= snr_max + 1e-9; s += snr_step)
                cfg.snr_db.push_back(s);
        } else if (snr_flags != 0) {
            throw std::invalid_argument(
                "--snr-min, --snr-max and --snr-step go together");
        }

        const auto rows = sbstack::run_experiment(cfg);
        if (out_path.empty()) {
            sbstack::write_csv(std::cout, rows);
        } else {
            std::ofstream os(out_path);
            if (!os) throw std::runtime_error("cannot write '" + out_path + "'");
            sbstack::write_csv(os, rows);
        }
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

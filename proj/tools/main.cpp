// SPDX-License-Identifier: Apache-2.0
//
// Command line harness: `sdmimo nmse`, `sdmimo correlation`, `sdmimo verify`.
// Exit codes: 0 success, 1 check or runtime failure, 2 usage/config error.
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdmimo/io.hpp"

namespace {

using namespace sdmimo;

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct CommonFlags {
    std::string config_path;
    std::string output_path;
    std::string format;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common_flags(CLI::App& cmd, CommonFlags& flags) {
    cmd.add_option("--config", flags.config_path, "JSON run configuration file");
    cmd.add_option("--out", flags.output_path, "Output file path");
    cmd.add_option("--format", flags.format, "Output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd.add_option("--seed", flags.seed, "Base seed")->each([&flags](const std::string&) {
        flags.seed_set = true;
    });
}

RunConfig load_config(const CommonFlags& flags, RunConfig::Experiment experiment) {
    RunConfig config;
    if (!flags.config_path.empty())
        config = parse_config(read_text_file(flags.config_path));
    config.experiment = experiment;
    if (!flags.output_path.empty())
        config.output_path = flags.output_path;
    if (flags.format == "csv")
        config.output_format = RunConfig::Format::Csv;
    else if (flags.format == "json")
        config.output_format = RunConfig::Format::Json;
    if (flags.seed_set)
        config.mc.base_seed = flags.seed;
    return config;
}

void emit(const RunConfig& config, const std::string& csv, const std::string& json_text,
          std::size_t rows) {
    const std::string& contents =
        config.output_format == RunConfig::Format::Csv ? csv : json_text;
    const std::string path = config.resolved_output_path();
    write_file(path, contents);
    std::cout << "wrote " << path << " (" << rows << " rows)\n";
}

int run_nmse(const CommonFlags& flags, const std::vector<double>& snr_db, int trials,
             double theta_halfwidth, int nt, int nr, double spacing_ratio,
             const std::vector<std::string>& method_names, bool noiseless, int repetition) {
    RunConfig config = load_config(flags, RunConfig::Experiment::NmseSweep);
    if (!snr_db.empty())
        config.mc.snr_db_list = snr_db;
    if (trials > 0)
        config.mc.n_trials = trials;
    if (theta_halfwidth >= 0.0)
        config.mc.angular_halfwidth_deg = theta_halfwidth;
    if (nt > 0)
        config.mc.n_transmit = nt;
    if (nr > 0)
        config.mc.n_receive = nr;
    if (spacing_ratio > 0.0)
        config.mc.spacing_ratio = spacing_ratio;
    if (!method_names.empty()) {
        config.mc.methods.clear();
        for (const auto& name : method_names) {
            const auto method = method_from_name(name);
            if (!method)
                throw ConfigError("unknown method '" + name + "' (use SD, UQ, ONEBIT)");
            config.mc.methods.push_back(*method);
        }
    }
    if (noiseless)
        config.mc.noiseless = true;
    if (repetition > 0)
        config.mc.repetition = repetition;
    config.mc.validate();

    const auto table = nmse_sweep(config.mc);
    emit(config, render_nmse_csv(table), render_nmse_json(table, config), table.rows.size());
    return 0;
}

int run_correlation(const CommonFlags& flags, double snr_db, bool snr_set, int draws, int nt,
                    int nr, double spacing_ratio) {
    RunConfig config = load_config(flags, RunConfig::Experiment::Correlation);
    if (snr_set)
        config.mc.snr_db_list = {snr_db};
    if (draws > 0) {
        if (draws < 100)
            throw ConfigError("config key 'n_draws': must be >= 100");
        config.n_draws = draws;
    }
    if (nt > 0)
        config.mc.n_transmit = nt;
    if (nr > 0)
        config.mc.n_receive = nr;
    if (spacing_ratio > 0.0)
        config.mc.spacing_ratio = spacing_ratio;
    config.mc.validate();
    if (config.mc.snr_db_list.size() != 1)
        throw ConfigError("config key 'snr_db_list': correlation uses a single SNR point");

    const auto profile = correlation_experiment(config.mc.snr_db_list[0], config.n_draws,
                                                config.mc.base_seed, config.mc);
    emit(config, render_correlation_csv(profile), render_correlation_json(profile, config),
         static_cast<std::size_t>(profile.corr_sd.size()));
    return 0;
}

int run_verify() {
    const auto results = verify_battery();
    bool all_passed = true;
    for (const auto& check : results) {
        std::cout << (check.passed ? "[PASS] " : "[FAIL] ") << check.name << " — "
                  << check.detail << "\n";
        all_passed = all_passed && check.passed;
    }
    std::cout << (all_passed ? "all checks passed\n" : "some checks FAILED\n");
    return all_passed ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"1-bit spatial sigma-delta MIMO channel estimation harness"};
    app.require_subcommand(1);

    CommonFlags nmse_flags;
    std::vector<double> snr_db;
    int trials = 0;
    double theta_halfwidth = -1.0;
    int nt = 0, nr = 0;
    double spacing_ratio = 0.0;
    std::vector<std::string> method_names;
    bool noiseless = false;
    int repetition = 0;

    auto* nmse_cmd = app.add_subcommand("nmse", "NMSE vs SNR Monte Carlo sweep");
    add_common_flags(*nmse_cmd, nmse_flags);
    nmse_cmd->add_option("--snr-db", snr_db, "SNR grid in dB");
    nmse_cmd->add_option("--trials", trials, "Monte Carlo trials");
    nmse_cmd->add_option("--theta-width", theta_halfwidth,
                         "Angular sector half-width in degrees");
    nmse_cmd->add_option("--nt", nt, "Transmit antennas (power of 2)");
    nmse_cmd->add_option("--nr", nr, "Receive antennas");
    nmse_cmd->add_option("--spacing-ratio", spacing_ratio, "Element spacing d / lambda");
    nmse_cmd->add_option("--methods", method_names, "Subset of SD UQ ONEBIT");
    nmse_cmd->add_flag("--noiseless", noiseless, "Force W = 0");
    nmse_cmd->add_option("--repetition", repetition, "Pilot block repetitions");

    CommonFlags corr_flags;
    double corr_snr_db = -5.0;
    int draws = 0;
    int corr_nt = 0, corr_nr = 0;
    double corr_spacing = 0.0;
    auto* corr_cmd =
        app.add_subcommand("correlation", "Input/quantization-noise correlation profile");
    add_common_flags(*corr_cmd, corr_flags);
    auto* snr_opt = corr_cmd->add_option("--snr-db", corr_snr_db, "Operating SNR in dB");
    corr_cmd->add_option("--draws", draws, "Number of draws (>= 100)");
    corr_cmd->add_option("--nt", corr_nt, "Transmit antennas (power of 2)");
    corr_cmd->add_option("--nr", corr_nr, "Receive antennas");
    corr_cmd->add_option("--spacing-ratio", corr_spacing, "Element spacing d / lambda");

    auto* verify_cmd = app.add_subcommand("verify", "Run the exact-identity check battery");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (nmse_cmd->parsed())
            return run_nmse(nmse_flags, snr_db, trials, theta_halfwidth, nt, nr, spacing_ratio,
                            method_names, noiseless, repetition);
        if (corr_cmd->parsed())
            return run_correlation(corr_flags, corr_snr_db, snr_opt->count() > 0, draws,
                                   corr_nt, corr_nr, corr_spacing);
        if (verify_cmd->parsed())
            return run_verify();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

// SPDX-License-Identifier: Apache-2.0
//
// Run configuration parsing (strict JSON), deterministic CSV/JSON result
// emission, and the fast invariant battery behind the `verify` command.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "sdmimo/experiments.hpp"

namespace sdmimo {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    enum class Experiment { NmseSweep, Correlation, Verify };
    enum class Format { Csv, Json };

    Experiment experiment = Experiment::NmseSweep;
    MonteCarloConfig mc{};
    int n_draws = 2000; // correlation experiment only
    std::string output_path; // empty -> default name per experiment
    Format output_format = Format::Csv;

    std::string resolved_output_path() const;
};

// Strict parse: unknown keys, malformed values, and out-of-range values are
// ConfigErrors naming the offending key.
RunConfig parse_config(const std::string& json_text);

// Shortest round-trip decimal form (std::to_chars).
std::string format_double(double v);

// CSV: one header row, full-precision values, rows sorted by
// (method, snr_db) or antenna index; byte-stable for a given input.
std::string render_nmse_csv(const NmseTable& table);
std::string render_correlation_csv(const CorrelationProfile& profile);

// JSON mirrors the CSV records plus the resolved config for provenance.
std::string render_nmse_json(const NmseTable& table, const RunConfig& config);
std::string render_correlation_json(const CorrelationProfile& profile,
                                    const RunConfig& config);

// Throws std::runtime_error naming the path on I/O failure.
void write_file(const std::string& path, const std::string& contents);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyOptions {
    int n_random = 200;        // random vectors per exact-identity suite
    std::uint64_t seed = 2024;
    int n_recovery = 10;       // noiseless recovery scenarios
    bool flip_sign_zero = false; // fault-injection hook: sign(0) = -1
};

// Fast exact-identity battery: floor identities, closed-form noise,
// linearized reconstruction, whitening residual, pilot construction,
// noiseless recovery. Each entry reports pass/fail with a measured detail.
std::vector<CheckResult> verify_battery(const VerifyOptions& options = {});

} // namespace sdmimo

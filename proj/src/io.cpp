// SPDX-License-Identifier: Apache-2.0
#include "sdmimo/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sdmimo/rng.hpp"

namespace sdmimo {

namespace {

using nlohmann::json;

[[noreturn]] void fail_key(const std::string& key, const std::string& why) {
    throw ConfigError("config key '" + key + "': " + why);
}

long long require_integer(const json& value, const std::string& key) {
    if (!value.is_number_integer())
        fail_key(key, "expected an integer");
    return value.get<long long>();
}

double require_number(const json& value, const std::string& key) {
    if (!value.is_number())
        fail_key(key, "expected a number");
    const double v = value.get<double>();
    if (!std::isfinite(v))
        fail_key(key, "must be finite");
    return v;
}

std::string method_list_names() { return "SD, UQ, ONEBIT"; }

std::string experiment_name(RunConfig::Experiment e) {
    switch (e) {
    case RunConfig::Experiment::NmseSweep:
        return "nmse_sweep";
    case RunConfig::Experiment::Correlation:
        return "correlation";
    case RunConfig::Experiment::Verify:
        return "verify";
    }
    return "unknown";
}

json config_to_json(const RunConfig& config) {
    json j;
    j["experiment"] = experiment_name(config.experiment);
    j["n_transmit"] = config.mc.n_transmit;
    j["n_receive"] = config.mc.n_receive;
    j["spacing_ratio"] = config.mc.spacing_ratio;
    j["snr_db_list"] = config.mc.snr_db_list;
    j["angular_halfwidth_deg"] = config.mc.angular_halfwidth_deg;
    j["n_trials"] = config.mc.n_trials;
    j["base_seed"] = config.mc.base_seed;
    std::vector<std::string> names;
    for (Method m : config.mc.methods)
        names.emplace_back(method_name(m));
    j["methods"] = names;
    j["repetition"] = config.mc.repetition;
    j["noiseless"] = config.mc.noiseless;
    j["n_draws"] = config.n_draws;
    j["output_path"] = config.resolved_output_path();
    j["output_format"] = config.output_format == RunConfig::Format::Csv ? "csv" : "json";
    return j;
}

json nmse_row_to_json(const NmseRow& row) {
    json j;
    j["method"] = std::string(method_name(row.method));
    j["snr_db"] = row.snr_db;
    j["nmse"] = row.nmse;
    j["stderr"] = row.std_error;
    j["n_trials"] = row.n_trials;
    return j;
}

std::vector<NmseRow> sorted_rows(const NmseTable& table) {
    std::vector<NmseRow> rows = table.rows;
    std::sort(rows.begin(), rows.end(), [](const NmseRow& a, const NmseRow& b) {
        const auto name_a = method_name(a.method);
        const auto name_b = method_name(b.method);
        if (name_a != name_b)
            return name_a < name_b;
        return a.snr_db < b.snr_db;
    });
    return rows;
}

} // namespace

std::string RunConfig::resolved_output_path() const {
    if (!output_path.empty())
        return output_path;
    switch (experiment) {
    case Experiment::Correlation:
        return "correlation.csv";
    case Experiment::NmseSweep:
    default:
        return "nmse.csv";
    }
}

RunConfig parse_config(const std::string& json_text) {
    json parsed;
    try {
        parsed = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!parsed.is_object())
        throw ConfigError("config must be a JSON object");

    RunConfig config;
    for (const auto& [key, value] : parsed.items()) {
        if (key == "experiment") {
            const std::string name = value.is_string() ? value.get<std::string>() : "";
            if (name == "nmse_sweep")
                config.experiment = RunConfig::Experiment::NmseSweep;
            else if (name == "correlation")
                config.experiment = RunConfig::Experiment::Correlation;
            else if (name == "verify")
                config.experiment = RunConfig::Experiment::Verify;
            else
                fail_key(key, "expected one of nmse_sweep, correlation, verify");
        } else if (key == "n_transmit") {
            const long long v = require_integer(value, key);
            if (v < 1)
                fail_key(key, "must be >= 1");
            config.mc.n_transmit = static_cast<Eigen::Index>(v);
        } else if (key == "n_receive") {
            const long long v = require_integer(value, key);
            if (v < 1)
                fail_key(key, "must be >= 1");
            config.mc.n_receive = static_cast<Eigen::Index>(v);
        } else if (key == "spacing_ratio") {
            const double v = require_number(value, key);
            if (!(v > 0.0))
                fail_key(key, "must be positive");
            config.mc.spacing_ratio = v;
        } else if (key == "snr_db_list") {
            if (!value.is_array() || value.empty())
                fail_key(key, "expected a non-empty array of numbers");
            config.mc.snr_db_list.clear();
            for (const auto& entry : value)
                config.mc.snr_db_list.push_back(require_number(entry, key));
        } else if (key == "angular_halfwidth_deg") {
            const double v = require_number(value, key);
            if (v < 0.0 || v > 85.0)
                fail_key(key, "must lie in [0, 85]");
            config.mc.angular_halfwidth_deg = v;
        } else if (key == "n_trials") {
            const long long v = require_integer(value, key);
            if (v < 1)
                fail_key(key, "must be >= 1");
            config.mc.n_trials = static_cast<int>(v);
        } else if (key == "base_seed") {
            if (!value.is_number_integer() && !value.is_number_unsigned())
                fail_key(key, "expected an integer");
            config.mc.base_seed = value.get<std::uint64_t>();
        } else if (key == "methods") {
            if (!value.is_array() || value.empty())
                fail_key(key, "expected a non-empty array of method names");
            config.mc.methods.clear();
            for (const auto& entry : value) {
                const auto method =
                    entry.is_string() ? method_from_name(entry.get<std::string>())
                                      : std::nullopt;
                if (!method)
                    fail_key(key, "expected names from {" + method_list_names() + "}");
                config.mc.methods.push_back(*method);
            }
        } else if (key == "repetition") {
            const long long v = require_integer(value, key);
            if (v < 1)
                fail_key(key, "must be >= 1");
            config.mc.repetition = static_cast<int>(v);
        } else if (key == "noiseless") {
            if (!value.is_boolean())
                fail_key(key, "expected a boolean");
            config.mc.noiseless = value.get<bool>();
        } else if (key == "n_draws") {
            const long long v = require_integer(value, key);
            if (v < 100)
                fail_key(key, "must be >= 100");
            config.n_draws = static_cast<int>(v);
        } else if (key == "output_path") {
            if (!value.is_string())
                fail_key(key, "expected a string");
            config.output_path = value.get<std::string>();
        } else if (key == "output_format") {
            const std::string name = value.is_string() ? value.get<std::string>() : "";
            if (name == "csv")
                config.output_format = RunConfig::Format::Csv;
            else if (name == "json")
                config.output_format = RunConfig::Format::Json;
            else
                fail_key(key, "expected csv or json");
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }

    try {
        config.mc.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return config;
}

std::string format_double(double v) {
    char buffer[40];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), v);
    return std::string(buffer, result.ptr);
}

std::string render_nmse_csv(const NmseTable& table) {
    std::string out = "method,snr_db,nmse,stderr,n_trials\n";
    for (const auto& row : sorted_rows(table)) {
        out += method_name(row.method);
        out += ',';
        out += format_double(row.snr_db);
        out += ',';
        out += format_double(row.nmse);
        out += ',';
        out += format_double(row.std_error);
        out += ',';
        out += std::to_string(row.n_trials);
        out += '\n';
    }
    return out;
}

std::string render_correlation_csv(const CorrelationProfile& profile) {
    std::string out = "antenna_index,corr_sd,corr_onebit,n_draws\n";
    for (Eigen::Index i = 0; i < profile.corr_sd.size(); ++i) {
        out += std::to_string(i + 1);
        out += ',';
        out += format_double(profile.corr_sd(i));
        out += ',';
        out += format_double(profile.corr_onebit(i));
        out += ',';
        out += std::to_string(profile.n_draws);
        out += '\n';
    }
    return out;
}

std::string render_nmse_json(const NmseTable& table, const RunConfig& config) {
    json j;
    j["config"] = config_to_json(config);
    j["base_seed"] = config.mc.base_seed;
    j["rows"] = json::array();
    for (const auto& row : sorted_rows(table))
        j["rows"].push_back(nmse_row_to_json(row));
    return j.dump(2) + "\n";
}

std::string render_correlation_json(const CorrelationProfile& profile,
                                    const RunConfig& config) {
    json j;
    j["config"] = config_to_json(config);
    j["base_seed"] = config.mc.base_seed;
    j["rows"] = json::array();
    for (Eigen::Index i = 0; i < profile.corr_sd.size(); ++i) {
        json row;
        row["antenna_index"] = i + 1;
        row["corr_sd"] = profile.corr_sd(i);
        row["corr_onebit"] = profile.corr_onebit(i);
        row["n_draws"] = profile.n_draws;
        j["rows"].push_back(row);
    }
    return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out)
        throw std::runtime_error("write to '" + path + "' failed");
}

namespace {

// Forward pass that honors the fault-injection hook.
QuantizationTrace forward_with_options(const Eigen::VectorXcd& x, const SigmaDeltaConfig& config,
                                       const VerifyOptions& options) {
    return detail::sigma_delta_forward_impl(x, config, options.flip_sign_zero);
}

CheckResult check_floor_identities(const VerifyOptions& options) {
    double worst = 0.0;
    for (double b : {1.0, 4.37}) {
        const SigmaDeltaConfig config{128, b};
        rng::Stream stream(rng::derive(options.seed, static_cast<std::uint64_t>(b * 1000)));
        for (int rep = 0; rep < options.n_random; ++rep) {
            const auto trace = forward_with_options(stream.uniform_box(128, b), config, options);
            worst = std::max(worst, floor_identity_residual(trace, config));
        }
    }
    return {"floor identity (N=128, b in {1, 4.37})", worst <= 1e-9,
            "max residual " + format_double(worst)};
}

CheckResult check_closed_form(const VerifyOptions& options) {
    double worst = 0.0;
    for (double b : {1.0, 4.37}) {
        const SigmaDeltaConfig config{128, b};
        rng::Stream stream(rng::derive(options.seed, 100 + static_cast<std::uint64_t>(b)));
        for (int rep = 0; rep < options.n_random; ++rep) {
            const auto x = stream.uniform_box(128, b);
            const auto trace = forward_with_options(x, config, options);
            const auto closed = quantization_noise_closed_form(x, config);
            worst = std::max(
                worst, (closed - (trace.output_y - trace.prequant_r)).cwiseAbs().maxCoeff());
        }
    }
    return {"closed-form quantization noise equals the recursion", worst <= 1e-9,
            "max deviation " + format_double(worst)};
}

CheckResult check_reconstruction(const VerifyOptions& options) {
    double worst = 0.0;
    bool range_ok = true;
    const SigmaDeltaConfig config{128, 4.37};
    rng::Stream stream(rng::derive(options.seed, 7));
    for (int rep = 0; rep < options.n_random; ++rep) {
        const auto trace = forward_with_options(stream.uniform_box(128, 4.37), config, options);
        const Eigen::VectorXcd rebuilt = trace.input_x + shaped_noise(trace, config);
        worst = std::max(worst, (rebuilt - trace.output_y).cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < 128 && range_ok; ++i) {
            const Complex q = trace.floor_noise_qtilde(i);
            range_ok = q.real() > -0.5 - 1e-9 && q.real() <= 0.5 + 1e-9 &&
                       q.imag() > -0.5 - 1e-9 && q.imag() <= 0.5 + 1e-9;
        }
    }
    return {"linearized reconstruction y = x + 2b U^-1 qtilde", worst <= 1e-9 && range_ok,
            "max deviation " + format_double(worst) +
                (range_ok ? ", qtilde in range" : ", qtilde out of range")};
}

CheckResult check_whitening(const VerifyOptions&) {
    const auto model = combined_noise_covariance(128, 4.37);
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(128, 128);
    const double residual =
        (model.inverse_sqrt * model.covariance * model.inverse_sqrt.adjoint() - eye)
            .cwiseAbs()
            .maxCoeff();
    return {"noise covariance whitening", residual <= 1e-10,
            "max residual " + format_double(residual)};
}

CheckResult check_pilots(const VerifyOptions& options) {
    for (Eigen::Index n : {2, 4, 8, 16, 32, 64}) {
        const auto pilots = predistort_pilots(n);
        const SigmaDeltaConfig config{n, 1.0};
        for (Eigen::Index c = 0; c < n; ++c) {
            const auto trace =
                forward_with_options(pilots.predistorted_t.col(c), config, options);
            if (trace.output_y != Eigen::VectorXcd(pilots.transmit_s.col(c)))
                return {"pilot construction (N_t = 2..64)", false,
                        "mismatch at N_t=" + std::to_string(n) +
                            ", column " + std::to_string(c)};
        }
        if (!verify_pilots(pilots))
            return {"pilot construction (N_t = 2..64)", false,
                    "orthogonality failed at N_t=" + std::to_string(n)};
    }
    return {"pilot construction (N_t = 2..64)", true, "exact for all supported orders"};
}

CheckResult check_noiseless_recovery(const VerifyOptions& options) {
    MonteCarloConfig config;
    config.noiseless = true;
    const auto context = make_method_context(Method::UQ, 1.0, config);
    rng::Stream stream(rng::derive(options.seed, 11));
    double worst = 0.0;
    for (int i = 0; i < options.n_recovery; ++i) {
        const auto scenario = make_los_channel(
            stream.uniform(-60.0, 60.0), stream.uniform(-60.0, 60.0),
            std::polar(1.0, stream.uniform(0.0, 6.283185307179586)), context.bs, context.ms);
        const auto outcome = run_trial(scenario, Method::UQ, 1.0,
                                       rng::derive(options.seed, 1000 + i), context, true);
        worst = std::max(worst, outcome.error_fro_sq / outcome.channel_fro_sq);
    }
    return {"noiseless unquantized recovery", worst <= 1e-6,
            "max NMSE " + format_double(worst)};
}

} // namespace

std::vector<CheckResult> verify_battery(const VerifyOptions& options) {
    std::vector<CheckResult> results;
    results.push_back(check_floor_identities(options));
    results.push_back(check_closed_form(options));
    results.push_back(check_reconstruction(options));
    results.push_back(check_whitening(options));
    results.push_back(check_pilots(options));
    results.push_back(check_noiseless_recovery(options));
    return results;
}

} // namespace sdmimo

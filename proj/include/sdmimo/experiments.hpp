// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo harness: NMSE-vs-SNR sweeps with unquantized and plain 1-bit
// baselines, the input/quantization-noise correlation experiment, and the
// receive-side voltage level rule.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sdmimo/channel.hpp"
#include "sdmimo/estimator.hpp"
#include "sdmimo/pilots.hpp"

namespace sdmimo {

enum class Method {
    SD,     // spatial sigma-delta receiver with the matched noise model
    UQ,     // unquantized benchmark, identity whitener
    OneBit, // plain 1-bit quantizer (b = 1), identity whitener
};

std::string_view method_name(Method m);
std::optional<Method> method_from_name(std::string_view name);

struct MonteCarloConfig {
    Eigen::Index n_transmit = 8;
    Eigen::Index n_receive = 128;
    double spacing_ratio = 0.125; // d / lambda
    std::vector<double> snr_db_list = {-15.0, -10.0, -5.0, 0.0, 5.0, 10.0};
    double angular_halfwidth_deg = 30.0; // angles drawn uniform on [-Theta, Theta]
    int n_trials = 200;
    std::uint64_t base_seed = 1;
    std::vector<Method> methods = {Method::SD, Method::UQ, Method::OneBit};
    int repetition = 1;    // pilot blocks stacked columnwise
    bool noiseless = false; // force W = 0
    AngleGrid grid{};

    ArrayGeometry bs_geometry() const;
    ArrayGeometry ms_geometry() const;
    void validate() const;
};

double snr_db_to_power(double snr_db);

// Receive-side quantizer level b = sqrt(2 P N_t) + 3 sqrt(0.5): headroom for
// the largest possible signal mean (|alpha| = 1) plus three noise sigmas per
// real component, so clipping is negligible.
double select_voltage_level(double snr_power, Eigen::Index n_transmit);

// Shared per-(method, power) state for repeated trials.
struct MethodContext {
    Method method = Method::UQ;
    double level_b = 1.0; // receive-side level (SD only)
    std::shared_ptr<const NoiseModel> noise;
    std::shared_ptr<const PilotSet> pilots;
    Eigen::MatrixXcd transmit; // pilots repeated `repetition` times
    std::shared_ptr<const MusicGridCache> bs_cache;
    std::shared_ptr<const MusicGridCache> ms_cache;
    int repetition = 1;
    AngleGrid grid{};
    ArrayGeometry bs{};
    ArrayGeometry ms{};
};

MethodContext make_method_context(Method method, double snr_power,
                                  const MonteCarloConfig& config);

struct TrialOutcome {
    double error_fro_sq = 0.0;   // ||H_check - H||_F^2
    double channel_fro_sq = 0.0; // ||H||_F^2
};

// One seeded pilot transmission and estimation pass. The same seed yields
// the same W for every method, so methods within a trial are paired.
TrialOutcome run_trial(const ChannelScenario& scenario, Method method, double snr_power,
                       std::uint64_t seed, const MethodContext& context,
                       bool noiseless = false);
// Convenience overload that builds the context on the fly.
TrialOutcome run_trial(const ChannelScenario& scenario, Method method, double snr_power,
                       std::uint64_t seed, const MonteCarloConfig& config);

struct NmseRow {
    Method method;
    double snr_db = 0.0;
    double nmse = 0.0;      // mean of numerators / mean of denominators
    double std_error = 0.0; // sample standard error of the per-trial ratios
    int n_trials = 0;
};

struct NmseTable {
    std::vector<NmseRow> rows;
};

// Runs every (method, SNR) pair on shared per-trial scenarios and noise.
// Trials may execute in parallel (n_threads = 0 reads SDMIMO_THREADS, else
// hardware concurrency); aggregation order is fixed, so results do not
// depend on the thread count.
NmseTable nmse_sweep(const MonteCarloConfig& config, int n_threads = 0);

struct CorrelationProfile {
    Eigen::VectorXd corr_sd;     // per-antenna Pearson corr of Re(input), Re(qtilde)
    Eigen::VectorXd corr_onebit; // same with plain 1-bit noise y - x
    int n_draws = 0;
};

// Broadside scenario (theta = phi = 0, unit gain); each draw synthesizes one
// receive column (pilot columns cycled) with fresh noise.
CorrelationProfile correlation_experiment(double snr_db, int n_draws, std::uint64_t seed,
                                          const MonteCarloConfig& config = {});

// Sample Pearson correlation; NaN when either variance vanishes.
double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Mean of |v_i| over the index range [begin, end), skipping NaN entries.
double mean_abs_skip_nan(const Eigen::VectorXd& v, Eigen::Index begin, Eigen::Index end);

} // namespace sdmimo

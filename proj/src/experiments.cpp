// SPDX-License-Identifier: Apache-2.0
#include "sdmimo/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "sdmimo/rng.hpp"

namespace sdmimo {

namespace {

// Sub-stream indices under a trial seed.
constexpr std::uint64_t kScenarioStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

int resolve_thread_count(int requested) {
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv("SDMIMO_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed > 0)
            return parsed;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

ChannelScenario draw_scenario(const MonteCarloConfig& config, std::uint64_t trial_seed) {
    rng::Stream stream(rng::derive(trial_seed, kScenarioStream));
    const double theta = stream.uniform(-config.angular_halfwidth_deg,
                                        config.angular_halfwidth_deg);
    const double phi = stream.uniform(-config.angular_halfwidth_deg,
                                      config.angular_halfwidth_deg);
    const Complex alpha = std::polar(1.0, stream.uniform(0.0, 2.0 * std::numbers::pi));
    return make_los_channel(theta, phi, alpha, config.bs_geometry(), config.ms_geometry());
}

} // namespace

std::string_view method_name(Method m) {
    switch (m) {
    case Method::SD:
        return "SD";
    case Method::UQ:
        return "UQ";
    case Method::OneBit:
        return "ONEBIT";
    }
    return "UNKNOWN";
}

std::optional<Method> method_from_name(std::string_view name) {
    if (name == "SD")
        return Method::SD;
    if (name == "UQ")
        return Method::UQ;
    if (name == "ONEBIT")
        return Method::OneBit;
    return std::nullopt;
}

ArrayGeometry MonteCarloConfig::bs_geometry() const {
    return ArrayGeometry{n_receive, spacing_ratio, 1.0};
}

ArrayGeometry MonteCarloConfig::ms_geometry() const {
    return ArrayGeometry{n_transmit, spacing_ratio, 1.0};
}

void MonteCarloConfig::validate() const {
    if (n_transmit < 1)
        throw std::invalid_argument("n_transmit must be >= 1");
    if (n_receive < 1)
        throw std::invalid_argument("n_receive must be >= 1");
    if (!(spacing_ratio > 0.0))
        throw std::invalid_argument("spacing_ratio must be positive");
    if (snr_db_list.empty())
        throw std::invalid_argument("snr_db_list must not be empty");
    for (double snr : snr_db_list)
        if (!std::isfinite(snr))
            throw std::invalid_argument("snr_db_list entries must be finite");
    if (angular_halfwidth_deg < 0.0 || angular_halfwidth_deg > 85.0)
        throw std::invalid_argument("angular_halfwidth_deg must lie in [0, 85]");
    if (n_trials < 1)
        throw std::invalid_argument("n_trials must be >= 1");
    if (methods.empty())
        throw std::invalid_argument("methods must not be empty");
    if (repetition < 1)
        throw std::invalid_argument("repetition must be >= 1");
    grid.validate();
}

double snr_db_to_power(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

double select_voltage_level(double snr_power, Eigen::Index n_transmit) {
    if (!(snr_power > 0.0) || !std::isfinite(snr_power))
        throw std::invalid_argument("select_voltage_level: snr_power must be positive");
    if (n_transmit < 1)
        throw std::invalid_argument("select_voltage_level: n_transmit must be >= 1");
    return std::sqrt(2.0 * snr_power * static_cast<double>(n_transmit)) +
           3.0 * std::sqrt(0.5);
}

MethodContext make_method_context(Method method, double snr_power,
                                  const MonteCarloConfig& config) {
    config.validate();
    MethodContext context;
    context.method = method;
    context.repetition = config.repetition;
    context.grid = config.grid;
    context.bs = config.bs_geometry();
    context.ms = config.ms_geometry();
    context.pilots = std::make_shared<PilotSet>(predistort_pilots(config.n_transmit));
    context.transmit = repeat_blocks(context.pilots->transmit_s, config.repetition);
    context.ms_cache =
        std::make_shared<MusicGridCache>(build_music_grid_cache(context.ms, config.grid));

    if (method == Method::SD) {
        context.level_b = select_voltage_level(snr_power, config.n_transmit);
        context.noise = std::make_shared<NoiseModel>(
            combined_noise_covariance(config.n_receive, context.level_b));
    } else {
        context.level_b = 1.0;
        context.noise = std::make_shared<NoiseModel>(NoiseModel::identity(config.n_receive));
    }
    context.bs_cache = std::make_shared<MusicGridCache>(
        build_music_grid_cache(*context.noise, context.bs, config.grid));
    return context;
}

TrialOutcome run_trial(const ChannelScenario& scenario, Method method, double snr_power,
                       std::uint64_t seed, const MethodContext& context, bool noiseless) {
    if (method != context.method)
        throw std::invalid_argument("run_trial: context was built for another method");
    if (method == Method::SD &&
        std::abs(std::abs(scenario.gain_alpha) - 1.0) > 1e-9)
        throw std::invalid_argument(
            "run_trial: the voltage level rule assumes a unit-magnitude gain");

    auto record = synthesize_received(scenario, context.transmit, snr_power,
                                      rng::derive(seed, kNoiseStream), noiseless);

    Eigen::MatrixXcd received;
    switch (method) {
    case Method::SD:
        receive_sigma_delta(record, SigmaDeltaConfig{scenario.bs_array.n_elements,
                                                     context.level_b});
        received = std::move(record.quantized);
        break;
    case Method::UQ:
        received = std::move(record.received);
        break;
    case Method::OneBit:
        received = record.received.unaryExpr(
            [](Complex v) { return quantize_1bit(v, 1.0); });
        break;
    }

    const auto result = estimate_channel(received, context.transmit, snr_power, context.noise,
                                         context.bs, context.ms, context.grid,
                                         context.bs_cache.get(), context.ms_cache.get(),
                                         context.repetition);
    TrialOutcome outcome;
    outcome.error_fro_sq = (result.h_check - scenario.channel).squaredNorm();
    outcome.channel_fro_sq = scenario.channel.squaredNorm();
    return outcome;
}

TrialOutcome run_trial(const ChannelScenario& scenario, Method method, double snr_power,
                       std::uint64_t seed, const MonteCarloConfig& config) {
    return run_trial(scenario, method, snr_power, seed,
                     make_method_context(method, snr_power, config), config.noiseless);
}

NmseTable nmse_sweep(const MonteCarloConfig& config, int n_threads) {
    config.validate();

    const std::size_t n_methods = config.methods.size();
    const std::size_t n_snr = config.snr_db_list.size();
    const std::size_t cells = n_methods * n_snr;

    // Contexts are immutable during the sweep and shared across threads.
    // Pilots, the departure-side cache, and the identity whitener pieces do
    // not depend on the SNR, so they are built once; the sigma-delta noise
    // model and arrival-side cache depend on the voltage level per SNR.
    MethodContext shared;
    shared.repetition = config.repetition;
    shared.grid = config.grid;
    shared.bs = config.bs_geometry();
    shared.ms = config.ms_geometry();
    shared.pilots = std::make_shared<PilotSet>(predistort_pilots(config.n_transmit));
    shared.transmit = repeat_blocks(shared.pilots->transmit_s, config.repetition);
    shared.ms_cache =
        std::make_shared<MusicGridCache>(build_music_grid_cache(shared.ms, config.grid));
    const auto identity_noise =
        std::make_shared<NoiseModel>(NoiseModel::identity(config.n_receive));
    const auto identity_bs_cache = std::make_shared<MusicGridCache>(
        build_music_grid_cache(*identity_noise, shared.bs, config.grid));

    std::vector<MethodContext> contexts;
    contexts.reserve(cells);
    for (std::size_t mi = 0; mi < n_methods; ++mi)
        for (std::size_t si = 0; si < n_snr; ++si) {
            MethodContext context = shared;
            context.method = config.methods[mi];
            if (context.method == Method::SD) {
                context.level_b = select_voltage_level(
                    snr_db_to_power(config.snr_db_list[si]), config.n_transmit);
                context.noise = std::make_shared<NoiseModel>(
                    combined_noise_covariance(config.n_receive, context.level_b));
                context.bs_cache = std::make_shared<MusicGridCache>(
                    build_music_grid_cache(*context.noise, shared.bs, config.grid));
            } else {
                context.level_b = 1.0;
                context.noise = identity_noise;
                context.bs_cache = identity_bs_cache;
            }
            contexts.push_back(std::move(context));
        }

    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(config.n_trials) * cells);

    std::atomic<int> next_trial{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&]() {
        for (;;) {
            const int trial = next_trial.fetch_add(1);
            if (trial >= config.n_trials)
                return;
            try {
                const std::uint64_t trial_seed =
                    rng::derive(config.base_seed, static_cast<std::uint64_t>(trial));
                const auto scenario = draw_scenario(config, trial_seed);
                for (std::size_t cell = 0; cell < cells; ++cell) {
                    const double power = snr_db_to_power(config.snr_db_list[cell % n_snr]);
                    outcomes[static_cast<std::size_t>(trial) * cells + cell] =
                        run_trial(scenario, contexts[cell].method, power, trial_seed,
                                  contexts[cell], config.noiseless);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                return;
            }
        }
    };

    const int threads = std::min(resolve_thread_count(n_threads), config.n_trials);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    if (failure)
        std::rethrow_exception(failure);

    // Fixed-order reduction: (method, snr) in config order, trials ascending.
    NmseTable table;
    table.rows.reserve(cells);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        double sum_error = 0.0, sum_channel = 0.0;
        for (int trial = 0; trial < config.n_trials; ++trial) {
            const auto& o = outcomes[static_cast<std::size_t>(trial) * cells + cell];
            sum_error += o.error_fro_sq;
            sum_channel += o.channel_fro_sq;
        }
        const double nmse = sum_error / sum_channel;

        // Spread of the per-trial ratios around the reported estimate.
        double sum_sq_dev = 0.0;
        for (int trial = 0; trial < config.n_trials; ++trial) {
            const auto& o = outcomes[static_cast<std::size_t>(trial) * cells + cell];
            const double ratio = o.error_fro_sq / o.channel_fro_sq;
            sum_sq_dev += (ratio - nmse) * (ratio - nmse);
        }
        const double std_error =
            config.n_trials > 1
                ? std::sqrt(sum_sq_dev / (config.n_trials - 1)) / std::sqrt(config.n_trials)
                : 0.0;

        NmseRow row;
        row.method = config.methods[cell / n_snr];
        row.snr_db = config.snr_db_list[cell % n_snr];
        row.nmse = nmse;
        row.std_error = std_error;
        row.n_trials = config.n_trials;
        table.rows.push_back(row);
    }
    return table;
}

double pearson_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("pearson_correlation: need two equal-length samples");
    const double n = static_cast<double>(a.size());
    const double mean_a = a.mean();
    const double mean_b = b.mean();
    const double cov = ((a.array() - mean_a) * (b.array() - mean_b)).sum() / n;
    const double var_a = (a.array() - mean_a).square().sum() / n;
    const double var_b = (b.array() - mean_b).square().sum() / n;
    const double denom = std::sqrt(var_a * var_b);
    if (!(denom > 0.0))
        return std::numeric_limits<double>::quiet_NaN();
    return cov / denom;
}

double mean_abs_skip_nan(const Eigen::VectorXd& v, Eigen::Index begin, Eigen::Index end) {
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index i = std::max<Eigen::Index>(begin, 0); i < std::min(end, v.size()); ++i) {
        if (std::isnan(v(i)))
            continue;
        sum += std::abs(v(i));
        ++count;
    }
    return count > 0 ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

CorrelationProfile correlation_experiment(double snr_db, int n_draws, std::uint64_t seed,
                                          const MonteCarloConfig& config) {
    if (n_draws < 100)
        throw std::invalid_argument("correlation_experiment: n_draws must be >= 100");
    config.validate();

    const double power = snr_db_to_power(snr_db);
    const double level = select_voltage_level(power, config.n_transmit);
    const SigmaDeltaConfig sd_config{config.n_receive, level};

    const auto scenario = make_los_channel(0.0, 0.0, Complex(1.0, 0.0), config.bs_geometry(),
                                           config.ms_geometry());
    const auto pilots = predistort_pilots(config.n_transmit);
    const double scale = std::sqrt(power / (2.0 * static_cast<double>(config.n_transmit)));

    const Eigen::Index n_r = config.n_receive;
    Eigen::MatrixXd sd_inputs(n_r, n_draws), sd_noise(n_r, n_draws);
    Eigen::MatrixXd ob_inputs(n_r, n_draws), ob_noise(n_r, n_draws);

    // Every draw transmits the first pilot symbol (the all-(1+j) column);
    // the per-draw variation comes from the receiver noise alone, as in a
    // repeated pilot measurement at the broadside operating point.
    const Eigen::VectorXcd s = pilots.transmit_s.col(0);
    const Eigen::VectorXcd signal_mean = scale * (scenario.channel * s);

    for (int draw = 0; draw < n_draws; ++draw) {
        rng::Stream stream(rng::derive(seed, static_cast<std::uint64_t>(draw)));
        Eigen::VectorXcd w(n_r);
        for (Eigen::Index i = 0; i < n_r; ++i)
            w(i) = stream.complex_gaussian();
        const Eigen::VectorXcd x = signal_mean + w;

        const auto trace = sigma_delta_forward(x, sd_config);
        sd_inputs.col(draw) = trace.input_x.real();
        sd_noise.col(draw) = trace.floor_noise_qtilde.real();

        ob_inputs.col(draw) = x.real();
        for (Eigen::Index i = 0; i < n_r; ++i)
            ob_noise(i, draw) = (quantize_1bit(x(i), 1.0) - x(i)).real();
    }

    CorrelationProfile profile;
    profile.n_draws = n_draws;
    profile.corr_sd.resize(n_r);
    profile.corr_onebit.resize(n_r);
    for (Eigen::Index i = 0; i < n_r; ++i) {
        profile.corr_sd(i) =
            pearson_correlation(sd_inputs.row(i).transpose(), sd_noise.row(i).transpose());
        profile.corr_onebit(i) =
            pearson_correlation(ob_inputs.row(i).transpose(), ob_noise.row(i).transpose());
    }
    return profile;
}

} // namespace sdmimo

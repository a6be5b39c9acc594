// SPDX-License-Identifier: Apache-2.0
#include "sdmimo/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sdmimo/rng.hpp"

namespace sdmimo {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
} // namespace

void ArrayGeometry::validate() const {
    if (n_elements < 1)
        throw std::invalid_argument("ArrayGeometry: n_elements must be >= 1");
    if (!(spacing_d > 0.0) || !(wavelength > 0.0))
        throw std::invalid_argument("ArrayGeometry: spacing and wavelength must be positive");
}

Eigen::VectorXcd steering_vector(double angle_deg, const ArrayGeometry& geometry) {
    geometry.validate();
    if (!std::isfinite(angle_deg))
        throw std::invalid_argument("steering_vector: non-finite angle");

    const double phase_step =
        2.0 * std::numbers::pi * geometry.spacing_ratio() * std::sin(angle_deg * kDegToRad);
    Eigen::VectorXcd a(geometry.n_elements);
    a(0) = Complex(1.0, 0.0); // phase reference
    for (Eigen::Index n = 1; n < geometry.n_elements; ++n)
        a(n) = std::polar(1.0, phase_step * static_cast<double>(n));
    return a;
}

ChannelScenario make_los_channel(double theta_deg, double phi_deg, Complex alpha,
                                 const ArrayGeometry& bs, const ArrayGeometry& ms) {
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag()))
        throw std::invalid_argument("make_los_channel: non-finite gain");
    ChannelScenario scenario;
    scenario.aoa_theta_deg = theta_deg;
    scenario.aod_phi_deg = phi_deg;
    scenario.gain_alpha = alpha;
    scenario.bs_array = bs;
    scenario.ms_array = ms;
    scenario.channel =
        alpha * (steering_vector(theta_deg, bs) * steering_vector(phi_deg, ms).adjoint());
    return scenario;
}

TransmissionRecord synthesize_received(const ChannelScenario& scenario,
                                       const Eigen::MatrixXcd& transmit_s,
                                       double snr_power, std::uint64_t rng_seed,
                                       bool noiseless) {
    const Eigen::Index n_t = scenario.ms_array.n_elements;
    const Eigen::Index n_r = scenario.bs_array.n_elements;
    if (transmit_s.rows() != n_t)
        throw std::invalid_argument("synthesize_received: transmit matrix has wrong row count");
    if (!(snr_power > 0.0) || !std::isfinite(snr_power))
        throw std::invalid_argument("synthesize_received: snr_power must be positive");
    for (Eigen::Index c = 0; c < transmit_s.cols(); ++c)
        for (Eigen::Index r = 0; r < n_t; ++r) {
            const Complex s = transmit_s(r, c);
            if (std::abs(s.real()) != 1.0 || std::abs(s.imag()) != 1.0)
                throw std::invalid_argument(
                    "synthesize_received: transmit entries must lie in {+-1 +- j}");
        }

    TransmissionRecord record;
    record.snr_power = snr_power;
    if (noiseless) {
        record.noise = Eigen::MatrixXcd::Zero(n_r, transmit_s.cols());
    } else {
        rng::Stream stream(rng_seed);
        record.noise = stream.complex_gaussian_matrix(n_r, transmit_s.cols());
    }
    const double scale = std::sqrt(snr_power / (2.0 * static_cast<double>(n_t)));
    record.received = scale * (scenario.channel * transmit_s) + record.noise;
    return record;
}

void receive_sigma_delta(TransmissionRecord& record, const SigmaDeltaConfig& config) {
    config.validate();
    if (record.received.rows() != config.n_channels)
        throw std::invalid_argument("receive_sigma_delta: row count does not match n_channels");
    record.quantized.resize(record.received.rows(), record.received.cols());
    for (Eigen::Index c = 0; c < record.received.cols(); ++c) {
        const auto trace = sigma_delta_forward(record.received.col(c), config);
        record.quantized.col(c) = trace.output_y;
    }
}

} // namespace sdmimo

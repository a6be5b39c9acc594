// SPDX-License-Identifier: Apache-2.0
//
// Line-of-sight mmWave MIMO channel: ULA steering vectors, rank-1 channel
// construction, and received-signal synthesis with complex Gaussian noise.
#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Core>

#include "sdmimo/sigma_delta.hpp"

namespace sdmimo {

struct ArrayGeometry {
    Eigen::Index n_elements = 1;
    double spacing_d = 0.125; // meters
    double wavelength = 1.0;  // meters

    double spacing_ratio() const { return spacing_d / wavelength; }
    void validate() const;
};

// a(angle)_n = exp(j 2 pi (d/lambda) (n-1) sin(angle)); the first element is
// the phase reference, so a(angle)_1 = 1 exactly.
Eigen::VectorXcd steering_vector(double angle_deg, const ArrayGeometry& geometry);

struct ChannelScenario {
    double aoa_theta_deg = 0.0;
    double aod_phi_deg = 0.0;
    Complex gain_alpha{1.0, 0.0};
    ArrayGeometry bs_array;
    ArrayGeometry ms_array;
    Eigen::MatrixXcd channel; // N_r x N_t, rank 1
};

// H = alpha a_BS(theta) a_MS(phi)^H.
ChannelScenario make_los_channel(double theta_deg, double phi_deg, Complex alpha,
                                 const ArrayGeometry& bs, const ArrayGeometry& ms);

struct TransmissionRecord {
    double snr_power = 1.0;     // linear-scale transmit power P (= uplink SNR)
    Eigen::MatrixXcd noise;     // W, N_r x M
    Eigen::MatrixXcd received;  // X = sqrt(P / 2 N_t) H S + W
    Eigen::MatrixXcd quantized; // Y, filled by receive_sigma_delta
};

// W entries are i.i.d. CN(0, 1), reproducible from rng_seed; the noiseless
// flag zeroes W instead (an explicit mode, not a magic seed).
TransmissionRecord synthesize_received(const ChannelScenario& scenario,
                                       const Eigen::MatrixXcd& transmit_s,
                                       double snr_power, std::uint64_t rng_seed,
                                       bool noiseless = false);

// Each column of X runs independently through the spatial converter;
// columns correspond to different time instants.
void receive_sigma_delta(TransmissionRecord& record, const SigmaDeltaConfig& config);

} // namespace sdmimo

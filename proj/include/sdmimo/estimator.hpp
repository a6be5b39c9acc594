// SPDX-License-Identifier: Apache-2.0
//
// Channel parameter recovery from quantized receive data: prewhitening and
// despreading, SVD subspace split, MUSIC pseudo-spectrum peak search, and
// least-squares path gain.
#pragma once

#include <memory>

#include <Eigen/Core>

#include "sdmimo/channel.hpp"
#include "sdmimo/sigma_delta.hpp"

namespace sdmimo {

struct AngleGrid {
    double lo_deg = -89.9;
    double hi_deg = 89.9;
    Eigen::Index n_points = 4096;
    double refine_tol_deg = 1e-4; // golden-section bracket width

    double step_deg() const { return (hi_deg - lo_deg) / static_cast<double>(n_points - 1); }
    double angle_at(Eigen::Index k) const { return lo_deg + step_deg() * static_cast<double>(k); }
    void validate() const;
};

// Steering vectors and whitened steering norms precomputed over a grid.
// Reuse across trials that share the same whitener, geometry, and grid.
struct MusicGridCache {
    AngleGrid grid;
    Eigen::MatrixXcd steering;      // n_elements x n_points
    Eigen::VectorXd whitened_norm2; // ||W a(angle_k)||^2
};

MusicGridCache build_music_grid_cache(const NoiseModel& noise,
                                      const ArrayGeometry& geometry,
                                      const AngleGrid& grid);
// Identity whitener variant.
MusicGridCache build_music_grid_cache(const ArrayGeometry& geometry,
                                      const AngleGrid& grid);

struct WhitenedChannelEstimate {
    Eigen::MatrixXcd h_hat;                    // N_r x N_t
    std::shared_ptr<const NoiseModel> whitener; // model used to form h_hat
};

// h_hat = W Y S^H / sqrt(2 P N_t); with pilot repetition K, an extra 1/K.
// transmit_s is the full (possibly repeated) pilot block.
WhitenedChannelEstimate whiten_despread(const Eigen::MatrixXcd& quantized_y,
                                        const Eigen::MatrixXcd& transmit_s,
                                        double snr_power,
                                        std::shared_ptr<const NoiseModel> noise,
                                        int repetition = 1);

struct SubspaceSplit {
    Eigen::VectorXcd signal_left;   // p_s
    Eigen::MatrixXcd noise_left;    // P_n, N_r x (N_r - 1)
    Eigen::VectorXcd signal_right;  // q_s
    Eigen::MatrixXcd noise_right;   // Q_n, N_t x (N_t - 1)
    Eigen::VectorXd singular_values; // descending
};

// Full SVD; the rank-1 model fixes the signal subspace dimension at one.
SubspaceSplit split_subspaces(const WhitenedChannelEstimate& estimate);

struct SpectrumPeak {
    double angle_deg = 0.0;
    Eigen::VectorXd spectrum; // pseudo-spectrum over the grid
};

// Peak of rho(angle) = ||W a(angle)||^2 / ||P_n^H W a(angle)||^2 over the
// grid, refined by golden-section search within one grid step; ties break
// toward the smaller angle. The whitened-norm normalization removes the
// spurious response where W attenuates the steering manifold; for an
// identity whitener it is the plain MUSIC spectrum scaled by the constant
// ||a||^2 = N, so the peak location is unchanged. Denominators below
// 1e-300 are clamped, so the spectrum stays finite and positive.
SpectrumPeak music_estimate_aoa(const SubspaceSplit& split, const NoiseModel& noise,
                                const ArrayGeometry& bs_geometry,
                                const AngleGrid& grid = {},
                                const MusicGridCache* cache = nullptr);

// Same search with rho(angle) = N_t / ||Q_n^H a(angle)||^2 (no whitener).
SpectrumPeak music_estimate_aod(const SubspaceSplit& split,
                                const ArrayGeometry& ms_geometry,
                                const AngleGrid& grid = {},
                                const MusicGridCache* cache = nullptr);

// Least squares: alpha = d^H h / ||d||^2 with d = vec(W a_BS a_MS^H) and
// h = vec(h_hat), vec being column-major stacking.
Complex estimate_gain(const WhitenedChannelEstimate& estimate, double theta_hat_deg,
                      double phi_hat_deg, const NoiseModel& noise,
                      const ArrayGeometry& bs_geometry, const ArrayGeometry& ms_geometry);

// Rank-1 reconstruction from unwhitened steering vectors.
Eigen::MatrixXcd reconstruct_channel(double theta_hat_deg, double phi_hat_deg,
                                     Complex alpha_hat, const ArrayGeometry& bs_geometry,
                                     const ArrayGeometry& ms_geometry);

struct EstimationResult {
    double theta_hat_deg = 0.0;
    double phi_hat_deg = 0.0;
    Complex alpha_hat{0.0, 0.0};
    Eigen::MatrixXcd h_check;   // alpha_hat a_BS(theta_hat) a_MS(phi_hat)^H
    Eigen::VectorXd spectrum_bs;
    Eigen::VectorXd spectrum_ms;
};

// Full chain: whiten/despread, split, both angle searches, gain, rebuild.
// Optional caches must match the noise model, geometries, and grid.
EstimationResult estimate_channel(const Eigen::MatrixXcd& quantized_y,
                                  const Eigen::MatrixXcd& transmit_s, double snr_power,
                                  std::shared_ptr<const NoiseModel> noise,
                                  const ArrayGeometry& bs_geometry,
                                  const ArrayGeometry& ms_geometry,
                                  const AngleGrid& grid = {},
                                  const MusicGridCache* bs_cache = nullptr,
                                  const MusicGridCache* ms_cache = nullptr,
                                  int repetition = 1);

} // namespace sdmimo

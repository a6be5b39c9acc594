// SPDX-License-Identifier: Apache-2.0
#include "sdmimo/estimator.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace sdmimo {

namespace {

constexpr double kDenomFloor = 1e-300;

// Normalized noise-subspace rejection ||P_n^H w||^2 / ||w||^2 for w = W a.
// [p_s | P_n] is unitary, so ||P_n^H w||^2 = ||w||^2 - |p_s^H w|^2; the
// complement form needs only the signal vector, which keeps the grid scan
// at O(N) per angle instead of O(N^2). The normalization matters for a
// non-identity whitener: without it the spectrum has a data-independent
// floor of 1 / ||W a||^2 wherever the whitener attenuates the steering
// manifold, which swamps the true peak at the sector edges.
double projection_denominator(double norm2, Complex signal_overlap) {
    return std::max((norm2 - std::norm(signal_overlap)) / norm2, kDenomFloor);
}

bool grids_match(const AngleGrid& a, const AngleGrid& b) {
    return a.lo_deg == b.lo_deg && a.hi_deg == b.hi_deg && a.n_points == b.n_points;
}

struct PeakSearchInput {
    const Eigen::VectorXcd& signal;      // p_s or q_s
    const Eigen::MatrixXcd* whitener;    // nullptr -> identity
    const ArrayGeometry& geometry;
    const AngleGrid& grid;
    const MusicGridCache* cache;         // may be nullptr
};

double spectrum_denominator_at(const PeakSearchInput& in, double angle_deg) {
    const Eigen::VectorXcd a = steering_vector(angle_deg, in.geometry);
    if (in.whitener) {
        const Eigen::VectorXcd wa = *in.whitener * a;
        return projection_denominator(wa.squaredNorm(), in.signal.dot(wa));
    }
    return projection_denominator(a.squaredNorm(), in.signal.dot(a));
}

// Golden-section maximization of the pseudo-spectrum on [lo, hi]; ties keep
// the left half so equal values resolve toward the smaller angle.
double refine_peak(const PeakSearchInput& in, double lo, double hi, double tol) {
    constexpr double kRatio = 0.6180339887498949; // (sqrt(5) - 1) / 2
    double c = hi - kRatio * (hi - lo);
    double d = lo + kRatio * (hi - lo);
    double fc = spectrum_denominator_at(in, c);
    double fd = spectrum_denominator_at(in, d);
    while (hi - lo > tol) {
        if (fc <= fd) { // smaller denominator = larger spectrum
            hi = d;
            d = c;
            fd = fc;
            c = hi - kRatio * (hi - lo);
            fc = spectrum_denominator_at(in, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + kRatio * (hi - lo);
            fd = spectrum_denominator_at(in, d);
        }
    }
    return 0.5 * (lo + hi);
}

SpectrumPeak peak_search(const PeakSearchInput& in) {
    in.grid.validate();
    MusicGridCache local;
    const MusicGridCache* cache = in.cache;
    if (cache) {
        if (!grids_match(cache->grid, in.grid) ||
            cache->steering.rows() != in.geometry.n_elements)
            throw std::invalid_argument("music peak search: cache does not match call");
    } else {
        local = in.whitener
                    ? build_music_grid_cache(NoiseModel{Eigen::MatrixXcd(), *in.whitener},
                                             in.geometry, in.grid)
                    : build_music_grid_cache(in.geometry, in.grid);
        cache = &local;
    }

    // Signal overlaps over the whole grid in one pass.
    Eigen::VectorXcd lifted = in.whitener ? (in.whitener->adjoint() * in.signal).eval()
                                          : in.signal;
    const Eigen::VectorXcd overlaps = cache->steering.adjoint() * lifted;

    SpectrumPeak peak;
    peak.spectrum.resize(in.grid.n_points);
    Eigen::Index argmax = 0;
    double best = -1.0;
    for (Eigen::Index k = 0; k < in.grid.n_points; ++k) {
        const double denom =
            projection_denominator(cache->whitened_norm2(k), std::conj(overlaps(k)));
        peak.spectrum(k) = 1.0 / denom;
        if (peak.spectrum(k) > best) { // strict: ties keep the smaller angle
            best = peak.spectrum(k);
            argmax = k;
        }
    }

    const double lo = std::max(in.grid.lo_deg, in.grid.angle_at(std::max<Eigen::Index>(argmax, 1) - 1));
    const double hi = std::min(in.grid.hi_deg,
                               in.grid.angle_at(std::min(argmax + 1, in.grid.n_points - 1)));
    peak.angle_deg = refine_peak(in, lo, hi, in.grid.refine_tol_deg);
    return peak;
}

} // namespace

void AngleGrid::validate() const {
    if (n_points < 2)
        throw std::invalid_argument("AngleGrid: need at least two points");
    if (!(lo_deg < hi_deg) || lo_deg <= -90.0 || hi_deg >= 90.0)
        throw std::invalid_argument("AngleGrid: range must lie inside (-90, 90)");
    if (!(refine_tol_deg > 0.0))
        throw std::invalid_argument("AngleGrid: refinement tolerance must be positive");
}

MusicGridCache build_music_grid_cache(const NoiseModel& noise, const ArrayGeometry& geometry,
                                      const AngleGrid& grid) {
    grid.validate();
    geometry.validate();
    if (noise.inverse_sqrt.rows() != geometry.n_elements)
        throw std::invalid_argument("build_music_grid_cache: whitener size mismatch");

    MusicGridCache cache;
    cache.grid = grid;
    cache.steering.resize(geometry.n_elements, grid.n_points);
    for (Eigen::Index k = 0; k < grid.n_points; ++k)
        cache.steering.col(k) = steering_vector(grid.angle_at(k), geometry);
    cache.whitened_norm2 = (noise.inverse_sqrt * cache.steering).colwise().squaredNorm();
    return cache;
}

MusicGridCache build_music_grid_cache(const ArrayGeometry& geometry, const AngleGrid& grid) {
    grid.validate();
    geometry.validate();
    MusicGridCache cache;
    cache.grid = grid;
    cache.steering.resize(geometry.n_elements, grid.n_points);
    for (Eigen::Index k = 0; k < grid.n_points; ++k)
        cache.steering.col(k) = steering_vector(grid.angle_at(k), geometry);
    // Unit-modulus entries: every whitened norm is exactly N.
    cache.whitened_norm2 =
        Eigen::VectorXd::Constant(grid.n_points, static_cast<double>(geometry.n_elements));
    return cache;
}

WhitenedChannelEstimate whiten_despread(const Eigen::MatrixXcd& quantized_y,
                                        const Eigen::MatrixXcd& transmit_s, double snr_power,
                                        std::shared_ptr<const NoiseModel> noise,
                                        int repetition) {
    if (!noise)
        throw std::invalid_argument("whiten_despread: missing noise model");
    if (repetition < 1)
        throw std::invalid_argument("whiten_despread: repetition must be >= 1");
    if (!(snr_power > 0.0) || !std::isfinite(snr_power))
        throw std::invalid_argument("whiten_despread: snr_power must be positive and finite");
    if (quantized_y.cols() != transmit_s.cols())
        throw std::invalid_argument("whiten_despread: column count mismatch");
    if (noise->inverse_sqrt.rows() != quantized_y.rows())
        throw std::invalid_argument("whiten_despread: whitener size mismatch");
    const Eigen::Index n_t = transmit_s.rows();
    if (transmit_s.cols() != static_cast<Eigen::Index>(repetition) * n_t)
        throw std::invalid_argument("whiten_despread: pilot block count mismatch");

    const double scale =
        1.0 / (std::sqrt(2.0 * snr_power * static_cast<double>(n_t)) * repetition);
    WhitenedChannelEstimate estimate;
    estimate.h_hat = noise->inverse_sqrt * (quantized_y * transmit_s.adjoint()) * scale;
    estimate.whitener = std::move(noise);
    return estimate;
}

SubspaceSplit split_subspaces(const WhitenedChannelEstimate& estimate) {
    const Eigen::Index n_r = estimate.h_hat.rows();
    const Eigen::Index n_t = estimate.h_hat.cols();
    if (n_r < 2 || n_t < 2)
        throw std::invalid_argument("split_subspaces: need at least 2 elements per side");

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(estimate.h_hat,
                                           Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success)
        throw std::runtime_error("split_subspaces: SVD did not converge");

    SubspaceSplit split;
    split.singular_values = svd.singularValues();
    split.signal_left = svd.matrixU().col(0);
    split.noise_left = svd.matrixU().rightCols(n_r - 1);
    split.signal_right = svd.matrixV().col(0);
    split.noise_right = svd.matrixV().rightCols(n_t - 1);
    return split;
}

SpectrumPeak music_estimate_aoa(const SubspaceSplit& split, const NoiseModel& noise,
                                const ArrayGeometry& bs_geometry, const AngleGrid& grid,
                                const MusicGridCache* cache) {
    if (split.signal_left.size() != bs_geometry.n_elements)
        throw std::invalid_argument("music_estimate_aoa: geometry does not match subspace");
    if (noise.inverse_sqrt.rows() != bs_geometry.n_elements ||
        noise.inverse_sqrt.cols() != bs_geometry.n_elements)
        throw std::invalid_argument("music_estimate_aoa: whitener size mismatch");
    return peak_search({split.signal_left, &noise.inverse_sqrt, bs_geometry, grid, cache});
}

SpectrumPeak music_estimate_aod(const SubspaceSplit& split, const ArrayGeometry& ms_geometry,
                                const AngleGrid& grid, const MusicGridCache* cache) {
    if (split.signal_right.size() != ms_geometry.n_elements)
        throw std::invalid_argument("music_estimate_aod: geometry does not match subspace");
    return peak_search({split.signal_right, nullptr, ms_geometry, grid, cache});
}

Complex estimate_gain(const WhitenedChannelEstimate& estimate, double theta_hat_deg,
                      double phi_hat_deg, const NoiseModel& noise,
                      const ArrayGeometry& bs_geometry, const ArrayGeometry& ms_geometry) {
    if (!std::isfinite(theta_hat_deg) || !std::isfinite(phi_hat_deg))
        throw std::invalid_argument("estimate_gain: non-finite angle estimate");

    const Eigen::VectorXcd wa = noise.inverse_sqrt * steering_vector(theta_hat_deg, bs_geometry);
    const Eigen::VectorXcd a_ms = steering_vector(phi_hat_deg, ms_geometry);
    // d = vec(wa a_ms^H) column-major, so d^H h = wa^H H a_ms and
    // ||d||^2 = ||wa||^2 ||a_ms||^2.
    const double denom = wa.squaredNorm() * a_ms.squaredNorm();
    return wa.dot(estimate.h_hat * a_ms) / denom;
}

Eigen::MatrixXcd reconstruct_channel(double theta_hat_deg, double phi_hat_deg, Complex alpha_hat,
                                     const ArrayGeometry& bs_geometry,
                                     const ArrayGeometry& ms_geometry) {
    return alpha_hat * (steering_vector(theta_hat_deg, bs_geometry) *
                        steering_vector(phi_hat_deg, ms_geometry).adjoint());
}

EstimationResult estimate_channel(const Eigen::MatrixXcd& quantized_y,
                                  const Eigen::MatrixXcd& transmit_s, double snr_power,
                                  std::shared_ptr<const NoiseModel> noise,
                                  const ArrayGeometry& bs_geometry,
                                  const ArrayGeometry& ms_geometry, const AngleGrid& grid,
                                  const MusicGridCache* bs_cache,
                                  const MusicGridCache* ms_cache, int repetition) {
    const auto estimate =
        whiten_despread(quantized_y, transmit_s, snr_power, std::move(noise), repetition);
    const auto split = split_subspaces(estimate);

    EstimationResult result;
    auto aoa = music_estimate_aoa(split, *estimate.whitener, bs_geometry, grid, bs_cache);
    auto aod = music_estimate_aod(split, ms_geometry, grid, ms_cache);
    result.theta_hat_deg = aoa.angle_deg;
    result.phi_hat_deg = aod.angle_deg;
    result.spectrum_bs = std::move(aoa.spectrum);
    result.spectrum_ms = std::move(aod.spectrum);
    result.alpha_hat = estimate_gain(estimate, result.theta_hat_deg, result.phi_hat_deg,
                                     *estimate.whitener, bs_geometry, ms_geometry);
    result.h_check = reconstruct_channel(result.theta_hat_deg, result.phi_hat_deg,
                                         result.alpha_hat, bs_geometry, ms_geometry);
    return result;
}

} // namespace sdmimo

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <complex>
#include <memory>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "helpers.hpp"
#include "sdmimo/estimator.hpp"
#include "sdmimo/pilots.hpp"
#include "sdmimo/rng.hpp"

using namespace sdmimo;
using cd = std::complex<double>;

namespace {

const ArrayGeometry kBs{128, 0.125, 1.0};
const ArrayGeometry kMs{8, 0.125, 1.0};

std::shared_ptr<const NoiseModel> identity_noise(Eigen::Index n) {
    return std::make_shared<NoiseModel>(NoiseModel::identity(n));
}

// Noiseless unquantized receive matrix for the given scenario.
Eigen::MatrixXcd noiseless_receive(const ChannelScenario& scenario,
                                   const Eigen::MatrixXcd& s, double power) {
    return synthesize_received(scenario, s, power, 0, true).received;
}

} // namespace

TEST_CASE("whiten_despread with identity whitener undoes the pilot spreading") {
    const auto pilots = predistort_pilots(8);
    const auto scenario = make_los_channel(14.0, -33.0, std::polar(1.0, 0.9), kBs, kMs);
    const auto x = noiseless_receive(scenario, pilots.transmit_s, 2.5);

    const auto estimate = whiten_despread(x, pilots.transmit_s, 2.5, identity_noise(128));
    CHECK((estimate.h_hat - scenario.channel).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("whiten_despread applies the whitener linearly") {
    const auto pilots = predistort_pilots(8);
    const auto scenario = make_los_channel(5.0, 10.0, cd(1.0, 0.0), kBs, kMs);
    const auto x = noiseless_receive(scenario, pilots.transmit_s, 1.0);

    auto noise = std::make_shared<NoiseModel>(combined_noise_covariance(128, 2.0));
    const auto estimate = whiten_despread(x, pilots.transmit_s, 1.0, noise);
    const Eigen::MatrixXcd expected = noise->inverse_sqrt * scenario.channel;
    CHECK((estimate.h_hat - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("whiten_despread miniature pipeline matches direct arithmetic") {
    const ArrayGeometry bs{2, 0.125, 1.0};
    const ArrayGeometry ms{2, 0.125, 1.0};
    const auto pilots = predistort_pilots(2);
    const auto scenario = make_los_channel(20.0, -10.0, std::polar(1.0, 1.1), bs, ms);
    const double power = 4.0;
    const double level = 5.0;

    auto record = synthesize_received(scenario, pilots.transmit_s, power, 0, true);
    receive_sigma_delta(record, SigmaDeltaConfig{2, level});

    auto noise = std::make_shared<NoiseModel>(combined_noise_covariance(2, level));
    const auto estimate =
        whiten_despread(record.quantized, pilots.transmit_s, power, noise);

    const Eigen::MatrixXcd expected = noise->inverse_sqrt * record.quantized *
                                      pilots.transmit_s.adjoint() /
                                      std::sqrt(2.0 * power * 2.0);
    CHECK((estimate.h_hat - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("whiten_despread averages repeated pilot blocks") {
    const auto pilots = predistort_pilots(4);
    const ArrayGeometry bs{16, 0.125, 1.0};
    const ArrayGeometry ms{4, 0.125, 1.0};
    const auto scenario = make_los_channel(-8.0, 21.0, cd(1.0, 0.0), bs, ms);
    const auto repeated = repeat_blocks(pilots.transmit_s, 3);
    const auto x = noiseless_receive(scenario, repeated, 1.0);

    const auto estimate = whiten_despread(x, repeated, 1.0, identity_noise(16), 3);
    CHECK((estimate.h_hat - scenario.channel).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("whiten_despread validates dimensions") {
    const auto pilots = predistort_pilots(4);
    CHECK_THROWS_AS(whiten_despread(Eigen::MatrixXcd::Zero(8, 3), pilots.transmit_s, 1.0,
                                    identity_noise(8)),
                    std::invalid_argument);
}

TEST_CASE("split_subspaces on an exact rank-1 matrix") {
    rng::Stream stream(21);
    Eigen::VectorXcd u(6), v(3);
    for (Eigen::Index i = 0; i < 6; ++i) u(i) = stream.complex_gaussian();
    for (Eigen::Index i = 0; i < 3; ++i) v(i) = stream.complex_gaussian();
    u.normalize();
    v.normalize();

    WhitenedChannelEstimate estimate{3.0 * (u * v.adjoint()), identity_noise(6)};
    const auto split = split_subspaces(estimate);

    // Proportionality via the projection residual onto the signal vector.
    CHECK((u - split.signal_left * split.signal_left.dot(u)).norm() <= 1e-10);
    CHECK((v - split.signal_right * split.signal_right.dot(v)).norm() <= 1e-10);
    CHECK((split.noise_left.adjoint() * u).norm() <= 1e-10);
    CHECK((split.noise_right.adjoint() * v).norm() <= 1e-10);
    CHECK(split.singular_values(0) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("split_subspaces on a diagonal matrix") {
    WhitenedChannelEstimate estimate{Eigen::Vector2cd(cd(3, 0), cd(1, 0)).asDiagonal(),
                                     identity_noise(2)};
    const auto split = split_subspaces(estimate);
    CHECK(std::abs(split.signal_left(0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(split.signal_right(0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(split.noise_left(1, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(split.singular_values(0) == doctest::Approx(3.0));
    CHECK(split.singular_values(1) == doctest::Approx(1.0));
}

TEST_CASE("split_subspaces has orthonormal factors and sorted spectrum") {
    rng::Stream stream(22);
    Eigen::MatrixXcd h(12, 4);
    for (Eigen::Index c = 0; c < 4; ++c)
        for (Eigen::Index r = 0; r < 12; ++r) h(r, c) = stream.complex_gaussian();

    const auto split = split_subspaces({h, identity_noise(12)});
    Eigen::MatrixXcd left(12, 12);
    left.col(0) = split.signal_left;
    left.rightCols(11) = split.noise_left;
    CHECK((left.adjoint() * left - Eigen::MatrixXcd::Identity(12, 12)).cwiseAbs().maxCoeff() <=
          1e-10);
    for (Eigen::Index i = 1; i < split.singular_values.size(); ++i)
        CHECK(split.singular_values(i) <= split.singular_values(i - 1));
}

TEST_CASE("split_subspaces is stable under small perturbations") {
    rng::Stream stream(23);
    Eigen::VectorXcd u(10), v(4);
    for (Eigen::Index i = 0; i < 10; ++i) u(i) = stream.complex_gaussian();
    for (Eigen::Index i = 0; i < 4; ++i) v(i) = stream.complex_gaussian();
    u.normalize();
    v.normalize();
    const Eigen::MatrixXcd base = u * v.adjoint();

    Eigen::MatrixXcd bump(10, 4);
    for (Eigen::Index c = 0; c < 4; ++c)
        for (Eigen::Index r = 0; r < 10; ++r) bump(r, c) = stream.complex_gaussian();
    bump *= 1e-6 / bump.norm();

    const auto clean = split_subspaces({base, identity_noise(10)});
    const auto noisy = split_subspaces({base + bump, identity_noise(10)});
    CHECK(test::subspace_angle(clean.signal_left, noisy.signal_left) <= 1e-5);
    CHECK(test::subspace_angle(clean.signal_right, noisy.signal_right) <= 1e-5);
}

TEST_CASE("split_subspaces requires at least two elements per side") {
    CHECK_THROWS_AS(split_subspaces({Eigen::MatrixXcd::Ones(1, 4), identity_noise(1)}),
                    std::invalid_argument);
    CHECK_THROWS_AS(split_subspaces({Eigen::MatrixXcd::Ones(4, 1), identity_noise(4)}),
                    std::invalid_argument);
}

namespace {

// Noiseless unquantized split for a given pair of angles.
SubspaceSplit noiseless_split(double theta_deg, double phi_deg,
                              std::shared_ptr<const NoiseModel> noise) {
    const auto pilots = predistort_pilots(8);
    const auto scenario = make_los_channel(theta_deg, phi_deg, std::polar(1.0, 0.4), kBs, kMs);
    const auto x = noiseless_receive(scenario, pilots.transmit_s, 1.0);
    return split_subspaces(whiten_despread(x, pilots.transmit_s, 1.0, noise));
}

} // namespace

TEST_CASE("MUSIC recovers broadside exactly in the noiseless limit") {
    auto noise = identity_noise(128);
    const auto split = noiseless_split(0.0, 0.0, noise);
    const auto peak = music_estimate_aoa(split, *noise, kBs);
    CHECK(std::abs(peak.angle_deg) <= 1e-4);
    CHECK(peak.spectrum.size() == 4096);
    CHECK(peak.spectrum.minCoeff() > 0.0);
    CHECK(peak.spectrum.allFinite());
}

TEST_CASE("MUSIC refines an off-grid angle of arrival") {
    auto noise = identity_noise(128);
    const auto split = noiseless_split(23.7, 0.0, noise);
    const auto peak = music_estimate_aoa(split, *noise, kBs);
    CHECK(std::abs(peak.angle_deg - 23.7) <= 1e-3);

    // Independent route: dense window scan with the explicit noise-subspace
    // projection at ten times the grid resolution.
    AngleGrid grid{};
    const double dense_step = grid.step_deg() / 10.0;
    const Eigen::Index count = 2 * static_cast<Eigen::Index>(1.0 / dense_step) + 1;
    Eigen::VectorXd angles(count);
    for (Eigen::Index i = 0; i < count; ++i)
        angles(i) = 23.7 - 1.0 + dense_step * static_cast<double>(i);
    const auto dense = test::music_spectrum_noise_projection(
        split.noise_left, Eigen::MatrixXcd(), kBs, angles);
    Eigen::Index argmax = 0;
    dense.maxCoeff(&argmax);
    CHECK(std::abs(peak.angle_deg - angles(argmax)) <= dense_step);
}

TEST_CASE("MUSIC refines an off-grid angle of departure") {
    auto noise = identity_noise(128);
    const auto split = noiseless_split(0.0, -41.2, noise);
    const auto peak = music_estimate_aod(split, kMs);
    CHECK(std::abs(peak.angle_deg - (-41.2)) <= 1e-3);
    CHECK(peak.spectrum.minCoeff() > 0.0);
}

TEST_CASE("MUSIC peak search works with the sigma-delta whitener") {
    const double level = 4.0;
    auto noise = std::make_shared<NoiseModel>(combined_noise_covariance(128, level));
    const auto split = noiseless_split(-17.45, 8.0, noise);
    const auto peak = music_estimate_aoa(split, *noise, kBs);
    CHECK(std::abs(peak.angle_deg - (-17.45)) <= 1e-3);
}

TEST_CASE("consistent rewhitening leaves the angle estimate in place") {
    // Same covariance, different square root: a Cholesky whitener replaces
    // the Hermitian one in both the despreading and the spectrum.
    const double level = 3.0;
    const auto hermitian = std::make_shared<NoiseModel>(combined_noise_covariance(128, level));

    const Eigen::MatrixXcd l = hermitian->covariance.llt().matrixL();
    NoiseModel cholesky;
    cholesky.covariance = hermitian->covariance;
    cholesky.inverse_sqrt = l.triangularView<Eigen::Lower>().solve(
        Eigen::MatrixXcd::Identity(128, 128));
    const auto cholesky_ptr = std::make_shared<NoiseModel>(cholesky);

    const auto pilots = predistort_pilots(8);
    const auto scenario = make_los_channel(12.3, 4.0, std::polar(1.0, 2.2), kBs, kMs);
    auto record = synthesize_received(scenario, pilots.transmit_s, 1.0, 99);
    receive_sigma_delta(record, SigmaDeltaConfig{128, level});

    double estimates[2] = {0.0, 0.0};
    int idx = 0;
    for (const auto& noise : {hermitian, cholesky_ptr}) {
        const auto split =
            split_subspaces(whiten_despread(record.quantized, pilots.transmit_s, 1.0, noise));
        estimates[idx++] = music_estimate_aoa(split, *noise, kBs).angle_deg;
    }
    CHECK(std::abs(estimates[0] - estimates[1]) < 1e-3);
}

TEST_CASE("angle estimates are invariant to a positive rescaling of the data") {
    const auto pilots = predistort_pilots(8);
    const auto scenario = make_los_channel(31.0, -12.0, std::polar(1.0, 0.3), kBs, kMs);
    auto record = synthesize_received(scenario, pilots.transmit_s, 1.0, 5);
    receive_sigma_delta(record, SigmaDeltaConfig{128, 4.0});

    auto noise = identity_noise(128);
    const double c = 3.7;
    const auto base = estimate_channel(record.quantized, pilots.transmit_s, 1.0, noise, kBs, kMs);
    const auto scaled = estimate_channel(c * record.quantized, pilots.transmit_s, c * c, noise,
                                         kBs, kMs);
    CHECK(std::abs(base.theta_hat_deg - scaled.theta_hat_deg) <= 1e-6);
    CHECK(std::abs(base.phi_hat_deg - scaled.phi_hat_deg) <= 1e-6);
}

TEST_CASE("estimate_gain is exact on the model and ignores orthogonal residuals") {
    const auto noise = combined_noise_covariance(16, 1.3);
    const ArrayGeometry bs{16, 0.125, 1.0};
    const ArrayGeometry ms{4, 0.125, 1.0};
    const double theta = 9.5, phi = -28.0;
    const cd alpha = std::polar(0.8, 1.9);

    const Eigen::MatrixXcd d_matrix = noise.inverse_sqrt * steering_vector(theta, bs) *
                                      steering_vector(phi, ms).adjoint();
    WhitenedChannelEstimate exact{alpha * d_matrix,
                                  std::make_shared<NoiseModel>(noise)};
    const cd gain = estimate_gain(exact, theta, phi, noise, bs, ms);
    CHECK(std::abs(gain - alpha) <= 1e-10);

    // Residual orthogonal to vec(d_matrix) leaves the estimate unchanged.
    rng::Stream stream(31);
    Eigen::MatrixXcd residual(16, 4);
    for (Eigen::Index c = 0; c < 4; ++c)
        for (Eigen::Index r = 0; r < 16; ++r) residual(r, c) = stream.complex_gaussian();
    const cd overlap = (d_matrix.conjugate().cwiseProduct(residual)).sum();
    residual -= d_matrix * (overlap / d_matrix.squaredNorm());

    WhitenedChannelEstimate shifted{exact.h_hat + residual, exact.whitener};
    const cd gain_shifted = estimate_gain(shifted, theta, phi, noise, bs, ms);
    CHECK(std::abs(gain_shifted - alpha) <= 1e-10);
}

TEST_CASE("estimate_gain agrees with an explicit column-major vectorization") {
    const auto noise = combined_noise_covariance(6, 2.0);
    const ArrayGeometry bs{6, 0.125, 1.0};
    const ArrayGeometry ms{3, 0.125, 1.0};
    rng::Stream stream(32);
    Eigen::MatrixXcd h(6, 3);
    for (Eigen::Index c = 0; c < 3; ++c)
        for (Eigen::Index r = 0; r < 6; ++r) h(r, c) = stream.complex_gaussian();

    WhitenedChannelEstimate estimate{h, std::make_shared<NoiseModel>(noise)};
    const cd gain = estimate_gain(estimate, 11.0, -7.0, noise, bs, ms);

    const Eigen::MatrixXcd d_matrix =
        noise.inverse_sqrt * steering_vector(11.0, bs) * steering_vector(-7.0, ms).adjoint();
    const Eigen::VectorXcd d = Eigen::Map<const Eigen::VectorXcd>(d_matrix.data(), 18);
    const Eigen::VectorXcd hv = Eigen::Map<const Eigen::VectorXcd>(h.data(), 18);
    const cd expected = d.dot(hv) / d.squaredNorm();
    CHECK(std::abs(gain - expected) <= 1e-12);
}

TEST_CASE("estimate_gain matches a brute-force grid minimizer") {
    const auto noise = NoiseModel::identity(2);
    const ArrayGeometry bs{2, 0.125, 1.0};
    const ArrayGeometry ms{2, 0.125, 1.0};
    rng::Stream stream(33);
    Eigen::MatrixXcd h(2, 2);
    for (Eigen::Index c = 0; c < 2; ++c)
        for (Eigen::Index r = 0; r < 2; ++r) h(r, c) = stream.complex_gaussian();

    WhitenedChannelEstimate estimate{h, std::make_shared<NoiseModel>(noise)};
    const cd gain = estimate_gain(estimate, 3.0, 40.0, noise, bs, ms);

    const Eigen::MatrixXcd d_matrix =
        steering_vector(3.0, bs) * steering_vector(40.0, ms).adjoint();
    auto objective = [&](cd alpha) { return (h - alpha * d_matrix).squaredNorm(); };

    cd best{0.0, 0.0};
    double best_value = objective(best);
    double span = 2.0;
    cd center{0.0, 0.0};
    for (int stage = 0; stage < 3; ++stage) {
        const double step = span / 40.0;
        for (int i = -40; i <= 40; ++i)
            for (int j = -40; j <= 40; ++j) {
                const cd candidate = center + cd(i * step, j * step);
                const double value = objective(candidate);
                if (value < best_value) {
                    best_value = value;
                    best = candidate;
                }
            }
        center = best;
        span = 4.0 * span / 40.0;
    }
    CHECK(std::abs(gain - best) <= 2e-3);
}

TEST_CASE("reconstruct_channel composes the estimates") {
    CHECK((reconstruct_channel(0.0, 0.0, cd(1.0, 0.0), kBs, kMs) -
           Eigen::MatrixXcd::Ones(128, 8))
              .cwiseAbs()
              .maxCoeff() == 0.0);

    const auto rebuilt = reconstruct_channel(13.0, -5.0, std::polar(0.7, 0.2), kBs, kMs);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(rebuilt);
    CHECK(svd.singularValues()(1) <= 1e-10 * svd.singularValues()(0));
}

TEST_CASE("noiseless end-to-end recovery reaches numerical accuracy") {
    const auto pilots = predistort_pilots(8);
    auto noise = identity_noise(128);
    const auto bs_cache = build_music_grid_cache(kBs, AngleGrid{});
    const auto ms_cache = build_music_grid_cache(kMs, AngleGrid{});

    rng::Stream stream(41);
    for (int i = 0; i < 20; ++i) {
        const double theta = stream.uniform(-60.0, 60.0);
        const double phi = stream.uniform(-60.0, 60.0);
        const cd alpha = std::polar(1.0, stream.uniform(0.0, 2.0 * std::numbers::pi));
        const auto scenario = make_los_channel(theta, phi, alpha, kBs, kMs);
        const auto x = noiseless_receive(scenario, pilots.transmit_s, 1.0);
        const auto result = estimate_channel(x, pilots.transmit_s, 1.0, noise, kBs, kMs,
                                             AngleGrid{}, &bs_cache, &ms_cache);
        CHECK(test::nmse_of(result.h_check, scenario.channel) <= 1e-6);
    }
}

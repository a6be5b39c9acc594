// SPDX-License-Identifier: Apache-2.0
//
// First-order, 1-bit spatial sigma-delta ADC: exact forward recursion,
// closed-form quantization noise, floor-identity residual, linearized
// decomposition, and the combined-noise covariance model.
#pragma once

#include <complex>

#include <Eigen/Core>

namespace sdmimo {

using Complex = std::complex<double>;

struct SigmaDeltaConfig {
    Eigen::Index n_channels = 1; // antenna count N
    double level_b = 1.0;        // quantizer output voltage level b

    void validate() const; // throws std::invalid_argument
};

// Per-antenna trace of one converter pass.
struct QuantizationTrace {
    Eigen::VectorXcd input_x;            // post-limiter ADC input
    Eigen::VectorXcd prequant_r;         // quantizer inputs r_i
    Eigen::VectorXcd output_y;           // entries in {+-b +- jb}
    Eigen::VectorXcd noise_e;            // y - r, elementwise
    Eigen::VectorXcd floor_noise_qtilde; // (1/2b) U (y - x)
};

// b sign(Re v) + j b sign(Im v), with sign(0) = +1.
Complex quantize_1bit(Complex value, double level_b);

// Real and imaginary parts independently clamped to [-b, b].
Complex limit_amplitude(Complex value, double level_b);

// Runs the spatial recursion r_i = sum_{l<=i} x_l - sum_{l<i} y_l,
// y_i = quantize_1bit(r_i), after amplitude-limiting the input.
QuantizationTrace sigma_delta_forward(const Eigen::VectorXcd& input_x,
                                      const SigmaDeltaConfig& config);

// Deterministic quantization error e = y - r for amplitude-bounded inputs:
// Re(e_i) = b - 2b frac((i-1)/2 + sum_{k<=i} Re(x_k)/(2b)), same for Im.
// Throws if any input component lies outside [-b, b].
Eigen::VectorXcd quantization_noise_closed_form(const Eigen::VectorXcd& input_x,
                                                const SigmaDeltaConfig& config);

// Maximum absolute deviation, over real and imaginary parts, between
//   (1/2b) U y + (1/2) V 1 - (1/2) 1   and   floor((1/2b) U x + (1/2) V 1),
// where U is the lower-triangular all-ones matrix and V = U - I. Zero (to
// floating-point tolerance) whenever the input respects the amplitude bound.
double floor_identity_residual(const QuantizationTrace& trace,
                               const SigmaDeltaConfig& config);

// Linearized decomposition: the additive noise 2b U^{-1} qtilde, so that
// output_y = input_x + shaped_noise(...) holds as an algebraic identity.
Eigen::VectorXcd shaped_noise(const QuantizationTrace& trace,
                              const SigmaDeltaConfig& config);

// Second-order model of receiver noise plus shaped quantization noise.
struct NoiseModel {
    Eigen::MatrixXcd covariance;   // R_n, Hermitian positive definite
    Eigen::MatrixXcd inverse_sqrt; // W with W R_n W^H = I

    static NoiseModel identity(Eigen::Index n);
};

// R_n = I + (2 b^2 / 3) U^{-1} U^{-H}; the inverse square root is the
// Hermitian principal one from an eigendecomposition. U^{-1} U^{-H} is
// assembled analytically (tridiagonal), never by numerical inversion.
NoiseModel combined_noise_covariance(Eigen::Index n_receive, double level_b);

// Exact actions of U (running sum) and U^{-1} (first difference).
Eigen::VectorXcd running_sum(const Eigen::VectorXcd& v);
Eigen::VectorXcd first_difference(const Eigen::VectorXcd& v);

namespace detail {
// sign_zero_negative flips the sign(0) convention; used by fault-injection
// checks to confirm that the pilot construction depends on sign(0) = +1.
QuantizationTrace sigma_delta_forward_impl(const Eigen::VectorXcd& input_x,
                                           const SigmaDeltaConfig& config,
                                           bool sign_zero_negative);
} // namespace detail

} // namespace sdmimo

// SPDX-License-Identifier: Apache-2.0
#include "sdmimo/sigma_delta.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace sdmimo {

namespace {

bool is_finite(Complex v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

double sign_with_zero(double v, bool zero_negative) {
    if (v > 0.0)
        return 1.0;
    if (v < 0.0)
        return -1.0;
    return zero_negative ? -1.0 : 1.0;
}

Complex quantize_impl(Complex value, double level_b, bool zero_negative) {
    return {level_b * sign_with_zero(value.real(), zero_negative),
            level_b * sign_with_zero(value.imag(), zero_negative)};
}

double fractional_part(double v) { return v - std::floor(v); }

} // namespace

void SigmaDeltaConfig::validate() const {
    if (n_channels < 1)
        throw std::invalid_argument("SigmaDeltaConfig: n_channels must be >= 1");
    if (!(level_b > 0.0) || !std::isfinite(level_b))
        throw std::invalid_argument("SigmaDeltaConfig: level_b must be positive and finite");
}

Complex quantize_1bit(Complex value, double level_b) {
    if (!(level_b > 0.0) || !std::isfinite(level_b))
        throw std::invalid_argument("quantize_1bit: level_b must be positive and finite");
    if (!is_finite(value))
        throw std::invalid_argument("quantize_1bit: non-finite input");
    return quantize_impl(value, level_b, false);
}

Complex limit_amplitude(Complex value, double level_b) {
    if (!(level_b > 0.0) || !std::isfinite(level_b))
        throw std::invalid_argument("limit_amplitude: level_b must be positive and finite");
    if (!is_finite(value))
        throw std::invalid_argument("limit_amplitude: non-finite input");
    return {std::clamp(value.real(), -level_b, level_b),
            std::clamp(value.imag(), -level_b, level_b)};
}

namespace detail {

QuantizationTrace sigma_delta_forward_impl(const Eigen::VectorXcd& input_x,
                                           const SigmaDeltaConfig& config,
                                           bool sign_zero_negative) {
    config.validate();
    const Eigen::Index n = config.n_channels;
    if (input_x.size() != n)
        throw std::invalid_argument("sigma_delta_forward: input length does not match n_channels");

    QuantizationTrace trace;
    trace.input_x.resize(n);
    trace.prequant_r.resize(n);
    trace.output_y.resize(n);
    trace.noise_e.resize(n);

    // r_i = r_{i-1} + x_i - y_{i-1}: each quantizer sees the accumulated
    // input minus the accumulated output of the previous stages.
    Complex carry{0.0, 0.0};
    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex x = limit_amplitude(input_x(i), config.level_b);
        const Complex r = carry + x;
        const Complex y = quantize_impl(r, config.level_b, sign_zero_negative);
        trace.input_x(i) = x;
        trace.prequant_r(i) = r;
        trace.output_y(i) = y;
        trace.noise_e(i) = y - r;
        carry = r - y;
    }
    trace.floor_noise_qtilde =
        running_sum(trace.output_y - trace.input_x) / (2.0 * config.level_b);
    return trace;
}

} // namespace detail

QuantizationTrace sigma_delta_forward(const Eigen::VectorXcd& input_x,
                                      const SigmaDeltaConfig& config) {
    return detail::sigma_delta_forward_impl(input_x, config, false);
}

Eigen::VectorXcd quantization_noise_closed_form(const Eigen::VectorXcd& input_x,
                                                const SigmaDeltaConfig& config) {
    config.validate();
    const Eigen::Index n = config.n_channels;
    const double b = config.level_b;
    if (input_x.size() != n)
        throw std::invalid_argument(
            "quantization_noise_closed_form: input length does not match n_channels");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(input_x(i).real()) > b || std::abs(input_x(i).imag()) > b)
            throw std::invalid_argument(
                "quantization_noise_closed_form: input exceeds the amplitude bound [-b, b]");
    }

    Eigen::VectorXcd noise(n);
    double sum_re = 0.0, sum_im = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        sum_re += input_x(i).real() / (2.0 * b);
        sum_im += input_x(i).imag() / (2.0 * b);
        const double offset = 0.5 * static_cast<double>(i); // (i-1)/2, 1-based
        noise(i) = {b - 2.0 * b * fractional_part(offset + sum_re),
                    b - 2.0 * b * fractional_part(offset + sum_im)};
    }
    return noise;
}

double floor_identity_residual(const QuantizationTrace& trace,
                               const SigmaDeltaConfig& config) {
    config.validate();
    const Eigen::Index n = trace.input_x.size();
    const double b = config.level_b;

    double residual = 0.0;
    double sum_x_re = 0.0, sum_x_im = 0.0, sum_y_re = 0.0, sum_y_im = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        sum_x_re += trace.input_x(i).real();
        sum_x_im += trace.input_x(i).imag();
        sum_y_re += trace.output_y(i).real();
        sum_y_im += trace.output_y(i).imag();
        const double offset = 0.5 * static_cast<double>(i); // (V 1)_i / 2
        const double lhs_re = sum_y_re / (2.0 * b) + offset - 0.5;
        const double lhs_im = sum_y_im / (2.0 * b) + offset - 0.5;
        const double rhs_re = std::floor(sum_x_re / (2.0 * b) + offset);
        const double rhs_im = std::floor(sum_x_im / (2.0 * b) + offset);
        residual = std::max(residual, std::abs(lhs_re - rhs_re));
        residual = std::max(residual, std::abs(lhs_im - rhs_im));
    }
    return residual;
}

Eigen::VectorXcd shaped_noise(const QuantizationTrace& trace, const SigmaDeltaConfig& config) {
    config.validate();
    return 2.0 * config.level_b * first_difference(trace.floor_noise_qtilde);
}

NoiseModel NoiseModel::identity(Eigen::Index n) {
    NoiseModel model;
    model.covariance = Eigen::MatrixXcd::Identity(n, n);
    model.inverse_sqrt = Eigen::MatrixXcd::Identity(n, n);
    return model;
}

NoiseModel combined_noise_covariance(Eigen::Index n_receive, double level_b) {
    SigmaDeltaConfig{n_receive, level_b}.validate();
    const Eigen::Index n = n_receive;

    // U^{-1} U^{-H} is tridiagonal: diag(1, 2, ..., 2) with -1 off-diagonals.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        gram(i, i) = (i == 0) ? 1.0 : 2.0;
        if (i + 1 < n) {
            gram(i, i + 1) = -1.0;
            gram(i + 1, i) = -1.0;
        }
    }

    const double scale = 2.0 * level_b * level_b / 3.0;
    const Eigen::MatrixXd covariance =
        Eigen::MatrixXd::Identity(n, n) + scale * gram;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("combined_noise_covariance: eigendecomposition failed");
    const Eigen::MatrixXd inverse_sqrt = solver.eigenvectors() *
                                         solver.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                         solver.eigenvectors().transpose();

    NoiseModel model;
    model.covariance = covariance.cast<Complex>();
    model.inverse_sqrt = inverse_sqrt.cast<Complex>();
    return model;
}

Eigen::VectorXcd running_sum(const Eigen::VectorXcd& v) {
    Eigen::VectorXcd out(v.size());
    Complex acc{0.0, 0.0};
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        acc += v(i);
        out(i) = acc;
    }
    return out;
}

Eigen::VectorXcd first_difference(const Eigen::VectorXcd& v) {
    Eigen::VectorXcd out(v.size());
    for (Eigen::Index i = v.size() - 1; i > 0; --i)
        out(i) = v(i) - v(i - 1);
    if (v.size() > 0)
        out(0) = v(0);
    return out;
}

} // namespace sdmimo

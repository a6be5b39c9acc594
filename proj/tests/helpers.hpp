// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Core>

#include "sdmimo/estimator.hpp"

namespace sdmimo::test {

// Direct DFT power spectrum across the antenna dimension (O(N^2), test use).
inline Eigen::VectorXd periodogram(const Eigen::VectorXcd& v) {
    const Eigen::Index n = v.size();
    Eigen::VectorXd power(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (Eigen::Index i = 0; i < n; ++i) {
            const double phase = -2.0 * std::numbers::pi * static_cast<double>(k) *
                                 static_cast<double>(i) / static_cast<double>(n);
            acc += v(i) * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        power(k) = std::norm(acc) / static_cast<double>(n);
    }
    return power;
}

// Splits periodogram bins by |spatial frequency|: lower = |f| < 1/4,
// upper = |f| >= 1/4. Returns {lower_total, upper_total}.
inline std::pair<double, double> band_power_split(const Eigen::VectorXd& power) {
    const Eigen::Index n = power.size();
    double lower = 0.0, upper = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index folded = std::min(k, n - k);
        if (4 * folded < n)
            lower += power(k);
        else
            upper += power(k);
    }
    return {lower, upper};
}

// Independent MUSIC route: explicit noise-subspace projection, no
// complement-of-signal shortcut. Returns the spectrum over `angles`.
inline Eigen::VectorXd music_spectrum_noise_projection(const Eigen::MatrixXcd& noise_subspace,
                                                       const Eigen::MatrixXcd& whitener,
                                                       const ArrayGeometry& geometry,
                                                       const Eigen::VectorXd& angles_deg) {
    Eigen::VectorXd spectrum(angles_deg.size());
    for (Eigen::Index k = 0; k < angles_deg.size(); ++k) {
        const Eigen::VectorXcd a = steering_vector(angles_deg(k), geometry);
        const Eigen::VectorXcd wa = whitener.rows() > 0 ? (whitener * a).eval() : a;
        const double denom = (noise_subspace.adjoint() * wa).squaredNorm();
        spectrum(k) = 1.0 / std::max(denom, 1e-300);
    }
    return spectrum;
}

inline double nmse_of(const Eigen::MatrixXcd& estimate, const Eigen::MatrixXcd& truth) {
    return (estimate - truth).squaredNorm() / truth.squaredNorm();
}

// Angle between unit vectors, insensitive to complex phase.
inline double subspace_angle(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    const double overlap = std::abs(a.dot(b)) / (a.norm() * b.norm());
    return std::acos(std::min(1.0, overlap));
}

} // namespace sdmimo::test

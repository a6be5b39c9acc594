// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Core>

namespace sdmimo::rng {

// SplitMix64 finalizer.
constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Sub-seed for stream `index` under `base`. Per-trial streams are derived
// this way, so no trial consumes another trial's draws.
constexpr std::uint64_t derive(std::uint64_t base, std::uint64_t index) noexcept {
    return mix(base ^ mix(index));
}

// Seeded random stream. All draws are explicit transforms of mt19937_64
// output, so a given seed reproduces the same values on every run.
class Stream {
  public:
    explicit Stream(std::uint64_t seed) : gen_(seed) {}

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal, Box-Muller, pairwise.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    // Circularly-symmetric complex normal with unit variance per complex
    // entry: real and imaginary parts each have variance 1/2.
    std::complex<double> complex_gaussian() {
        const double re = gaussian();
        const double im = gaussian();
        return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
    }

    // Column-major fill order.
    Eigen::MatrixXcd complex_gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXcd m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r)
                m(r, c) = complex_gaussian();
        return m;
    }

    // Real and imaginary parts i.i.d. uniform on [-bound, bound].
    Eigen::VectorXcd uniform_box(Eigen::Index n, double bound) {
        Eigen::VectorXcd v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double re = uniform(-bound, bound);
            const double im = uniform(-bound, bound);
            v(i) = {re, im};
        }
        return v;
    }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace sdmimo::rng

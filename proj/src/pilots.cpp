// SPDX-License-Identifier: Apache-2.0
#include "sdmimo/pilots.hpp"

#include <stdexcept>

#include "sdmimo/sigma_delta.hpp"

namespace sdmimo {

Eigen::MatrixXi hadamard_matrix(Eigen::Index n) {
    if (n < 1 || (n & (n - 1)) != 0)
        throw std::invalid_argument("hadamard_matrix: order must be a power of 2");

    Eigen::MatrixXi h = Eigen::MatrixXi::Ones(1, 1);
    for (Eigen::Index size = 1; size < n; size *= 2) {
        Eigen::MatrixXi doubled(2 * size, 2 * size);
        doubled.topLeftCorner(size, size) = h;
        doubled.topRightCorner(size, size) = h;
        doubled.bottomLeftCorner(size, size) = h;
        doubled.bottomRightCorner(size, size) = -h;
        h.swap(doubled);
    }
    return h;
}

PilotSet predistort_pilots(Eigen::Index n_transmit) {
    PilotSet pilots;
    pilots.hadamard_g = hadamard_matrix(n_transmit);

    // U^{-1} 1 1^T has an all-ones first row and zeros elsewhere, so the
    // predistortion only rewrites the first row of G (all ones -> zeros).
    Eigen::MatrixXd shifted = pilots.hadamard_g.cast<double>();
    shifted.row(0).array() -= 1.0;

    pilots.predistorted_t = shifted.cast<Complex>() * Complex(1.0, 1.0);
    pilots.transmit_s = pilots.hadamard_g.cast<Complex>() * Complex(1.0, 1.0);
    return pilots;
}

bool verify_pilots(const PilotSet& pilots) {
    const Eigen::Index n = pilots.hadamard_g.rows();
    if (n < 1 || pilots.hadamard_g.cols() != n || pilots.predistorted_t.rows() != n ||
        pilots.predistorted_t.cols() != n || pilots.transmit_s.rows() != n ||
        pilots.transmit_s.cols() != n)
        return false;

    // Pilot entries must respect the b = 1 transmit amplitude bound; the
    // limiter would silently clip anything outside of it.
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < n; ++r) {
            const Complex t = pilots.predistorted_t(r, c);
            if (std::abs(t.real()) > 1.0 || std::abs(t.imag()) > 1.0)
                return false;
        }

    // Orthogonality in integer arithmetic; S = (1+j) G makes S S^H = 2 G G^T.
    const Eigen::MatrixXi gram = pilots.hadamard_g * pilots.hadamard_g.transpose();
    const Eigen::MatrixXi gram_t = pilots.hadamard_g.transpose() * pilots.hadamard_g;
    const Eigen::MatrixXi target = static_cast<int>(n) * Eigen::MatrixXi::Identity(n, n);
    if (gram != target || gram_t != target)
        return false;

    const SigmaDeltaConfig config{n, 1.0};
    for (Eigen::Index c = 0; c < n; ++c) {
        const auto trace = sigma_delta_forward(pilots.predistorted_t.col(c), config);
        if (trace.output_y != Eigen::VectorXcd(pilots.transmit_s.col(c)))
            return false;
    }
    return true;
}

Eigen::MatrixXcd repeat_blocks(const Eigen::MatrixXcd& s, int repetition) {
    if (repetition < 1)
        throw std::invalid_argument("repeat_blocks: repetition must be >= 1");
    Eigen::MatrixXcd out(s.rows(), s.cols() * repetition);
    for (int k = 0; k < repetition; ++k)
        out.middleCols(k * s.cols(), s.cols()) = s;
    return out;
}

} // namespace sdmimo

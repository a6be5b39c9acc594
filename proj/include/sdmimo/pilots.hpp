// SPDX-License-Identifier: Apache-2.0
//
// Predistorted pilot construction: the transmit-side converter (b = 1) maps
// the pilot matrix T to the orthogonal matrix S = G + jG with G Hadamard.
#pragma once

#include <Eigen/Core>

namespace sdmimo {

// Sylvester-construction Hadamard matrix; n must be a power of 2.
Eigen::MatrixXi hadamard_matrix(Eigen::Index n);

struct PilotSet {
    Eigen::MatrixXi hadamard_g;      // N_t x N_t, entries +-1
    Eigen::MatrixXcd predistorted_t; // converter input T
    Eigen::MatrixXcd transmit_s;     // converter output S, entries in {+-1 +- j}
};

// T = (G - U^{-1} 1 1^T) + j (G - U^{-1} 1 1^T). Since U^{-1} 1 = e_1, this
// differs from (1 + j) G only in the first row, which becomes zero.
PilotSet predistort_pilots(Eigen::Index n_transmit);

// True iff passing T through the b = 1 converter reproduces S column by
// column exactly, and S S^H = S^H S = 2 N_t I holds in integer arithmetic.
bool verify_pilots(const PilotSet& pilots);

// K identical copies of s stacked columnwise (pilot repetition).
Eigen::MatrixXcd repeat_blocks(const Eigen::MatrixXcd& s, int repetition);

} // namespace sdmimo

// SPDX-License-Identifier: Apache-2.0
//
// Pilot-based least-squares channel estimation. The transmitter sends an
// orthogonal pilot block; the receiver solves the normal equations of the
// pilot convolution matrix per rx antenna, treating the ADC output as the
// received signal (the quantization error lands in the estimate).

#ifndef QMIMO_CHANEST_HPP
#define QMIMO_CHANEST_HPP

#include <Eigen/Dense>

#include "qmimo/channel.hpp"
#include "qmimo/core.hpp"

namespace qmimo {

// Row normalization of the pilot block: X X^H = sqrt(t_p) I, or t_p I
// (unit average per-symbol power, matching the data symbols).
enum class PilotNorm { sqrt_tp, conventional };

PilotNorm pilot_norm_from_string(const std::string& name);

// n_tx x t_p pilot block with exactly orthogonal rows: QPSK draws,
// row-orthonormalized, then scaled per norm. Requires t_p >= n_tx.
Eigen::MatrixXcd gen_pilots(RngStream& rng, int n_tx, int t_p,
                            PilotNorm norm = PilotNorm::sqrt_tp);

// Convolution matrix of the pilot block for n_taps channel taps: row n,
// column l * n_tx + t holds pilot x_t[n - l] (zero outside the block);
// shape (t_p + n_taps - 1) x (n_taps * n_tx).
Eigen::MatrixXcd pilot_convolution_matrix(const Eigen::MatrixXcd& pilots, int n_taps);

// Least-squares estimate of taps 0 .. n_taps-1 from the received pilot
// frame y_p (n_rx x >= t_p + n_taps - 1; extra columns ignored). Throws
// std::runtime_error when the pilot Gram matrix is singular (t_p too small
// for n_taps * n_tx unknowns).
ChannelTaps ls_estimate(const Eigen::MatrixXcd& pilots, const Eigen::MatrixXcd& y_p,
                        int n_taps);

} // namespace qmimo

#endif

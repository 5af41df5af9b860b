// SPDX-License-Identifier: Apache-2.0
//
// Dominant/weak tap split of a frequency-selective channel. The detectors
// track only the dominant taps D explicitly; the residual weak taps W are
// absorbed into the per-antenna noise variance (Gaussian moment matching),
// which makes the per-sample observation PMF a product of Gaussian-CDF
// differences over the quantizer bin of each received component.

#ifndef QMIMO_SPARSIFY_HPP
#define QMIMO_SPARSIFY_HPP

#include <Eigen/Dense>
#include <vector>

#include "qmimo/channel.hpp"
#include "qmimo/core.hpp"
#include "qmimo/quantizer.hpp"

namespace qmimo {

struct SparseIsiModel {
    int n_rx = 0;
    int n_tx = 0;
    std::vector<int> dom;  // dominant delays, ascending
    std::vector<int> weak; // remaining support, ascending
    // Stacked tap blocks, one n_rx x n_tx block per delay in ascending order.
    Eigen::MatrixXcd h_dom;
    Eigen::MatrixXcd h_weak;
    double sigma2 = 0.0;
    Eigen::VectorXd weak_power;                      // per rx antenna, full frame
    std::vector<Eigen::VectorXd> weak_tap_power;     // per weak tap, per rx antenna

    int span() const { return dom.empty() ? 0 : dom.back() + 1; } // L_D
    // Observation slots carrying dominant-tap energy: n_data + span - 1.
    int n_obs(int n_data) const { return n_data + std::max(span() - 1, 0); }
};

// dom must be a subset of ch.support(); weak becomes the complement.
SparseIsiModel make_sparse_model(const ChannelTaps& ch, const std::vector<int>& dom,
                                 double sigma2);

// Frame-edge bookkeeping for observation slot n (0-based) of a frame with
// n_data data slots: which dominant delays see a transmitted symbol, and the
// per-antenna effective noise variance with only the weak taps active at n.
struct EdgeWindow {
    int n = 0;
    std::vector<int> active;     // dominant delays l with 0 <= n-l < n_data
    std::vector<int> active_pos; // positions of those delays within dom
    Eigen::VectorXd noise_var;   // sigma2 + windowed weak power, per antenna
};

EdgeWindow edge_window(const SparseIsiModel& model, int n, int n_data);
Eigen::VectorXd effective_noise_vars(const SparseIsiModel& model, int n, int n_data);

// P(y | dominant symbols) under the moment-matched model: per antenna and
// real dimension, the probability that a Gaussian with the hypothesis mean
// and variance noise_var/2 falls in the quantizer bin of the received level.
// x_active stacks one n_tx symbol vector per active delay (ascending).
double cond_pmf_sparse(const SparseIsiModel& model, const EdgeWindow& window,
                       const Quantizer& quant, const Eigen::VectorXcd& y,
                       const Eigen::VectorXcd& x_active);

// Exact conditional PMF given both dominant and weak symbols (noise variance
// sigma2 only, mean includes the weak contribution).
double cond_pmf_true(const SparseIsiModel& model, const Quantizer& quant,
                     const Eigen::VectorXcd& y, const Eigen::VectorXcd& x_dom,
                     const Eigen::VectorXcd& x_weak);

// Closed-form normalized MSE between the true and moment-matched PMF
// arguments, summed over rx antennas and the finite quantizer boundaries.
// Zero iff all channel power is dominant. May return +inf (e.g. empty D with
// a boundary at zero).
double nmse_closed_form(const ChannelTaps& ch, const std::vector<int>& dom,
                        double sigma2, const Quantizer& quant);

struct SelectionStep {
    int delay = 0;
    double nmse_after = 0.0;
};

struct SelectionResult {
    std::vector<int> dom;
    std::vector<int> weak;
    std::vector<SelectionStep> trace;
    double nmse_final = 0.0;
};

// Greedy forward selection: repeatedly move the support delay whose addition
// minimizes the NMSE (ties broken toward the smallest delay) from W to D,
// until NMSE <= eps_th, |D| = d_max, or W is empty.
SelectionResult select_dominant_taps(const ChannelTaps& ch, double sigma2,
                                     const Quantizer& quant, double eps_th, int d_max);

} // namespace qmimo

#endif

// SPDX-License-Identifier: Apache-2.0
//
// Frequency-selective MIMO channel models. A channel is a sparse set of
// complex tap matrices indexed by integer delay; helpers generate i.i.d.
// Rayleigh taps with an exponential power-delay profile or a geometric
// cluster/subpath model behind fixed RF beamforming, propagate symbol frames
// through the taps, and persist snapshots as JSON.

#ifndef QMIMO_CHANNEL_HPP
#define QMIMO_CHANNEL_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "qmimo/core.hpp"

namespace qmimo {

struct ChannelTaps {
    int n_rx = 0;
    int n_tx = 0;
    std::map<int, Eigen::MatrixXcd> taps; // delay -> n_rx x n_tx, zero taps omitted

    std::vector<int> support() const;     // sorted delays
    int max_delay() const;                // largest delay in support
    double total_power() const;           // sum of squared Frobenius norms

    // Dimension/delay consistency; throws std::invalid_argument on violation.
    void validate() const;
};

// Per-tap variances p_l = exp(-l*decay) / sum_j exp(-j*decay); sums to one so
// the expected power per rx-tx antenna pair is one.
std::vector<double> exp_pdp_profile(int n_taps, double decay);

ChannelTaps gen_exp_pdp(RngStream& rng, int n_rx, int n_tx, int n_taps, double decay);

struct UpaGeom {
    int rows = 1;
    int cols = 1;
    double spacing = 0.5; // element pitch in wavelengths
};

struct Subpath {
    cplx gain{0.0, 0.0};
    double delay = 0.0;   // seconds, same unit as ClusterSpec::t_s
    double az_tx = 0.0, el_tx = 0.0;
    double az_rx = 0.0, el_rx = 0.0;
};

struct ClusterSpec {
    double t_s = 1.0;     // symbol duration
    double beta = 0.0;    // raised-cosine roll-off in [0, 1]
    UpaGeom tx_array, rx_array;
    // RF beamforming, one column per stream; empty means identity (stream
    // count = element count).
    Eigen::MatrixXcd f_tx, f_rx;
    std::vector<Subpath> subpaths;
};

// Phase-progression response of a uniform planar array, unnormalized
// (all-ones at broadside). Element order is row-major (vertical, horizontal).
Eigen::VectorXcd upa_response(const UpaGeom& geom, double az, double el);

// Raised-cosine pulse in units of t/T, truncated to |t| > 8T -> 0.
double raised_cosine(double t_over_t, double beta);

// Sampled taps H[l] = f_rx^H * (sum_s gain_s a_rx a_tx^H p(l T_s - tau_s)) * f_tx
// for l in [0, floor(tau_max/T_s + 1/2) + 8]; taps below 1e-12 of the largest
// Frobenius norm are dropped. Subpath delays must lie in [0, max_l * T_s].
ChannelTaps gen_geometric(const ClusterSpec& spec, int max_l);

// Linear convolution with additive CN(0, sigma2 I) noise:
//   r[:,n] = sum_l H[l] x[:,n-l] + v[n],  n = 0 .. n_data + max_delay - 1,
// where x is n_tx x n_data and samples outside the frame are zero.
Eigen::MatrixXcd propagate(const ChannelTaps& ch, const Eigen::MatrixXcd& x,
                           double sigma2, RngStream& rng);

// JSON snapshot: {"n_rx", "n_tx", "taps": [{"delay", "matrix": rows of
// [re, im] pairs}]}. Serialization round-trips bit-exactly.
std::string snapshot_to_json(const ChannelTaps& ch);
ChannelTaps snapshot_from_json(const std::string& text);
void save_snapshot(const ChannelTaps& ch, const std::string& path);
ChannelTaps load_snapshot(const std::string& path);

// Cluster parameter file (JSON); schema documented in the README.
ClusterSpec cluster_from_json(const std::string& text);
ClusterSpec load_cluster(const std::string& path);

} // namespace qmimo

#endif

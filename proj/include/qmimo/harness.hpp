// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo frame-error-rate harness. A plain INI config selects the
// link, channel, receiver chain, and sweep grid; run_sweep simulates every
// (detector, Eb/N0) cell over a common sequence of frames and reports one
// row per cell. All randomness is drawn from per-frame, per-role RNG
// streams (stream id = frame * 8 + role), so results are bit-reproducible
// for a given config and seed, independent of which detectors are enabled.
//
// Roles: 0 information bits, 1 channel realization, 2 single-carrier noise,
// 3 pilot noise, 4 pilot symbols, 5 OFDM noise.

#ifndef QMIMO_HARNESS_HPP
#define QMIMO_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "qmimo/chanest.hpp"
#include "qmimo/coding.hpp"

namespace qmimo {

enum class DetectorKind { qbcjr, qbp, bcjr, mmse, bussgang };

DetectorKind detector_from_string(const std::string& name);
std::string to_string(DetectorKind kind);
bool detector_uses_ofdm(DetectorKind kind); // mmse / bussgang

enum class ChannelModel { exp_pdp, snapshot };

struct SimConfig {
    // [link]
    int n_tx = 1;
    int n_rx = 2;
    ModKind mod = ModKind::bpsk;
    int adc_bits = 2;
    std::string alist_path; // empty: bundled default code

    // [channel]
    ChannelModel channel = ChannelModel::exp_pdp;
    int n_taps = 6;
    double decay = 0.5;
    std::string snapshot_path;

    // [selection]
    double eps_th = 0.1;
    int d_max = 4;

    // [detectors]
    std::vector<DetectorKind> detectors{DetectorKind::qbcjr};
    int bp_iters = 3;
    int ldpc_iters = 50;

    // [csir]
    bool ls_csir = false;
    int t_p = 12;
    PilotNorm pilot_norm = PilotNorm::sqrt_tp;

    // [sweep]
    std::vector<double> ebn0_db{0.0};
    int frames = 300;
    int stop_errors = 0; // 0: always run all frames
    std::uint64_t seed = 1;
    int threads = 1;     // accepted; the frame loop currently runs sequentially
};

// Both throw std::runtime_error with the offending line number on syntax
// errors, unknown sections/keys, or malformed values.
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::string& path);

// Noise variance for a target Eb/N0 with unit-power symbols on n_tx
// antennas and m_bits coded bits per channel use.
double eb_n0_to_sigma2(double ebn0_db, int n_tx, int m_bits);

struct FerResult {
    std::string detector;
    double ebn0_db = 0.0;
    int frames = 0;
    int errors = 0;
    double fer = 0.0;
    double mean_ops = 0.0; // detector-specific; see detect.hpp (0 for OFDM)
    double seconds = 0.0;  // wall time of detection + decoding
};

// One row per (Eb/N0, detector), Eb/N0 outer, config order inner. With
// stop_errors > 0 a cell stops consuming frames (in index order) once its
// error count reaches the threshold.
std::vector<FerResult> run_sweep(const SimConfig& cfg);

// Header "detector,ebn0_db,frames,errors,fer,mean_ops,seconds"; doubles are
// shortest-round-trip. Identical runs differ only in the seconds column.
std::string results_to_csv(const std::vector<FerResult>& rows);
void write_csv(const std::string& path, const std::vector<FerResult>& rows);

} // namespace qmimo

#endif

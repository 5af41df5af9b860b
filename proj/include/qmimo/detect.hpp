// SPDX-License-Identifier: Apache-2.0
//
// Soft-output detectors for the sparse ISI model. All detectors share the
// per-slot observation PMF tables (one entry per joint hypothesis of the
// dominant symbols visible at that slot) and emit slot-major bit LLRs with
// the convention that positive favors bit 0.
//
// Operation counters:
//   qbcjr / bcjr_unquantized : conditional PMF / density evaluations,
//                              sum over slots of K^|D_n|
//   qbp                      : message summands, n_iters * sum over slots
//                              of |D_n| * K^|D_n|
//   bruteforce               : sequence-slot probability multiplies
// where D_n is the set of dominant delays visible at observation slot n and
// K the joint symbol alphabet size.

#ifndef QMIMO_DETECT_HPP
#define QMIMO_DETECT_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmimo/coding.hpp"
#include "qmimo/quantizer.hpp"
#include "qmimo/sparsify.hpp"

namespace qmimo {

// Thrown when an exhaustive enumeration would exceed its size budget.
class budget_error : public std::runtime_error {
  public:
    explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

// Detector output for one frame. llrs[n * M + m] is the LLR of lane m in
// slot n. degenerate_slots counts slots whose entire posterior underflowed
// to zero; their LLRs are reported as 0.
struct DetectResult {
    std::vector<double> llrs;
    std::uint64_t ops = 0;
    int degenerate_slots = 0;
};

// Unnormalized per-slot symbol posteriors, one row per data slot.
struct MarginalsResult {
    Eigen::MatrixXd post; // n_data x K
    std::uint64_t ops = 0;
};

// Floor (1e-300), log-ratio over the demap sets, clamp to +-50.
DetectResult llrs_from_marginals(const VectorAlphabet& alpha, const MarginalsResult& marg);

// Reduced trellis over the dominant delays. A state entering slot n encodes
// the previous span-1 symbol indices as base-K digits, the newest symbol in
// the most significant digit; digits referring to slots outside [0, n_data)
// are forced to zero, so the state sets shrink at the frame edges.
class Trellis {
  public:
    // Throws budget_error when the state space or its per-slot storage
    // exceeds fixed limits (2^20 states, 2^26 state-slots).
    Trellis(const SparseIsiModel& model, int k_alphabet, int n_data);

    int k() const { return k_; }
    int mem() const { return mem_; }
    int n_data() const { return n_data_; }
    int n_obs() const { return n_obs_; }
    int state_space() const { return static_cast<int>(place_.empty() ? 1 : place_[0] * k_); }

    bool is_data_slot(int n) const { return n < n_data_; }
    int n_inputs(int n) const { return is_data_slot(n) ? k_ : 1; }

    // Valid states entering slot n, ascending; n in [0, n_obs].
    const std::vector<int>& states_at(int n) const { return states_[n]; }
    const EdgeWindow& window(int n) const { return windows_[n]; }
    const std::vector<EdgeWindow>& windows() const { return windows_; }

    // Successor of state s under input symbol k. Forced-zero inputs beyond
    // the data range must be passed as k = 0.
    int next_state(int s, int k) const {
        if (mem_ == 0)
            return 0;
        return static_cast<int>(k * place_[0] + s / k_);
    }

    // Base-K digit j of state s (digit 0 is the newest symbol).
    int digit(int s, int j) const { return static_cast<int>((s / place_[j]) % k_); }

    // Index into the slot-n PMF table for transition (s, k): mixed-radix
    // over the delays visible at n, ascending, smallest delay least
    // significant.
    int hyp_index(int n, int s, int k) const;

    std::uint64_t table_size(int n) const; // K^|D_n|
    std::uint64_t total_transitions() const;

  private:
    int k_ = 0;
    int mem_ = 0;
    int n_data_ = 0;
    int n_obs_ = 0;
    std::vector<std::int64_t> place_;       // place_[j] = K^(mem-1-j)
    std::vector<std::vector<int>> states_;  // per slot 0..n_obs
    std::vector<EdgeWindow> windows_;       // per slot 0..n_obs-1
};

struct QbcjrOptions {
    // Per-slot rescaling of the forward/backward recursions. The output is
    // invariant; disabling is only sensible for short frames.
    bool normalize = true;
};

// Forward-backward over the reduced trellis with quantized observations.
// y must hold at least model.n_obs(n_data) columns of quantizer output
// levels; extra columns are ignored.
MarginalsResult qbcjr_marginals(const SparseIsiModel& model, const VectorAlphabet& alpha,
                                const Quantizer& quant, const Eigen::MatrixXcd& y,
                                int n_data, const QbcjrOptions& opts = {});
DetectResult qbcjr_llrs(const SparseIsiModel& model, const VectorAlphabet& alpha,
                        const Quantizer& quant, const Eigen::MatrixXcd& y, int n_data,
                        const QbcjrOptions& opts = {});

// Same trellis and windowed noise variances, but Gaussian densities of the
// unquantized observations (matched bound for infinite resolution).
MarginalsResult bcjr_unquantized_marginals(const SparseIsiModel& model,
                                           const VectorAlphabet& alpha,
                                           const Eigen::MatrixXcd& y, int n_data);
DetectResult bcjr_unquantized_llrs(const SparseIsiModel& model, const VectorAlphabet& alpha,
                                   const Eigen::MatrixXcd& y, int n_data);

struct QbpOptions {
    int n_iters = 3;
};

// Flooding belief propagation on the bipartite graph of data slots and
// observation slots. Exact on cycle-free instances; an approximation with
// lower per-slot cost than the trellis otherwise.
MarginalsResult qbp_beliefs(const SparseIsiModel& model, const VectorAlphabet& alpha,
                            const Quantizer& quant, const Eigen::MatrixXcd& y, int n_data,
                            const QbpOptions& opts = {});
DetectResult qbp_llrs(const SparseIsiModel& model, const VectorAlphabet& alpha,
                      const Quantizer& quant, const Eigen::MatrixXcd& y, int n_data,
                      const QbpOptions& opts = {});

// Exact symbol posteriors by enumerating all K^n_data sequences under the
// sparse model. Throws budget_error when K^n_data > budget.
MarginalsResult bruteforce_marginals(const SparseIsiModel& model, const VectorAlphabet& alpha,
                                     const Quantizer& quant, const Eigen::MatrixXcd& y,
                                     int n_data, std::uint64_t budget = std::uint64_t{1} << 22);
DetectResult bruteforce_llrs(const SparseIsiModel& model, const VectorAlphabet& alpha,
                             const Quantizer& quant, const Eigen::MatrixXcd& y, int n_data,
                             std::uint64_t budget = std::uint64_t{1} << 22);

} // namespace qmimo

#endif

// SPDX-License-Identifier: Apache-2.0
//
// OFDM baselines over the same taps and ADC: per-subcarrier LMMSE
// equalization of the quantized stream, either ignoring the quantizer
// (treating ADC output as the unquantized signal) or linearizing it through
// its second-order equivalent (scalar gain plus white distortion, per rx
// antenna, for Gaussian input). LLRs are bias-corrected max-log per antenna,
// positive favors bit 0, layout subcarrier-major with lane t*bps + b.

#ifndef QMIMO_OFDM_HPP
#define QMIMO_OFDM_HPP

#include <Eigen/Dense>
#include <vector>

#include "qmimo/channel.hpp"
#include "qmimo/coding.hpp"
#include "qmimo/detect.hpp"
#include "qmimo/quantizer.hpp"

namespace qmimo {

// Unitary DFT pair of fixed size n: fwd() * fwd().adjoint() == I.
class DftPlan {
  public:
    explicit DftPlan(int n);
    int n() const { return n_; }
    const Eigen::MatrixXcd& fwd() const { return fwd_; }
    const Eigen::MatrixXcd& inv() const { return inv_; }

  private:
    int n_;
    Eigen::MatrixXcd fwd_, inv_;
};

// Frequency response at subcarrier k of n_sc: sum_l H[l] exp(-2 pi i k l /
// n_sc) (plain, non-unitary DFT of the tap sequence).
Eigen::MatrixXcd freq_response(const ChannelTaps& ch, int n_sc, int k);

// Unitary IDFT per antenna plus a cyclic prefix of cp samples. x_freq is
// n_tx x n (n = plan size); the result is n_tx x (cp + n).
Eigen::MatrixXcd ofdm_modulate(const DftPlan& plan, const Eigen::MatrixXcd& x_freq, int cp);

// Drop the first cp samples, apply the unitary DFT per antenna. Trailing
// columns beyond cp + n (convolution tail) are ignored.
Eigen::MatrixXcd ofdm_demodulate(const DftPlan& plan, const Eigen::MatrixXcd& r_time, int cp);

// Second-order equivalent of the ADC for a CN(0, p) input per antenna:
// output = gain * input + distortion with the distortion uncorrelated with
// the input; d_var is the complex distortion power. Requires every p > 0.
struct BussgangStats {
    Eigen::VectorXd gain;
    Eigen::VectorXd d_var;
};
BussgangStats bussgang_stats(const Quantizer& quant, const Eigen::VectorXd& p_complex);

// LMMSE per subcarrier treating the ADC output as the unquantized signal
// with white noise sigma2_eff (floored at 1e-14). y_time is the received
// stream including the cyclic prefix.
DetectResult ofdm_mmse_llrs(const ChannelTaps& ch, const Constellation& scalar,
                            const DftPlan& plan, const Eigen::MatrixXcd& y_time, int cp,
                            double sigma2_eff);

// LMMSE against the linearized ADC: effective channel diag(gain) * H_f[k],
// per-antenna noise gain^2 * sigma2_eff + d_var. The per-antenna input
// power (tap power plus noise) is recomputed from the given taps.
DetectResult ofdm_bussgang_llrs(const ChannelTaps& ch, const Constellation& scalar,
                                const Quantizer& quant, const DftPlan& plan,
                                const Eigen::MatrixXcd& y_time, int cp, double sigma2_eff);

} // namespace qmimo

#endif

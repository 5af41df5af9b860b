// SPDX-License-Identifier: Apache-2.0

#include "qmimo/ofdm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qmimo {

namespace {

constexpr double kCovFloor = 1e-14;

double gauss_pdf(double x) {
    if (std::isinf(x))
        return 0.0;
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// Per-subcarrier LMMSE + bias-corrected max-log demap shared by both
// baselines; eff_h is the per-subcarrier effective channel, c_diag the
// per-antenna noise covariance diagonal (floored).
DetectResult lmmse_demap(const std::vector<Eigen::MatrixXcd>& eff_h,
                         const Eigen::VectorXd& c_diag, const Constellation& scalar,
                         const Eigen::MatrixXcd& y_freq) {
    const int n_sc = static_cast<int>(eff_h.size());
    const int n_rx = static_cast<int>(y_freq.rows());
    const int n_tx = static_cast<int>(eff_h[0].cols());
    const int bps = scalar.bits_per_symbol;
    const int n_points = static_cast<int>(scalar.points.size());

    const Eigen::VectorXd c_inv =
        c_diag.cwiseMax(kCovFloor).cwiseInverse();
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n_tx, n_tx);

    DetectResult out;
    out.llrs.assign(static_cast<std::size_t>(n_sc) * n_tx * bps, 0.0);
    for (int k = 0; k < n_sc; ++k) {
        const Eigen::MatrixXcd& h = eff_h[k];
        if (h.rows() != n_rx)
            throw std::invalid_argument("lmmse: channel row mismatch");
        const Eigen::MatrixXcd hc = h.adjoint() * c_inv.asDiagonal();
        const Eigen::MatrixXcd a = hc * h;
        const Eigen::MatrixXcd binv = (a + eye).ldlt().solve(eye);
        const Eigen::VectorXcd x_hat = binv * (hc * y_freq.col(k));
        const Eigen::VectorXcd mu = (binv * a).diagonal();
        for (int t = 0; t < n_tx; ++t) {
            const double m = std::real(mu(t));
            const std::size_t base =
                static_cast<std::size_t>(k) * n_tx * bps + static_cast<std::size_t>(t) * bps;
            if (m <= 1e-15)
                continue; // no signal reaches this stream; LLRs stay 0
            const cplx z = x_hat(t) / m;
            const double rho = m / std::max(1.0 - m, 1e-15);
            for (int b = 0; b < bps; ++b) {
                double d0 = std::numeric_limits<double>::infinity();
                double d1 = d0;
                for (int p = 0; p < n_points; ++p) {
                    const double d = std::norm(z - scalar.points[p]);
                    if ((p >> b) & 1)
                        d1 = std::min(d1, d);
                    else
                        d0 = std::min(d0, d);
                }
                out.llrs[base + b] = std::clamp(rho * (d1 - d0), -50.0, 50.0);
            }
        }
    }
    return out;
}

void check_inputs(const ChannelTaps& ch, const DftPlan& plan, const Eigen::MatrixXcd& y_time,
                  int cp, double sigma2_eff) {
    ch.validate();
    if (cp < 0)
        throw std::invalid_argument("ofdm: negative cyclic prefix");
    if (sigma2_eff < 0.0)
        throw std::invalid_argument("ofdm: negative noise variance");
    if (y_time.rows() != ch.n_rx)
        throw std::invalid_argument("ofdm: received row count mismatch");
    if (y_time.cols() < cp + plan.n())
        throw std::invalid_argument("ofdm: received frame too short");
}

std::vector<Eigen::MatrixXcd> all_freq_responses(const ChannelTaps& ch, int n_sc) {
    std::vector<Eigen::MatrixXcd> h_f;
    h_f.reserve(n_sc);
    for (int k = 0; k < n_sc; ++k)
        h_f.push_back(freq_response(ch, n_sc, k));
    return h_f;
}

} // namespace

DftPlan::DftPlan(int n) : n_(n) {
    if (n < 1)
        throw std::invalid_argument("dft: size must be positive");
    fwd_.resize(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double ang = -2.0 * M_PI * static_cast<double>(i) * j / n;
            fwd_(i, j) = scale * cplx(std::cos(ang), std::sin(ang));
        }
    inv_ = fwd_.adjoint();
}

Eigen::MatrixXcd freq_response(const ChannelTaps& ch, int n_sc, int k) {
    if (n_sc < 1 || k < 0 || k >= n_sc)
        throw std::invalid_argument("freq_response: bad subcarrier index");
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(ch.n_rx, ch.n_tx);
    for (const auto& [l, tap] : ch.taps) {
        const double ang = -2.0 * M_PI * static_cast<double>(k) * l / n_sc;
        h += tap * cplx(std::cos(ang), std::sin(ang));
    }
    return h;
}

Eigen::MatrixXcd ofdm_modulate(const DftPlan& plan, const Eigen::MatrixXcd& x_freq, int cp) {
    if (x_freq.cols() != plan.n())
        throw std::invalid_argument("ofdm_modulate: symbol count != plan size");
    if (cp < 0 || cp > plan.n())
        throw std::invalid_argument("ofdm_modulate: bad cyclic prefix length");
    const Eigen::MatrixXcd time = (plan.inv() * x_freq.transpose()).transpose();
    Eigen::MatrixXcd out(x_freq.rows(), cp + plan.n());
    out.leftCols(cp) = time.rightCols(cp);
    out.rightCols(plan.n()) = time;
    return out;
}

Eigen::MatrixXcd ofdm_demodulate(const DftPlan& plan, const Eigen::MatrixXcd& r_time, int cp) {
    if (cp < 0 || r_time.cols() < cp + plan.n())
        throw std::invalid_argument("ofdm_demodulate: frame too short");
    const Eigen::MatrixXcd block = r_time.middleCols(cp, plan.n());
    return (plan.fwd() * block.transpose()).transpose();
}

BussgangStats bussgang_stats(const Quantizer& quant, const Eigen::VectorXd& p_complex) {
    const int n = static_cast<int>(p_complex.size());
    BussgangStats st;
    st.gain.resize(n);
    st.d_var.resize(n);
    for (int r = 0; r < n; ++r) {
        if (!(p_complex(r) > 0.0))
            throw std::invalid_argument("bussgang_stats: input power must be positive");
        const double sigma = std::sqrt(p_complex(r) / 2.0);
        double gain = 0.0, out_power = 0.0;
        for (int idx = 0; idx < quant.n_levels(); ++idx) {
            const auto [lo, hi] = quant.bounds_index(idx);
            const double q = quant.level(idx);
            gain += q * (gauss_pdf(lo / sigma) - gauss_pdf(hi / sigma)) / sigma;
            out_power += q * q * normal_cdf_diff(lo / sigma, hi / sigma);
        }
        st.gain(r) = gain;
        // Per-dimension distortion power, doubled for the complex sample;
        // clamp tiny negative rounding residue at fine resolutions.
        st.d_var(r) = std::max(0.0, 2.0 * (out_power - gain * gain * sigma * sigma));
    }
    return st;
}

DetectResult ofdm_mmse_llrs(const ChannelTaps& ch, const Constellation& scalar,
                            const DftPlan& plan, const Eigen::MatrixXcd& y_time, int cp,
                            double sigma2_eff) {
    check_inputs(ch, plan, y_time, cp, sigma2_eff);
    const auto h_f = all_freq_responses(ch, plan.n());
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(ch.n_rx, sigma2_eff);
    return lmmse_demap(h_f, c, scalar, ofdm_demodulate(plan, y_time, cp));
}

DetectResult ofdm_bussgang_llrs(const ChannelTaps& ch, const Constellation& scalar,
                                const Quantizer& quant, const DftPlan& plan,
                                const Eigen::MatrixXcd& y_time, int cp, double sigma2_eff) {
    check_inputs(ch, plan, y_time, cp, sigma2_eff);
    Eigen::VectorXd p = Eigen::VectorXd::Constant(ch.n_rx, sigma2_eff);
    for (const auto& [l, tap] : ch.taps)
        p += tap.cwiseAbs2().rowwise().sum();
    const BussgangStats st = bussgang_stats(quant, p);

    auto h_f = all_freq_responses(ch, plan.n());
    for (auto& h : h_f)
        h = st.gain.asDiagonal() * h;
    const Eigen::VectorXd c =
        (st.gain.array().square() * sigma2_eff + st.d_var.array()).matrix();
    return lmmse_demap(h_f, c, scalar, ofdm_demodulate(plan, y_time, cp));
}

} // namespace qmimo

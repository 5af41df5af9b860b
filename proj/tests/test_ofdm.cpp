// SPDX-License-Identifier: Apache-2.0
//
// OFDM baseline checks: transform identities, the cyclic-prefix circular
// convolution property, closed-form LMMSE behavior on flat channels, and
// the second-order ADC equivalent against Monte-Carlo moments.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qmimo/ofdm.hpp"

using namespace qmimo;

namespace {

ChannelTaps random_taps(RngStream& rng, int n_rx, int n_tx, const std::vector<int>& delays,
                        double power = 1.0) {
    ChannelTaps ch;
    ch.n_rx = n_rx;
    ch.n_tx = n_tx;
    for (int l : delays) {
        Eigen::MatrixXcd h(n_rx, n_tx);
        for (int r = 0; r < n_rx; ++r)
            for (int t = 0; t < n_tx; ++t)
                h(r, t) = rng.cgauss(power);
        ch.taps.emplace(l, std::move(h));
    }
    return ch;
}

ChannelTaps flat_identity(int n, double scale = 1.0) {
    ChannelTaps ch;
    ch.n_rx = n;
    ch.n_tx = n;
    ch.taps.emplace(0, Eigen::MatrixXcd::Identity(n, n) * scale);
    return ch;
}

Eigen::MatrixXcd quantize_all(const Quantizer& q, const Eigen::MatrixXcd& r) {
    Eigen::MatrixXcd y(r.rows(), r.cols());
    for (Eigen::Index i = 0; i < r.rows(); ++i)
        for (Eigen::Index j = 0; j < r.cols(); ++j)
            y(i, j) = q.quantize(r(i, j));
    return y;
}

} // namespace

TEST_CASE("dft plan is unitary and matches the direct sum") {
    const DftPlan plan(12);
    const Eigen::MatrixXcd eye = plan.fwd() * plan.fwd().adjoint();
    CHECK((eye - Eigen::MatrixXcd::Identity(12, 12)).cwiseAbs().maxCoeff() <= 1e-12);

    RngStream rng(40, 0);
    Eigen::VectorXcd x(12);
    for (int i = 0; i < 12; ++i)
        x(i) = rng.cgauss(1.0);
    const Eigen::VectorXcd big = plan.fwd() * x;
    for (int k = 0; k < 12; ++k) {
        cplx acc = 0.0;
        for (int n = 0; n < 12; ++n)
            acc += x(n) * std::polar(1.0, -2.0 * M_PI * k * n / 12.0);
        CHECK(std::abs(big(k) - acc / std::sqrt(12.0)) <= 1e-12);
    }
    // Parseval.
    CHECK(big.squaredNorm() == doctest::Approx(x.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("modulate/demodulate round trip and prefix layout") {
    RngStream rng(41, 0);
    const DftPlan plan(8);
    Eigen::MatrixXcd xf(2, 8);
    for (int t = 0; t < 2; ++t)
        for (int k = 0; k < 8; ++k)
            xf(t, k) = rng.cgauss(1.0);
    const auto time = ofdm_modulate(plan, xf, 3);
    CHECK(time.cols() == 11);
    // The prefix repeats the block tail.
    CHECK((time.leftCols(3) - time.rightCols(3)).cwiseAbs().maxCoeff() == 0.0);
    const auto back = ofdm_demodulate(plan, time, 3);
    CHECK((back - xf).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("cyclic prefix turns the taps into per-subcarrier multiplication") {
    RngStream rng(42, 0);
    const int n_sc = 16, cp = 3;
    const auto ch = random_taps(rng, 2, 2, {0, 1, 3});
    const DftPlan plan(n_sc);
    Eigen::MatrixXcd xf(2, n_sc);
    for (int t = 0; t < 2; ++t)
        for (int k = 0; k < n_sc; ++k)
            xf(t, k) = rng.cgauss(1.0);
    const auto sent = ofdm_modulate(plan, xf, cp);
    const Eigen::MatrixXcd received = propagate(ch, sent, 0.0, rng);
    const auto yf = ofdm_demodulate(plan, received, cp);
    for (int k = 0; k < n_sc; ++k) {
        const Eigen::Vector2cd want = freq_response(ch, n_sc, k) * xf.col(k);
        CHECK((yf.col(k) - want).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("freq_response at dc is the tap sum") {
    RngStream rng(43, 0);
    const auto ch = random_taps(rng, 2, 1, {0, 2, 5});
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(2, 1);
    for (const auto& [l, tap] : ch.taps)
        sum += tap;
    CHECK((freq_response(ch, 8, 0) - sum).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flat-channel mmse equals the matched filter") {
    RngStream rng(44, 0);
    const double sigma2 = 0.3;
    const auto ch = flat_identity(1);
    const DftPlan plan(16);
    const Constellation bpsk = Constellation::make(ModKind::bpsk);
    Eigen::MatrixXcd xf(1, 16);
    for (int k = 0; k < 16; ++k)
        xf(0, k) = bpsk.points[rng.below(2)];
    const auto sent = ofdm_modulate(plan, xf, 0);
    const Eigen::MatrixXcd y = propagate(ch, sent, sigma2, rng);
    const auto res = ofdm_mmse_llrs(ch, bpsk, plan, y, 0, sigma2);
    const auto yf = ofdm_demodulate(plan, y, 0);
    for (int k = 0; k < 16; ++k) {
        const double want = 4.0 * std::real(yf(0, k)) / sigma2;
        CHECK(res.llrs[k] == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("4-qam demap is per-dimension gray with lane order t*bps+b") {
    RngStream rng(45, 0);
    const double sigma2 = 0.5;
    const auto ch = flat_identity(2);
    const DftPlan plan(8);
    const Constellation qam = Constellation::make(ModKind::qam4);
    Eigen::MatrixXcd xf(2, 8);
    for (int t = 0; t < 2; ++t)
        for (int k = 0; k < 8; ++k)
            xf(t, k) = qam.points[rng.below(4)];
    const auto sent = ofdm_modulate(plan, xf, 0);
    const Eigen::MatrixXcd y = propagate(ch, sent, sigma2, rng);
    const auto res = ofdm_mmse_llrs(ch, qam, plan, y, 0, sigma2);
    const auto yf = ofdm_demodulate(plan, y, 0);
    // Decoupled antennas: z = R_t, rho = 1/sigma2, and for Gray 4-QAM the
    // per-bit max-log llr is 2*sqrt(2)*rho*Re{z} (b=0) or Im{z} (b=1).
    for (int k = 0; k < 8; ++k)
        for (int t = 0; t < 2; ++t) {
            const cplx z = yf(t, k);
            const double r = 1.0 / sigma2;
            CHECK(res.llrs[k * 4 + t * 2 + 0] ==
                  doctest::Approx(2.0 * M_SQRT2 * r * z.real()).epsilon(1e-10));
            CHECK(res.llrs[k * 4 + t * 2 + 1] ==
                  doctest::Approx(2.0 * M_SQRT2 * r * z.imag()).epsilon(1e-10));
        }
}

TEST_CASE("vanishing noise drives the llrs to the clamp with correct signs") {
    RngStream rng(46, 0);
    const auto ch = flat_identity(1);
    const DftPlan plan(8);
    const Constellation bpsk = Constellation::make(ModKind::bpsk);
    Eigen::MatrixXcd xf(1, 8);
    std::vector<int> bits(8);
    for (int k = 0; k < 8; ++k) {
        bits[k] = static_cast<int>(rng.below(2));
        xf(0, k) = bpsk.points[bits[k]];
    }
    const auto sent = ofdm_modulate(plan, xf, 0);
    const Eigen::MatrixXcd y = propagate(ch, sent, 0.0, rng);
    const auto res = ofdm_mmse_llrs(ch, bpsk, plan, y, 0, 0.0);
    for (int k = 0; k < 8; ++k)
        CHECK(res.llrs[k] == (bits[k] == 0 ? 50.0 : -50.0));
}

TEST_CASE("one-bit bussgang gain has the closed form") {
    const auto q1 = Quantizer::make_uniform(1);
    for (double p : {0.25, 1.0, 3.7}) {
        const auto st = bussgang_stats(q1, Eigen::VectorXd::Constant(1, p));
        const double sigma = std::sqrt(p / 2.0);
        CHECK(st.gain(0) == doctest::Approx(std::sqrt(2.0 / M_PI) / sigma).epsilon(1e-12));
        // Output power is exactly 1 per dimension: d = 2 (1 - G^2 sigma^2).
        const double g = st.gain(0);
        CHECK(st.d_var(0) == doctest::Approx(2.0 * (1.0 - g * g * sigma * sigma)).epsilon(1e-12));
    }
}

TEST_CASE("fine quantization is nearly transparent") {
    const auto q16 = Quantizer::make_uniform(16);
    const auto st = bussgang_stats(q16, Eigen::VectorXd::Constant(1, 0.1));
    CHECK(std::abs(st.gain(0) - 1.0) <= 1e-3);
    CHECK(st.d_var(0) <= 1e-3);
    CHECK(st.d_var(0) >= 0.0);
}

TEST_CASE("distortion power is nonnegative across resolutions and loads") {
    for (int bits : {1, 2, 3, 4, 6, 8}) {
        const auto q = Quantizer::make_uniform(bits);
        for (double p : {1e-3, 0.1, 1.0, 10.0, 1e3}) {
            const auto st = bussgang_stats(q, Eigen::VectorXd::Constant(1, p));
            CHECK(st.d_var(0) >= 0.0);
        }
    }
    // Coarse quantization of a matched load loses real power to distortion.
    const auto st = bussgang_stats(Quantizer::make_uniform(1), Eigen::VectorXd::Constant(1, 1.0));
    CHECK(st.d_var(0) > 0.1);
}

TEST_CASE("bussgang moments match monte-carlo estimates") {
    RngStream rng(47, 0);
    const auto q = Quantizer::make_uniform(2);
    const double p = 0.7; // complex power; per-dimension variance p/2
    const double sigma = std::sqrt(p / 2.0);
    const auto st = bussgang_stats(q, Eigen::VectorXd::Constant(1, p));
    double qx = 0.0, qq = 0.0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
        const double x = sigma * rng.gauss();
        const double out = q.quantize(x);
        qx += out * x;
        qq += out * out;
    }
    qx /= n;
    qq /= n;
    CHECK(st.gain(0) == doctest::Approx(qx / (sigma * sigma)).epsilon(0.01));
    const double d_dim = qq - st.gain(0) * st.gain(0) * sigma * sigma;
    CHECK(st.d_var(0) == doctest::Approx(2.0 * d_dim).epsilon(0.02));
}

TEST_CASE("8-bit bussgang llrs track the matched filter on a flat link") {
    RngStream rng(48, 0);
    const double sigma2 = 0.05, h = 0.15;
    const auto ch = flat_identity(1, h);
    const DftPlan plan(64);
    const Constellation bpsk = Constellation::make(ModKind::bpsk);
    const auto q8 = Quantizer::make_uniform(8);
    Eigen::MatrixXcd xf(1, 64);
    for (int k = 0; k < 64; ++k)
        xf(0, k) = bpsk.points[rng.below(2)];
    const auto sent = ofdm_modulate(plan, xf, 0);
    const Eigen::MatrixXcd yq = quantize_all(q8, propagate(ch, sent, sigma2, rng));
    const auto res = ofdm_bussgang_llrs(ch, bpsk, q8, plan, yq, 0, sigma2);
    const auto yf = ofdm_demodulate(plan, yq, 0);
    for (int k = 0; k < 64; ++k) {
        const double want = 4.0 * h * std::real(yf(0, k)) / sigma2;
        CHECK(std::abs(res.llrs[k] - want) <= 0.02 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("ofdm input validation") {
    RngStream rng(49, 0);
    const auto ch = flat_identity(1);
    const DftPlan plan(8);
    const Constellation bpsk = Constellation::make(ModKind::bpsk);
    Eigen::MatrixXcd y(1, 7); // shorter than plan size
    y.setZero();
    CHECK_THROWS_AS(ofdm_mmse_llrs(ch, bpsk, plan, y, 0, 1.0), std::invalid_argument);
    Eigen::MatrixXcd y2(1, 10);
    y2.setZero();
    CHECK_THROWS_AS(ofdm_mmse_llrs(ch, bpsk, plan, y2, -1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ofdm_mmse_llrs(ch, bpsk, plan, y2, 0, -0.5), std::invalid_argument);
    CHECK_THROWS_AS(ofdm_modulate(plan, Eigen::MatrixXcd::Zero(1, 9), 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(bussgang_stats(Quantizer::make_uniform(2), Eigen::VectorXd::Zero(1)),
                    std::invalid_argument);
}

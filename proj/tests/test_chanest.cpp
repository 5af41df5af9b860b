// SPDX-License-Identifier: Apache-2.0
//
// Least-squares channel estimation checks: pilot orthogonality, the
// convolution-matrix layout, exact recovery from clean observations, and
// qualitative behavior under noise and coarse quantization.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qmimo/chanest.hpp"
#include "qmimo/quantizer.hpp"

using namespace qmimo;

namespace {

ChannelTaps random_taps(RngStream& rng, int n_rx, int n_tx, const std::vector<int>& delays) {
    ChannelTaps ch;
    ch.n_rx = n_rx;
    ch.n_tx = n_tx;
    for (int l : delays) {
        Eigen::MatrixXcd h(n_rx, n_tx);
        for (int r = 0; r < n_rx; ++r)
            for (int t = 0; t < n_tx; ++t)
                h(r, t) = rng.cgauss(1.0);
        ch.taps.emplace(l, std::move(h));
    }
    return ch;
}

double taps_error(const ChannelTaps& est, const ChannelTaps& truth, int n_taps) {
    double err = 0.0;
    for (int l = 0; l < n_taps; ++l) {
        const Eigen::MatrixXcd a =
            est.taps.count(l) ? est.taps.at(l)
                              : Eigen::MatrixXcd::Zero(est.n_rx, est.n_tx);
        const Eigen::MatrixXcd b =
            truth.taps.count(l) ? truth.taps.at(l)
                                : Eigen::MatrixXcd::Zero(est.n_rx, est.n_tx);
        err += (a - b).squaredNorm();
    }
    return err;
}

} // namespace

TEST_CASE("pilot rows are orthogonal with the requested scale") {
    RngStream rng(60, 0);
    for (int n_tx : {1, 2, 4}) {
        for (int t_p : {4, 12, 33}) {
            if (t_p < n_tx)
                continue;
            const auto xs = gen_pilots(rng, n_tx, t_p, PilotNorm::sqrt_tp);
            REQUIRE(xs.rows() == n_tx);
            REQUIRE(xs.cols() == t_p);
            const Eigen::MatrixXcd gs = xs * xs.adjoint();
            CHECK((gs - std::sqrt(static_cast<double>(t_p)) *
                            Eigen::MatrixXcd::Identity(n_tx, n_tx))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-10);
            const auto xc = gen_pilots(rng, n_tx, t_p, PilotNorm::conventional);
            const Eigen::MatrixXcd gc = xc * xc.adjoint();
            CHECK((gc - static_cast<double>(t_p) * Eigen::MatrixXcd::Identity(n_tx, n_tx))
                      .cwiseAbs()
                      .maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("conventional norm gives unit average per-symbol power") {
    RngStream rng(61, 0);
    const auto x = gen_pilots(rng, 2, 16, PilotNorm::conventional);
    CHECK(x.squaredNorm() / (2 * 16) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pilot convolution matrix layout") {
    RngStream rng(62, 0);
    const int n_tx = 2, t_p = 5, n_taps = 3;
    const auto x = gen_pilots(rng, n_tx, t_p);
    const auto xbar = pilot_convolution_matrix(x, n_taps);
    REQUIRE(xbar.rows() == t_p + n_taps - 1);
    REQUIRE(xbar.cols() == n_taps * n_tx);
    for (int n = 0; n < t_p + n_taps - 1; ++n)
        for (int l = 0; l < n_taps; ++l)
            for (int t = 0; t < n_tx; ++t) {
                const cplx want =
                    (n - l >= 0 && n - l < t_p) ? x(t, n - l) : cplx(0.0, 0.0);
                CHECK(xbar(n, l * n_tx + t) == want);
            }
    // Single-antenna impulse pilot: the matrix is the identity band.
    Eigen::MatrixXcd imp = Eigen::MatrixXcd::Zero(1, 4);
    imp(0, 0) = 1.0;
    const auto band = pilot_convolution_matrix(imp, 2);
    for (int n = 0; n < 5; ++n)
        for (int l = 0; l < 2; ++l)
            CHECK(band(n, l) == (n == l ? cplx(1, 0) : cplx(0, 0)));
}

TEST_CASE("noiseless unquantized pilots recover the taps exactly") {
    RngStream rng(63, 0);
    const int n_taps = 4;
    const auto ch = random_taps(rng, 2, 2, {0, 1, 3}); // delay 2 absent
    const auto x = gen_pilots(rng, 2, 2 * n_taps);
    const Eigen::MatrixXcd y = propagate(ch, x, 0.0, rng);
    const auto est = ls_estimate(x, y, n_taps);
    CHECK(taps_error(est, ch, n_taps) <= 1e-20);
    // The absent delay comes back as (numerically) zero.
    CHECK(est.taps.at(2).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("estimation is linear in the observation") {
    RngStream rng(64, 0);
    const int n_taps = 3;
    const auto x = gen_pilots(rng, 2, 8);
    Eigen::MatrixXcd y1(2, 10), y2(2, 10);
    for (Eigen::Index i = 0; i < y1.size(); ++i) {
        y1.data()[i] = rng.cgauss(1.0);
        y2.data()[i] = rng.cgauss(1.0);
    }
    const auto a = ls_estimate(x, y1, n_taps);
    const auto b = ls_estimate(x, y2, n_taps);
    const auto s = ls_estimate(x, Eigen::MatrixXcd(y1 + y2), n_taps);
    for (int l = 0; l < n_taps; ++l)
        CHECK((s.taps.at(l) - a.taps.at(l) - b.taps.at(l)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("longer pilot blocks average the noise down") {
    RngStream rng(65, 0);
    const int n_taps = 3;
    const auto ch = random_taps(rng, 2, 2, {0, 1, 2});
    double err_short = 0.0, err_long = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto xs = gen_pilots(rng, 2, 8);
        const auto xl = gen_pilots(rng, 2, 64);
        err_short += taps_error(ls_estimate(xs, propagate(ch, xs, 0.5, rng), n_taps), ch, n_taps);
        err_long += taps_error(ls_estimate(xl, propagate(ch, xl, 0.5, rng), n_taps), ch, n_taps);
    }
    CHECK(err_long < err_short);
}

TEST_CASE("one-bit pilots still point at the channel") {
    RngStream rng(66, 0);
    const int n_taps = 2;
    const auto ch = random_taps(rng, 2, 1, {0, 1});
    // Data-power pilots, long block, 1-bit ADC.
    const auto x = gen_pilots(rng, 1, 128, PilotNorm::conventional);
    const Eigen::MatrixXcd r = propagate(ch, x, 0.1, rng);
    const auto q = Quantizer::make_uniform(1);
    Eigen::MatrixXcd y(r.rows(), r.cols());
    for (Eigen::Index i = 0; i < r.size(); ++i)
        y.data()[i] = q.quantize(r.data()[i]);
    const auto est = ls_estimate(x, y, n_taps);
    // Direction is preserved even though the 1-bit scale is not.
    cplx dot = 0.0;
    double na = 0.0, nb = 0.0;
    for (int l = 0; l < n_taps; ++l) {
        dot += (est.taps.at(l).conjugate().cwiseProduct(ch.taps.at(l))).sum();
        na += est.taps.at(l).squaredNorm();
        nb += ch.taps.at(l).squaredNorm();
    }
    CHECK(std::abs(dot) / std::sqrt(na * nb) > 0.7);
}

TEST_CASE("singular pilot gram matrix is reported") {
    RngStream rng(67, 0);
    // 2 tx antennas, 3 taps -> 6 unknowns, but only t_p + 2 = 4 equations.
    const auto x = gen_pilots(rng, 2, 2);
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(1, 4);
    CHECK_THROWS_AS(ls_estimate(x, y, 3), std::runtime_error);
}

TEST_CASE("chanest input validation") {
    RngStream rng(68, 0);
    CHECK_THROWS_AS(gen_pilots(rng, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(gen_pilots(rng, 0, 4), std::invalid_argument);
    CHECK_THROWS_AS(pilot_norm_from_string("bogus"), std::invalid_argument);
    CHECK(pilot_norm_from_string("sqrt") == PilotNorm::sqrt_tp);
    CHECK(pilot_norm_from_string("conventional") == PilotNorm::conventional);
    const auto x = gen_pilots(rng, 1, 4);
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(1, 3); // needs 4 + 2 - 1 = 5
    CHECK_THROWS_AS(ls_estimate(x, y, 2), std::invalid_argument);
}

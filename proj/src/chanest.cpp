// SPDX-License-Identifier: Apache-2.0

#include "qmimo/chanest.hpp"

#include <cmath>
#include <stdexcept>

namespace qmimo {

PilotNorm pilot_norm_from_string(const std::string& name) {
    if (name == "sqrt")
        return PilotNorm::sqrt_tp;
    if (name == "conventional")
        return PilotNorm::conventional;
    throw std::invalid_argument("unknown pilot norm: " + name);
}

Eigen::MatrixXcd gen_pilots(RngStream& rng, int n_tx, int t_p, PilotNorm norm) {
    if (n_tx < 1 || t_p < n_tx)
        throw std::invalid_argument("gen_pilots: need t_p >= n_tx >= 1");
    const double scale =
        norm == PilotNorm::sqrt_tp ? std::pow(t_p, 0.25) : std::sqrt(static_cast<double>(t_p));
    for (int attempt = 0; attempt < 64; ++attempt) {
        Eigen::MatrixXcd g(n_tx, t_p);
        for (int t = 0; t < n_tx; ++t)
            for (int n = 0; n < t_p; ++n)
                g(t, n) = cplx(rng.below(2) ? M_SQRT1_2 : -M_SQRT1_2,
                               rng.below(2) ? M_SQRT1_2 : -M_SQRT1_2);
        // Orthonormalize the rows (QR of the conjugate transpose); a
        // rank-deficient draw is retried with fresh symbols.
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g.adjoint());
        const Eigen::MatrixXcd r = qr.matrixQR().topRows(n_tx);
        bool ok = true;
        for (int i = 0; i < n_tx; ++i)
            ok = ok && std::abs(r(i, i)) > 1e-9;
        if (!ok)
            continue;
        const Eigen::MatrixXcd q =
            qr.householderQ() * Eigen::MatrixXcd::Identity(t_p, n_tx);
        return scale * q.adjoint();
    }
    throw std::runtime_error("gen_pilots: repeated rank-deficient draws");
}

Eigen::MatrixXcd pilot_convolution_matrix(const Eigen::MatrixXcd& pilots, int n_taps) {
    if (n_taps < 1)
        throw std::invalid_argument("pilot_convolution_matrix: n_taps must be positive");
    const int n_tx = static_cast<int>(pilots.rows());
    const int t_p = static_cast<int>(pilots.cols());
    Eigen::MatrixXcd xbar =
        Eigen::MatrixXcd::Zero(t_p + n_taps - 1, static_cast<Eigen::Index>(n_taps) * n_tx);
    for (int n = 0; n < t_p + n_taps - 1; ++n)
        for (int l = 0; l < n_taps; ++l) {
            const int m = n - l;
            if (m < 0 || m >= t_p)
                continue;
            for (int t = 0; t < n_tx; ++t)
                xbar(n, static_cast<Eigen::Index>(l) * n_tx + t) = pilots(t, m);
        }
    return xbar;
}

ChannelTaps ls_estimate(const Eigen::MatrixXcd& pilots, const Eigen::MatrixXcd& y_p,
                        int n_taps) {
    const int n_tx = static_cast<int>(pilots.rows());
    const int n_rx = static_cast<int>(y_p.rows());
    const int t_p = static_cast<int>(pilots.cols());
    if (n_taps < 1)
        throw std::invalid_argument("ls_estimate: n_taps must be positive");
    if (y_p.cols() < t_p + n_taps - 1)
        throw std::invalid_argument("ls_estimate: received pilot frame too short");

    const Eigen::MatrixXcd xbar = pilot_convolution_matrix(pilots, n_taps);
    const Eigen::MatrixXcd gram = xbar.adjoint() * xbar;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(gram);
    if (!lu.isInvertible())
        throw std::runtime_error(
            "ls_estimate: pilot Gram matrix is singular; increase t_p");

    ChannelTaps est;
    est.n_rx = n_rx;
    est.n_tx = n_tx;
    for (int l = 0; l < n_taps; ++l)
        est.taps.emplace(l, Eigen::MatrixXcd::Zero(n_rx, n_tx));
    for (int r = 0; r < n_rx; ++r) {
        const Eigen::VectorXcd rhs =
            xbar.adjoint() * y_p.row(r).head(t_p + n_taps - 1).transpose();
        const Eigen::VectorXcd h = lu.solve(rhs);
        for (int l = 0; l < n_taps; ++l)
            for (int t = 0; t < n_tx; ++t)
                est.taps.at(l)(r, t) = h(static_cast<Eigen::Index>(l) * n_tx + t);
    }
    return est;
}

} // namespace qmimo

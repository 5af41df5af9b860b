// SPDX-License-Identifier: Apache-2.0

#include "qmimo/sparsify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qmimo {

SparseIsiModel make_sparse_model(const ChannelTaps& ch, const std::vector<int>& dom,
                                 double sigma2) {
    ch.validate();
    if (sigma2 <= 0.0)
        throw std::invalid_argument("make_sparse_model: sigma2 must be positive");
    std::vector<int> d = dom;
    std::sort(d.begin(), d.end());
    if (std::adjacent_find(d.begin(), d.end()) != d.end())
        throw std::invalid_argument("make_sparse_model: duplicate dominant delay");
    for (int l : d)
        if (!ch.taps.count(l))
            throw std::invalid_argument("make_sparse_model: dominant delay not in support");

    SparseIsiModel m;
    m.n_rx = ch.n_rx;
    m.n_tx = ch.n_tx;
    m.dom = d;
    for (int l : ch.support())
        if (!std::binary_search(d.begin(), d.end(), l))
            m.weak.push_back(l);
    m.sigma2 = sigma2;

    m.h_dom.resize(ch.n_rx, static_cast<Eigen::Index>(d.size()) * ch.n_tx);
    for (std::size_t i = 0; i < d.size(); ++i)
        m.h_dom.middleCols(static_cast<Eigen::Index>(i) * ch.n_tx, ch.n_tx) = ch.taps.at(d[i]);

    m.h_weak.resize(ch.n_rx, static_cast<Eigen::Index>(m.weak.size()) * ch.n_tx);
    m.weak_power = Eigen::VectorXd::Zero(ch.n_rx);
    for (std::size_t i = 0; i < m.weak.size(); ++i) {
        const auto& tap = ch.taps.at(m.weak[i]);
        m.h_weak.middleCols(static_cast<Eigen::Index>(i) * ch.n_tx, ch.n_tx) = tap;
        Eigen::VectorXd p = tap.cwiseAbs2().rowwise().sum();
        m.weak_tap_power.push_back(p);
        m.weak_power += p;
    }
    return m;
}

Eigen::VectorXd effective_noise_vars(const SparseIsiModel& model, int n, int n_data) {
    if (n_data < 1)
        throw std::invalid_argument("effective_noise_vars: n_data must be positive");
    Eigen::VectorXd var = Eigen::VectorXd::Constant(model.n_rx, model.sigma2);
    for (std::size_t i = 0; i < model.weak.size(); ++i) {
        const int l = model.weak[i];
        if (n - l >= 0 && n - l < n_data)
            var += model.weak_tap_power[i];
    }
    return var;
}

EdgeWindow edge_window(const SparseIsiModel& model, int n, int n_data) {
    EdgeWindow w;
    w.n = n;
    for (std::size_t i = 0; i < model.dom.size(); ++i) {
        const int l = model.dom[i];
        if (n - l >= 0 && n - l < n_data) {
            w.active.push_back(l);
            w.active_pos.push_back(static_cast<int>(i));
        }
    }
    w.noise_var = effective_noise_vars(model, n, n_data);
    return w;
}

namespace {

double bin_prob(const Quantizer& quant, double level, double mu, double scale) {
    const auto [lo, hi] = quant.bounds(level);
    return normal_cdf_diff((lo - mu) / scale, (hi - mu) / scale);
}

double pmf_from_mean(const Quantizer& quant, const Eigen::VectorXcd& y,
                     const Eigen::VectorXcd& mean, const Eigen::VectorXd& var) {
    double p = 1.0;
    for (Eigen::Index r = 0; r < y.size(); ++r) {
        const double s = std::sqrt(var(r) / 2.0);
        p *= bin_prob(quant, y(r).real(), mean(r).real(), s);
        p *= bin_prob(quant, y(r).imag(), mean(r).imag(), s);
    }
    return p;
}

} // namespace

double cond_pmf_sparse(const SparseIsiModel& model, const EdgeWindow& window,
                       const Quantizer& quant, const Eigen::VectorXcd& y,
                       const Eigen::VectorXcd& x_active) {
    if (y.size() != model.n_rx)
        throw std::invalid_argument("cond_pmf_sparse: y size mismatch");
    const auto n_active = static_cast<Eigen::Index>(window.active_pos.size());
    if (x_active.size() != n_active * model.n_tx)
        throw std::invalid_argument("cond_pmf_sparse: hypothesis size mismatch");
    Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(model.n_rx);
    for (Eigen::Index i = 0; i < n_active; ++i)
        mean.noalias() += model.h_dom.middleCols(
                              static_cast<Eigen::Index>(window.active_pos[i]) * model.n_tx,
                              model.n_tx) *
                          x_active.segment(i * model.n_tx, model.n_tx);
    return pmf_from_mean(quant, y, mean, window.noise_var);
}

double cond_pmf_true(const SparseIsiModel& model, const Quantizer& quant,
                     const Eigen::VectorXcd& y, const Eigen::VectorXcd& x_dom,
                     const Eigen::VectorXcd& x_weak) {
    if (y.size() != model.n_rx)
        throw std::invalid_argument("cond_pmf_true: y size mismatch");
    if (x_dom.size() != model.h_dom.cols() || x_weak.size() != model.h_weak.cols())
        throw std::invalid_argument("cond_pmf_true: hypothesis size mismatch");
    Eigen::VectorXcd mean = model.h_dom * x_dom;
    if (x_weak.size() > 0)
        mean.noalias() += model.h_weak * x_weak;
    const Eigen::VectorXd var = Eigen::VectorXd::Constant(model.n_rx, model.sigma2);
    return pmf_from_mean(quant, y, mean, var);
}

double nmse_closed_form(const ChannelTaps& ch, const std::vector<int>& dom,
                        double sigma2, const Quantizer& quant) {
    ch.validate();
    if (sigma2 <= 0.0)
        throw std::invalid_argument("nmse_closed_form: sigma2 must be positive");
    for (int l : dom)
        if (!ch.taps.count(l))
            throw std::invalid_argument("nmse_closed_form: dominant delay not in support");

    const auto bounds = quant.inner_boundaries();
    double nmse = 0.0;
    for (int r = 0; r < ch.n_rx; ++r) {
        double p_dom = 0.0, p_weak = 0.0;
        for (const auto& [l, h] : ch.taps) {
            const double rowp = h.row(r).squaredNorm();
            if (std::find(dom.begin(), dom.end(), l) != dom.end())
                p_dom += rowp;
            else
                p_weak += rowp;
        }
        if (p_weak == 0.0)
            continue; // moment matching is exact for this antenna
        const double ratio = (sigma2 + p_weak) / sigma2;
        const double bias = 1.0 - std::sqrt(sigma2 / (sigma2 + p_weak));
        for (double b : bounds)
            nmse += ratio * (bias * bias + p_weak / (2.0 * b * b + p_dom));
    }
    return nmse;
}

SelectionResult select_dominant_taps(const ChannelTaps& ch, double sigma2,
                                     const Quantizer& quant, double eps_th, int d_max) {
    ch.validate();
    if (ch.taps.empty())
        throw std::invalid_argument("select_dominant_taps: empty support");
    if (d_max < 0)
        throw std::invalid_argument("select_dominant_taps: d_max must be nonnegative");
    if (std::isnan(eps_th) || eps_th < 0.0)
        throw std::invalid_argument("select_dominant_taps: eps_th must be nonnegative");

    SelectionResult res;
    res.weak = ch.support();
    double nmse = nmse_closed_form(ch, res.dom, sigma2, quant);
    while (nmse > eps_th && static_cast<int>(res.dom.size()) < d_max && !res.weak.empty()) {
        int best_delay = -1;
        double best_nmse = std::numeric_limits<double>::infinity();
        for (int cand : res.weak) { // ascending: ties keep the smallest delay
            auto trial = res.dom;
            trial.push_back(cand);
            std::sort(trial.begin(), trial.end());
            const double v = nmse_closed_form(ch, trial, sigma2, quant);
            if (v < best_nmse) {
                best_nmse = v;
                best_delay = cand;
            }
        }
        if (best_delay < 0) {
            // All candidates evaluate to +inf; fall back to the smallest delay
            // so the loop still makes progress.
            best_delay = res.weak.front();
            auto trial = res.dom;
            trial.push_back(best_delay);
            std::sort(trial.begin(), trial.end());
            best_nmse = nmse_closed_form(ch, trial, sigma2, quant);
        }
        res.dom.push_back(best_delay);
        std::sort(res.dom.begin(), res.dom.end());
        res.weak.erase(std::find(res.weak.begin(), res.weak.end(), best_delay));
        nmse = best_nmse;
        res.trace.push_back({best_delay, nmse});
    }
    res.nmse_final = nmse;
    return res;
}

} // namespace qmimo

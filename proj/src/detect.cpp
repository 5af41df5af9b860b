// SPDX-License-Identifier: Apache-2.0

#include "qmimo/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qmimo {

namespace {

constexpr std::int64_t kMaxStates = std::int64_t{1} << 20;
constexpr std::int64_t kMaxStateSlots = std::int64_t{1} << 26;

void check_common(const SparseIsiModel& model, const VectorAlphabet& alpha,
                  const Eigen::MatrixXcd& y, int n_data) {
    if (model.dom.empty())
        throw std::invalid_argument("detect: model has no dominant taps");
    if (alpha.n_tx() != model.n_tx)
        throw std::invalid_argument("detect: alphabet antenna count mismatch");
    if (n_data < 1)
        throw std::invalid_argument("detect: n_data must be positive");
    if (y.rows() != model.n_rx)
        throw std::invalid_argument("detect: observation row count mismatch");
    if (y.cols() < model.n_obs(n_data))
        throw std::invalid_argument("detect: too few observation slots");
}

// Joint symbol hypothesis h (mixed radix, position a least significant for
// the a-th visible delay) -> stacked symbol vectors, ascending delay.
Eigen::VectorXcd hyp_stack(const VectorAlphabet& alpha, int n_active, std::uint64_t h) {
    const int k = alpha.size();
    const int n_tx = alpha.n_tx();
    Eigen::VectorXcd x(static_cast<Eigen::Index>(n_active) * n_tx);
    for (int a = 0; a < n_active; ++a) {
        x.segment(static_cast<Eigen::Index>(a) * n_tx, n_tx) =
            alpha.symbol(static_cast<int>(h % k));
        h /= k;
    }
    return x;
}

// Per-slot tables of P(y[n] | hypothesis) under the sparse model. Adds one
// PMF evaluation per table entry to *ops.
std::vector<std::vector<double>> pmf_tables(const SparseIsiModel& model,
                                            const VectorAlphabet& alpha,
                                            const Quantizer& quant, const Eigen::MatrixXcd& y,
                                            const std::vector<EdgeWindow>& windows,
                                            std::uint64_t* ops) {
    const int k = alpha.size();
    std::vector<std::vector<double>> tables(windows.size());
    for (std::size_t n = 0; n < windows.size(); ++n) {
        const auto& w = windows[n];
        const int n_active = static_cast<int>(w.active.size());
        std::uint64_t size = 1;
        for (int a = 0; a < n_active; ++a)
            size *= k;
        tables[n].resize(size);
        for (std::uint64_t h = 0; h < size; ++h)
            tables[n][h] = cond_pmf_sparse(model, w, quant, y.col(static_cast<Eigen::Index>(n)),
                                           hyp_stack(alpha, n_active, h));
        *ops += size;
    }
    return tables;
}

// Gaussian density tables for the unquantized matched bound, rescaled by the
// per-slot maximum so long frames stay in range (the factor is constant per
// slot and cancels in the posterior ratios).
std::vector<std::vector<double>> density_tables(const SparseIsiModel& model,
                                                const VectorAlphabet& alpha,
                                                const Eigen::MatrixXcd& y,
                                                const std::vector<EdgeWindow>& windows,
                                                std::uint64_t* ops) {
    const int k = alpha.size();
    const int n_tx = model.n_tx;
    std::vector<std::vector<double>> tables(windows.size());
    for (std::size_t n = 0; n < windows.size(); ++n) {
        const auto& w = windows[n];
        const int n_active = static_cast<int>(w.active.size());
        std::uint64_t size = 1;
        for (int a = 0; a < n_active; ++a)
            size *= k;
        std::vector<double> logp(size);
        for (std::uint64_t h = 0; h < size; ++h) {
            Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(model.n_rx);
            std::uint64_t rem = h;
            for (int a = 0; a < n_active; ++a) {
                mean += model.h_dom.middleCols(static_cast<Eigen::Index>(w.active_pos[a]) * n_tx,
                                               n_tx) *
                        alpha.symbol(static_cast<int>(rem % k));
                rem /= k;
            }
            double lp = 0.0;
            for (int r = 0; r < model.n_rx; ++r) {
                const double v = w.noise_var(r);
                lp -= std::log(M_PI * v) +
                      std::norm(y(r, static_cast<Eigen::Index>(n)) - mean(r)) / v;
            }
            logp[h] = lp;
        }
        const double top = *std::max_element(logp.begin(), logp.end());
        tables[n].resize(size);
        for (std::uint64_t h = 0; h < size; ++h)
            tables[n][h] = std::exp(logp[h] - top);
        *ops += size;
    }
    return tables;
}

void scale_over(std::vector<double>& v, const std::vector<int>& idx) {
    double total = 0.0;
    for (int i : idx)
        total += v[i];
    if (total > 0.0)
        for (int i : idx)
            v[i] /= total;
}

// Shared forward-backward pass; the tables carry all observation dependence.
Eigen::MatrixXd forward_backward(const Trellis& tr, const std::vector<std::vector<double>>& tables,
                                 bool normalize) {
    const int k = tr.k();
    const int n_obs = tr.n_obs();
    const int n_data = tr.n_data();
    const int n_states = tr.state_space();
    const double prior = 1.0 / k;

    std::vector<std::vector<double>> fwd(static_cast<std::size_t>(n_obs) + 1,
                                         std::vector<double>(n_states, 0.0));
    fwd[0][0] = 1.0;
    for (int n = 0; n < n_obs; ++n) {
        const auto& tab = tables[n];
        const double pr = tr.is_data_slot(n) ? prior : 1.0;
        const int n_in = tr.n_inputs(n);
        for (int s : tr.states_at(n)) {
            const double a = fwd[n][s];
            if (a == 0.0)
                continue;
            for (int in = 0; in < n_in; ++in)
                fwd[n + 1][tr.next_state(s, in)] += a * pr * tab[tr.hyp_index(n, s, in)];
        }
        if (normalize)
            scale_over(fwd[n + 1], tr.states_at(n + 1));
    }

    Eigen::MatrixXd post = Eigen::MatrixXd::Zero(n_data, k);
    std::vector<double> bwd(n_states, 0.0), bwd_next(n_states, 0.0);
    bwd_next[0] = 1.0; // all digits forced zero past the frame
    for (int n = n_obs - 1; n >= 0; --n) {
        const auto& tab = tables[n];
        const double pr = tr.is_data_slot(n) ? prior : 1.0;
        const int n_in = tr.n_inputs(n);
        std::fill(bwd.begin(), bwd.end(), 0.0);
        for (int s : tr.states_at(n)) {
            double b = 0.0;
            for (int in = 0; in < n_in; ++in) {
                const double term =
                    pr * tab[tr.hyp_index(n, s, in)] * bwd_next[tr.next_state(s, in)];
                b += term;
                if (n < n_data)
                    post(n, in) += fwd[n][s] * term;
            }
            bwd[s] = b;
        }
        if (normalize)
            scale_over(bwd, tr.states_at(n));
        std::swap(bwd, bwd_next);
    }
    return post;
}

} // namespace

Trellis::Trellis(const SparseIsiModel& model, int k_alphabet, int n_data) {
    if (model.dom.empty())
        throw std::invalid_argument("trellis: model has no dominant taps");
    if (k_alphabet < 2)
        throw std::invalid_argument("trellis: alphabet too small");
    if (n_data < 1)
        throw std::invalid_argument("trellis: n_data must be positive");
    k_ = k_alphabet;
    mem_ = model.span() - 1;
    n_data_ = n_data;
    n_obs_ = model.n_obs(n_data);

    std::int64_t states = 1;
    place_.assign(mem_, 1);
    for (int j = mem_ - 1; j >= 0; --j) {
        place_[j] = states;
        states *= k_;
        if (states > kMaxStates)
            throw budget_error("trellis: state space exceeds 2^20");
    }
    if (states * (n_obs_ + 1) > kMaxStateSlots)
        throw budget_error("trellis: state storage exceeds budget");

    states_.resize(n_obs_ + 1);
    for (int n = 0; n <= n_obs_; ++n) {
        std::vector<int> free_digits;
        for (int j = 0; j < mem_; ++j)
            if (n - 1 - j >= 0 && n - 1 - j < n_data_)
                free_digits.push_back(j);
        std::int64_t count = 1;
        for (std::size_t i = 0; i < free_digits.size(); ++i)
            count *= k_;
        std::vector<int> set;
        set.reserve(count);
        for (std::int64_t c = 0; c < count; ++c) {
            std::int64_t rem = c, s = 0;
            for (int j : free_digits) {
                s += (rem % k_) * place_[j];
                rem /= k_;
            }
            set.push_back(static_cast<int>(s));
        }
        std::sort(set.begin(), set.end());
        states_[n] = std::move(set);
    }

    windows_.reserve(n_obs_);
    for (int n = 0; n < n_obs_; ++n)
        windows_.push_back(edge_window(model, n, n_data_));
}

int Trellis::hyp_index(int n, int s, int k) const {
    const auto& w = windows_[n];
    int h = 0, base = 1;
    for (std::size_t a = 0; a < w.active.size(); ++a) {
        const int l = w.active[a];
        h += (l == 0 ? k : digit(s, l - 1)) * base;
        base *= k_;
    }
    return h;
}

std::uint64_t Trellis::table_size(int n) const {
    std::uint64_t size = 1;
    for (std::size_t a = 0; a < windows_[n].active.size(); ++a)
        size *= k_;
    return size;
}

std::uint64_t Trellis::total_transitions() const {
    std::uint64_t total = 0;
    for (int n = 0; n < n_obs_; ++n)
        total += states_[n].size() * static_cast<std::uint64_t>(n_inputs(n));
    return total;
}

DetectResult llrs_from_marginals(const VectorAlphabet& alpha, const MarginalsResult& marg) {
    const int n_data = static_cast<int>(marg.post.rows());
    const int m_bits = alpha.m_bits();
    DetectResult out;
    out.ops = marg.ops;
    out.llrs.assign(static_cast<std::size_t>(n_data) * m_bits, 0.0);
    for (int n = 0; n < n_data; ++n) {
        const double total = marg.post.row(n).sum();
        if (total <= 0.0) {
            ++out.degenerate_slots; // LLRs of this slot stay 0
            continue;
        }
        for (int m = 0; m < m_bits; ++m) {
            double p0 = 0.0, p1 = 0.0;
            for (int k : alpha.demap_set(m, 0))
                p0 += marg.post(n, k);
            for (int k : alpha.demap_set(m, 1))
                p1 += marg.post(n, k);
            const double llr = safe_log(p0 / total) - safe_log(p1 / total);
            out.llrs[static_cast<std::size_t>(n) * m_bits + m] = std::clamp(llr, -50.0, 50.0);
        }
    }
    return out;
}

MarginalsResult qbcjr_marginals(const SparseIsiModel& model, const VectorAlphabet& alpha,
                                const Quantizer& quant, const Eigen::MatrixXcd& y, int n_data,
                                const QbcjrOptions& opts) {
    check_common(model, alpha, y, n_data);
    Trellis tr(model, alpha.size(), n_data);
    MarginalsResult out;
    const auto tables = pmf_tables(model, alpha, quant, y, tr.windows(), &out.ops);
    out.post = forward_backward(tr, tables, opts.normalize);
    return out;
}

DetectResult qbcjr_llrs(const SparseIsiModel& model, const VectorAlphabet& alpha,
                        const Quantizer& quant, const Eigen::MatrixXcd& y, int n_data,
                        const QbcjrOptions& opts) {
    return llrs_from_marginals(alpha, qbcjr_marginals(model, alpha, quant, y, n_data, opts));
}

MarginalsResult bcjr_unquantized_marginals(const SparseIsiModel& model,
                                           const VectorAlphabet& alpha,
                                           const Eigen::MatrixXcd& y, int n_data) {
    check_common(model, alpha, y, n_data);
    Trellis tr(model, alpha.size(), n_data);
    MarginalsResult out;
    const auto tables = density_tables(model, alpha, y, tr.windows(), &out.ops);
    out.post = forward_backward(tr, tables, true);
    return out;
}

DetectResult bcjr_unquantized_llrs(const SparseIsiModel& model, const VectorAlphabet& alpha,
                                   const Eigen::MatrixXcd& y, int n_data) {
    return llrs_from_marginals(alpha, bcjr_unquantized_marginals(model, alpha, y, n_data));
}

MarginalsResult qbp_beliefs(const SparseIsiModel& model, const VectorAlphabet& alpha,
                            const Quantizer& quant, const Eigen::MatrixXcd& y, int n_data,
                            const QbpOptions& opts) {
    check_common(model, alpha, y, n_data);
    if (opts.n_iters < 1)
        throw std::invalid_argument("qbp: n_iters must be positive");
    const int k = alpha.size();
    const int n_obs = model.n_obs(n_data);
    const int n_dom = static_cast<int>(model.dom.size());

    std::vector<EdgeWindow> windows;
    windows.reserve(n_obs);
    for (int n = 0; n < n_obs; ++n)
        windows.push_back(edge_window(model, n, n_data));

    MarginalsResult out;
    std::uint64_t table_evals = 0; // not part of the message-passing count
    const auto tables = pmf_tables(model, alpha, quant, y, windows, &table_evals);

    // Messages live factor-side: block a of factor n is the K-vector for the
    // a-th visible delay. Every data slot has exactly n_dom factor edges.
    std::vector<std::vector<double>> msg_r(n_obs), msg_t(n_obs);
    for (int n = 0; n < n_obs; ++n) {
        msg_r[n].assign(windows[n].active.size() * static_cast<std::size_t>(k), 0.0);
        msg_t[n].assign(windows[n].active.size() * static_cast<std::size_t>(k), 1.0 / k);
    }
    // Edge list of data slot v: (factor v + dom[i], block index of dom[i]).
    std::vector<std::vector<std::pair<int, int>>> var_edges(n_data);
    for (int v = 0; v < n_data; ++v) {
        var_edges[v].reserve(n_dom);
        for (int i = 0; i < n_dom; ++i) {
            const int n = v + model.dom[i];
            const auto& act = windows[n].active;
            const auto it = std::find(act.begin(), act.end(), model.dom[i]);
            var_edges[v].emplace_back(n, static_cast<int>(it - act.begin()));
        }
    }

    std::vector<int> digits;
    std::vector<double> prod(k);

    for (int it = 0; it < opts.n_iters; ++it) {
        // Factor -> variable. R_n^v(x) sums the slot PMF over the other
        // visible slots' hypotheses, each weighted by its incoming T.
        for (int n = 0; n < n_obs; ++n) {
            const int n_active = static_cast<int>(windows[n].active.size());
            if (n_active == 0)
                continue;
            std::fill(msg_r[n].begin(), msg_r[n].end(), 0.0);
            digits.assign(n_active, 0);
            for (std::uint64_t h = 0; h < tables[n].size(); ++h) {
                const double p = tables[n][h];
                for (int a = 0; a < n_active; ++a) {
                    double term = p;
                    for (int b = 0; b < n_active; ++b)
                        if (b != a)
                            term *= msg_t[n][static_cast<std::size_t>(b) * k + digits[b]];
                    msg_r[n][static_cast<std::size_t>(a) * k + digits[a]] += term;
                    ++out.ops;
                }
                for (int a = 0; a < n_active; ++a) { // mixed-radix increment
                    if (++digits[a] < k)
                        break;
                    digits[a] = 0;
                }
            }
            for (int a = 0; a < n_active; ++a) {
                double total = 0.0;
                for (int x = 0; x < k; ++x)
                    total += msg_r[n][static_cast<std::size_t>(a) * k + x];
                for (int x = 0; x < k; ++x) {
                    auto& e = msg_r[n][static_cast<std::size_t>(a) * k + x];
                    e = total > 0.0 ? e / total : 1.0 / k;
                }
            }
        }
        if (it + 1 == opts.n_iters)
            break; // beliefs use the final R messages
        // Variable -> factor: product of the other factors' R, normalized.
        for (int v = 0; v < n_data; ++v) {
            for (std::size_t i = 0; i < var_edges[v].size(); ++i) {
                double total = 0.0;
                for (int x = 0; x < k; ++x) {
                    double t = 1.0;
                    for (std::size_t j = 0; j < var_edges[v].size(); ++j) {
                        if (j == i)
                            continue;
                        const auto [fn, fb] = var_edges[v][j];
                        t *= msg_r[fn][static_cast<std::size_t>(fb) * k + x];
                    }
                    prod[x] = t;
                    total += t;
                }
                const auto [fn, fb] = var_edges[v][i];
                for (int x = 0; x < k; ++x)
                    msg_t[fn][static_cast<std::size_t>(fb) * k + x] =
                        total > 0.0 ? prod[x] / total : 1.0 / k;
            }
        }
    }

    out.post = Eigen::MatrixXd::Zero(n_data, k);
    for (int v = 0; v < n_data; ++v)
        for (int x = 0; x < k; ++x) {
            double b = 1.0;
            for (const auto& [fn, fb] : var_edges[v])
                b *= msg_r[fn][static_cast<std::size_t>(fb) * k + x];
            out.post(v, x) = b;
        }
    return out;
}

DetectResult qbp_llrs(const SparseIsiModel& model, const VectorAlphabet& alpha,
                      const Quantizer& quant, const Eigen::MatrixXcd& y, int n_data,
                      const QbpOptions& opts) {
    return llrs_from_marginals(alpha, qbp_beliefs(model, alpha, quant, y, n_data, opts));
}

MarginalsResult bruteforce_marginals(const SparseIsiModel& model, const VectorAlphabet& alpha,
                                     const Quantizer& quant, const Eigen::MatrixXcd& y,
                                     int n_data, std::uint64_t budget) {
    check_common(model, alpha, y, n_data);
    const int k = alpha.size();
    const int n_obs = model.n_obs(n_data);

    std::uint64_t total = 1;
    for (int n = 0; n < n_data; ++n) {
        if (total > budget / static_cast<std::uint64_t>(k))
            throw budget_error("bruteforce: K^n_data exceeds budget");
        total *= k;
    }

    std::vector<EdgeWindow> windows;
    windows.reserve(n_obs);
    for (int n = 0; n < n_obs; ++n)
        windows.push_back(edge_window(model, n, n_data));

    MarginalsResult out;
    out.ops = 0;
    const auto tables = pmf_tables(model, alpha, quant, y, windows, &out.ops);
    out.ops = 0; // report only the sequence enumeration work
    out.post = Eigen::MatrixXd::Zero(n_data, k);

    std::vector<int> seq(n_data, 0);
    for (std::uint64_t s = 0; s < total; ++s) {
        double p = 1.0;
        for (int n = 0; n < n_obs; ++n) {
            std::uint64_t h = 0, base = 1;
            for (std::size_t a = 0; a < windows[n].active.size(); ++a) {
                h += static_cast<std::uint64_t>(seq[n - windows[n].active[a]]) * base;
                base *= k;
            }
            p *= tables[n][h];
            ++out.ops;
        }
        for (int n = 0; n < n_data; ++n)
            out.post(n, seq[n]) += p;
        for (int n = 0; n < n_data; ++n) { // mixed-radix increment
            if (++seq[n] < k)
                break;
            seq[n] = 0;
        }
    }
    return out;
}

DetectResult bruteforce_llrs(const SparseIsiModel& model, const VectorAlphabet& alpha,
                             const Quantizer& quant, const Eigen::MatrixXcd& y, int n_data,
                             std::uint64_t budget) {
    return llrs_from_marginals(alpha,
                               bruteforce_marginals(model, alpha, quant, y, n_data, budget));
}

} // namespace qmimo

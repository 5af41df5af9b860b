// SPDX-License-Identifier: Apache-2.0

#include "qmimo/channel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qmimo {

std::vector<int> ChannelTaps::support() const {
    std::vector<int> s;
    s.reserve(taps.size());
    for (const auto& [delay, mat] : taps)
        s.push_back(delay);
    return s;
}

int ChannelTaps::max_delay() const {
    if (taps.empty())
        throw std::invalid_argument("ChannelTaps: empty support");
    return taps.rbegin()->first;
}

double ChannelTaps::total_power() const {
    double p = 0.0;
    for (const auto& [delay, mat] : taps)
        p += mat.squaredNorm();
    return p;
}

void ChannelTaps::validate() const {
    if (n_rx < 1 || n_tx < 1)
        throw std::invalid_argument("ChannelTaps: antenna counts must be positive");
    for (const auto& [delay, mat] : taps) {
        if (delay < 0)
            throw std::invalid_argument("ChannelTaps: negative delay");
        if (mat.rows() != n_rx || mat.cols() != n_tx)
            throw std::invalid_argument("ChannelTaps: tap dimension mismatch");
    }
}

std::vector<double> exp_pdp_profile(int n_taps, double decay) {
    if (n_taps < 1)
        throw std::invalid_argument("exp_pdp_profile: n_taps must be positive");
    if (decay < 0.0)
        throw std::invalid_argument("exp_pdp_profile: negative decay");
    std::vector<double> p(n_taps);
    double sum = 0.0;
    for (int l = 0; l < n_taps; ++l) {
        p[l] = std::exp(-decay * l);
        sum += p[l];
    }
    for (auto& v : p)
        v /= sum;
    return p;
}

ChannelTaps gen_exp_pdp(RngStream& rng, int n_rx, int n_tx, int n_taps, double decay) {
    if (n_rx < 1 || n_tx < 1)
        throw std::invalid_argument("gen_exp_pdp: antenna counts must be positive");
    const auto profile = exp_pdp_profile(n_taps, decay);
    ChannelTaps ch;
    ch.n_rx = n_rx;
    ch.n_tx = n_tx;
    for (int l = 0; l < n_taps; ++l) {
        Eigen::MatrixXcd h(n_rx, n_tx);
        for (int r = 0; r < n_rx; ++r)
            for (int t = 0; t < n_tx; ++t)
                h(r, t) = rng.cgauss(profile[l]);
        if (h.squaredNorm() > 0.0)
            ch.taps.emplace(l, std::move(h));
    }
    return ch;
}

Eigen::VectorXcd upa_response(const UpaGeom& geom, double az, double el) {
    if (geom.rows < 1 || geom.cols < 1 || geom.spacing <= 0.0)
        throw std::invalid_argument("upa_response: bad array geometry");
    Eigen::VectorXcd a(geom.rows * geom.cols);
    const double kx = 2.0 * M_PI * geom.spacing * std::sin(az) * std::cos(el);
    const double kv = 2.0 * M_PI * geom.spacing * std::sin(el);
    for (int v = 0; v < geom.rows; ++v)
        for (int h = 0; h < geom.cols; ++h)
            a(v * geom.cols + h) = std::polar(1.0, kx * h + kv * v);
    return a;
}

double raised_cosine(double t, double beta) {
    if (beta < 0.0 || beta > 1.0)
        throw std::invalid_argument("raised_cosine: beta must be in [0, 1]");
    if (std::abs(t) > 8.0)
        return 0.0;
    const double sinc = (t == 0.0) ? 1.0 : std::sin(M_PI * t) / (M_PI * t);
    if (beta == 0.0)
        return sinc;
    const double d = 1.0 - (2.0 * beta * t) * (2.0 * beta * t);
    if (std::abs(d) < 1e-8) {
        // Removable singularity at |t| = 1/(2 beta).
        return (M_PI / 4.0) * std::sin(M_PI / (2.0 * beta)) / (M_PI / (2.0 * beta));
    }
    return sinc * std::cos(M_PI * beta * t) / d;
}

ChannelTaps gen_geometric(const ClusterSpec& spec, int max_l) {
    if (spec.t_s <= 0.0)
        throw std::invalid_argument("gen_geometric: t_s must be positive");
    if (spec.subpaths.empty())
        throw std::invalid_argument("gen_geometric: no subpaths");
    if (max_l < 1)
        throw std::invalid_argument("gen_geometric: max_l must be positive");

    const int n_ant_tx = spec.tx_array.rows * spec.tx_array.cols;
    const int n_ant_rx = spec.rx_array.rows * spec.rx_array.cols;
    Eigen::MatrixXcd f_tx = spec.f_tx;
    Eigen::MatrixXcd f_rx = spec.f_rx;
    if (f_tx.size() == 0)
        f_tx = Eigen::MatrixXcd::Identity(n_ant_tx, n_ant_tx);
    if (f_rx.size() == 0)
        f_rx = Eigen::MatrixXcd::Identity(n_ant_rx, n_ant_rx);
    if (f_tx.rows() != n_ant_tx || f_rx.rows() != n_ant_rx)
        throw std::invalid_argument("gen_geometric: beamformer row count must match array size");

    double tau_max = 0.0;
    for (const auto& sp : spec.subpaths) {
        if (sp.delay < 0.0)
            throw std::invalid_argument("gen_geometric: negative subpath delay");
        if (sp.delay > max_l * spec.t_s)
            throw std::invalid_argument("gen_geometric: subpath delay exceeds max_l * t_s");
        tau_max = std::max(tau_max, sp.delay);
    }

    ChannelTaps ch;
    ch.n_rx = static_cast<int>(f_rx.cols());
    ch.n_tx = static_cast<int>(f_tx.cols());

    // Pulse tails reach 8 symbols past the last subpath delay.
    const int l_hi = static_cast<int>(std::floor(tau_max / spec.t_s + 0.5)) + 8;
    std::map<int, Eigen::MatrixXcd> raw;
    for (int l = 0; l <= l_hi; ++l) {
        Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n_ant_rx, n_ant_tx);
        for (const auto& sp : spec.subpaths) {
            const double p = raised_cosine((l * spec.t_s - sp.delay) / spec.t_s, spec.beta);
            if (p == 0.0)
                continue;
            const auto arx = upa_response(spec.rx_array, sp.az_rx, sp.el_rx);
            const auto atx = upa_response(spec.tx_array, sp.az_tx, sp.el_tx);
            a.noalias() += (sp.gain * p) * (arx * atx.adjoint());
        }
        Eigen::MatrixXcd h = f_rx.adjoint() * a * f_tx;
        if (h.squaredNorm() > 0.0)
            raw.emplace(l, std::move(h));
    }

    double max_norm = 0.0;
    for (const auto& [l, h] : raw)
        max_norm = std::max(max_norm, h.norm());
    for (auto& [l, h] : raw)
        if (h.norm() >= 1e-12 * max_norm)
            ch.taps.emplace(l, std::move(h));
    if (ch.taps.empty())
        throw std::invalid_argument("gen_geometric: all taps vanished");
    return ch;
}

Eigen::MatrixXcd propagate(const ChannelTaps& ch, const Eigen::MatrixXcd& x,
                           double sigma2, RngStream& rng) {
    ch.validate();
    if (ch.taps.empty())
        throw std::invalid_argument("propagate: channel has no taps");
    if (x.rows() != ch.n_tx)
        throw std::invalid_argument("propagate: symbol frame row count must equal n_tx");
    if (sigma2 < 0.0)
        throw std::invalid_argument("propagate: negative noise variance");

    const int n_data = static_cast<int>(x.cols());
    const int n_out = n_data + ch.max_delay();
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(ch.n_rx, n_out);
    for (const auto& [l, h] : ch.taps) {
        for (int n = l; n < std::min(n_out, n_data + l); ++n)
            r.col(n).noalias() += h * x.col(n - l);
    }
    // Noise drawn sample-major then antenna-major: fixed order for
    // reproducibility regardless of tap layout.
    for (int n = 0; n < n_out; ++n)
        for (int i = 0; i < ch.n_rx; ++i)
            r(i, n) += rng.cgauss(sigma2);
    return r;
}

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXcd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXcd matrix_from_json(const json& rows, int n_rx, int n_tx) {
    if (!rows.is_array() || static_cast<int>(rows.size()) != n_rx)
        throw std::runtime_error("snapshot: matrix row count mismatch");
    Eigen::MatrixXcd m(n_rx, n_tx);
    for (int r = 0; r < n_rx; ++r) {
        const auto& row = rows.at(r);
        if (!row.is_array() || static_cast<int>(row.size()) != n_tx)
            throw std::runtime_error("snapshot: matrix column count mismatch");
        for (int c = 0; c < n_tx; ++c) {
            const auto& e = row.at(c);
            if (!e.is_array() || e.size() != 2)
                throw std::runtime_error("snapshot: entry must be [re, im]");
            m(r, c) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
        }
    }
    return m;
}

} // namespace

std::string snapshot_to_json(const ChannelTaps& ch) {
    ch.validate();
    json j;
    j["n_rx"] = ch.n_rx;
    j["n_tx"] = ch.n_tx;
    j["taps"] = json::array();
    for (const auto& [delay, mat] : ch.taps)
        j["taps"].push_back({{"delay", delay}, {"matrix", matrix_to_json(mat)}});
    return j.dump(2);
}

ChannelTaps snapshot_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("snapshot: JSON parse error: ") + e.what());
    }
    try {
        ChannelTaps ch;
        ch.n_rx = j.at("n_rx").get<int>();
        ch.n_tx = j.at("n_tx").get<int>();
        for (const auto& t : j.at("taps")) {
            const int delay = t.at("delay").get<int>();
            if (!ch.taps.emplace(delay, matrix_from_json(t.at("matrix"), ch.n_rx, ch.n_tx)).second)
                throw std::runtime_error("snapshot: duplicate delay");
        }
        ch.validate();
        return ch;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("snapshot: missing or malformed field: ") + e.what());
    }
}

void save_snapshot(const ChannelTaps& ch, const std::string& path) {
    std::ofstream f(path);
    if (!f)
        throw std::runtime_error("save_snapshot: cannot open " + path);
    f << snapshot_to_json(ch) << '\n';
}

ChannelTaps load_snapshot(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("load_snapshot: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return snapshot_from_json(ss.str());
}

ClusterSpec cluster_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("cluster: JSON parse error: ") + e.what());
    }
    try {
        ClusterSpec spec;
        spec.t_s = j.at("t_s").get<double>();
        spec.beta = j.at("beta").get<double>();
        auto geom = [](const json& g) {
            UpaGeom u;
            u.rows = g.at("rows").get<int>();
            u.cols = g.at("cols").get<int>();
            u.spacing = g.value("spacing", 0.5);
            return u;
        };
        spec.tx_array = geom(j.at("tx_array"));
        spec.rx_array = geom(j.at("rx_array"));
        auto bf = [](const json& m) {
            const int rows = static_cast<int>(m.size());
            const int cols = rows ? static_cast<int>(m.at(0).size()) : 0;
            return matrix_from_json(m, rows, cols);
        };
        if (j.contains("f_tx"))
            spec.f_tx = bf(j.at("f_tx"));
        if (j.contains("f_rx"))
            spec.f_rx = bf(j.at("f_rx"));
        for (const auto& s : j.at("subpaths")) {
            Subpath sp;
            const auto& g = s.at("gain");
            sp.gain = cplx(g.at(0).get<double>(), g.at(1).get<double>());
            sp.delay = s.at("delay").get<double>();
            sp.az_tx = s.value("az_tx", 0.0);
            sp.el_tx = s.value("el_tx", 0.0);
            sp.az_rx = s.value("az_rx", 0.0);
            sp.el_rx = s.value("el_rx", 0.0);
            spec.subpaths.push_back(sp);
        }
        return spec;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("cluster: missing or malformed field: ") + e.what());
    }
}

ClusterSpec load_cluster(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("load_cluster: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return cluster_from_json(ss.str());
}

} // namespace qmimo

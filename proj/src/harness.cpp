// SPDX-License-Identifier: Apache-2.0

#include "qmimo/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "qmimo/channel.hpp"
#include "qmimo/detect.hpp"
#include "qmimo/ofdm.hpp"
#include "qmimo/quantizer.hpp"
#include "qmimo/sparsify.hpp"

namespace qmimo {
namespace {

const char* kCsvHeader = "detector,ebn0_db,frames,errors,fer,mean_ops,seconds\n";

std::string default_alist_path() {
    return std::string(QMIMO_DATA_DIR) + "/ieee80211ad_r12_z42.alist";
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const auto end = comma == std::string::npos ? s.size() : comma;
        parts.push_back(trim(s.substr(pos, end - pos)));
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return parts;
}

long long to_int(const std::string& s) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("expected an integer, got '" + s + "'");
    return v;
}

std::uint64_t to_u64(const std::string& s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error("expected an unsigned integer, got '" + s + "'");
    return v;
}

double to_double(const std::string& s) {
    // strtod accepts "inf"/"nan" spellings that from_chars(libstdc++) lacks.
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + s.size() || s.empty())
        throw std::runtime_error("expected a number, got '" + s + "'");
    return v;
}

std::vector<double> to_double_list(const std::string& s) {
    std::vector<double> vals;
    for (const std::string& part : split_list(s))
        vals.push_back(to_double(part));
    return vals;
}

ChannelModel channel_model_from_string(const std::string& name) {
    if (name == "exp_pdp")
        return ChannelModel::exp_pdp;
    if (name == "snapshot")
        return ChannelModel::snapshot;
    throw std::runtime_error("unknown channel model '" + name + "'");
}

std::vector<DetectorKind> detector_list_from_string(const std::string& s) {
    if (trim(s) == "all")
        return {DetectorKind::qbcjr, DetectorKind::qbp, DetectorKind::bcjr,
                DetectorKind::mmse, DetectorKind::bussgang};
    std::vector<DetectorKind> kinds;
    for (const std::string& part : split_list(s))
        kinds.push_back(detector_from_string(part));
    if (kinds.empty())
        throw std::runtime_error("empty detector list");
    return kinds;
}

void apply_key(SimConfig& cfg, const std::string& section, const std::string& key,
               const std::string& value) {
    if (section == "link") {
        if (key == "n_tx")
            cfg.n_tx = static_cast<int>(to_int(value));
        else if (key == "n_rx")
            cfg.n_rx = static_cast<int>(to_int(value));
        else if (key == "mod")
            cfg.mod = mod_from_string(value);
        else if (key == "bits")
            cfg.adc_bits = static_cast<int>(to_int(value));
        else if (key == "alist")
            cfg.alist_path = value;
        else
            throw std::runtime_error("unknown key '" + key + "' in [link]");
    } else if (section == "channel") {
        if (key == "model")
            cfg.channel = channel_model_from_string(value);
        else if (key == "n_taps")
            cfg.n_taps = static_cast<int>(to_int(value));
        else if (key == "decay")
            cfg.decay = to_double(value);
        else if (key == "snapshot")
            cfg.snapshot_path = value;
        else
            throw std::runtime_error("unknown key '" + key + "' in [channel]");
    } else if (section == "selection") {
        if (key == "eps_th")
            cfg.eps_th = to_double(value);
        else if (key == "d_max")
            cfg.d_max = static_cast<int>(to_int(value));
        else
            throw std::runtime_error("unknown key '" + key + "' in [selection]");
    } else if (section == "detectors") {
        if (key == "list")
            cfg.detectors = detector_list_from_string(value);
        else if (key == "bp_iters")
            cfg.bp_iters = static_cast<int>(to_int(value));
        else if (key == "ldpc_iters")
            cfg.ldpc_iters = static_cast<int>(to_int(value));
        else
            throw std::runtime_error("unknown key '" + key + "' in [detectors]");
    } else if (section == "csir") {
        if (key == "mode") {
            if (value == "perfect")
                cfg.ls_csir = false;
            else if (value == "ls")
                cfg.ls_csir = true;
            else
                throw std::runtime_error("csir mode must be 'perfect' or 'ls'");
        } else if (key == "t_p")
            cfg.t_p = static_cast<int>(to_int(value));
        else if (key == "pilot_norm")
            cfg.pilot_norm = pilot_norm_from_string(value);
        else
            throw std::runtime_error("unknown key '" + key + "' in [csir]");
    } else if (section == "sweep") {
        if (key == "ebn0_db")
            cfg.ebn0_db = to_double_list(value);
        else if (key == "frames")
            cfg.frames = static_cast<int>(to_int(value));
        else if (key == "stop_errors")
            cfg.stop_errors = static_cast<int>(to_int(value));
        else if (key == "seed")
            cfg.seed = to_u64(value);
        else if (key == "threads")
            cfg.threads = static_cast<int>(to_int(value));
        else
            throw std::runtime_error("unknown key '" + key + "' in [sweep]");
    } else {
        throw std::runtime_error("unknown section [" + section + "]");
    }
}

void validate_config(const SimConfig& cfg) {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
    if (cfg.n_tx < 1 || cfg.n_rx < 1)
        fail("n_tx and n_rx must be positive");
    if (cfg.channel == ChannelModel::exp_pdp && cfg.n_taps < 1)
        fail("n_taps must be positive");
    if (cfg.channel == ChannelModel::snapshot && cfg.snapshot_path.empty())
        fail("channel model 'snapshot' requires a snapshot path");
    if (cfg.eps_th < 0.0)
        fail("eps_th must be nonnegative");
    if (cfg.d_max < 0)
        fail("d_max must be nonnegative");
    if (cfg.detectors.empty())
        fail("detector list is empty");
    for (std::size_t i = 0; i < cfg.detectors.size(); ++i)
        for (std::size_t j = i + 1; j < cfg.detectors.size(); ++j)
            if (cfg.detectors[i] == cfg.detectors[j])
                fail("duplicate detector '" + to_string(cfg.detectors[i]) + "'");
    if (cfg.bp_iters < 1)
        fail("bp_iters must be positive");
    if (cfg.ldpc_iters < 1)
        fail("ldpc_iters must be positive");
    if (cfg.ls_csir && cfg.t_p < cfg.n_tx)
        fail("t_p must be at least n_tx for LS estimation");
    if (cfg.ebn0_db.empty())
        fail("ebn0_db grid is empty");
    if (cfg.frames < 1)
        fail("frames must be positive");
    if (cfg.stop_errors < 0)
        fail("stop_errors must be nonnegative");
    if (cfg.threads < 1)
        fail("threads must be positive");
}

Eigen::MatrixXcd quantize_mat(const Quantizer& quant, const Eigen::MatrixXcd& r) {
    return r.unaryExpr([&quant](cplx v) { return quant.quantize(v); });
}

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

DetectorKind detector_from_string(const std::string& name) {
    if (name == "qbcjr")
        return DetectorKind::qbcjr;
    if (name == "qbp")
        return DetectorKind::qbp;
    if (name == "bcjr")
        return DetectorKind::bcjr;
    if (name == "mmse")
        return DetectorKind::mmse;
    if (name == "bussgang")
        return DetectorKind::bussgang;
    throw std::runtime_error("unknown detector '" + name + "'");
}

std::string to_string(DetectorKind kind) {
    switch (kind) {
    case DetectorKind::qbcjr:
        return "qbcjr";
    case DetectorKind::qbp:
        return "qbp";
    case DetectorKind::bcjr:
        return "bcjr";
    case DetectorKind::mmse:
        return "mmse";
    case DetectorKind::bussgang:
        return "bussgang";
    }
    throw std::logic_error("invalid DetectorKind");
}

bool detector_uses_ofdm(DetectorKind kind) {
    return kind == DetectorKind::mmse || kind == DetectorKind::bussgang;
}

SimConfig parse_config(const std::string& text) {
    SimConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    auto fail = [&lineno](const std::string& msg) {
        throw std::runtime_error("config line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos)
            line.erase(comment);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                fail("malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail("expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            fail("key '" + key + "' appears before any [section]");
        if (key.empty())
            fail("empty key");
        if (value.empty())
            fail("empty value for '" + key + "'");
        try {
            apply_key(cfg, section, key, value);
        } catch (const std::exception& e) {
            fail(e.what());
        }
    }
    return cfg;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

double eb_n0_to_sigma2(double ebn0_db, int n_tx, int m_bits) {
    if (n_tx < 1 || m_bits < 1)
        throw std::invalid_argument("eb_n0_to_sigma2: n_tx and m_bits must be positive");
    return static_cast<double>(n_tx) / (m_bits * std::pow(10.0, ebn0_db / 10.0));
}

std::vector<FerResult> run_sweep(const SimConfig& cfg) {
    validate_config(cfg);

    const Constellation scalar = Constellation::make(cfg.mod);
    const VectorAlphabet alpha(scalar, cfg.n_tx);
    const int m_bits = alpha.m_bits();
    const LdpcCode code =
        LdpcCode::from_alist(cfg.alist_path.empty() ? default_alist_path() : cfg.alist_path);
    if (code.n() % m_bits != 0)
        throw std::invalid_argument("codeword length " + std::to_string(code.n()) +
                                    " is not a multiple of " + std::to_string(m_bits) +
                                    " bits per slot");
    const int n_data = code.n() / m_bits;
    const Quantizer quant = Quantizer::make_uniform(cfg.adc_bits);

    ChannelTaps snapshot;
    if (cfg.channel == ChannelModel::snapshot) {
        snapshot = load_snapshot(cfg.snapshot_path);
        if (snapshot.n_rx != cfg.n_rx || snapshot.n_tx != cfg.n_tx)
            throw std::invalid_argument("snapshot dimensions do not match [link]");
    }

    bool any_ofdm = false;
    for (DetectorKind k : cfg.detectors)
        any_ofdm = any_ofdm || detector_uses_ofdm(k);
    std::optional<DftPlan> plan;
    if (any_ofdm)
        plan.emplace(n_data);

    const int n_det = static_cast<int>(cfg.detectors.size());
    std::vector<FerResult> out;
    out.reserve(cfg.ebn0_db.size() * cfg.detectors.size());

    for (const double ebn0 : cfg.ebn0_db) {
        const double sigma2 = eb_n0_to_sigma2(ebn0, cfg.n_tx, m_bits);
        std::vector<FerResult> cell(n_det);
        std::vector<std::uint64_t> ops(n_det, 0);
        for (int d = 0; d < n_det; ++d) {
            cell[d].detector = to_string(cfg.detectors[d]);
            cell[d].ebn0_db = ebn0;
        }

        for (int f = 0; f < cfg.frames; ++f) {
            std::vector<int> active;
            for (int d = 0; d < n_det; ++d)
                if (cfg.stop_errors == 0 || cell[d].errors < cfg.stop_errors)
                    active.push_back(d);
            if (active.empty())
                break;

            bool want_sc = false, want_ofdm = false;
            for (int d : active) {
                if (detector_uses_ofdm(cfg.detectors[d]))
                    want_ofdm = true;
                else
                    want_sc = true;
            }

            // Fixed role layout keeps every draw independent of which
            // detectors are enabled or still active.
            const std::uint64_t base = static_cast<std::uint64_t>(f) * 8;
            RngStream bits_rng(cfg.seed, base + 0);
            RngStream ch_rng(cfg.seed, base + 1);
            RngStream noise_rng(cfg.seed, base + 2);
            RngStream pilot_noise_rng(cfg.seed, base + 3);
            RngStream pilot_rng(cfg.seed, base + 4);
            RngStream ofdm_rng(cfg.seed, base + 5);

            const ChannelTaps ch = cfg.channel == ChannelModel::snapshot
                                       ? snapshot
                                       : gen_exp_pdp(ch_rng, cfg.n_rx, cfg.n_tx,
                                                     cfg.n_taps, cfg.decay);

            const std::vector<uint8_t> info = random_bits(bits_rng, code.k());
            const std::vector<uint8_t> cw = code.encode(info);
            const Eigen::MatrixXcd x = map_symbols(alpha, cw);

            ChannelTaps est;
            if (cfg.ls_csir) {
                const Eigen::MatrixXcd pilots =
                    gen_pilots(pilot_rng, cfg.n_tx, cfg.t_p, cfg.pilot_norm);
                const Eigen::MatrixXcd y_p =
                    quantize_mat(quant, propagate(ch, pilots, sigma2, pilot_noise_rng));
                est = ls_estimate(pilots, y_p, ch.max_delay() + 1);
            } else {
                est = ch;
            }

            Eigen::MatrixXcd r_sc, y_sc;
            std::optional<SparseIsiModel> model;
            if (want_sc) {
                r_sc = propagate(ch, x, sigma2, noise_rng);
                y_sc = quantize_mat(quant, r_sc);
                const SelectionResult sel =
                    select_dominant_taps(est, sigma2, quant, cfg.eps_th, cfg.d_max);
                if (sel.dom.empty())
                    throw std::runtime_error(
                        "tap selection kept no dominant taps; lower eps_th or raise d_max");
                model.emplace(make_sparse_model(est, sel.dom, sigma2));
            }

            Eigen::MatrixXcd y_ofdm;
            int cp = 0;
            double sigma2_ofdm = 0.0;
            if (want_ofdm) {
                // The cyclic prefix spends energy on no new data; keeping Eb
                // fixed inflates the per-sample noise by (n + cp) / n.
                cp = ch.max_delay();
                sigma2_ofdm = sigma2 * static_cast<double>(n_data + cp) / n_data;
                const Eigen::MatrixXcd x_time = ofdm_modulate(*plan, x, cp);
                y_ofdm = quantize_mat(quant, propagate(ch, x_time, sigma2_ofdm, ofdm_rng));
            }

            for (int d : active) {
                const auto t0 = std::chrono::steady_clock::now();
                DetectResult det;
                switch (cfg.detectors[d]) {
                case DetectorKind::qbcjr:
                    det = qbcjr_llrs(*model, alpha, quant, y_sc, n_data);
                    break;
                case DetectorKind::qbp:
                    det = qbp_llrs(*model, alpha, quant, y_sc, n_data,
                                   QbpOptions{cfg.bp_iters});
                    break;
                case DetectorKind::bcjr:
                    det = bcjr_unquantized_llrs(*model, alpha, r_sc, n_data);
                    break;
                case DetectorKind::mmse:
                    det = ofdm_mmse_llrs(est, scalar, *plan, y_ofdm, cp, sigma2_ofdm);
                    break;
                case DetectorKind::bussgang:
                    det = ofdm_bussgang_llrs(est, scalar, quant, *plan, y_ofdm, cp,
                                             sigma2_ofdm);
                    break;
                }
                const LdpcCode::DecodeResult dec = code.decode(det.llrs, cfg.ldpc_iters);
                const auto t1 = std::chrono::steady_clock::now();

                cell[d].frames += 1;
                ops[d] += det.ops;
                if (!std::equal(info.begin(), info.end(), dec.codeword.begin()))
                    cell[d].errors += 1;
                cell[d].seconds += std::chrono::duration<double>(t1 - t0).count();
            }
        }

        for (int d = 0; d < n_det; ++d) {
            FerResult& r = cell[d];
            if (r.frames > 0) {
                r.fer = static_cast<double>(r.errors) / r.frames;
                r.mean_ops = static_cast<double>(ops[d]) / r.frames;
            }
            out.push_back(std::move(r));
        }
    }
    return out;
}

std::string results_to_csv(const std::vector<FerResult>& rows) {
    std::string out = kCsvHeader;
    for (const FerResult& r : rows) {
        out += r.detector;
        out += ',';
        out += fmt_double(r.ebn0_db);
        out += ',';
        out += std::to_string(r.frames);
        out += ',';
        out += std::to_string(r.errors);
        out += ',';
        out += fmt_double(r.fer);
        out += ',';
        out += fmt_double(r.mean_ops);
        out += ',';
        out += fmt_double(r.seconds);
        out += '\n';
    }
    return out;
}

void write_csv(const std::string& path, const std::vector<FerResult>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open output file: " + path);
    out << results_to_csv(rows);
    if (!out)
        throw std::runtime_error("write failed: " + path);
}

} // namespace qmimo

// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end.
//
//   qmimo sweep        FER sweep from an INI config, CSV to stdout or --out
//   qmimo select       one-shot dominant-tap selection trace for a channel
//   qmimo estimate     one-shot LS channel estimate from quantized pilots
//   qmimo oracle-check trellis detector vs. exhaustive enumeration
//
// select and estimate draw the channel, pilots, and pilot noise from the
// same streams as frame 0 of a sweep with the same seed, so their output
// describes exactly what the first simulated frame sees.

#include <CLI11.hpp>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "qmimo/chanest.hpp"
#include "qmimo/channel.hpp"
#include "qmimo/detect.hpp"
#include "qmimo/harness.hpp"
#include "qmimo/quantizer.hpp"
#include "qmimo/sparsify.hpp"

namespace {

using namespace qmimo;

struct CommonFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double ebn0 = 0.0;
    bool ebn0_set = false;
};

SimConfig load_with_overrides(const CommonFlags& flags) {
    SimConfig cfg = load_config(flags.config_path);
    if (flags.seed_set)
        cfg.seed = flags.seed;
    return cfg;
}

double pick_ebn0(const SimConfig& cfg, const CommonFlags& flags) {
    if (flags.ebn0_set)
        return flags.ebn0;
    if (cfg.ebn0_db.empty())
        throw std::runtime_error("no Eb/N0 point: config grid is empty and --ebno not given");
    return cfg.ebn0_db.front();
}

ChannelTaps realize_channel(const SimConfig& cfg) {
    if (cfg.channel == ChannelModel::snapshot)
        return load_snapshot(cfg.snapshot_path);
    RngStream ch_rng(cfg.seed, 1); // frame 0, channel role
    return gen_exp_pdp(ch_rng, cfg.n_rx, cfg.n_tx, cfg.n_taps, cfg.decay);
}

int cmd_sweep(const CommonFlags& flags, const std::string& out_path,
              const std::vector<double>& ebn0_override,
              const std::vector<std::string>& detector_override, int frames_override,
              int stop_errors_override) {
    SimConfig cfg = load_with_overrides(flags);
    if (!ebn0_override.empty())
        cfg.ebn0_db = ebn0_override;
    if (!detector_override.empty()) {
        cfg.detectors.clear();
        for (const std::string& name : detector_override)
            cfg.detectors.push_back(detector_from_string(name));
    }
    if (frames_override > 0)
        cfg.frames = frames_override;
    if (stop_errors_override >= 0)
        cfg.stop_errors = stop_errors_override;

    const std::vector<FerResult> rows = run_sweep(cfg);
    if (out_path.empty()) {
        std::cout << results_to_csv(rows);
    } else {
        write_csv(out_path, rows);
        std::fprintf(stderr, "wrote %zu rows to %s\n", rows.size(), out_path.c_str());
    }
    return 0;
}

int cmd_select(const CommonFlags& flags) {
    const SimConfig cfg = load_with_overrides(flags);
    const double ebn0 = pick_ebn0(cfg, flags);
    const Constellation scalar = Constellation::make(cfg.mod);
    const double sigma2 = eb_n0_to_sigma2(ebn0, cfg.n_tx, cfg.n_tx * scalar.bits_per_symbol);
    const Quantizer quant = Quantizer::make_uniform(cfg.adc_bits);
    const ChannelTaps ch = realize_channel(cfg);

    std::printf("channel support:");
    for (int l : ch.support())
        std::printf(" %d", l);
    std::printf("\nEb/N0 %.4g dB -> sigma2 %.6g\n", ebn0, sigma2);

    const SelectionResult sel = select_dominant_taps(ch, sigma2, quant, cfg.eps_th, cfg.d_max);
    for (std::size_t i = 0; i < sel.trace.size(); ++i)
        std::printf("step %zu: add delay %d, nmse %.6g\n", i + 1, sel.trace[i].delay,
                    sel.trace[i].nmse_after);
    std::printf("dominant:");
    for (int l : sel.dom)
        std::printf(" %d", l);
    std::printf("\nweak:");
    for (int l : sel.weak)
        std::printf(" %d", l);
    std::printf("\nfinal nmse: %.6g (eps_th %.6g, d_max %d)\n", sel.nmse_final, cfg.eps_th,
                cfg.d_max);
    return 0;
}

int cmd_estimate(const CommonFlags& flags, const std::string& out_path) {
    const SimConfig cfg = load_with_overrides(flags);
    const double ebn0 = pick_ebn0(cfg, flags);
    const Constellation scalar = Constellation::make(cfg.mod);
    const double sigma2 = eb_n0_to_sigma2(ebn0, cfg.n_tx, cfg.n_tx * scalar.bits_per_symbol);
    const Quantizer quant = Quantizer::make_uniform(cfg.adc_bits);
    const ChannelTaps ch = realize_channel(cfg);

    RngStream pilot_rng(cfg.seed, 4);       // frame 0, pilot symbol role
    RngStream pilot_noise_rng(cfg.seed, 3); // frame 0, pilot noise role
    const Eigen::MatrixXcd pilots = gen_pilots(pilot_rng, cfg.n_tx, cfg.t_p, cfg.pilot_norm);
    Eigen::MatrixXcd y_p = propagate(ch, pilots, sigma2, pilot_noise_rng);
    y_p = y_p.unaryExpr([&quant](cplx v) { return quant.quantize(v); });
    const int n_taps = ch.max_delay() + 1;
    const ChannelTaps est = ls_estimate(pilots, y_p, n_taps);

    std::printf("T_p %d, %d taps, Eb/N0 %.4g dB -> sigma2 %.6g\n", cfg.t_p, n_taps, ebn0,
                sigma2);
    double num = 0.0, den = 0.0;
    for (int l = 0; l < n_taps; ++l) {
        const Eigen::MatrixXcd truth = ch.taps.count(l)
                                           ? ch.taps.at(l)
                                           : Eigen::MatrixXcd::Zero(ch.n_rx, ch.n_tx);
        const Eigen::MatrixXcd guess = est.taps.count(l)
                                           ? est.taps.at(l)
                                           : Eigen::MatrixXcd::Zero(ch.n_rx, ch.n_tx);
        num += (guess - truth).squaredNorm();
        den += truth.squaredNorm();
        std::printf("delay %d: |true| %.4g, |est| %.4g, |err| %.4g\n", l, truth.norm(),
                    guess.norm(), (guess - truth).norm());
    }
    std::printf("relative squared error: %.6g\n", den > 0.0 ? num / den : 0.0);
    if (!out_path.empty()) {
        save_snapshot(est, out_path);
        std::fprintf(stderr, "wrote estimate snapshot to %s\n", out_path.c_str());
    }
    return 0;
}

int cmd_oracle_check(int instances, std::uint64_t seed, int n_tx, int n_rx,
                     const std::string& mod_name, int bits, int n_taps, int d_size,
                     int n_data, double sigma2, bool verbose) {
    const Constellation scalar = Constellation::make(mod_from_string(mod_name));
    const VectorAlphabet alpha(scalar, n_tx);
    const Quantizer quant = Quantizer::make_uniform(bits);
    if (d_size < 1 || d_size > n_taps)
        throw std::runtime_error("d_size must be in [1, n_taps]");

    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        RngStream rng(seed, static_cast<std::uint64_t>(i) + 1);
        const ChannelTaps ch = gen_exp_pdp(rng, n_rx, n_tx, n_taps, 0.5);

        std::vector<int> dom;
        while (static_cast<int>(dom.size()) < d_size) {
            const int l = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_taps)));
            if (std::find(dom.begin(), dom.end(), l) == dom.end())
                dom.push_back(l);
        }
        std::sort(dom.begin(), dom.end());
        const SparseIsiModel model = make_sparse_model(ch, dom, sigma2);

        Eigen::MatrixXcd x(n_tx, n_data);
        for (int n = 0; n < n_data; ++n)
            x.col(n) = alpha.symbol(static_cast<int>(rng.below(alpha.size())));
        Eigen::MatrixXcd y = propagate(ch, x, sigma2, rng);
        y = y.unaryExpr([&quant](cplx v) { return quant.quantize(v); });

        const DetectResult fast = qbcjr_llrs(model, alpha, quant, y, n_data);
        const DetectResult exact = bruteforce_llrs(model, alpha, quant, y, n_data);
        double diff = 0.0;
        for (std::size_t j = 0; j < fast.llrs.size(); ++j) {
            const double denom =
                std::max({1.0, std::abs(fast.llrs[j]), std::abs(exact.llrs[j])});
            diff = std::max(diff, std::abs(fast.llrs[j] - exact.llrs[j]) / denom);
        }
        worst = std::max(worst, diff);
        if (verbose)
            std::printf("instance %d: max relative llr diff %.3g\n", i, diff);
    }
    const bool ok = worst <= 1e-8;
    std::printf("worst relative llr diff over %d instances: %.3g (tolerance 1e-8) %s\n",
                instances, worst, ok ? "OK" : "FAIL");
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"link-level simulator for coarsely quantized sparse-ISI MIMO links"};
    app.require_subcommand(1);

    CommonFlags flags;
    auto add_common = [&flags](CLI::App* sub, bool with_ebn0) {
        sub->add_option("-c,--config", flags.config_path, "INI config file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", flags.seed, "override [sweep] seed")
            ->each([&flags](const std::string&) { flags.seed_set = true; });
        if (with_ebn0)
            sub->add_option("--ebno", flags.ebn0, "Eb/N0 in dB (default: first grid point)")
                ->each([&flags](const std::string&) { flags.ebn0_set = true; });
    };

    CLI::App* sweep = app.add_subcommand("sweep", "run a frame-error-rate sweep");
    std::string out_path;
    std::vector<double> ebn0_override;
    std::vector<std::string> detector_override;
    int frames_override = 0, stop_errors_override = -1;
    add_common(sweep, false);
    sweep->add_option("-o,--out", out_path, "write CSV here instead of stdout");
    sweep->add_option("--ebno", ebn0_override, "override the Eb/N0 grid (dB)")
        ->delimiter(',');
    sweep->add_option("--detectors", detector_override,
                      "override the detector list (qbcjr,qbp,bcjr,mmse,bussgang)")
        ->delimiter(',');
    sweep->add_option("--frames", frames_override, "override the frame count")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--stop-errors", stop_errors_override,
                      "override the early-stop error count (0 disables)")
        ->check(CLI::NonNegativeNumber);

    CLI::App* select = app.add_subcommand("select", "print a dominant-tap selection trace");
    add_common(select, true);

    CLI::App* estimate = app.add_subcommand("estimate", "LS-estimate one channel realization");
    std::string est_out;
    add_common(estimate, true);
    estimate->add_option("-o,--out", est_out, "write the estimate as a snapshot JSON");

    CLI::App* oracle = app.add_subcommand(
        "oracle-check", "compare the trellis detector against exhaustive enumeration");
    int oc_instances = 25, oc_n_tx = 1, oc_n_rx = 2, oc_bits = 2, oc_n_taps = 3;
    int oc_d_size = 2, oc_n_data = 5;
    std::uint64_t oc_seed = 1;
    double oc_sigma2 = 0.5;
    std::string oc_mod = "bpsk";
    bool oc_verbose = false;
    oracle->add_option("--instances", oc_instances)->check(CLI::PositiveNumber);
    oracle->add_option("--seed", oc_seed);
    oracle->add_option("--n-tx", oc_n_tx)->check(CLI::PositiveNumber);
    oracle->add_option("--n-rx", oc_n_rx)->check(CLI::PositiveNumber);
    oracle->add_option("--mod", oc_mod, "bpsk or qam4");
    oracle->add_option("--bits", oc_bits, "ADC resolution")->check(CLI::PositiveNumber);
    oracle->add_option("--n-taps", oc_n_taps)->check(CLI::PositiveNumber);
    oracle->add_option("--d-size", oc_d_size, "dominant subset size");
    oracle->add_option("--n-data", oc_n_data)->check(CLI::PositiveNumber);
    oracle->add_option("--sigma2", oc_sigma2)->check(CLI::NonNegativeNumber);
    oracle->add_flag("-v,--verbose", oc_verbose, "print every instance");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sweep)
            return cmd_sweep(flags, out_path, ebn0_override, detector_override,
                             frames_override, stop_errors_override);
        if (*select)
            return cmd_select(flags);
        if (*estimate)
            return cmd_estimate(flags, est_out);
        if (*oracle)
            return cmd_oracle_check(oc_instances, oc_seed, oc_n_tx, oc_n_rx, oc_mod, oc_bits,
                                    oc_n_taps, oc_d_size, oc_n_data, oc_sigma2, oc_verbose);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

// SPDX-License-Identifier: Apache-2.0
//
// qmimo - link-level simulation of coarsely quantized sparse-ISI MIMO links
//
// Core numerics shared by every module: the standard normal CDF and its
// stable difference, probability flooring for log-domain work, and a
// seedable multi-stream RNG with bitwise-reproducible draws.

#ifndef QMIMO_CORE_HPP
#define QMIMO_CORE_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace qmimo {

using cplx = std::complex<double>;

// Smallest probability kept before taking logarithms. Conditional PMFs of
// heavily mismatched hypotheses underflow to 0; flooring keeps log-ratios
// finite and the final LLR clamp meaningful.
inline constexpr double kProbFloor = 1e-300;

double safe_log(double p); // log(max(p, kProbFloor))

// P(Z <= x) for Z ~ N(0,1). Accepts +-inf. Throws std::domain_error on NaN.
double normal_cdf(double x);

// P(a < Z <= b), a <= b, accurate in both tails (no catastrophic
// cancellation for a,b deep in the same tail). Accepts infinite endpoints.
double normal_cdf_diff(double a, double b);

// Deterministic stream RNG. Streams with distinct (seed, stream_id) pairs are
// statistically independent for simulation purposes; equal pairs reproduce
// the exact same draw sequence, bit for bit, across runs of the same binary.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t u64();
    double uniform();  // (0, 1]
    double gauss();    // N(0, 1), Box-Muller (hand-rolled for reproducibility)
    cplx cgauss(double var); // CN(0, var); var = 0 gives exactly 0

    // n i.i.d. CN(0, var) draws. Throws std::invalid_argument if var < 0.
    std::vector<cplx> draw_cgauss(std::size_t n, double var);

    // Uniform integer in [0, bound), bias-free. bound >= 1.
    std::uint64_t below(std::uint64_t bound);

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace qmimo

#endif

// SPDX-License-Identifier: Apache-2.0

#include "qmimo/core.hpp"

#include <cmath>
#include <stdexcept>

namespace qmimo {

double safe_log(double p) {
    return std::log(std::max(p, kProbFloor));
}

double normal_cdf(double x) {
    if (std::isnan(x))
        throw std::domain_error("normal_cdf: NaN argument");
    // 0.5*erfc(-x/sqrt(2)) is stable in both tails: erfc of a large positive
    // argument underflows gracefully instead of cancelling against 1.
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

double normal_cdf_diff(double a, double b) {
    if (std::isnan(a) || std::isnan(b))
        throw std::domain_error("normal_cdf_diff: NaN argument");
    if (a > b)
        throw std::domain_error("normal_cdf_diff: requires a <= b");
    // Keep erfc arguments positive so that same-tail differences subtract two
    // well-scaled small numbers rather than two values near 1.
    if (a >= 0.0)
        return 0.5 * (std::erfc(a * M_SQRT1_2) - std::erfc(b * M_SQRT1_2));
    if (b <= 0.0)
        return 0.5 * (std::erfc(-b * M_SQRT1_2) - std::erfc(-a * M_SQRT1_2));
    return 0.5 * (std::erf(b * M_SQRT1_2) - std::erf(a * M_SQRT1_2));
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : eng_(splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL))) {}

std::uint64_t RngStream::u64() {
    return eng_();
}

double RngStream::uniform() {
    // 53-bit mantissa, shifted into (0, 1] so log() below is always finite.
    return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::gauss() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
}

cplx RngStream::cgauss(double var) {
    if (var < 0.0)
        throw std::invalid_argument("cgauss: negative variance");
    if (var == 0.0)
        return {0.0, 0.0};
    const double s = std::sqrt(var / 2.0);
    const double re = gauss();
    const double im = gauss();
    return {s * re, s * im};
}

std::vector<cplx> RngStream::draw_cgauss(std::size_t n, double var) {
    if (var < 0.0)
        throw std::invalid_argument("draw_cgauss: negative variance");
    std::vector<cplx> out(n);
    for (auto& z : out)
        z = cgauss(var);
    return out;
}

std::uint64_t RngStream::below(std::uint64_t bound) {
    if (bound == 0)
        throw std::invalid_argument("below: bound must be positive");
    // Rejection sampling on the top bits; bias-free for any bound.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = eng_();
    } while (x >= limit);
    return x % bound;
}

} // namespace qmimo

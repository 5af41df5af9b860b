// SPDX-License-Identifier: Apache-2.0

#include "qmimo/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qmimo {

Quantizer::Quantizer(int bits, double step)
    : bits_(bits), n_levels_(1 << bits), step_(step) {}

Quantizer Quantizer::make_uniform(int bits) {
    if (bits < 1 || bits > 16)
        throw std::invalid_argument("make_uniform: bits must be in [1, 16]");
    // The 1-bit alphabet is {-1, +1}; from 2 bits on the step follows the
    // 0.75 * 2^(2-B) pattern (so B = 2 gives {+-0.375, +-1.125}).
    const double step = (bits == 1) ? 2.0 : 0.75 * std::ldexp(1.0, 2 - bits);
    return Quantizer(bits, step);
}

double Quantizer::level(int idx) const {
    if (idx < 0 || idx >= n_levels_)
        throw std::invalid_argument("level: index out of range");
    return (idx - n_levels_ / 2 + 0.5) * step_;
}

std::vector<double> Quantizer::levels() const {
    std::vector<double> out(n_levels_);
    for (int i = 0; i < n_levels_; ++i)
        out[i] = level(i);
    return out;
}

double Quantizer::quantize(double r) const {
    if (std::isnan(r))
        throw std::domain_error("quantize: NaN sample");
    // ceil() assigns boundary samples (r/step integral) to the lower bin.
    double pos = std::ceil(r / step_);
    const int half = n_levels_ / 2;
    int idx = half - 1 + static_cast<int>(std::clamp(pos, double(1 - half), double(half)));
    return level(idx);
}

cplx Quantizer::quantize(cplx r) const {
    return {quantize(r.real()), quantize(r.imag())};
}

std::vector<cplx> Quantizer::quantize_seq(const std::vector<cplx>& r) const {
    std::vector<cplx> out(r.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        out[i] = quantize(r[i]);
    return out;
}

int Quantizer::level_index(double q) const {
    const int idx = static_cast<int>(std::lround(q / step_ + n_levels_ / 2 - 0.5));
    if (idx < 0 || idx >= n_levels_ || level(idx) != q)
        throw std::invalid_argument("level_index: not an output level");
    return idx;
}

std::pair<double, double> Quantizer::bounds_index(int idx) const {
    if (idx < 0 || idx >= n_levels_)
        throw std::invalid_argument("bounds_index: index out of range");
    const int half = n_levels_ / 2;
    const double inf = std::numeric_limits<double>::infinity();
    const double lo = (idx == 0) ? -inf : (idx - half) * step_;
    const double hi = (idx == n_levels_ - 1) ? inf : (idx + 1 - half) * step_;
    return {lo, hi};
}

std::pair<double, double> Quantizer::bounds(double q) const {
    return bounds_index(level_index(q));
}

std::vector<double> Quantizer::inner_boundaries() const {
    std::vector<double> out(n_levels_ - 1);
    const int half = n_levels_ / 2;
    for (int i = 1; i < n_levels_; ++i)
        out[i - 1] = (i - half) * step_;
    return out;
}

} // namespace qmimo

// SPDX-License-Identifier: Apache-2.0
//
// Scalar mid-rise ADC model applied per real dimension. The B-bit quantizer
// has 2^B output levels symmetric about zero (zero itself is never a level)
// and decision boundaries halfway between adjacent levels; the outermost
// bins extend to +-infinity. A complex sample is quantized component-wise.

#ifndef QMIMO_QUANTIZER_HPP
#define QMIMO_QUANTIZER_HPP

#include <utility>
#include <vector>

#include "qmimo/core.hpp"

namespace qmimo {

class Quantizer {
  public:
    // B = 1: levels {-1, +1}. B = 2: levels {+-0.375, +-1.125} (step 0.75).
    // B >= 3 keeps the same pattern with step 0.75 * 2^(2-B). Throws
    // std::invalid_argument unless 1 <= bits <= 16.
    static Quantizer make_uniform(int bits);

    int bits() const { return bits_; }
    int n_levels() const { return n_levels_; }
    double step() const { return step_; }

    double level(int idx) const;              // idx in [0, 2^B)
    std::vector<double> levels() const;

    // Output level for a real sample; values exactly on a decision boundary
    // map to the lower bin.
    double quantize(double r) const;
    cplx quantize(cplx r) const;
    std::vector<cplx> quantize_seq(const std::vector<cplx>& r) const;

    int level_index(double q) const;          // inverse of level(); validates q

    // Decision interval (l, u] that produces output level q. l = -inf for the
    // lowest level, u = +inf for the highest.
    std::pair<double, double> bounds(double q) const;
    std::pair<double, double> bounds_index(int idx) const;

    // Inner decision boundaries b_1 < ... < b_{2^B - 1} (finite ones only).
    std::vector<double> inner_boundaries() const;

  private:
    Quantizer(int bits, double step);

    int bits_;
    int n_levels_;
    double step_;
};

} // namespace qmimo

#endif

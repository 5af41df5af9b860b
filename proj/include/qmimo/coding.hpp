// SPDX-License-Identifier: Apache-2.0
//
// Bit-to-symbol mapping and channel coding. Constellations are per-antenna
// scalar alphabets (BPSK or Gray 4-QAM); a frame of coded bits is mapped
// antenna-major onto length-M vector symbols, M = n_tx * bits per antenna
// symbol. The LDPC code is loaded from an alist parity-check file; encoding
// is systematic (information bits first), decoding is flooding sum-product
// with early exit on a zero syndrome.
//
// LLR convention everywhere: positive means bit 0 is more likely.

#ifndef QMIMO_CODING_HPP
#define QMIMO_CODING_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "qmimo/core.hpp"

namespace qmimo {

enum class ModKind { bpsk, qam4 };

ModKind mod_from_string(const std::string& name);
std::string to_string(ModKind kind);

// Scalar per-antenna alphabet with its bit labeling. Point index equals the
// bit pattern read LSB-first, so point(0) carries all-zero bits.
struct Constellation {
    ModKind kind;
    int bits_per_symbol;            // 1 (BPSK) or 2 (4-QAM)
    std::vector<cplx> points;       // size 2^bits_per_symbol

    static Constellation make(ModKind kind);
};

// Joint alphabet of one time slot across n_tx antennas: K = 2^M vector
// symbols. Symbol index k encodes the slot's M bits LSB-first; antenna t
// takes bits [t*bps, (t+1)*bps).
class VectorAlphabet {
  public:
    VectorAlphabet(const Constellation& scalar, int n_tx);

    int n_tx() const { return n_tx_; }
    int m_bits() const { return m_bits_; }
    int size() const { return 1 << m_bits_; }

    const Eigen::VectorXcd& symbol(int k) const { return symbols_[k]; }
    int bit(int k, int m) const { return (k >> m) & 1; }

    // Demap set K_m(u): symbol indices whose m-th bit equals u.
    const std::vector<int>& demap_set(int m, int u) const { return demap_[m][u]; }

  private:
    int n_tx_;
    int m_bits_;
    std::vector<Eigen::VectorXcd> symbols_;
    std::vector<std::array<std::vector<int>, 2>> demap_;
};

// bits.size() must be a multiple of m_bits; returns n_tx x n_slots symbols.
Eigen::MatrixXcd map_symbols(const VectorAlphabet& alpha, const std::vector<uint8_t>& bits);
std::vector<int> map_symbol_indices(const VectorAlphabet& alpha, const std::vector<uint8_t>& bits);
std::vector<uint8_t> demap_indices(const VectorAlphabet& alpha, const std::vector<int>& ks);

// Coded-bit index i (0-based) lives in slot i / M as bit i % M.
inline int slot_of_bit(int i, int m_bits) { return i / m_bits; }
inline int lane_of_bit(int i, int m_bits) { return i % m_bits; }

class LdpcCode {
  public:
    // Parses MacKay alist text (columns-first, 1-based, optional zero
    // padding). Throws std::runtime_error on malformed input.
    static LdpcCode from_alist_text(const std::string& text);
    static LdpcCode from_alist(const std::string& path);

    int n() const { return n_; }                   // codeword length
    int k() const { return n_ - m_; }              // information bits
    int m() const { return m_; }                   // parity checks

    // Systematic encoding: codeword = [info, parity]. Requires the right
    // m x m block of H to be invertible over GF(2) (verified at load).
    std::vector<uint8_t> encode(const std::vector<uint8_t>& info) const;

    bool syndrome_ok(const std::vector<uint8_t>& codeword) const;

    struct DecodeResult {
        std::vector<uint8_t> codeword;
        bool converged = false;
        int iterations = 0;
    };
    // Flooding sum-product on the Tanner graph; positive LLR favors bit 0.
    DecodeResult decode(const std::vector<double>& llr, int max_iters = 50) const;

    std::string to_alist_text() const;

    // Row-wise adjacency (column indices per check), for inspection/tests.
    const std::vector<std::vector<int>>& check_adjacency() const { return rows_; }

  private:
    LdpcCode() = default;
    void build_encoder();

    int n_ = 0, m_ = 0;
    std::vector<std::vector<int>> rows_; // per check: sorted variable indices
    std::vector<std::vector<int>> cols_; // per variable: sorted check indices
    // parity = enc_ * info over GF(2); row r stored as packed 64-bit words.
    std::vector<std::vector<std::uint64_t>> enc_;
};

// Uniform random information bits (one call per bit, LSB of the draw).
std::vector<uint8_t> random_bits(RngStream& rng, int n);

} // namespace qmimo

#endif

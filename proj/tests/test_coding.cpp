// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qmimo/coding.hpp"

using namespace qmimo;

namespace {

const char* kAlistPath = QMIMO_DATA_DIR "/ieee80211ad_r12_z42.alist";

const LdpcCode& code() {
    static LdpcCode c = LdpcCode::from_alist(kAlistPath);
    return c;
}

} // namespace

TEST_CASE("bpsk labeling") {
    const auto c = Constellation::make(ModKind::bpsk);
    REQUIRE(c.points.size() == 2);
    CHECK(c.points[0] == cplx(1.0, 0.0));  // bit 0
    CHECK(c.points[1] == cplx(-1.0, 0.0)); // bit 1
}

TEST_CASE("gray 4-qam labeling, I first then Q") {
    const auto c = Constellation::make(ModKind::qam4);
    REQUIRE(c.points.size() == 4);
    const double s = M_SQRT1_2;
    CHECK(std::abs(c.points[0] - cplx(s, s)) < 1e-15);   // (0,0)
    CHECK(std::abs(c.points[1] - cplx(-s, s)) < 1e-15);  // (1,0): I bit flips
    CHECK(std::abs(c.points[2] - cplx(s, -s)) < 1e-15);  // (0,1): Q bit flips
    CHECK(std::abs(c.points[3] - cplx(-s, -s)) < 1e-15);
    for (const auto& p : c.points)
        CHECK(std::abs(std::norm(p) - 1.0) < 1e-15); // unit symbol power
}

TEST_CASE("vector alphabet over two bpsk antennas") {
    const auto alpha = VectorAlphabet(Constellation::make(ModKind::bpsk), 2);
    CHECK(alpha.size() == 4);
    CHECK(alpha.m_bits() == 2);
    // k = 1: bit 0 set -> antenna 0 carries bit 1 -> -1; antenna 1 bit 0 -> +1
    CHECK(alpha.symbol(1)(0) == cplx(-1.0, 0.0));
    CHECK(alpha.symbol(1)(1) == cplx(1.0, 0.0));
    for (int m = 0; m < 2; ++m) {
        CHECK(alpha.demap_set(m, 0).size() == 2);
        CHECK(alpha.demap_set(m, 1).size() == 2);
        for (int k : alpha.demap_set(m, 1))
            CHECK(alpha.bit(k, m) == 1);
    }
}

TEST_CASE("slot and lane index maps") {
    // Coded bit i sits in slot i/M at lane i%M; with M = 2, bit 5 is the
    // second bit of the third slot.
    CHECK(slot_of_bit(5, 2) == 2);
    CHECK(lane_of_bit(5, 2) == 1);
    CHECK(slot_of_bit(0, 2) == 0);
}

TEST_CASE("map and demap round-trip") {
    RngStream rng(5, 0);
    const auto alpha = VectorAlphabet(Constellation::make(ModKind::qam4), 2);
    const auto bits = random_bits(rng, 10 * alpha.m_bits());
    const auto ks = map_symbol_indices(alpha, bits);
    CHECK(ks.size() == 10);
    CHECK(demap_indices(alpha, ks) == bits);
    const auto x = map_symbols(alpha, bits);
    CHECK(x.rows() == 2);
    CHECK(x.cols() == 10);
    CHECK_THROWS_AS(map_symbol_indices(alpha, std::vector<uint8_t>(7)),
                    std::invalid_argument);
}

TEST_CASE("frame geometry: 672 coded bits per frame") {
    const auto bpsk1 = VectorAlphabet(Constellation::make(ModKind::bpsk), 1);
    CHECK(672 / bpsk1.m_bits() == 672);
    const auto bpsk2 = VectorAlphabet(Constellation::make(ModKind::bpsk), 2);
    CHECK(672 / bpsk2.m_bits() == 336);
    const auto qam1 = VectorAlphabet(Constellation::make(ModKind::qam4), 1);
    CHECK(672 / qam1.m_bits() == 336);
}

TEST_CASE("ldpc dimensions and rate") {
    CHECK(code().n() == 672);
    CHECK(code().k() == 336);
    CHECK(code().m() == 336);
}

TEST_CASE("encoded words satisfy every parity check and are systematic") {
    RngStream rng(17, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto info = random_bits(rng, code().k());
        const auto cw = code().encode(info);
        REQUIRE(int(cw.size()) == code().n());
        for (int j = 0; j < code().k(); ++j)
            CHECK(cw[j] == info[j]);
        CHECK(code().syndrome_ok(cw));
    }
}

TEST_CASE("encoding is linear over GF(2)") {
    RngStream rng(18, 0);
    const auto a = random_bits(rng, code().k());
    const auto b = random_bits(rng, code().k());
    std::vector<uint8_t> ab(code().k());
    for (int i = 0; i < code().k(); ++i)
        ab[i] = a[i] ^ b[i];
    const auto ca = code().encode(a);
    const auto cb = code().encode(b);
    const auto cab = code().encode(ab);
    for (int i = 0; i < code().n(); ++i)
        CHECK(cab[i] == (ca[i] ^ cb[i]));
    const auto zero = code().encode(std::vector<uint8_t>(code().k(), 0));
    for (auto v : zero)
        CHECK(v == 0);
}

TEST_CASE("decoder recovers codewords from saturated LLRs") {
    RngStream rng(19, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto info = random_bits(rng, code().k());
        const auto cw = code().encode(info);
        std::vector<double> llr(code().n());
        for (int i = 0; i < code().n(); ++i)
            llr[i] = cw[i] ? -50.0 : 50.0;
        const auto res = code().decode(llr);
        CHECK(res.converged);
        CHECK(res.iterations == 1);
        CHECK(res.codeword == cw);
    }
}

TEST_CASE("decoder corrects sparse sign flips") {
    RngStream rng(20, 0);
    const auto info = random_bits(rng, code().k());
    const auto cw = code().encode(info);
    std::vector<double> llr(code().n());
    for (int i = 0; i < code().n(); ++i)
        llr[i] = cw[i] ? -4.0 : 4.0;
    // Flip 12 positions.
    for (int f = 0; f < 12; ++f)
        llr[(f * 53) % code().n()] *= -1.0;
    const auto res = code().decode(llr);
    CHECK(res.converged);
    CHECK(res.codeword == cw);
}

TEST_CASE("decoder works at moderate AWGN snr") {
    RngStream rng(21, 0);
    int failures = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto info = random_bits(rng, code().k());
        const auto cw = code().encode(info);
        const double sigma2 = 0.5; // Eb/N0 = 6 dB for rate-1/2 BPSK
        std::vector<double> llr(code().n());
        for (int i = 0; i < code().n(); ++i) {
            const double x = cw[i] ? -1.0 : 1.0;
            const double y = x + std::sqrt(sigma2 / 2) * rng.gauss() * M_SQRT2;
            llr[i] = 4.0 * y / (2.0 * sigma2); // 2y/sigma^2 per real AWGN use
        }
        const auto res = code().decode(llr);
        if (!res.converged || res.codeword != cw)
            ++failures;
    }
    CHECK(failures <= 1);
}

TEST_CASE("alist text round-trips") {
    const auto text = code().to_alist_text();
    const auto again = LdpcCode::from_alist_text(text);
    CHECK(again.n() == code().n());
    CHECK(again.to_alist_text() == text);
    // Same encoder behavior.
    RngStream rng(22, 0);
    const auto info = random_bits(rng, code().k());
    CHECK(again.encode(info) == code().encode(info));
}

TEST_CASE("malformed alist inputs are rejected") {
    CHECK_THROWS_AS(LdpcCode::from_alist_text("garbage"), std::runtime_error);
    CHECK_THROWS_AS(LdpcCode::from_alist_text("4 2\n1 1\n1 1 1 1\n2 2\n"),
                    std::runtime_error);
    CHECK_THROWS_AS(LdpcCode::from_alist("/nonexistent/file.alist"), std::runtime_error);
}

TEST_CASE("random bits are balanced and reproducible") {
    RngStream a(3, 1), b(3, 1);
    const auto x = random_bits(a, 10000);
    const auto y = random_bits(b, 10000);
    CHECK(x == y);
    int ones = 0;
    for (auto v : x)
        ones += v;
    CHECK(std::abs(ones - 5000) < 300);
}

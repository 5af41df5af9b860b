// SPDX-License-Identifier: Apache-2.0

#include "qmimo/coding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qmimo {

ModKind mod_from_string(const std::string& name) {
    if (name == "bpsk")
        return ModKind::bpsk;
    if (name == "qam4" || name == "4qam" || name == "qpsk")
        return ModKind::qam4;
    throw std::invalid_argument("unknown constellation: " + name);
}

std::string to_string(ModKind kind) {
    return kind == ModKind::bpsk ? "bpsk" : "qam4";
}

Constellation Constellation::make(ModKind kind) {
    Constellation c;
    c.kind = kind;
    if (kind == ModKind::bpsk) {
        c.bits_per_symbol = 1;
        c.points = {cplx(1.0, 0.0), cplx(-1.0, 0.0)}; // bit 0 -> +1
    } else {
        // Gray 4-QAM, first bit on I, second on Q; (0,0) -> (1+j)/sqrt(2).
        c.bits_per_symbol = 2;
        const double s = M_SQRT1_2;
        c.points.resize(4);
        for (int b = 0; b < 4; ++b) {
            const int bi = b & 1, bq = (b >> 1) & 1;
            c.points[b] = cplx((1 - 2 * bi) * s, (1 - 2 * bq) * s);
        }
    }
    return c;
}

VectorAlphabet::VectorAlphabet(const Constellation& scalar, int n_tx) : n_tx_(n_tx) {
    if (n_tx < 1)
        throw std::invalid_argument("VectorAlphabet: n_tx must be positive");
    const int bps = scalar.bits_per_symbol;
    m_bits_ = n_tx * bps;
    if (m_bits_ > 20)
        throw std::invalid_argument("VectorAlphabet: joint alphabet too large");
    const int K = 1 << m_bits_;
    symbols_.resize(K);
    const int mask = (1 << bps) - 1;
    for (int k = 0; k < K; ++k) {
        Eigen::VectorXcd v(n_tx);
        for (int t = 0; t < n_tx; ++t)
            v(t) = scalar.points[(k >> (t * bps)) & mask];
        symbols_[k] = std::move(v);
    }
    demap_.resize(m_bits_);
    for (int m = 0; m < m_bits_; ++m)
        for (int k = 0; k < K; ++k)
            demap_[m][(k >> m) & 1].push_back(k);
}

std::vector<int> map_symbol_indices(const VectorAlphabet& alpha, const std::vector<uint8_t>& bits) {
    const int M = alpha.m_bits();
    if (bits.size() % M != 0)
        throw std::invalid_argument("map_symbols: bit count not a multiple of M");
    const int n_slots = static_cast<int>(bits.size()) / M;
    std::vector<int> ks(n_slots, 0);
    for (int n = 0; n < n_slots; ++n)
        for (int m = 0; m < M; ++m)
            ks[n] |= (bits[n * M + m] & 1) << m;
    return ks;
}

Eigen::MatrixXcd map_symbols(const VectorAlphabet& alpha, const std::vector<uint8_t>& bits) {
    const auto ks = map_symbol_indices(alpha, bits);
    Eigen::MatrixXcd x(alpha.n_tx(), ks.size());
    for (std::size_t n = 0; n < ks.size(); ++n)
        x.col(n) = alpha.symbol(ks[n]);
    return x;
}

std::vector<uint8_t> demap_indices(const VectorAlphabet& alpha, const std::vector<int>& ks) {
    std::vector<uint8_t> bits(ks.size() * alpha.m_bits());
    for (std::size_t n = 0; n < ks.size(); ++n)
        for (int m = 0; m < alpha.m_bits(); ++m)
            bits[n * alpha.m_bits() + m] = static_cast<uint8_t>(alpha.bit(ks[n], m));
    return bits;
}

namespace {

std::vector<std::string> read_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos)
            lines.push_back(line);
    return lines;
}

std::vector<int> ints_on_line(const std::string& line) {
    std::istringstream ss(line);
    std::vector<int> out;
    int v;
    while (ss >> v)
        out.push_back(v);
    return out;
}

} // namespace

LdpcCode LdpcCode::from_alist_text(const std::string& text) {
    const auto lines = read_lines(text);
    auto fail = [](const std::string& why) -> LdpcCode {
        throw std::runtime_error("alist: " + why);
    };
    if (lines.size() < 4)
        return fail("truncated header");
    const auto head = ints_on_line(lines[0]);
    if (head.size() != 2 || head[0] < 2 || head[1] < 1 || head[1] >= head[0])
        return fail("bad dimensions line");
    LdpcCode code;
    code.n_ = head[0];
    code.m_ = head[1];
    const auto col_deg = ints_on_line(lines[2]);
    const auto row_deg = ints_on_line(lines[3]);
    if (static_cast<int>(col_deg.size()) != code.n_ || static_cast<int>(row_deg.size()) != code.m_)
        return fail("degree list length mismatch");
    if (lines.size() < static_cast<std::size_t>(4 + code.n_ + code.m_))
        return fail("truncated adjacency");

    code.cols_.resize(code.n_);
    code.rows_.resize(code.m_);
    for (int v = 0; v < code.n_; ++v) {
        for (int idx : ints_on_line(lines[4 + v])) {
            if (idx == 0)
                continue; // padding
            if (idx < 1 || idx > code.m_)
                return fail("check index out of range");
            code.cols_[v].push_back(idx - 1);
        }
        if (static_cast<int>(code.cols_[v].size()) != col_deg[v])
            return fail("column degree mismatch");
        std::sort(code.cols_[v].begin(), code.cols_[v].end());
    }
    for (int c = 0; c < code.m_; ++c) {
        for (int idx : ints_on_line(lines[4 + code.n_ + c])) {
            if (idx == 0)
                continue;
            if (idx < 1 || idx > code.n_)
                return fail("variable index out of range");
            code.rows_[c].push_back(idx - 1);
        }
        if (static_cast<int>(code.rows_[c].size()) != row_deg[c])
            return fail("row degree mismatch");
        std::sort(code.rows_[c].begin(), code.rows_[c].end());
    }
    // Cross-check the two adjacency views.
    std::size_t edges_c = 0, edges_r = 0;
    for (const auto& c : code.cols_)
        edges_c += c.size();
    for (const auto& r : code.rows_)
        edges_r += r.size();
    if (edges_c != edges_r)
        return fail("inconsistent adjacency");
    code.build_encoder();
    return code;
}

LdpcCode LdpcCode::from_alist(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw std::runtime_error("alist: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_alist_text(ss.str());
}

void LdpcCode::build_encoder() {
    // Row-reduce [Hp | Hi] to [I | E] over GF(2); Hp is the right m x m block
    // of H, Hi the left k columns. Then parity = E * info.
    const int k = n_ - m_;
    const int words = (n_ + 63) / 64;
    std::vector<std::vector<std::uint64_t>> a(m_, std::vector<std::uint64_t>(words, 0));
    for (int r = 0; r < m_; ++r)
        for (int v : rows_[r]) {
            // Reorder columns: parity block first, info block after.
            const int c = (v >= k) ? (v - k) : (m_ + v);
            a[r][c / 64] ^= 1ULL << (c % 64);
        }
    for (int col = 0; col < m_; ++col) {
        int sel = -1;
        for (int r = col; r < m_; ++r)
            if ((a[r][col / 64] >> (col % 64)) & 1) {
                sel = r;
                break;
            }
        if (sel < 0)
            throw std::runtime_error("alist: parity block singular; no systematic encoder");
        std::swap(a[col], a[sel]);
        for (int r = 0; r < m_; ++r)
            if (r != col && ((a[r][col / 64] >> (col % 64)) & 1))
                for (int w = 0; w < words; ++w)
                    a[r][w] ^= a[col][w];
    }
    const int kwords = (k + 63) / 64;
    enc_.assign(m_, std::vector<std::uint64_t>(kwords, 0));
    for (int r = 0; r < m_; ++r)
        for (int j = 0; j < k; ++j) {
            const int c = m_ + j;
            if ((a[r][c / 64] >> (c % 64)) & 1)
                enc_[r][j / 64] ^= 1ULL << (j % 64);
        }
}

std::vector<uint8_t> LdpcCode::encode(const std::vector<uint8_t>& info) const {
    const int k = this->k();
    if (static_cast<int>(info.size()) != k)
        throw std::invalid_argument("encode: expected " + std::to_string(k) + " info bits");
    const int kwords = (k + 63) / 64;
    std::vector<std::uint64_t> u(kwords, 0);
    for (int j = 0; j < k; ++j)
        if (info[j] & 1)
            u[j / 64] ^= 1ULL << (j % 64);
    std::vector<uint8_t> cw(n_);
    std::copy(info.begin(), info.end(), cw.begin());
    for (int r = 0; r < m_; ++r) {
        std::uint64_t acc = 0;
        for (int w = 0; w < kwords; ++w)
            acc ^= enc_[r][w] & u[w];
        cw[k + r] = static_cast<uint8_t>(std::popcount(acc) & 1);
    }
    return cw;
}

bool LdpcCode::syndrome_ok(const std::vector<uint8_t>& codeword) const {
    if (static_cast<int>(codeword.size()) != n_)
        throw std::invalid_argument("syndrome_ok: wrong codeword length");
    for (const auto& row : rows_) {
        int s = 0;
        for (int v : row)
            s ^= codeword[v] & 1;
        if (s)
            return false;
    }
    return true;
}

LdpcCode::DecodeResult LdpcCode::decode(const std::vector<double>& llr, int max_iters) const {
    if (static_cast<int>(llr.size()) != n_)
        throw std::invalid_argument("decode: wrong LLR length");
    if (max_iters < 1)
        throw std::invalid_argument("decode: max_iters must be positive");

    // CSR edge layout over checks.
    std::vector<int> row_ptr(m_ + 1, 0);
    for (int r = 0; r < m_; ++r)
        row_ptr[r + 1] = row_ptr[r] + static_cast<int>(rows_[r].size());
    const int n_edges = row_ptr[m_];
    std::vector<int> edge_var(n_edges);
    std::vector<std::vector<int>> var_edges(n_);
    for (int r = 0; r < m_; ++r)
        for (std::size_t j = 0; j < rows_[r].size(); ++j) {
            const int e = row_ptr[r] + static_cast<int>(j);
            edge_var[e] = rows_[r][j];
            var_edges[rows_[r][j]].push_back(e);
        }

    std::size_t max_deg = 0;
    for (const auto& row : rows_)
        max_deg = std::max(max_deg, row.size());
    std::vector<double> fwd(max_deg), t(max_deg);

    std::vector<double> r_msg(n_edges, 0.0), q_msg(n_edges, 0.0);
    DecodeResult res;
    res.codeword.resize(n_);

    auto harden = [&]() {
        for (int v = 0; v < n_; ++v) {
            double post = llr[v];
            for (int e : var_edges[v])
                post += r_msg[e];
            res.codeword[v] = post < 0.0 ? 1 : 0;
        }
    };

    for (int it = 0; it < max_iters; ++it) {
        // Variable to check.
        for (int v = 0; v < n_; ++v) {
            double total = llr[v];
            for (int e : var_edges[v])
                total += r_msg[e];
            for (int e : var_edges[v])
                q_msg[e] = std::clamp(total - r_msg[e], -50.0, 50.0);
        }
        // Check to variable, tanh rule with forward/backward products.
        for (int r = 0; r < m_; ++r) {
            const int lo = row_ptr[r], hi = row_ptr[r + 1], deg = hi - lo;
            for (int j = 0; j < deg; ++j)
                t[j] = std::tanh(0.5 * q_msg[lo + j]);
            double acc = 1.0;
            for (int j = 0; j < deg; ++j) {
                fwd[j] = acc;
                acc *= t[j];
            }
            double bwd = 1.0;
            for (int j = deg - 1; j >= 0; --j) {
                double prod = fwd[j] * bwd;
                prod = std::clamp(prod, -(1.0 - 1e-15), 1.0 - 1e-15);
                r_msg[lo + j] = 2.0 * std::atanh(prod);
                bwd *= t[j];
            }
        }
        harden();
        res.iterations = it + 1;
        if (syndrome_ok(res.codeword)) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

std::string LdpcCode::to_alist_text() const {
    std::size_t max_col = 0, max_row = 0;
    for (const auto& c : cols_)
        max_col = std::max(max_col, c.size());
    for (const auto& r : rows_)
        max_row = std::max(max_row, r.size());
    std::ostringstream out;
    out << n_ << ' ' << m_ << '\n' << max_col << ' ' << max_row << '\n';
    for (int v = 0; v < n_; ++v)
        out << cols_[v].size() << (v + 1 == n_ ? '\n' : ' ');
    for (int r = 0; r < m_; ++r)
        out << rows_[r].size() << (r + 1 == m_ ? '\n' : ' ');
    auto dump = [&](const std::vector<int>& idx, std::size_t width) {
        for (std::size_t j = 0; j < width; ++j)
            out << (j < idx.size() ? idx[j] + 1 : 0) << (j + 1 == width ? '\n' : ' ');
    };
    for (const auto& c : cols_)
        dump(c, max_col);
    for (const auto& r : rows_)
        dump(r, max_row);
    return out.str();
}

std::vector<uint8_t> random_bits(RngStream& rng, int n) {
    std::vector<uint8_t> bits(n);
    for (auto& b : bits)
        b = static_cast<uint8_t>(rng.u64() >> 63);
    return bits;
}

} // namespace qmimo

// SPDX-License-Identifier: Apache-2.0
//
// mimolab: finite-alphabet MIMO link laboratory
// Copyright (C) 2026 The mimolab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace mimolab
{
    struct DecodeResult
    {
        std::vector<std::uint8_t> info;
        bool converged = false;
        int iterations = 0;
    };

    namespace detail
    {
        // Dense GF(2) row packed into 64-bit words.
        struct BitRow
        {
            std::vector<std::uint64_t> w;

            explicit BitRow(std::size_t nbits = 0) : w((nbits + 63) / 64, 0) {}
            bool get(std::size_t i) const { return (w[i >> 6] >> (i & 63)) & 1U; }
            void set(std::size_t i) { w[i >> 6] |= std::uint64_t{1} << (i & 63); }
            void flip(std::size_t i) { w[i >> 6] ^= std::uint64_t{1} << (i & 63); }
            void xor_with(const BitRow &o)
            {
                for (std::size_t i = 0; i < w.size(); ++i)
                    w[i] ^= o.w[i];
            }
            int dot(const BitRow &o) const
            {
                std::uint64_t acc = 0;
                for (std::size_t i = 0; i < w.size(); ++i)
                    acc ^= w[i] & o.w[i];
                return std::popcount(acc) & 1;
            }
        };
    } // namespace detail

    /// Binary LDPC code with a systematic encoder.
    ///
    /// Columns are stored in encoder order: the first k_info positions carry
    /// the information bits, the remaining positions the parity bits. Every
    /// check row is kept (including linearly dependent ones) for decoding.
    class LdpcCode
    {
    public:
        /// Regular Gallager ensemble, column weight 3 and row weight 6 (rate 1/2)
        /// or 12 (rate 3/4), with greedy 4-cycle rejection. Throws
        /// ConstructionError when the parity matrix is not full rank.
        static LdpcCode build(CodeRate rate, std::size_t n, std::uint64_t seed)
        {
            detail::require(rate == CodeRate::half || rate == CodeRate::three_quarters, "build_ldpc: rate must be 1/2 or 3/4");
            detail::require(n >= 128 && n % 8 == 0, "build_ldpc: n must be a multiple of 8 and >= 128");
            constexpr std::size_t wc = 3;
            const std::size_t wr = rate == CodeRate::half ? 6 : 12;
            const std::size_t m = n * wc / wr;

            SeededRng rng(seed);
            std::vector<std::vector<std::uint32_t>> rows(m);
            std::vector<std::size_t> capacity(m, wr);
            std::vector<std::uint32_t> near_mark(n, 0); // columns sharing a row with the current column
            std::uint32_t stamp = 0;

            for (std::size_t col = 0; col < n; ++col)
            {
                ++stamp;
                std::vector<std::size_t> chosen;
                for (std::size_t pick = 0; pick < wc; ++pick)
                {
                    std::size_t best_cap = 0;
                    std::vector<std::size_t> clean, any;
                    for (std::size_t r = 0; r < m; ++r)
                    {
                        if (capacity[r] == 0 || std::find(chosen.begin(), chosen.end(), r) != chosen.end())
                            continue;
                        any.push_back(r);
                        bool conflict = false;
                        for (auto c : rows[r])
                            if (near_mark[c] == stamp)
                            {
                                conflict = true;
                                break;
                            }
                        if (conflict)
                            continue;
                        if (capacity[r] > best_cap)
                        {
                            best_cap = capacity[r];
                            clean.clear();
                        }
                        if (capacity[r] == best_cap)
                            clean.push_back(r);
                    }
                    const auto &pool = clean.empty() ? any : clean;
                    if (pool.empty())
                        throw ConstructionError("build_ldpc: ran out of check sockets");
                    const std::size_t r = pool[static_cast<std::size_t>(rng.below(pool.size()))];
                    chosen.push_back(r);
                    for (auto c : rows[r])
                        near_mark[c] = stamp;
                    rows[r].push_back(static_cast<std::uint32_t>(col));
                    --capacity[r];
                }
            }
            LdpcCode code = from_parity(n, std::move(rows));
            if (code.rank_ != m)
                throw ConstructionError("build_ldpc: parity matrix is rank deficient");
            return code;
        }

        /// Retry build() with seed, seed+1, ... until a full-rank matrix appears.
        static LdpcCode build_with_retry(CodeRate rate, std::size_t n, std::uint64_t seed, int attempts = 16)
        {
            for (int a = 0; a < attempts; ++a)
            {
                try
                {
                    return build(rate, n, seed + static_cast<std::uint64_t>(a));
                }
                catch (const ConstructionError &)
                {
                }
            }
            throw ConstructionError("build_ldpc: no full-rank matrix within retry budget");
        }

        /// Code from an arbitrary parity-check matrix given as check rows of
        /// column indices. Columns are permuted into systematic order.
        static LdpcCode from_parity(std::size_t n, std::vector<std::vector<std::uint32_t>> rows)
        {
            detail::require(n > 0 && !rows.empty(), "LDPC: empty parity matrix");
            const std::size_t m = rows.size();
            std::vector<detail::BitRow> dense(m, detail::BitRow(n));
            for (std::size_t r = 0; r < m; ++r)
                for (auto c : rows[r])
                {
                    detail::require<DimensionError>(c < n, "LDPC: column index out of range");
                    dense[r].flip(c);
                }

            // Gauss-Jordan elimination over GF(2), pivots searched from the last
            // column so an already systematic matrix keeps its column order
            std::vector<std::size_t> pivot_col;
            std::size_t rank = 0;
            for (std::size_t cc = n; cc-- > 0 && rank < m;)
            {
                const std::size_t c = cc;
                std::size_t p = rank;
                while (p < m && !dense[p].get(c))
                    ++p;
                if (p == m)
                    continue;
                std::swap(dense[p], dense[rank]);
                for (std::size_t r = 0; r < m; ++r)
                    if (r != rank && dense[r].get(c))
                        dense[r].xor_with(dense[rank]);
                pivot_col.push_back(c);
                ++rank;
            }

            {
                std::vector<std::size_t> idx(rank);
                std::iota(idx.begin(), idx.end(), std::size_t{0});
                std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pivot_col[a] < pivot_col[b]; });
                std::vector<std::size_t> pc(rank);
                std::vector<detail::BitRow> dr;
                dr.reserve(m);
                for (std::size_t i = 0; i < rank; ++i)
                {
                    pc[i] = pivot_col[idx[i]];
                    dr.push_back(dense[idx[i]]);
                }
                pivot_col = std::move(pc);
                std::copy(dr.begin(), dr.end(), dense.begin());
            }

            LdpcCode code;
            code.n_ = n;
            code.rank_ = rank;
            code.k_ = n - rank;

            std::vector<bool> is_pivot(n, false);
            for (auto c : pivot_col)
                is_pivot[c] = true;
            std::vector<std::uint32_t> old_to_new(n);
            std::vector<std::size_t> info_cols;
            for (std::size_t c = 0; c < n; ++c)
                if (!is_pivot[c])
                {
                    old_to_new[c] = static_cast<std::uint32_t>(info_cols.size());
                    info_cols.push_back(c);
                }
            for (std::size_t i = 0; i < rank; ++i)
                old_to_new[pivot_col[i]] = static_cast<std::uint32_t>(code.k_ + i);

            code.generator_.assign(rank, detail::BitRow(code.k_));
            for (std::size_t i = 0; i < rank; ++i)
                for (std::size_t j = 0; j < code.k_; ++j)
                    if (dense[i].get(info_cols[j]))
                        code.generator_[i].set(j);

            code.rows_.resize(m);
            code.cols_.assign(n, {});
            for (std::size_t r = 0; r < m; ++r)
            {
                for (auto c : rows[r])
                    code.rows_[r].push_back(old_to_new[c]);
                std::sort(code.rows_[r].begin(), code.rows_[r].end());
                code.rows_[r].erase(std::unique(code.rows_[r].begin(), code.rows_[r].end()), code.rows_[r].end());
                for (auto c : code.rows_[r])
                    code.cols_[c].push_back(static_cast<std::uint32_t>(r));
            }
            code.build_edges();
            return code;
        }

        std::size_t n() const { return n_; }
        std::size_t k_info() const { return k_; }
        std::size_t checks() const { return rows_.size(); }
        std::size_t rank() const { return rank_; }
        double rate() const { return static_cast<double>(k_) / static_cast<double>(n_); }
        const std::vector<std::vector<std::uint32_t>> &check_rows() const { return rows_; }
        const std::vector<std::vector<std::uint32_t>> &var_cols() const { return cols_; }

        bool satisfies_parity(std::span<const std::uint8_t> word) const
        {
            if (word.size() != n_)
                return false;
            for (const auto &row : rows_)
            {
                unsigned acc = 0;
                for (auto c : row)
                    acc ^= word[c] & 1U;
                if (acc)
                    return false;
            }
            return true;
        }

        std::vector<std::uint8_t> encode(std::span<const std::uint8_t> info) const
        {
            detail::require<DimensionError>(info.size() == k_, "LDPC encode: info length must equal k_info");
            detail::BitRow packed(k_);
            for (std::size_t j = 0; j < k_; ++j)
                if (info[j] & 1U)
                    packed.set(j);
            std::vector<std::uint8_t> word(n_);
            for (std::size_t j = 0; j < k_; ++j)
                word[j] = info[j] & 1U;
            for (std::size_t i = 0; i < rank_; ++i)
                word[k_ + i] = static_cast<std::uint8_t>(generator_[i].dot(packed));
            return word;
        }

        /// Normalized min-sum, flooding schedule. Positive LLR favours 0.
        /// Convergence requires a zero syndrome with no undecided (zero) posterior.
        DecodeResult decode(std::span<const double> llrs, int max_iters, double factor = 0.75) const
        {
            detail::require<DimensionError>(llrs.size() == n_, "LDPC decode: LLR length must equal n");
            detail::require(max_iters >= 1, "LDPC decode: max_iters must be >= 1");
            const std::size_t ne = edge_var_.size();
            std::vector<double> v2c(ne), c2v(ne, 0.0), post(llrs.begin(), llrs.end());
            std::vector<std::uint8_t> hard(n_);
            for (std::size_t e = 0; e < ne; ++e)
                v2c[e] = llrs[edge_var_[e]];

            DecodeResult res;
            for (int it = 1; it <= max_iters; ++it)
            {
                for (std::size_t c = 0; c + 1 < check_start_.size(); ++c)
                {
                    const std::size_t b = check_start_[c], e_end = check_start_[c + 1];
                    double min1 = std::numeric_limits<double>::infinity(), min2 = min1;
                    std::size_t arg = b;
                    bool negative = false;
                    for (std::size_t e = b; e < e_end; ++e)
                    {
                        const double a = std::abs(v2c[e]);
                        negative ^= v2c[e] < 0.0;
                        if (a < min1)
                        {
                            min2 = min1;
                            min1 = a;
                            arg = e;
                        }
                        else if (a < min2)
                            min2 = a;
                    }
                    for (std::size_t e = b; e < e_end; ++e)
                    {
                        const double mag = factor * (e == arg ? min2 : min1);
                        const bool neg = negative ^ (v2c[e] < 0.0);
                        c2v[e] = neg ? -mag : mag;
                    }
                }
                bool undecided = false;
                for (std::size_t v = 0; v < n_; ++v)
                {
                    double acc = llrs[v];
                    for (auto e : var_edges_[v])
                        acc += c2v[e];
                    post[v] = acc;
                    for (auto e : var_edges_[v])
                        v2c[e] = acc - c2v[e];
                    hard[v] = acc < 0.0;
                    undecided |= acc == 0.0;
                }
                res.iterations = it;
                if (!undecided && satisfies_parity(hard))
                {
                    res.converged = true;
                    break;
                }
            }
            res.info.assign(hard.begin(), hard.begin() + static_cast<std::ptrdiff_t>(k_));
            return res;
        }

    private:
        void build_edges()
        {
            check_start_.assign(1, 0);
            edge_var_.clear();
            var_edges_.assign(n_, {});
            for (const auto &row : rows_)
            {
                for (auto c : row)
                {
                    var_edges_[c].push_back(static_cast<std::uint32_t>(edge_var_.size()));
                    edge_var_.push_back(c);
                }
                check_start_.push_back(edge_var_.size());
            }
        }

        std::size_t n_ = 0, k_ = 0, rank_ = 0;
        std::vector<std::vector<std::uint32_t>> rows_, cols_;
        std::vector<detail::BitRow> generator_; // parity bit i = generator_[i] . info
        std::vector<std::size_t> check_start_;
        std::vector<std::uint32_t> edge_var_;
        std::vector<std::vector<std::uint32_t>> var_edges_;
    };

    inline LdpcCode build_ldpc(CodeRate rate, std::size_t n, std::uint64_t seed) { return LdpcCode::build(rate, n, seed); }

    /// Uncoded baseline: encode is the identity, decode slices the LLR sign.
    class PassthroughCode
    {
    public:
        explicit PassthroughCode(std::size_t n) : n_(n) { detail::require(n > 0, "passthrough code: n must be > 0"); }

        std::size_t n() const { return n_; }
        std::size_t k_info() const { return n_; }
        double rate() const { return 1.0; }

        std::vector<std::uint8_t> encode(std::span<const std::uint8_t> info) const
        {
            detail::require<DimensionError>(info.size() == n_, "passthrough encode: length mismatch");
            return {info.begin(), info.end()};
        }

        DecodeResult decode(std::span<const double> llrs, int = 1, double = 0.75) const
        {
            detail::require<DimensionError>(llrs.size() == n_, "passthrough decode: length mismatch");
            DecodeResult r;
            r.info.reserve(n_);
            for (double l : llrs)
                r.info.push_back(l < 0.0 ? 1 : 0);
            r.converged = true;
            r.iterations = 1;
            return r;
        }

    private:
        std::size_t n_;
    };

    inline PassthroughCode passthrough_code(std::size_t n) { return PassthroughCode(n); }

    /// Either code behind one interface.
    class ChannelCode
    {
    public:
        ChannelCode(LdpcCode c) : code_(std::move(c)) {}
        ChannelCode(PassthroughCode c) : code_(std::move(c)) {}

        std::size_t n() const
        {
            return std::visit([](const auto &c) { return c.n(); }, code_);
        }
        std::size_t k_info() const
        {
            return std::visit([](const auto &c) { return c.k_info(); }, code_);
        }
        std::vector<std::uint8_t> encode(std::span<const std::uint8_t> info) const
        {
            return std::visit([&](const auto &c) { return c.encode(info); }, code_);
        }
        DecodeResult decode(std::span<const double> llrs, int max_iters, double factor) const
        {
            return std::visit([&](const auto &c) { return c.decode(llrs, max_iters, factor); }, code_);
        }
        bool is_ldpc() const { return std::holds_alternative<LdpcCode>(code_); }

    private:
        std::variant<LdpcCode, PassthroughCode> code_;
    };

    // ---------------------------------------------------------------------
    // alist import/export
    // ---------------------------------------------------------------------

    inline LdpcCode read_alist(std::istream &in)
    {
        std::size_t n = 0, m = 0, max_cw = 0, max_rw = 0;
        if (!(in >> n >> m >> max_cw >> max_rw) || n == 0 || m == 0)
            throw InvalidInput("alist: bad header");
        std::vector<std::size_t> cw(n), rw(m);
        for (auto &v : cw)
            in >> v;
        for (auto &v : rw)
            in >> v;
        // column lists (redundant with the row lists, read and checked)
        std::vector<std::vector<std::uint32_t>> rows(m);
        std::size_t col_entries = 0;
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t i = 0; i < max_cw; ++i)
            {
                std::size_t r = 0;
                in >> r;
                if (r != 0)
                    ++col_entries;
            }
        std::size_t row_entries = 0;
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t i = 0; i < max_rw; ++i)
            {
                std::size_t c = 0;
                in >> c;
                if (c == 0)
                    continue;
                if (c > n)
                    throw InvalidInput("alist: column index out of range");
                rows[r].push_back(static_cast<std::uint32_t>(c - 1));
                ++row_entries;
            }
        if (!in || col_entries != row_entries)
            throw InvalidInput("alist: truncated or inconsistent file");
        return LdpcCode::from_parity(n, std::move(rows));
    }

    /// Writes the code in its systematic column order.
    inline void write_alist(std::ostream &out, const LdpcCode &code)
    {
        const auto &rows = code.check_rows();
        const auto &cols = code.var_cols();
        std::size_t max_cw = 0, max_rw = 0;
        for (const auto &c : cols)
            max_cw = std::max(max_cw, c.size());
        for (const auto &r : rows)
            max_rw = std::max(max_rw, r.size());
        out << code.n() << ' ' << rows.size() << '\n' << max_cw << ' ' << max_rw << '\n';
        for (std::size_t i = 0; i < cols.size(); ++i)
            out << cols[i].size() << (i + 1 == cols.size() ? '\n' : ' ');
        for (std::size_t i = 0; i < rows.size(); ++i)
            out << rows[i].size() << (i + 1 == rows.size() ? '\n' : ' ');
        for (const auto &c : cols)
        {
            for (std::size_t i = 0; i < max_cw; ++i)
                out << (i < c.size() ? c[i] + 1 : 0) << (i + 1 == max_cw ? '\n' : ' ');
        }
        for (const auto &r : rows)
        {
            for (std::size_t i = 0; i < max_rw; ++i)
                out << (i < r.size() ? r[i] + 1 : 0) << (i + 1 == max_rw ? '\n' : ' ');
        }
    }
} // namespace mimolab

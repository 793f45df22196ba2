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

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "config.hpp"
#include "numerics.hpp"

namespace mimolab
{
    using Bits = std::vector<std::uint8_t>;

    /// Finite alphabet with Gray labeling. Point i carries the bit pattern of
    /// i written MSB first, so the label map is the identity on indices.
    ///
    /// Tables (unit average power):
    ///   BPSK   b0       -> 1 - 2 b0
    ///   QPSK   b0 b1    -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)
    ///   QAM16  b0 b1 -> I, b2 b3 -> Q, per-axis Gray {00,01,11,10} -> {-3,-1,+1,+3} / sqrt(10)
    struct Constellation
    {
        Modulation scheme = Modulation::qpsk;
        std::vector<cplx> points;
        int bits_per_symbol = 0;

        std::size_t size() const { return points.size(); }

        int bit(std::size_t index, int b) const
        {
            return static_cast<int>((index >> (bits_per_symbol - 1 - b)) & 1U);
        }
    };

    inline Constellation make_constellation(Modulation scheme)
    {
        Constellation c;
        c.scheme = scheme;
        switch (scheme)
        {
        case Modulation::bpsk:
            c.bits_per_symbol = 1;
            c.points = {cplx{1.0, 0.0}, cplx{-1.0, 0.0}};
            break;
        case Modulation::qpsk:
        {
            c.bits_per_symbol = 2;
            const double a = 1.0 / std::sqrt(2.0);
            for (int i = 0; i < 4; ++i)
                c.points.emplace_back(a * (1 - 2 * ((i >> 1) & 1)), a * (1 - 2 * (i & 1)));
            break;
        }
        case Modulation::qam16:
        {
            c.bits_per_symbol = 4;
            // Gray pair (b_hi b_lo) -> level
            auto level = [](int pair)
            {
                constexpr int table[4] = {-3, -1, 3, 1}; // 00, 01, 10, 11
                return table[pair];
            };
            const double a = 1.0 / std::sqrt(10.0);
            for (int i = 0; i < 16; ++i)
                c.points.emplace_back(a * level((i >> 2) & 3), a * level(i & 3));
            break;
        }
        }
        return c;
    }

    inline std::vector<cplx> modulate(std::span<const std::uint8_t> bits, const Constellation &c)
    {
        const auto bps = static_cast<std::size_t>(c.bits_per_symbol);
        if (bits.size() % bps != 0)
            throw PaddingError("modulate: bit count not divisible by bits per symbol");
        std::vector<cplx> out;
        out.reserve(bits.size() / bps);
        for (std::size_t s = 0; s < bits.size(); s += bps)
        {
            std::size_t idx = 0;
            for (std::size_t b = 0; b < bps; ++b)
                idx = (idx << 1) | (bits[s + b] & 1U);
            out.push_back(c.points[idx]);
        }
        return out;
    }

    /// Index of the nearest point; ties go to the lowest index.
    inline std::size_t nearest_index(cplx v, const Constellation &c)
    {
        std::size_t best = 0;
        double best_d = std::norm(v - c.points[0]);
        for (std::size_t i = 1; i < c.points.size(); ++i)
        {
            const double d = std::norm(v - c.points[i]);
            if (d < best_d)
            {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

    /// Projection onto the finite alphabet.
    inline cplx project(cplx v, const Constellation &c) { return c.points[nearest_index(v, c)]; }

    inline CMatrix project(const CMatrix &m, const Constellation &c)
    {
        CMatrix out(m.rows(), m.cols());
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = 0; i < m.rows(); ++i)
                out(i, j) = project(m(i, j), c);
        return out;
    }

    inline Bits demodulate_hard(std::span<const cplx> symbols, const Constellation &c)
    {
        Bits out;
        out.reserve(symbols.size() * static_cast<std::size_t>(c.bits_per_symbol));
        for (cplx s : symbols)
        {
            const std::size_t idx = nearest_index(s, c);
            for (int b = 0; b < c.bits_per_symbol; ++b)
                out.push_back(static_cast<std::uint8_t>(c.bit(idx, b)));
        }
        return out;
    }

    /// Max-log LLRs, positive favours bit 0:
    ///   LLR_b = (min_{p: b=1} |s - p|^2 - min_{p: b=0} |s - p|^2) / noise_var
    inline std::vector<double> demodulate_llr(std::span<const cplx> symbols, const Constellation &c, double noise_var)
    {
        detail::require(noise_var > 0.0, "demodulate_llr: noise_var must be positive");
        std::vector<double> out;
        out.reserve(symbols.size() * static_cast<std::size_t>(c.bits_per_symbol));
        std::vector<double> dist(c.size());
        for (cplx s : symbols)
        {
            for (std::size_t i = 0; i < c.size(); ++i)
                dist[i] = std::norm(s - c.points[i]);
            for (int b = 0; b < c.bits_per_symbol; ++b)
            {
                double d0 = std::numeric_limits<double>::infinity();
                double d1 = d0;
                for (std::size_t i = 0; i < c.size(); ++i)
                    (c.bit(i, b) ? d1 : d0) = std::min(c.bit(i, b) ? d1 : d0, dist[i]);
                out.push_back((d1 - d0) / noise_var);
            }
        }
        return out;
    }
} // namespace mimolab

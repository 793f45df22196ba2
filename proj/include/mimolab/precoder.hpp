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
#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "config.hpp"
#include "numerics.hpp"

namespace mimolab
{
    struct PowerAllocation
    {
        std::vector<double> weights; // per-stream power
        double water_level = 0.0;
    };

    /// Water-filling over inverse effective gains a_i:
    ///   p_i = max(0, mu - a_i),  sum p_i = budget.
    /// The water level is bracketed by bisection, then fixed exactly from the
    /// resulting active set: mu = (budget + sum_active a_i) / |active|.
    inline PowerAllocation water_filling_inverse(std::span<const double> inv_gains, double budget)
    {
        detail::require(!inv_gains.empty(), "water_filling: empty gain list");
        detail::require(budget > 0.0, "water_filling: budget must be positive");
        for (double a : inv_gains)
            detail::require(a >= 0.0 && std::isfinite(a), "water_filling: inverse gains must be finite and >= 0");

        auto residual = [&](double mu)
        {
            double s = 0.0;
            for (double a : inv_gains)
                s += std::max(0.0, mu - a);
            return s - budget;
        };
        double lo = *std::min_element(inv_gains.begin(), inv_gains.end());
        double hi = *std::max_element(inv_gains.begin(), inv_gains.end()) + budget;
        for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it)
        {
            const double mid = 0.5 * (lo + hi);
            (residual(mid) < 0.0 ? lo : hi) = mid;
        }

        // exact level from the active set the bisection settled on
        auto level_for = [&](auto is_active)
        {
            double acc = 0.0;
            std::size_t count = 0;
            for (std::size_t i = 0; i < inv_gains.size(); ++i)
                if (is_active(i))
                {
                    acc += inv_gains[i];
                    ++count;
                }
            return count ? (budget + acc) / static_cast<double>(count) : 0.0;
        };
        const double mu_bisect = 0.5 * (lo + hi);
        double mu = level_for([&](std::size_t i) { return inv_gains[i] < mu_bisect; });
        bool consistent = mu > 0.0;
        for (double a : inv_gains)
            consistent = consistent && ((a < mu_bisect) == (a < mu));
        if (!consistent)
        {
            // boundary case: scan active sets in order of increasing floor
            std::vector<std::size_t> order(inv_gains.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return inv_gains[x] < inv_gains[y]; });
            double acc = 0.0;
            for (std::size_t i = 0; i < order.size(); ++i)
            {
                acc += inv_gains[order[i]];
                const double cand = (budget + acc) / static_cast<double>(i + 1);
                if (cand <= inv_gains[order[i]])
                    break;
                mu = cand;
            }
        }

        PowerAllocation out;
        out.water_level = mu;
        out.weights.resize(inv_gains.size());
        for (std::size_t i = 0; i < inv_gains.size(); ++i)
            out.weights[i] = std::max(0.0, mu - inv_gains[i]);
        return out;
    }

    /// Water-filling over singular-value gains: inverse effective gain noise_var / g_i^2.
    inline PowerAllocation water_filling(std::span<const double> gains, double noise_var, double budget)
    {
        detail::require(!gains.empty(), "water_filling: empty gain list");
        detail::require(noise_var >= 0.0, "water_filling: negative noise variance");
        std::vector<double> inv;
        inv.reserve(gains.size());
        for (double g : gains)
        {
            detail::require(g > 0.0, "water_filling: gains must be positive");
            inv.push_back(noise_var / (g * g));
        }
        return water_filling_inverse(inv, budget);
    }

    /// Standard precoder G = U_g Lambda_g V_g^H with U_g = V_1 from the channel SVD.
    struct PrecoderSpec
    {
        CMatrix u_g;              // n_t x n_t
        PowerAllocation lambda_g; // n_s stream powers
        CMatrix v_g;              // n_s x n_s
        int codebook_index = 0;

        Index n_t() const { return u_g.rows(); }
        Index n_s() const { return v_g.rows(); }

        /// n_t x n_s diagonal with amplitudes sqrt(p_i).
        CMatrix lambda_matrix() const
        {
            CMatrix l = CMatrix::Zero(n_t(), n_s());
            for (Index i = 0; i < n_s(); ++i)
                l(i, i) = std::sqrt(lambda_g.weights[static_cast<std::size_t>(i)]);
            return l;
        }

        /// The n_t x n_s precoding matrix.
        CMatrix matrix() const { return u_g * lambda_matrix() * v_g.adjoint(); }
    };

    /// DFT codebook entry r: F_{n_s} * diag(exp(j pi r i / (2 n_s))), r in 0..3.
    inline CMatrix dft_codeword(Index n_s, int r)
    {
        CMatrix f(n_s, n_s);
        const double norm = 1.0 / std::sqrt(static_cast<double>(n_s));
        for (Index a = 0; a < n_s; ++a)
            for (Index b = 0; b < n_s; ++b)
                f(a, b) = norm * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(a * b) / static_cast<double>(n_s));
        CMatrix d = CMatrix::Zero(n_s, n_s);
        for (Index i = 0; i < n_s; ++i)
            d(i, i) = std::polar(1.0, std::numbers::pi * r * static_cast<double>(i) / (2.0 * static_cast<double>(n_s)));
        return f * d;
    }

    inline constexpr int kCodebookSize = 4;

    /// Builds the standard precoder for channel h. Power budget is n_t * p_z so
    /// that the per-antenna average of unit-power symbols meets p_z.
    /// The codeword maximizes sum_i ||H G e_i|| (sum of per-stream amplitude
    /// gains); ties keep the lowest index.
    inline PrecoderSpec build_precoder(const CMatrix &h, const LinkConfig &cfg, double noise_var)
    {
        detail::require<DimensionError>(h.rows() == cfg.n_r && h.cols() == cfg.n_t, "build_precoder: channel shape mismatch");
        detail::require(cfg.n_s <= std::min(cfg.n_t, cfg.n_r), "build_precoder: n_s exceeds min(n_t, n_r)");
        const SvdResult d = svd(h);
        const double smax = d.s.front();
        const double tol = 1e-12 * std::max<double>(1.0, static_cast<double>(std::max(h.rows(), h.cols()))) * std::max(smax, 1e-300);
        if (smax == 0.0 || d.s[static_cast<std::size_t>(cfg.n_s - 1)] <= tol)
            throw RankError("build_precoder: channel rank below n_s");

        PrecoderSpec spec;
        spec.u_g = d.v;
        std::vector<double> gains(d.s.begin(), d.s.begin() + cfg.n_s);
        spec.lambda_g = water_filling(gains, noise_var, static_cast<double>(cfg.n_t) * cfg.p_z);

        double best = -1.0;
        for (int r = 0; r < kCodebookSize; ++r)
        {
            PrecoderSpec cand = spec;
            cand.v_g = dft_codeword(cfg.n_s, r);
            const CMatrix eff = h * cand.matrix();
            double score = 0.0;
            for (Index i = 0; i < eff.cols(); ++i)
                score += eff.col(i).norm();
            if (score > best + 1e-12)
            {
                best = score;
                spec.v_g = cand.v_g;
                spec.codebook_index = r;
            }
        }
        return spec;
    }

    /// x_p = G X_e with X_e(s, t) = x_e[t * n_s + s].
    inline CMatrix streams_from_symbols(std::span<const cplx> x_e, Index n_s)
    {
        detail::require<DimensionError>(n_s > 0 && x_e.size() % static_cast<std::size_t>(n_s) == 0, "symbol count not a multiple of n_s");
        const Index k = static_cast<Index>(x_e.size()) / n_s;
        CMatrix x(n_s, k);
        for (Index t = 0; t < k; ++t)
            for (Index s = 0; s < n_s; ++s)
                x(s, t) = x_e[static_cast<std::size_t>(t * n_s + s)];
        return x;
    }

    inline std::vector<cplx> symbols_from_streams(const CMatrix &x)
    {
        std::vector<cplx> out;
        out.reserve(static_cast<std::size_t>(x.size()));
        for (Index t = 0; t < x.cols(); ++t)
            for (Index s = 0; s < x.rows(); ++s)
                out.push_back(x(s, t));
        return out;
    }

    inline CMatrix standard_precode(std::span<const cplx> x_e, const PrecoderSpec &spec, const LinkConfig &cfg)
    {
        detail::require<DimensionError>(x_e.size() == static_cast<std::size_t>(cfg.n_s) * static_cast<std::size_t>(cfg.k),
                                        "standard_precode: |x_e| must equal n_s * k");
        detail::require<DimensionError>(spec.n_s() == cfg.n_s, "standard_precode: spec stream count mismatch");
        return spec.matrix() * streams_from_symbols(x_e, cfg.n_s);
    }
} // namespace mimolab

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
#include <limits>
#include <optional>
#include <vector>

#include "modem.hpp"
#include "numerics.hpp"

namespace mimolab
{
    struct DetectionResult
    {
        CMatrix symbols;             // n_s x k hard estimates, entries in the alphabet
        std::optional<CMatrix> soft; // pre-slicing estimates
    };

    namespace detail
    {
        inline void require_full_column_rank(const CMatrix &h, const char *who)
        {
            if (h.cols() > h.rows())
                throw SingularityError(std::string(who) + ": more streams than observations");
            const SvdResult d = svd(h);
            if (d.s.front() == 0.0 || d.s.back() <= 1e-12 * d.s.front())
                throw SingularityError(std::string(who) + ": effective channel is rank deficient");
        }

        inline DetectionResult sliced(CMatrix soft, const Constellation &c)
        {
            DetectionResult r;
            r.symbols = project(soft, c);
            r.soft = std::move(soft);
            return r;
        }
    } // namespace detail

    /// soft = (H^H H)^-1 H^H y
    inline DetectionResult zf_detect(const CMatrix &y, const CMatrix &h_eff, const Constellation &c)
    {
        detail::require<DimensionError>(y.rows() == h_eff.rows(), "zf_detect: y rows must match h_eff rows");
        detail::require_full_column_rank(h_eff, "zf_detect");
        const CMatrix gram = h_eff.adjoint() * h_eff;
        return detail::sliced(gram.ldlt().solve(h_eff.adjoint() * y), c);
    }

    /// soft = (H^H H + noise_var I)^-1 H^H y
    inline DetectionResult mmse_detect(const CMatrix &y, const CMatrix &h_eff, double noise_var, const Constellation &c)
    {
        detail::require<DimensionError>(y.rows() == h_eff.rows(), "mmse_detect: y rows must match h_eff rows");
        detail::require(noise_var >= 0.0, "mmse_detect: negative noise variance");
        if (noise_var == 0.0)
            return zf_detect(y, h_eff, c);
        CMatrix reg = h_eff.adjoint() * h_eff;
        reg.diagonal().array() += noise_var;
        return detail::sliced(reg.ldlt().solve(h_eff.adjoint() * y), c);
    }

    /// soft = H^H y; the zf_detect contract without the inversion.
    inline DetectionResult mf_detect(const CMatrix &y, const CMatrix &h_eff, const Constellation &c)
    {
        detail::require<DimensionError>(y.rows() == h_eff.rows(), "mf_detect: y rows must match h_eff rows");
        return detail::sliced(h_eff.adjoint() * y, c);
    }

    inline constexpr std::size_t kMlSearchLimit = 65536;

    /// Candidate vectors of the ML search, candidate i has stream 0 as its most
    /// significant base-|M| digit.
    inline CMatrix ml_candidates(Index n_s, const Constellation &c)
    {
        const std::size_t m = c.size();
        double total = std::pow(static_cast<double>(m), static_cast<double>(n_s));
        if (total > static_cast<double>(kMlSearchLimit))
            throw ScaleError("ml_detect: search space exceeds 65536 candidates");
        const auto count = static_cast<Index>(total);
        CMatrix cand(n_s, count);
        for (Index i = 0; i < count; ++i)
        {
            auto rem = static_cast<std::size_t>(i);
            for (Index s = n_s - 1; s >= 0; --s)
            {
                cand(s, i) = c.points[rem % m];
                rem /= m;
            }
        }
        return cand;
    }

    /// Exhaustive argmin over M^{n_s} of ||y_t - H s|| per channel use.
    inline DetectionResult ml_detect(const CMatrix &y, const CMatrix &h_eff, const Constellation &c)
    {
        detail::require<DimensionError>(y.rows() == h_eff.rows(), "ml_detect: y rows must match h_eff rows");
        const CMatrix cand = ml_candidates(h_eff.cols(), c);
        const CMatrix hc = h_eff * cand;
        DetectionResult r;
        r.symbols.resize(h_eff.cols(), y.cols());
        for (Index t = 0; t < y.cols(); ++t)
        {
            Index best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < hc.cols(); ++i)
            {
                const double d = (y.col(t) - hc.col(i)).squaredNorm();
                if (d < best_d)
                {
                    best_d = d;
                    best = i;
                }
            }
            r.symbols.col(t) = cand.col(best);
        }
        return r;
    }

    /// Bias-corrected linear estimate with per-stream post-detection noise
    /// (noise plus residual inter-stream interference) variance, for LLRs.
    struct LinearEstimate
    {
        CMatrix soft;                  // n_s x k, unbiased
        std::vector<double> noise_var; // per stream
    };

    inline LinearEstimate linear_estimate(const CMatrix &y, const CMatrix &h_eff, double noise_var, Detector kind)
    {
        detail::require<DimensionError>(y.rows() == h_eff.rows(), "linear_estimate: y rows must match h_eff rows");
        const Index ns = h_eff.cols();
        CMatrix filter;
        switch (kind)
        {
        case Detector::zf:
        {
            detail::require_full_column_rank(h_eff, "zf_detect");
            filter = (h_eff.adjoint() * h_eff).ldlt().solve(h_eff.adjoint());
            break;
        }
        case Detector::mmse:
        {
            CMatrix reg = h_eff.adjoint() * h_eff;
            reg.diagonal().array() += noise_var;
            if (noise_var == 0.0)
                detail::require_full_column_rank(h_eff, "mmse_detect");
            filter = reg.ldlt().solve(h_eff.adjoint());
            break;
        }
        case Detector::mf:
        case Detector::ml:
            filter = h_eff.adjoint();
            break;
        }
        const CMatrix gain = filter * h_eff;
        LinearEstimate est;
        est.soft = filter * y;
        est.noise_var.resize(static_cast<std::size_t>(ns));
        for (Index s = 0; s < ns; ++s)
        {
            const cplx beta = gain(s, s);
            double interference = 0.0;
            for (Index j = 0; j < ns; ++j)
                if (j != s)
                    interference += std::norm(gain(s, j));
            const double v = (interference + noise_var * filter.row(s).squaredNorm()) / std::max(std::norm(beta), 1e-300);
            est.noise_var[static_cast<std::size_t>(s)] = std::max(v, 1e-12);
            if (std::abs(beta) > 0.0)
                est.soft.row(s) /= beta;
        }
        return est;
    }

    /// Joint max-log LLRs from the exhaustive candidate set. Output order:
    /// channel use, then stream, then bit (MSB first); positive favours 0.
    inline std::vector<double> ml_llr(const CMatrix &y, const CMatrix &h_eff, double noise_var, const Constellation &c)
    {
        detail::require<DimensionError>(y.rows() == h_eff.rows(), "ml_llr: y rows must match h_eff rows");
        detail::require(noise_var > 0.0, "ml_llr: noise_var must be positive");
        const Index ns = h_eff.cols();
        const CMatrix cand = ml_candidates(ns, c);
        const CMatrix hc = h_eff * cand;
        const auto m = c.size();
        const int bps = c.bits_per_symbol;
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(y.cols() * ns * bps));
        std::vector<double> dist(static_cast<std::size_t>(hc.cols()));
        constexpr double inf = std::numeric_limits<double>::infinity();
        for (Index t = 0; t < y.cols(); ++t)
        {
            for (Index i = 0; i < hc.cols(); ++i)
                dist[static_cast<std::size_t>(i)] = (y.col(t) - hc.col(i)).squaredNorm();
            for (Index s = 0; s < ns; ++s)
            {
                std::size_t stride = 1;
                for (Index q = s + 1; q < ns; ++q)
                    stride *= m;
                for (int b = 0; b < bps; ++b)
                {
                    double d0 = inf, d1 = inf;
                    for (std::size_t i = 0; i < dist.size(); ++i)
                    {
                        const std::size_t sym = (i / stride) % m;
                        double &slot = c.bit(sym, b) ? d1 : d0;
                        slot = std::min(slot, dist[i]);
                    }
                    out.push_back((d1 - d0) / noise_var);
                }
            }
        }
        return out;
    }
} // namespace mimolab

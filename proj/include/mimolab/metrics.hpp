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
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "image.hpp"

namespace mimolab
{
    /// Exact ratio num/den in lowest terms.
    struct Rational
    {
        std::uint64_t num = 0;
        std::uint64_t den = 1;

        double value() const { return static_cast<double>(num) / static_cast<double>(den); }
        bool operator==(const Rational &) const = default;
    };

    inline Rational make_rational(std::uint64_t num, std::uint64_t den)
    {
        detail::require(den > 0, "rational: zero denominator");
        const std::uint64_t g = std::gcd(num, den);
        return g == 0 ? Rational{0, 1} : Rational{num / g, den / g};
    }

    /// Channel uses per source symbol for an h x w RGB image.
    inline Rational cbr_rational(std::uint64_t k_total, std::uint64_t h, std::uint64_t w)
    {
        detail::require(h > 0 && w > 0, "compute_cbr: image dimensions must be positive");
        return make_rational(k_total, 3 * h * w);
    }

    inline double compute_cbr(std::uint64_t k_total, std::uint64_t h, std::uint64_t w) { return cbr_rational(k_total, h, w).value(); }

    /// 10 log10(255^2 / MSE); +inf for identical inputs.
    inline double psnr_bytes(const std::vector<std::uint8_t> &a, const std::vector<std::uint8_t> &b)
    {
        detail::require<DimensionError>(a.size() == b.size() && !a.empty(), "compute_psnr: size mismatch");
        double se = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
        {
            const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
            se += d * d;
        }
        if (se == 0.0)
            return std::numeric_limits<double>::infinity();
        return 10.0 * std::log10(255.0 * 255.0 / (se / static_cast<double>(a.size())));
    }

    inline double compute_psnr(const Image &a, const Image &b)
    {
        detail::require<DimensionError>(a.width == b.width && a.height == b.height, "compute_psnr: image dimensions differ");
        return psnr_bytes(a.rgb, b.rgb);
    }

    /// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
    class Pchip
    {
    public:
        Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y))
        {
            const std::size_t n = x_.size();
            detail::require(n >= 2 && y_.size() == n, "pchip: need at least two points");
            for (std::size_t i = 0; i + 1 < n; ++i)
                detail::require(x_[i + 1] > x_[i], "pchip: abscissae must be strictly increasing");
            std::vector<double> h(n - 1), del(n - 1);
            for (std::size_t i = 0; i + 1 < n; ++i)
            {
                h[i] = x_[i + 1] - x_[i];
                del[i] = (y_[i + 1] - y_[i]) / h[i];
            }
            d_.assign(n, 0.0);
            if (n == 2)
            {
                d_[0] = d_[1] = del[0];
                return;
            }
            for (std::size_t i = 1; i + 1 < n; ++i)
            {
                if (del[i - 1] * del[i] <= 0.0)
                    continue;
                const double w1 = 2.0 * h[i] + h[i - 1], w2 = h[i] + 2.0 * h[i - 1];
                d_[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
            }
            d_[0] = end_slope(h[0], h[1], del[0], del[1]);
            d_[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }

        double front() const { return x_.front(); }
        double back() const { return x_.back(); }

        /// Exact integral over [a, b] within the data range.
        double integral(double a, double b) const
        {
            detail::require(a >= x_.front() - 1e-12 && b <= x_.back() + 1e-12 && a <= b, "pchip: integration bounds outside data");
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < x_.size(); ++i)
            {
                const double lo = std::max(a, x_[i]), hi = std::min(b, x_[i + 1]);
                if (hi > lo)
                    acc += segment_integral(i, lo, hi);
            }
            return acc;
        }

    private:
        static double end_slope(double h0, double h1, double d0, double d1)
        {
            double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if (d * d0 <= 0.0)
                d = 0.0;
            else if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3.0 * d0))
                d = 3.0 * d0;
            return d;
        }

        // Cubic in s = x - x_i: y_i + d_i s + c2 s^2 + c3 s^3.
        double segment_integral(std::size_t i, double lo, double hi) const
        {
            const double h = x_[i + 1] - x_[i];
            const double del = (y_[i + 1] - y_[i]) / h;
            const double c2 = (3.0 * del - 2.0 * d_[i] - d_[i + 1]) / h;
            const double c3 = (d_[i] + d_[i + 1] - 2.0 * del) / (h * h);
            auto prim = [&](double s) { return s * (y_[i] + s * (d_[i] / 2.0 + s * (c2 / 3.0 + s * c3 / 4.0))); };
            return prim(hi - x_[i]) - prim(lo - x_[i]);
        }

        std::vector<double> x_, y_, d_;
    };

    struct RatePoint
    {
        double rate = 0.0;
        double quality = 0.0;
    };

    struct BdResult
    {
        double bd_rate_percent = 0.0;
        double bd_quality = 0.0;
    };

    namespace detail
    {
        inline std::vector<RatePoint> sorted_curve(std::vector<RatePoint> c)
        {
            require(c.size() >= 4, "bd_metric: each curve needs at least 4 points");
            for (const auto &p : c)
                require(p.rate > 0.0 && std::isfinite(p.rate) && std::isfinite(p.quality), "bd_metric: rates must be positive and finite");
            std::sort(c.begin(), c.end(), [](const RatePoint &a, const RatePoint &b) { return a.rate < b.rate; });
            for (std::size_t i = 0; i + 1 < c.size(); ++i)
                require(c[i + 1].rate > c[i].rate && c[i + 1].quality > c[i].quality,
                        "bd_metric: quality must increase strictly with rate");
            return c;
        }

        // Average horizontal gap between two curves y = f(x) over the common x range.
        inline double mean_gap(const Pchip &a, const Pchip &b)
        {
            const double lo = std::max(a.front(), b.front()), hi = std::min(a.back(), b.back());
            if (!(hi > lo))
                throw NoOverlapError("bd_metric: curves do not overlap");
            return (b.integral(lo, hi) - a.integral(lo, hi)) / (hi - lo);
        }
    } // namespace detail

    /// Bjontegaard deltas of curve b against curve a: average rate change in
    /// percent at equal quality, and average quality change at equal rate.
    inline BdResult bd_metric(const std::vector<RatePoint> &curve_a, const std::vector<RatePoint> &curve_b)
    {
        const auto a = detail::sorted_curve(curve_a), b = detail::sorted_curve(curve_b);
        std::vector<double> la, qa, lb, qb;
        for (const auto &p : a)
        {
            la.push_back(std::log10(p.rate));
            qa.push_back(p.quality);
        }
        for (const auto &p : b)
        {
            lb.push_back(std::log10(p.rate));
            qb.push_back(p.quality);
        }
        BdResult r;
        r.bd_rate_percent = (std::pow(10.0, detail::mean_gap(Pchip(qa, la), Pchip(qb, lb))) - 1.0) * 100.0;
        r.bd_quality = detail::mean_gap(Pchip(la, qa), Pchip(lb, qb));
        return r;
    }
} // namespace mimolab

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
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace mimolab
{
    /// Real feature map, height x width x channels, channel index fastest.
    struct FeatureMap
    {
        std::size_t height = 0;
        std::size_t width = 0;
        std::size_t channels = 0;
        std::vector<double> values;

        FeatureMap() = default;
        FeatureMap(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
            : height(h), width(w), channels(c), values(h * w * c, fill)
        {
        }

        double &at(std::size_t i, std::size_t j, std::size_t c) { return values[(i * width + j) * channels + c]; }
        double at(std::size_t i, std::size_t j, std::size_t c) const { return values[(i * width + j) * channels + c]; }

        bool same_shape(const FeatureMap &o) const { return height == o.height && width == o.width && channels == o.channels; }
    };

    /// Per output location and kernel tap displacement (dy, dx) in pixels.
    struct OffsetField
    {
        std::size_t height = 0;
        std::size_t width = 0;
        std::size_t taps = 0;
        std::vector<std::array<double, 2>> d;

        OffsetField() = default;
        OffsetField(std::size_t h, std::size_t w, std::size_t n) : height(h), width(w), taps(n), d(h * w * n, {0.0, 0.0}) {}

        std::array<double, 2> &at(std::size_t i, std::size_t j, std::size_t n) { return d[(i * width + j) * taps + n]; }
        const std::array<double, 2> &at(std::size_t i, std::size_t j, std::size_t n) const { return d[(i * width + j) * taps + n]; }
    };

    /// Cross-channel kernel; weight index ((o * in + i) * kh + u) * kw + v.
    struct ConvKernel
    {
        std::size_t out_ch = 0;
        std::size_t in_ch = 0;
        std::size_t kh = 1;
        std::size_t kw = 1;
        std::vector<double> w;
        std::vector<double> bias;

        ConvKernel() = default;
        ConvKernel(std::size_t o, std::size_t i, std::size_t h, std::size_t wd)
            : out_ch(o), in_ch(i), kh(h), kw(wd), w(o * i * h * wd, 0.0), bias(o, 0.0)
        {
        }

        double &at(std::size_t o, std::size_t i, std::size_t u, std::size_t v) { return w[((o * in_ch + i) * kh + u) * kw + v]; }
        double at(std::size_t o, std::size_t i, std::size_t u, std::size_t v) const { return w[((o * in_ch + i) * kh + u) * kw + v]; }

        static ConvKernel identity(std::size_t ch)
        {
            ConvKernel k(ch, ch, 1, 1);
            for (std::size_t c = 0; c < ch; ++c)
                k.at(c, c, 0, 0) = 1.0;
            return k;
        }
    };

    namespace detail
    {
        inline void check_kernel(const FeatureMap &t, const ConvKernel &k)
        {
            detail::require<DimensionError>(k.kh % 2 == 1 && k.kw % 2 == 1, "conv: kernel size must be odd");
            detail::require<DimensionError>(k.in_ch == t.channels, "conv: kernel input channels do not match feature map");
            detail::require<DimensionError>(k.w.size() == k.out_ch * k.in_ch * k.kh * k.kw && k.bias.size() == k.out_ch,
                                    "conv: kernel storage size mismatch");
        }

        inline double pixel_or_zero(const FeatureMap &t, long i, long j, std::size_t c)
        {
            if (i < 0 || j < 0 || i >= static_cast<long>(t.height) || j >= static_cast<long>(t.width))
                return 0.0;
            return t.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), c);
        }

        inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }
    } // namespace detail

    /// Bilinear interpolation at p = (row, col), zero outside the grid.
    inline double bilinear_sample(const FeatureMap &t, std::array<double, 2> p, std::size_t ch)
    {
        const double fy = std::floor(p[0]), fx = std::floor(p[1]);
        const double ay = p[0] - fy, ax = p[1] - fx;
        const long y0 = static_cast<long>(fy), x0 = static_cast<long>(fx);
        double v = 0.0;
        if (ay < 1.0 && ax < 1.0)
            v += (1.0 - ay) * (1.0 - ax) * detail::pixel_or_zero(t, y0, x0, ch);
        if (ax > 0.0)
            v += (1.0 - ay) * ax * detail::pixel_or_zero(t, y0, x0 + 1, ch);
        if (ay > 0.0)
            v += ay * (1.0 - ax) * detail::pixel_or_zero(t, y0 + 1, x0, ch);
        if (ay > 0.0 && ax > 0.0)
            v += ay * ax * detail::pixel_or_zero(t, y0 + 1, x0 + 1, ch);
        return v;
    }

    /// Stride-1 "same" convolution (correlation form) with zero padding.
    inline FeatureMap conv2d(const FeatureMap &t, const ConvKernel &k)
    {
        detail::check_kernel(t, k);
        FeatureMap out(t.height, t.width, k.out_ch);
        const long ry = static_cast<long>(k.kh / 2), rx = static_cast<long>(k.kw / 2);
        for (std::size_t i = 0; i < t.height; ++i)
            for (std::size_t j = 0; j < t.width; ++j)
                for (std::size_t o = 0; o < k.out_ch; ++o)
                {
                    double acc = k.bias[o];
                    for (std::size_t c = 0; c < k.in_ch; ++c)
                        for (std::size_t u = 0; u < k.kh; ++u)
                            for (std::size_t v = 0; v < k.kw; ++v)
                                acc += k.at(o, c, u, v) *
                                       detail::pixel_or_zero(t, static_cast<long>(i) + static_cast<long>(u) - ry,
                                                             static_cast<long>(j) + static_cast<long>(v) - rx, c);
                    out.at(i, j, o) = acc;
                }
        return out;
    }

    /// Deformable convolution: every tap reads t(p0 + p_n + dp_n) bilinearly.
    /// One offset set per location and tap, shared across input channels.
    inline FeatureMap deformable_conv2d(const FeatureMap &t, const ConvKernel &k, const OffsetField &offsets)
    {
        detail::check_kernel(t, k);
        detail::require<DimensionError>(offsets.height == t.height && offsets.width == t.width && offsets.taps == k.kh * k.kw &&
                                    offsets.d.size() == t.height * t.width * k.kh * k.kw,
                                "deformable_conv2d: offset field shape mismatch");
        FeatureMap out(t.height, t.width, k.out_ch);
        const double ry = static_cast<double>(k.kh / 2), rx = static_cast<double>(k.kw / 2);
        for (std::size_t i = 0; i < t.height; ++i)
            for (std::size_t j = 0; j < t.width; ++j)
            {
                for (std::size_t o = 0; o < k.out_ch; ++o)
                    out.at(i, j, o) = k.bias[o];
                for (std::size_t u = 0; u < k.kh; ++u)
                    for (std::size_t v = 0; v < k.kw; ++v)
                    {
                        const auto &dp = offsets.at(i, j, u * k.kw + v);
                        const std::array<double, 2> p{static_cast<double>(i) + static_cast<double>(u) - ry + dp[0],
                                                      static_cast<double>(j) + static_cast<double>(v) - rx + dp[1]};
                        for (std::size_t c = 0; c < k.in_ch; ++c)
                        {
                            const double s = bilinear_sample(t, p, c);
                            if (s == 0.0)
                                continue;
                            for (std::size_t o = 0; o < k.out_ch; ++o)
                                out.at(i, j, o) += k.at(o, c, u, v) * s;
                        }
                    }
            }
        return out;
    }

    /// Row maxima (height x channels) and column maxima (width x channels).
    struct StripPool
    {
        std::vector<double> row_max;
        std::vector<double> col_max;
    };

    inline StripPool strip_pool(const FeatureMap &t)
    {
        StripPool sp;
        sp.row_max.assign(t.height * t.channels, -INFINITY);
        sp.col_max.assign(t.width * t.channels, -INFINITY);
        for (std::size_t i = 0; i < t.height; ++i)
            for (std::size_t j = 0; j < t.width; ++j)
                for (std::size_t c = 0; c < t.channels; ++c)
                {
                    const double v = t.at(i, j, c);
                    auto &r = sp.row_max[i * t.channels + c];
                    auto &q = sp.col_max[j * t.channels + c];
                    r = std::max(r, v);
                    q = std::max(q, v);
                }
        return sp;
    }

    /// t * sigmoid(row_max broadcast + col_max broadcast).
    inline FeatureMap strip_fuse(const FeatureMap &t, const StripPool &sp)
    {
        detail::require<DimensionError>(sp.row_max.size() == t.height * t.channels && sp.col_max.size() == t.width * t.channels,
                                "strip_fuse: pooled shapes do not match feature map");
        FeatureMap out(t.height, t.width, t.channels);
        for (std::size_t i = 0; i < t.height; ++i)
            for (std::size_t j = 0; j < t.width; ++j)
                for (std::size_t c = 0; c < t.channels; ++c)
                    out.at(i, j, c) =
                        t.at(i, j, c) * detail::sigmoid(sp.row_max[i * t.channels + c] + sp.col_max[j * t.channels + c]);
        return out;
    }

    inline constexpr std::array<int, 5> kQpSet{28, 31, 34, 37, 41};

    /// Two-layer perceptron mapping the normalized quantization parameter to a
    /// per-channel scale vector. Hidden layer ReLU, output linear.
    struct QaMlp
    {
        std::vector<double> w1; // hidden
        std::vector<double> b1; // hidden
        std::vector<double> w2; // channels x hidden, row-major
        std::vector<double> b2; // channels

        std::size_t hidden() const { return w1.size(); }
        std::size_t channels() const { return b2.size(); }

        static QaMlp constant(std::size_t channels, double value, std::size_t hidden = 4)
        {
            return QaMlp{std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0),
                         std::vector<double>(channels * hidden, 0.0), std::vector<double>(channels, value)};
        }

        std::vector<double> operator()(double u) const
        {
            detail::require<DimensionError>(b1.size() == w1.size() && w2.size() == channels() * hidden(), "QaMlp: inconsistent shapes");
            std::vector<double> h(hidden());
            for (std::size_t n = 0; n < h.size(); ++n)
                h[n] = std::max(0.0, w1[n] * u + b1[n]);
            std::vector<double> v(b2);
            for (std::size_t c = 0; c < v.size(); ++c)
                for (std::size_t n = 0; n < h.size(); ++n)
                    v[c] += w2[c * hidden() + n] * h[n];
            return v;
        }
    };

    inline double normalize_qp(int q)
    {
        detail::require(std::find(kQpSet.begin(), kQpSet.end(), q) != kQpSet.end(), "qa_scale: quantization parameter not in {28,31,34,37,41}");
        return static_cast<double>(q - kQpSet.front()) / static_cast<double>(kQpSet.back() - kQpSet.front());
    }

    /// f_o = f_i * v, v = mlp((q - 28) / 13) broadcast per channel.
    inline FeatureMap qa_scale(const FeatureMap &f, int q, const QaMlp &mlp)
    {
        const double u = normalize_qp(q);
        detail::require<DimensionError>(mlp.channels() == f.channels, "qa_scale: scale length does not match channels");
        const std::vector<double> v = mlp(u);
        FeatureMap out = f;
        for (std::size_t p = 0; p < out.values.size(); ++p)
            out.values[p] *= v[p % f.channels];
        return out;
    }

    /// One stage of the preprocessing filter: an upper 1x1 branch with
    /// quantization-adaptive scaling, and a lower conv / deformable conv /
    /// strip-pooling branch; the branch outputs are summed and clamped to [0,1].
    struct PpenWeights
    {
        ConvKernel up_in;  // 3 -> cu, 1x1
        QaMlp up_scale;    // cu
        ConvKernel up_out; // cu -> 3, 1x1
        ConvKernel low_conv;   // 3 -> cl, 3x3
        ConvKernel low_deform; // cl -> cl, 3x3
        std::vector<std::array<double, 2>> tap_offsets; // per deformable tap, broadcast over locations
        ConvKernel low_out;    // cl -> 3, 1x1

        static PpenWeights zeros(std::size_t cu = 4, std::size_t cl = 4)
        {
            PpenWeights w;
            w.up_in = ConvKernel(cu, 3, 1, 1);
            w.up_scale = QaMlp::constant(cu, 0.0);
            w.up_out = ConvKernel(3, cu, 1, 1);
            w.low_conv = ConvKernel(cl, 3, 3, 3);
            w.low_deform = ConvKernel(cl, cl, 3, 3);
            w.tap_offsets.assign(9, {0.0, 0.0});
            w.low_out = ConvKernel(3, cl, 1, 1);
            return w;
        }

        static PpenWeights random(std::uint64_t seed, std::size_t cu = 4, std::size_t cl = 4, double scale = 0.3)
        {
            PpenWeights w = zeros(cu, cl);
            SeededRng rng(seed);
            auto fill = [&](std::vector<double> &v, double s)
            {
                for (auto &x : v)
                    x = rng.uniform(-s, s);
            };
            for (ConvKernel *k : {&w.up_in, &w.up_out, &w.low_conv, &w.low_deform, &w.low_out})
            {
                fill(k->w, scale);
                fill(k->bias, 0.1 * scale);
            }
            fill(w.up_scale.w1, 1.0);
            fill(w.up_scale.b1, 0.5);
            fill(w.up_scale.w2, 1.0);
            fill(w.up_scale.b2, 1.0);
            for (auto &o : w.tap_offsets)
                o = {rng.uniform(-0.75, 0.75), rng.uniform(-0.75, 0.75)};
            return w;
        }
    };

    inline FeatureMap ppen_forward(const FeatureMap &x_o, const PpenWeights &w, int q)
    {
        detail::require<DimensionError>(x_o.channels == 3, "ppen_forward: input must have 3 channels");
        const FeatureMap upper = conv2d(qa_scale(conv2d(x_o, w.up_in), q, w.up_scale), w.up_out);

        const FeatureMap a = conv2d(x_o, w.low_conv);
        detail::require<DimensionError>(w.tap_offsets.size() == w.low_deform.kh * w.low_deform.kw, "ppen_forward: tap offset count mismatch");
        OffsetField off(a.height, a.width, w.tap_offsets.size());
        for (std::size_t p = 0; p < a.height * a.width; ++p)
            std::copy(w.tap_offsets.begin(), w.tap_offsets.end(), off.d.begin() + static_cast<std::ptrdiff_t>(p * off.taps));
        const FeatureMap b = deformable_conv2d(a, w.low_deform, off);
        const FeatureMap lower = conv2d(strip_fuse(b, strip_pool(b)), w.low_out);

        detail::require<DimensionError>(upper.same_shape(x_o) && lower.same_shape(x_o), "ppen_forward: branch output shape mismatch");
        FeatureMap out(x_o.height, x_o.width, 3);
        for (std::size_t p = 0; p < out.values.size(); ++p)
            out.values[p] = std::clamp(upper.values[p] + lower.values[p], 0.0, 1.0);
        return out;
    }

    // ---- JSON ----

    inline nlohmann::json kernel_to_json(const ConvKernel &k)
    {
        return {{"out_ch", k.out_ch}, {"in_ch", k.in_ch}, {"kh", k.kh}, {"kw", k.kw}, {"w", k.w}, {"bias", k.bias}};
    }

    inline ConvKernel kernel_from_json(const nlohmann::json &j)
    {
        ConvKernel k(j.at("out_ch").get<std::size_t>(), j.at("in_ch").get<std::size_t>(), j.at("kh").get<std::size_t>(),
                     j.at("kw").get<std::size_t>());
        k.w = j.at("w").get<std::vector<double>>();
        k.bias = j.at("bias").get<std::vector<double>>();
        detail::require<DimensionError>(k.w.size() == k.out_ch * k.in_ch * k.kh * k.kw && k.bias.size() == k.out_ch,
                                "kernel_from_json: array sizes do not match shape");
        return k;
    }

    inline nlohmann::json ppen_to_json(const PpenWeights &w)
    {
        nlohmann::json offs = nlohmann::json::array();
        for (const auto &o : w.tap_offsets)
            offs.push_back({o[0], o[1]});
        return {{"up_in", kernel_to_json(w.up_in)},
                {"up_scale", {{"w1", w.up_scale.w1}, {"b1", w.up_scale.b1}, {"w2", w.up_scale.w2}, {"b2", w.up_scale.b2}}},
                {"up_out", kernel_to_json(w.up_out)},
                {"low_conv", kernel_to_json(w.low_conv)},
                {"low_deform", kernel_to_json(w.low_deform)},
                {"tap_offsets", offs},
                {"low_out", kernel_to_json(w.low_out)}};
    }

    inline PpenWeights ppen_from_json(const nlohmann::json &j)
    {
        try
        {
            PpenWeights w;
            w.up_in = kernel_from_json(j.at("up_in"));
            const auto &s = j.at("up_scale");
            w.up_scale = QaMlp{s.at("w1").get<std::vector<double>>(), s.at("b1").get<std::vector<double>>(),
                               s.at("w2").get<std::vector<double>>(), s.at("b2").get<std::vector<double>>()};
            w.up_out = kernel_from_json(j.at("up_out"));
            w.low_conv = kernel_from_json(j.at("low_conv"));
            w.low_deform = kernel_from_json(j.at("low_deform"));
            for (const auto &o : j.at("tap_offsets"))
                w.tap_offsets.push_back({o.at(0).get<double>(), o.at(1).get<double>()});
            w.low_out = kernel_from_json(j.at("low_out"));
            return w;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw InvalidInput(std::string("ppen_from_json: ") + e.what());
        }
    }

    inline nlohmann::json feature_to_json(const FeatureMap &f)
    {
        return {{"height", f.height}, {"width", f.width}, {"channels", f.channels}, {"values", f.values}};
    }

    inline FeatureMap feature_from_json(const nlohmann::json &j)
    {
        FeatureMap f(j.at("height").get<std::size_t>(), j.at("width").get<std::size_t>(), j.at("channels").get<std::size_t>());
        f.values = j.at("values").get<std::vector<double>>();
        detail::require<DimensionError>(f.values.size() == f.height * f.width * f.channels, "feature_from_json: size mismatch");
        return f;
    }
} // namespace mimolab

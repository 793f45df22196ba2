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
#include <algorithm>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "channel.hpp"
#include "detection.hpp"
#include "errors.hpp"
#include "ldpc.hpp"
#include "modem.hpp"
#include "precoder.hpp"
#include "rng.hpp"

namespace mimolab
{
    using RVector = Eigen::VectorXd;
    using RMatrix = Eigen::MatrixXd;

    struct PipelineOutput
    {
        RVector recon;
        double symbol_mse = 0.0;
    };

    /// A frozen, non-differentiable map over small real vectors.
    struct ToyPipeline
    {
        std::string name;
        std::size_t dim = 0;
        std::function<PipelineOutput(const RVector &)> map;

        PipelineOutput operator()(const RVector &v) const
        {
            detail::require<DimensionError>(static_cast<std::size_t>(v.size()) == dim, "ToyPipeline: input dimension mismatch");
            return map(v);
        }
    };

    /// Uniform mid-rise quantizer on [-1, 1], 2^bits levels, clipping outside.
    inline std::size_t quantize_index(double v, int bits)
    {
        const double levels = std::ldexp(1.0, bits);
        const double idx = std::floor((v + 1.0) / (2.0 / levels));
        return static_cast<std::size_t>(std::clamp(idx, 0.0, levels - 1.0));
    }

    inline double dequantize_index(std::size_t idx, int bits)
    {
        const double step = 2.0 / std::ldexp(1.0, bits);
        return -1.0 + (static_cast<double>(idx) + 0.5) * step;
    }

    inline ToyPipeline identity_pipeline(std::size_t dim)
    {
        return {"identity", dim, [](const RVector &v) { return PipelineOutput{v, 0.0}; }};
    }

    inline ToyPipeline quantizer_pipeline(std::size_t dim, int bits)
    {
        detail::require(bits >= 1 && bits <= 16, "quantizer_pipeline: bits out of range");
        return {"quantizer", dim, [bits](const RVector &v)
                {
                    RVector r(v.size());
                    for (Index i = 0; i < v.size(); ++i)
                        r(i) = dequantize_index(quantize_index(v(i), bits), bits);
                    return PipelineOutput{r, 0.0};
                }};
    }

    /// quantize -> LDPC encode -> QPSK -> 2x2 precoded channel (fixed draw of
    /// H and noise) -> MMSE -> LLR -> decode -> dequantize.
    inline ToyPipeline link_pipeline(std::size_t dim = 16, int bits = 4, double snr_db = 6.0, std::uint64_t seed = 3)
    {
        const std::size_t info_bits = dim * static_cast<std::size_t>(bits);
        std::size_t n = 128;
        while (n / 2 < info_bits)
            n *= 2;
        auto code = std::make_shared<const LdpcCode>(LdpcCode::build_with_retry(CodeRate::half, n, seed));
        detail::require<ConstructionError>(code->k_info() >= info_bits, "link_pipeline: code too short for payload");
        const Constellation c = make_constellation(Modulation::qpsk);

        LinkConfig cfg;
        cfg.n_t = cfg.n_r = cfg.n_s = 2;
        cfg.k = static_cast<int>(n / 4);
        cfg.snr_db = snr_db;
        const double noise_var = snr_to_noise_var(snr_db, cfg.p_z);
        SeededRng rng(seed);
        SeededRng ch_rng = rng.split(1);
        const ChannelRealization ch = sample_rayleigh(cfg, ch_rng);
        const PrecoderSpec spec = build_precoder(ch.h, cfg, noise_var);
        const CMatrix g = spec.matrix();
        const CMatrix h_eff = ch.h * g;
        SeededRng noise_rng = rng.split(2);
        const CMatrix noise = sample_cgauss(noise_rng, cfg.n_r, cfg.k, noise_var);

        return {"link", dim, [=](const RVector &v)
                {
                    Bits info(code->k_info(), 0);
                    for (Index i = 0; i < v.size(); ++i)
                    {
                        const std::size_t q = quantize_index(v(i), bits);
                        for (int b = 0; b < bits; ++b)
                            info[static_cast<std::size_t>(i) * static_cast<std::size_t>(bits) + static_cast<std::size_t>(b)] =
                                static_cast<std::uint8_t>((q >> (bits - 1 - b)) & 1u);
                    }
                    const Bits word = code->encode(info);
                    const std::vector<cplx> xe = modulate(word, c);
                    const CMatrix y = ch.h * standard_precode(xe, spec, cfg) + noise;
                    const LinearEstimate est = linear_estimate(y, h_eff, noise_var, Detector::mmse);

                    std::vector<double> llr;
                    llr.reserve(word.size());
                    double mse = 0.0;
                    for (Index t = 0; t < est.soft.cols(); ++t)
                        for (Index s = 0; s < est.soft.rows(); ++s)
                        {
                            const cplx sym = est.soft(s, t);
                            mse += std::norm(sym - xe[static_cast<std::size_t>(t * est.soft.rows() + s)]);
                            const auto l = demodulate_llr(std::span<const cplx>(&sym, 1), c, est.noise_var[static_cast<std::size_t>(s)]);
                            llr.insert(llr.end(), l.begin(), l.end());
                        }
                    const DecodeResult dec = code->decode(llr, 50, 0.75);
                    RVector r(v.size());
                    for (Index i = 0; i < v.size(); ++i)
                    {
                        std::size_t q = 0;
                        for (int b = 0; b < bits; ++b)
                            q = (q << 1) | dec.info[static_cast<std::size_t>(i) * static_cast<std::size_t>(bits) + static_cast<std::size_t>(b)];
                        r(i) = dequantize_index(q, bits);
                    }
                    return PipelineOutput{r, mse / static_cast<double>(xe.size())};
                }};
    }

    enum class Activation
    {
        tanh,
        linear
    };

    /// d -> w -> w -> d perceptron.
    struct Surrogate
    {
        RMatrix w1, b1, w2, b2, w3, b3; // biases stored as column matrices
        Activation act = Activation::tanh;

        std::size_t in_dim() const { return static_cast<std::size_t>(w1.cols()); }
        std::size_t out_dim() const { return static_cast<std::size_t>(w3.rows()); }

        static Surrogate random(std::size_t dim, std::size_t width, std::uint64_t seed)
        {
            SeededRng rng(seed);
            auto init = [&](Index r, Index c)
            {
                RMatrix m(r, c);
                const double s = std::sqrt(1.0 / static_cast<double>(c));
                for (Index i = 0; i < r; ++i)
                    for (Index j = 0; j < c; ++j)
                        m(i, j) = s * rng.gaussian();
                return m;
            };
            const Index d = static_cast<Index>(dim), w = static_cast<Index>(width);
            Surrogate s;
            s.w1 = init(w, d);
            s.b1 = RMatrix::Zero(w, 1);
            s.w2 = init(w, w);
            s.b2 = RMatrix::Zero(w, 1);
            s.w3 = init(d, w);
            s.b3 = RMatrix::Zero(d, 1);
            return s;
        }

        /// Linear layers embedding the input in the first `dim` hidden units.
        static Surrogate identity(std::size_t dim, std::size_t width)
        {
            const Index d = static_cast<Index>(dim), w = static_cast<Index>(width);
            Surrogate s;
            s.act = Activation::linear;
            s.w1 = RMatrix::Identity(w, d);
            s.b1 = RMatrix::Zero(w, 1);
            s.w2 = RMatrix::Identity(w, w);
            s.b2 = RMatrix::Zero(w, 1);
            s.w3 = RMatrix::Identity(d, w);
            s.b3 = RMatrix::Zero(d, 1);
            return s;
        }

        std::vector<RMatrix *> tensors() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
        std::vector<const RMatrix *> tensors() const { return {&w1, &b1, &w2, &b2, &w3, &b3}; }

        struct Cache
        {
            RVector in, a1, h1, a2, h2, out;
        };

        RVector activate(const RVector &a) const { return act == Activation::tanh ? RVector(a.array().tanh()) : a; }
        RVector activate_grad(const RVector &a) const
        {
            return act == Activation::tanh ? RVector(1.0 - a.array().tanh().square()) : RVector::Ones(a.size());
        }

        Cache forward_cache(const RVector &v) const
        {
            detail::require<DimensionError>(v.size() == w1.cols(), "surrogate_forward: input dimension mismatch");
            Cache c;
            c.in = v;
            c.a1 = w1 * v + b1.col(0);
            c.h1 = activate(c.a1);
            c.a2 = w2 * c.h1 + b2.col(0);
            c.h2 = activate(c.a2);
            c.out = w3 * c.h2 + b3.col(0);
            return c;
        }

        RVector operator()(const RVector &v) const { return forward_cache(v).out; }

        /// Accumulates parameter gradients into `grads` (same order as
        /// tensors()) and returns the gradient with respect to the input.
        RVector backward(const Cache &c, const RVector &g_out, std::vector<RMatrix> *grads) const
        {
            detail::require<DimensionError>(g_out.size() == w3.rows(), "surrogate backward: gradient dimension mismatch");
            const RVector g_a2 = (w3.transpose() * g_out).cwiseProduct(activate_grad(c.a2));
            const RVector g_a1 = (w2.transpose() * g_a2).cwiseProduct(activate_grad(c.a1));
            if (grads)
            {
                auto &g = *grads;
                g[0] += g_a1 * c.in.transpose();
                g[1] += g_a1;
                g[2] += g_a2 * c.h1.transpose();
                g[3] += g_a2;
                g[4] += g_out * c.h2.transpose();
                g[5] += g_out;
            }
            return w1.transpose() * g_a1;
        }

        RVector input_gradient(const RVector &v, const RVector &g_out) const { return backward(forward_cache(v), g_out, nullptr); }
    };

    inline RVector surrogate_forward(const Surrogate &s, const RVector &v) { return s(v); }

    namespace detail
    {
        struct Adam
        {
            std::vector<RMatrix> m, v;
            int t = 0;
            double b1 = 0.9, b2 = 0.999, eps = 1e-8;

            void step(const std::vector<RMatrix *> &params, const std::vector<RMatrix> &grads, double lr)
            {
                if (m.empty())
                    for (const auto *p : params)
                    {
                        m.push_back(RMatrix::Zero(p->rows(), p->cols()));
                        v.push_back(RMatrix::Zero(p->rows(), p->cols()));
                    }
                ++t;
                const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
                for (std::size_t i = 0; i < params.size(); ++i)
                {
                    m[i] = b1 * m[i] + (1.0 - b1) * grads[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * grads[i].cwiseAbs2();
                    params[i]->array() -= lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + eps);
                }
            }
        };

        inline std::vector<RMatrix> zeros_like(const std::vector<RMatrix *> &ps)
        {
            std::vector<RMatrix> g;
            for (const auto *p : ps)
                g.push_back(RMatrix::Zero(p->rows(), p->cols()));
            return g;
        }
    } // namespace detail

    /// beta_n = beta0 (1 - n/K)^p
    inline double poly_lr(double beta0, double power, std::size_t step, std::size_t total)
    {
        if (total == 0)
            return beta0;
        const double frac = 1.0 - static_cast<double>(std::min(step, total)) / static_cast<double>(total);
        return beta0 * std::pow(frac, power);
    }

    struct SurrogateTrainOptions
    {
        std::size_t width_factor = 4;
        std::size_t epochs = 300;
        std::size_t batch = 16;
        double lr0 = 5e-4;
        double power = 0.9;
        bool shuffle = true;
        std::uint64_t seed = 1;
    };

    struct SurrogateFit
    {
        Surrogate surrogate;
        double initial_loss = 0.0;
        double final_loss = 0.0;
        std::vector<double> history; // training loss per epoch
    };

    /// mean ||target - s(v)||^2 / dim
    inline double surrogate_loss(const Surrogate &s, const std::vector<RVector> &inputs, const std::vector<RVector> &targets)
    {
        detail::require(!inputs.empty() && inputs.size() == targets.size(), "surrogate_loss: empty or mismatched data");
        double acc = 0.0;
        for (std::size_t i = 0; i < inputs.size(); ++i)
            acc += (targets[i] - s(inputs[i])).squaredNorm() / static_cast<double>(targets[i].size());
        return acc / static_cast<double>(inputs.size());
    }

    inline std::vector<RVector> pipeline_targets(const ToyPipeline &p, const std::vector<RVector> &inputs)
    {
        std::vector<RVector> t;
        t.reserve(inputs.size());
        for (const auto &v : inputs)
            t.push_back(p(v).recon);
        return t;
    }

    inline SurrogateFit train_surrogate(const ToyPipeline &pipeline, const std::vector<RVector> &dataset, const SurrogateTrainOptions &opts,
                                        const Surrogate *init = nullptr)
    {
        detail::require(!dataset.empty(), "train_surrogate: empty dataset");
        detail::require(opts.batch >= 1, "train_surrogate: batch must be >= 1");
        const std::vector<RVector> targets = pipeline_targets(pipeline, dataset);
        SeededRng rng(opts.seed);
        SurrogateFit fit;
        fit.surrogate = init ? *init : Surrogate::random(pipeline.dim, opts.width_factor * pipeline.dim, rng.split(0).next_u64());
        fit.initial_loss = surrogate_loss(fit.surrogate, dataset, targets);

        std::vector<std::size_t> order(dataset.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t per_epoch = (dataset.size() + opts.batch - 1) / opts.batch;
        const std::size_t total = per_epoch * opts.epochs;
        detail::Adam adam;
        SeededRng order_rng = rng.split(1);
        std::size_t step = 0;
        const auto params = fit.surrogate.tensors();
        for (std::size_t e = 0; e < opts.epochs; ++e)
        {
            if (opts.shuffle)
                shuffle(order, order_rng);
            for (std::size_t start = 0; start < order.size(); start += opts.batch)
            {
                const std::size_t end = std::min(order.size(), start + opts.batch);
                auto grads = detail::zeros_like(params);
                const double scale = 2.0 / (static_cast<double>(end - start) * static_cast<double>(pipeline.dim));
                for (std::size_t b = start; b < end; ++b)
                {
                    const auto cache = fit.surrogate.forward_cache(dataset[order[b]]);
                    fit.surrogate.backward(cache, scale * (cache.out - targets[order[b]]), &grads);
                }
                adam.step(params, grads, poly_lr(opts.lr0, opts.power, step++, total));
            }
            fit.history.push_back(surrogate_loss(fit.surrogate, dataset, targets));
        }
        fit.final_loss = fit.history.empty() ? fit.initial_loss : fit.history.back();
        return fit;
    }

    struct LossWeights
    {
        double pcen = 0.1;
        double task = 0.5;
        double pre = 0.1;
    };

    inline double composite_loss(double l_pcen, double l_task, double l_pre, const LossWeights &w = {})
    {
        detail::require(l_pcen >= 0.0 && l_task >= 0.0 && l_pre >= 0.0, "composite_loss: loss terms must be non-negative");
        return w.pcen * l_pcen + w.task * l_task + w.pre * l_pre;
    }

    /// Linear preprocessor p = A v + b.
    struct Preprocessor
    {
        RMatrix a;
        RMatrix b;

        RVector operator()(const RVector &v) const { return a * v + b.col(0); }
        std::vector<RMatrix *> tensors() { return {&a, &b}; }
    };

    struct EndToEndOptions
    {
        std::vector<double> task_weights; // per coordinate; empty = uniform
        LossWeights lambdas{};
        std::size_t epochs = 100;
        std::size_t batch = 16;
        double lr0 = 5e-3;
        double power = 0.9;
        double init_perturbation = 0.3; // A = I + N(0, s^2 / d), b = N(0, s^2 / d)
        std::uint64_t seed = 1;
    };

    struct CompositeTerms
    {
        double pcen = 0.0;
        double task = 0.0;
        double pre = 0.0;
        double total = 0.0;
        std::vector<double> per_coord_mse;
    };

    /// Composite loss through the real pipeline. Task term: weighted MSE over
    /// coordinates; pre term: plain reconstruction MSE; pcen term: the
    /// pipeline's symbol MSE.
    inline CompositeTerms evaluate_composite(const Preprocessor &prep, const ToyPipeline &pipeline, const std::vector<RVector> &data,
                                             const EndToEndOptions &opts)
    {
        detail::require(!data.empty(), "evaluate_composite: empty dataset");
        const std::size_t d = pipeline.dim;
        std::vector<double> w = opts.task_weights.empty() ? std::vector<double>(d, 1.0) : opts.task_weights;
        detail::require<DimensionError>(w.size() == d, "evaluate_composite: task weight length mismatch");
        const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
        CompositeTerms out;
        out.per_coord_mse.assign(d, 0.0);
        for (const auto &v : data)
        {
            const PipelineOutput r = pipeline(prep(v));
            const RVector e = r.recon - v;
            double task = 0.0;
            for (std::size_t i = 0; i < d; ++i)
            {
                const double e2 = e(static_cast<Index>(i)) * e(static_cast<Index>(i));
                task += w[i] * e2;
                out.per_coord_mse[i] += e2;
            }
            out.task += task / wsum;
            out.pre += e.squaredNorm() / static_cast<double>(d);
            out.pcen += r.symbol_mse;
        }
        const double n = static_cast<double>(data.size());
        out.task /= n;
        out.pre /= n;
        out.pcen /= n;
        for (auto &m : out.per_coord_mse)
            m /= n;
        out.total = composite_loss(out.pcen, out.task, out.pre, opts.lambdas);
        return out;
    }

    struct EndToEndResult
    {
        Preprocessor prep;
        CompositeTerms initial;
        CompositeTerms final_terms;
        std::vector<double> history; // real-pipeline composite loss per epoch
    };

    inline Preprocessor initial_preprocessor(std::size_t d, const EndToEndOptions &opts)
    {
        SeededRng rng(opts.seed);
        const double s = opts.init_perturbation / std::sqrt(static_cast<double>(d));
        Preprocessor p{RMatrix::Identity(static_cast<Index>(d), static_cast<Index>(d)), RMatrix::Zero(static_cast<Index>(d), 1)};
        for (Index i = 0; i < p.a.size(); ++i)
            p.a.data()[i] += s * rng.gaussian();
        for (Index i = 0; i < p.b.size(); ++i)
            p.b.data()[i] = s * rng.gaussian();
        return p;
    }

    /// Trains the preprocessor with the loss evaluated through the real
    /// pipeline and gradients taken through the frozen surrogate. The pipeline
    /// has a fixed rate, so there is no rate gradient term.
    inline EndToEndResult toy_end_to_end_train(const ToyPipeline &pipeline, const Surrogate &surrogate, const std::vector<RVector> &data,
                                               const EndToEndOptions &opts)
    {
        detail::require(!data.empty(), "toy_end_to_end_train: empty dataset");
        detail::require<DimensionError>(surrogate.in_dim() == pipeline.dim && surrogate.out_dim() == pipeline.dim,
                                        "toy_end_to_end_train: surrogate dimension mismatch");
        const std::size_t d = pipeline.dim;
        std::vector<double> w = opts.task_weights.empty() ? std::vector<double>(d, 1.0) : opts.task_weights;
        detail::require<DimensionError>(w.size() == d, "toy_end_to_end_train: task weight length mismatch");
        const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
        RVector g_task_w(static_cast<Index>(d));
        for (std::size_t i = 0; i < d; ++i)
            g_task_w(static_cast<Index>(i)) = 2.0 * opts.lambdas.task * w[i] / wsum + 2.0 * opts.lambdas.pre / static_cast<double>(d);

        EndToEndResult res;
        res.prep = initial_preprocessor(d, opts);
        res.initial = evaluate_composite(res.prep, pipeline, data, opts);
        detail::Adam adam;
        SeededRng order_rng = SeededRng(opts.seed).split(7);
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t total = opts.epochs * ((data.size() + opts.batch - 1) / opts.batch);
        std::size_t step = 0;
        const auto params = res.prep.tensors();
        for (std::size_t e = 0; e < opts.epochs; ++e)
        {
            shuffle(order, order_rng);
            for (std::size_t start = 0; start < order.size(); start += opts.batch)
            {
                const std::size_t end = std::min(order.size(), start + opts.batch);
                auto grads = detail::zeros_like(params);
                for (std::size_t b = start; b < end; ++b)
                {
                    const RVector &v = data[order[b]];
                    const RVector p = res.prep(v);
                    const RVector r = pipeline(p).recon;                 // forward: real pipeline
                    const RVector g_r = g_task_w.cwiseProduct(r - v);    // dL/dr
                    const RVector g_p = surrogate.input_gradient(p, g_r); // backward: surrogate
                    grads[0] += g_p * v.transpose();
                    grads[1] += g_p;
                }
                for (auto &g : grads)
                    g /= static_cast<double>(end - start);
                adam.step(params, grads, poly_lr(opts.lr0, opts.power, step++, total));
            }
            res.history.push_back(evaluate_composite(res.prep, pipeline, data, opts).total);
        }
        res.final_terms = evaluate_composite(res.prep, pipeline, data, opts);
        return res;
    }

    // ---- JSON ----

    inline nlohmann::json rmatrix_to_json(const RMatrix &m)
    {
        std::vector<double> v;
        v.reserve(static_cast<std::size_t>(m.size()));
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j)
                v.push_back(m(i, j));
        return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", v}};
    }

    inline RMatrix rmatrix_from_json(const nlohmann::json &j)
    {
        const Index r = j.at("rows").get<Index>(), c = j.at("cols").get<Index>();
        const auto v = j.at("data").get<std::vector<double>>();
        detail::require<DimensionError>(r >= 0 && c >= 0 && v.size() == static_cast<std::size_t>(r * c), "matrix JSON: size mismatch");
        RMatrix m(r, c);
        for (Index i = 0; i < r; ++i)
            for (Index k = 0; k < c; ++k)
                m(i, k) = v[static_cast<std::size_t>(i * c + k)];
        return m;
    }

    inline nlohmann::json surrogate_to_json(const Surrogate &s)
    {
        nlohmann::json j;
        j["activation"] = s.act == Activation::tanh ? "tanh" : "linear";
        const char *names[] = {"w1", "b1", "w2", "b2", "w3", "b3"};
        const auto ts = s.tensors();
        for (std::size_t i = 0; i < ts.size(); ++i)
            j[names[i]] = rmatrix_to_json(*ts[i]);
        return j;
    }

    inline Surrogate surrogate_from_json(const nlohmann::json &j)
    {
        try
        {
            Surrogate s;
            const auto act = j.at("activation").get<std::string>();
            detail::require(act == "tanh" || act == "linear", "surrogate JSON: unknown activation");
            s.act = act == "tanh" ? Activation::tanh : Activation::linear;
            const char *names[] = {"w1", "b1", "w2", "b2", "w3", "b3"};
            auto ts = s.tensors();
            for (std::size_t i = 0; i < ts.size(); ++i)
                *ts[i] = rmatrix_from_json(j.at(names[i]));
            detail::require<DimensionError>(s.w2.cols() == s.w1.rows() && s.w3.cols() == s.w2.rows() && s.b1.rows() == s.w1.rows() &&
                                                s.b2.rows() == s.w2.rows() && s.b3.rows() == s.w3.rows(),
                                            "surrogate JSON: inconsistent layer shapes");
            return s;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw InvalidInput(std::string("surrogate JSON: ") + e.what());
        }
    }

    inline nlohmann::json preprocessor_to_json(const Preprocessor &p) { return {{"a", rmatrix_to_json(p.a)}, {"b", rmatrix_to_json(p.b)}}; }

    inline Preprocessor preprocessor_from_json(const nlohmann::json &j)
    {
        try
        {
            return {rmatrix_from_json(j.at("a")), rmatrix_from_json(j.at("b"))};
        }
        catch (const nlohmann::json::exception &e)
        {
            throw InvalidInput(std::string("preprocessor JSON: ") + e.what());
        }
    }
} // namespace mimolab

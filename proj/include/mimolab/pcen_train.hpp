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
#include <span>
#include <vector>

#include "channel.hpp"
#include "config.hpp"
#include "pcen.hpp"
#include "precoder.hpp"

namespace mimolab
{
    struct TrainOptions
    {
        int t_iters = 8;
        double gamma0 = 1.0;
        double alpha0 = 0.95;
        int block_len = 64; // channel uses per training block
        int max_rounds = 50;
        double rel_tol = 1e-4; // stop after `patience` rounds below this relative improvement
        int patience = 3;
        int golden_evals = 8; // per coordinate per round
        double initial_radius = 0.5;
        double radius_decay = 0.7;
        int spsa_steps = 4;
        double spsa_scale = 0.05;
        bool straight_through = false; // gradient mode with Pi_M treated as identity
        double st_step = 0.2;
        double gamma_max = 4.0;
        std::uint64_t seed = 1;
    };

    struct TrainResult
    {
        PcenParams params;              // best (gamma, alpha); u2 is the combiner of ensemble member 0
        std::vector<CMatrix> combiners; // per-realization U2 at the best point
        double initial_loss = 0.0;
        double final_loss = 0.0;
        double baseline_loss = 0.0;   // PEN bypassed (z = x_p) with the Wiener combiner
        std::vector<double> history;  // best loss after each outer round
        int rounds = 0;
        bool converged = false;
    };

    /// Training blocks for one realization: uniform random symbols through the
    /// standard precoder designed on the channel estimate.
    inline CMatrix training_block(const ChannelRealization &ch, const LinkConfig &cfg, const Constellation &c, double noise_var,
                                  int block_len, SeededRng &rng)
    {
        LinkConfig local = cfg;
        local.k = block_len;
        const PrecoderSpec spec = build_precoder(ch.estimate(), local, noise_var);
        std::vector<cplx> xe(static_cast<std::size_t>(cfg.n_s) * static_cast<std::size_t>(block_len));
        for (auto &s : xe)
            s = c.points[static_cast<std::size_t>(rng.below(c.size()))];
        return standard_precode(xe, spec, local);
    }

    namespace detail
    {
        struct PcenProblem
        {
            std::vector<CMatrix> x;
            std::vector<CMatrix> h;
            double noise_var = 0.0;
            const Constellation *c = nullptr;

            double member_loss(std::size_t i, const PcenParams &p) const
            {
                return expected_loss(x[i], pen_forward(x[i], h[i], p, *c), p.u2, h[i], noise_var);
            }

            double mean_loss(const PcenParams &theta, const std::vector<CMatrix> &u2) const
            {
                PcenParams p = theta;
                double acc = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i)
                {
                    p.u2 = u2[i];
                    acc += member_loss(i, p);
                }
                return acc / static_cast<double>(x.size());
            }
        };

        // Flattened view: coordinates 0..T-1 are gamma, T..2T-1 are alpha.
        inline double &coord(PcenParams &p, std::size_t j)
        {
            const auto t = static_cast<std::size_t>(p.t_iters);
            return j < t ? p.gamma[j] : p.alpha[j - t];
        }

        inline void clamp_coords(PcenParams &p, double gamma_max)
        {
            for (auto &g : p.gamma)
                g = std::clamp(g, 1e-3, gamma_max);
            for (auto &a : p.alpha)
                a = std::clamp(a, 0.0, 1.0);
        }

        // Loss and straight-through gradient with respect to (gamma, alpha) for
        // one block and fixed U2, by forward-mode differentiation of the unrolled loop.
        inline double ste_gradient(const CMatrix &x, const CMatrix &h, const PcenParams &p, double noise_var, const Constellation &c,
                                   std::vector<double> &grad)
        {
            const std::size_t t_n = static_cast<std::size_t>(p.t_iters);
            const std::size_t np = 2 * t_n;
            const CMatrix a = p.u2 * h;
            const CMatrix w = compute_w(p.u2, h);
            const CMatrix wa = w * a;
            CMatrix zd = CMatrix::Zero(x.rows(), x.cols());
            CMatrix z = zd;
            std::vector<CMatrix> dzd(np, zd), dz(np, zd);
            for (std::size_t t = 0; t < t_n; ++t)
            {
                const CMatrix res = x - a * zd;
                const CMatrix step = w * res;
                const CMatrix r = zd + p.gamma[t] * step;
                const CMatrix z_new = project(r, c);
                for (std::size_t j = 0; j < np; ++j)
                {
                    CMatrix dr = dzd[j] - p.gamma[t] * (wa * dzd[j]);
                    if (j == t)
                        dr += step;
                    dz[j] = dr;
                    CMatrix next = p.alpha[t] * dzd[j] + (1.0 - p.alpha[t]) * dr;
                    if (j == t_n + t)
                        next += zd - z_new;
                    dzd[j] = std::move(next);
                }
                zd = p.alpha[t] * zd + (1.0 - p.alpha[t]) * z_new;
                z = z_new;
            }
            const CMatrix err = x - a * z;
            const double scale = 1.0 / static_cast<double>(x.size());
            grad.assign(np, 0.0);
            for (std::size_t j = 0; j < np; ++j)
                grad[j] = -2.0 * scale * (err.adjoint() * (a * dz[j])).trace().real();
            return (err.squaredNorm() + static_cast<double>(x.cols()) * noise_var * p.u2.squaredNorm()) * scale;
        }
    } // namespace detail

    /// Alternating optimization of the combiners and the shared unrolled
    /// parameters over a channel ensemble.
    ///
    /// Each round first refreshes every member's U2 with the Wiener solution for
    /// its current PEN output (kept only when the member loss drops), then
    /// improves (gamma, alpha) with U2 fixed. The default update is
    /// derivative-free: a golden-section line search per coordinate inside a
    /// shrinking radius, then a few simultaneous-perturbation steps. Every
    /// candidate is accepted only if it lowers the mean loss, so the recorded
    /// loss never increases.
    inline TrainResult train_pcen(std::span<const ChannelRealization> ensemble, const LinkConfig &cfg, const Constellation &c,
                                  const TrainOptions &opts)
    {
        detail::require(!ensemble.empty(), "train_pcen: empty channel ensemble");
        detail::require(opts.t_iters >= 1 && opts.block_len >= 1 && opts.max_rounds >= 0, "train_pcen: invalid options");
        const double noise_var = snr_to_noise_var(cfg.snr_db, cfg.p_z);

        detail::PcenProblem prob;
        prob.noise_var = noise_var;
        prob.c = &c;
        SeededRng master(opts.seed);
        for (std::size_t i = 0; i < ensemble.size(); ++i)
        {
            SeededRng rng = master.split(i);
            prob.x.push_back(training_block(ensemble[i], cfg, c, noise_var, opts.block_len, rng));
            prob.h.push_back(ensemble[i].estimate());
        }

        PcenParams theta = PcenParams::defaults(opts.t_iters, CMatrix(), opts.gamma0, opts.alpha0);
        std::vector<CMatrix> u2(prob.x.size());
        TrainResult out;
        for (std::size_t i = 0; i < prob.x.size(); ++i)
        {
            u2[i] = optimal_u2(prob.x[i], prob.x[i], prob.h[i], noise_var);
            out.baseline_loss += expected_loss(prob.x[i], prob.x[i], u2[i], prob.h[i], noise_var);
        }
        out.baseline_loss /= static_cast<double>(prob.x.size());

        double current = prob.mean_loss(theta, u2);
        out.initial_loss = current;
        out.history.push_back(current);

        const std::size_t np = 2 * static_cast<std::size_t>(opts.t_iters);
        double radius = opts.initial_radius;
        int quiet_rounds = 0;
        SeededRng spsa_rng = master.split(0xfeedULL);
        constexpr double inv_phi = 0.6180339887498949;

        for (int round = 1; round <= opts.max_rounds; ++round)
        {
            const double start = current;

            // (a) combiner refresh
            {
                PcenParams p = theta;
                for (std::size_t i = 0; i < prob.x.size(); ++i)
                {
                    p.u2 = u2[i];
                    const double before = prob.member_loss(i, p);
                    PcenParams cand = p;
                    try
                    {
                        cand.u2 = optimal_u2(pen_forward(prob.x[i], prob.h[i], p, c), prob.x[i], prob.h[i], noise_var);
                        if (prob.member_loss(i, cand) < before)
                            u2[i] = cand.u2;
                    }
                    catch (const SingularityError &)
                    {
                    }
                }
                current = prob.mean_loss(theta, u2);
            }

            // (b) unrolled-parameter update
            auto eval = [&](const PcenParams &p) { return prob.mean_loss(p, u2); };
            if (opts.straight_through)
            {
                std::vector<double> g(np, 0.0), gi;
                PcenParams p = theta;
                for (std::size_t i = 0; i < prob.x.size(); ++i)
                {
                    p.u2 = u2[i];
                    detail::ste_gradient(prob.x[i], prob.h[i], p, noise_var, c, gi);
                    for (std::size_t j = 0; j < np; ++j)
                        g[j] += gi[j] / static_cast<double>(prob.x.size());
                }
                double step = opts.st_step;
                for (int bt = 0; bt < 12; ++bt, step *= 0.5)
                {
                    PcenParams cand = theta;
                    for (std::size_t j = 0; j < np; ++j)
                        detail::coord(cand, j) -= step * g[j];
                    detail::clamp_coords(cand, opts.gamma_max);
                    const double l = eval(cand);
                    if (l < current)
                    {
                        theta = cand;
                        current = l;
                        break;
                    }
                }
            }
            else
            {
                for (std::size_t j = 0; j < np; ++j)
                {
                    const bool is_alpha = j >= static_cast<std::size_t>(opts.t_iters);
                    const double v0 = detail::coord(theta, j);
                    double lo = std::max(is_alpha ? 0.0 : 1e-3, v0 - radius);
                    double hi = std::min(is_alpha ? 1.0 : opts.gamma_max, v0 + radius);
                    auto at = [&](double v)
                    {
                        PcenParams p = theta;
                        detail::coord(p, j) = v;
                        return eval(p);
                    };
                    double best_v = v0, best_l = current;
                    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
                    double f1 = at(x1), f2 = at(x2);
                    for (int e = 2; e < opts.golden_evals; ++e)
                    {
                        if (f1 < best_l)
                            best_l = f1, best_v = x1;
                        if (f2 < best_l)
                            best_l = f2, best_v = x2;
                        if (f1 <= f2)
                        {
                            hi = x2;
                            x2 = x1;
                            f2 = f1;
                            x1 = hi - inv_phi * (hi - lo);
                            f1 = at(x1);
                        }
                        else
                        {
                            lo = x1;
                            x1 = x2;
                            f1 = f2;
                            x2 = lo + inv_phi * (hi - lo);
                            f2 = at(x2);
                        }
                    }
                    if (f1 < best_l)
                        best_l = f1, best_v = x1;
                    if (f2 < best_l)
                        best_l = f2, best_v = x2;
                    if (best_l < current)
                    {
                        detail::coord(theta, j) = best_v;
                        current = best_l;
                    }
                }
                for (int s = 0; s < opts.spsa_steps; ++s)
                {
                    std::vector<double> delta(np);
                    for (auto &d : delta)
                        d = spsa_rng.below(2) ? 1.0 : -1.0;
                    PcenParams plus = theta, minus = theta;
                    const double ck = opts.spsa_scale * radius / opts.initial_radius;
                    for (std::size_t j = 0; j < np; ++j)
                    {
                        detail::coord(plus, j) += ck * delta[j];
                        detail::coord(minus, j) -= ck * delta[j];
                    }
                    detail::clamp_coords(plus, opts.gamma_max);
                    detail::clamp_coords(minus, opts.gamma_max);
                    const double fp = eval(plus), fm = eval(minus);
                    PcenParams cand = fp < fm ? plus : minus;
                    const double fc = std::min(fp, fm);
                    if (fc < current)
                    {
                        theta = cand;
                        current = fc;
                    }
                }
            }
            radius *= opts.radius_decay;

            out.history.push_back(current);
            out.rounds = round;
            const double rel = start > 0.0 ? (start - current) / start : 0.0;
            quiet_rounds = rel < opts.rel_tol ? quiet_rounds + 1 : 0;
            if (current == 0.0 || quiet_rounds >= opts.patience)
            {
                out.converged = true;
                break;
            }
        }

        out.final_loss = current;
        out.params = theta;
        out.params.u2 = u2.front();
        out.combiners = std::move(u2);
        return out;
    }
} // namespace mimolab

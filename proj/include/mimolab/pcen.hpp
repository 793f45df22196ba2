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
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "channel.hpp"
#include "modem.hpp"
#include "numerics.hpp"

namespace mimolab
{
    /// Unrolled precoder-enhancement parameters (gamma^t, alpha^t) plus the
    /// linear receive combiner U2 (n_t x n_r).
    struct PcenParams
    {
        int t_iters = 8;
        std::vector<double> gamma;
        std::vector<double> alpha;
        CMatrix u2;

        static PcenParams defaults(int t_iters, CMatrix u2, double gamma0 = 1.0, double alpha0 = 0.95)
        {
            PcenParams p;
            p.t_iters = t_iters;
            p.gamma.assign(static_cast<std::size_t>(t_iters), gamma0);
            p.alpha.assign(static_cast<std::size_t>(t_iters), alpha0);
            p.u2 = std::move(u2);
            return p;
        }

        void validate() const
        {
            detail::require(t_iters >= 1, "PcenParams: t_iters must be >= 1");
            detail::require(gamma.size() == static_cast<std::size_t>(t_iters) && alpha.size() == static_cast<std::size_t>(t_iters),
                            "PcenParams: gamma/alpha length must equal t_iters");
            for (double g : gamma)
                detail::require(g > 0.0 && std::isfinite(g), "PcenParams: gamma entries must be > 0");
            for (double a : alpha)
                detail::require(a >= 0.0 && a <= 1.0, "PcenParams: alpha entries must lie in [0, 1]");
            detail::require(all_finite(u2), "PcenParams: u2 must be finite");
        }
    };

    /// W = [diag((U2 H)^H (U2 H))]^-1 (U2 H)^H
    inline CMatrix compute_w(const CMatrix &u2, const CMatrix &h)
    {
        detail::require<DimensionError>(u2.cols() == h.rows(), "compute_w: u2 columns must equal h rows");
        const CMatrix a = u2 * h;
        CMatrix w = a.adjoint();
        for (Index i = 0; i < a.cols(); ++i)
        {
            const double e = a.col(i).squaredNorm();
            if (!(e > 1e-300))
                throw SingularityError("compute_w: zero column energy in U2 H");
            w.row(i) /= e;
        }
        return w;
    }

    /// Unrolled damped iteration (T rounds, z_d starts at 0):
    ///   r   = z_d + gamma^t W (x_p - U2 H z_d)
    ///   z   = Pi_M(r)
    ///   z_d = alpha^t z_d + (1 - alpha^t) z
    /// Returns the last hard-projected iterate, so every entry lies in the alphabet.
    inline CMatrix pen_forward(const CMatrix &x_p, const CMatrix &h, const PcenParams &params, const Constellation &c)
    {
        params.validate();
        detail::require<DimensionError>(x_p.rows() == h.cols() && params.u2.rows() == x_p.rows(),
                                        "pen_forward: shape mismatch between x_p, h and u2");
        const CMatrix w = compute_w(params.u2, h);
        const CMatrix a = params.u2 * h;
        CMatrix zd = CMatrix::Zero(x_p.rows(), x_p.cols());
        CMatrix z = zd;
        for (int t = 0; t < params.t_iters; ++t)
        {
            const auto ti = static_cast<std::size_t>(t);
            const CMatrix r = zd + params.gamma[ti] * (w * (x_p - a * zd));
            z = project(r, c);
            zd = params.alpha[ti] * zd + (1.0 - params.alpha[ti]) * z;
        }
        return z;
    }

    /// Q_eta(y) = U2 y
    inline CMatrix cen_forward(const CMatrix &y, const PcenParams &params)
    {
        detail::require<DimensionError>(y.rows() == params.u2.cols(), "cen_forward: y rows must equal u2 columns");
        return params.u2 * y;
    }

    /// Empirical Wiener combiner U2 = R_{x,Hz} (R_{Hz,Hz} + noise_var I)^-1
    /// with moments averaged over every channel use of every sample.
    inline CMatrix optimal_u2(std::span<const CMatrix> z_samples, std::span<const CMatrix> x_p_samples, const CMatrix &h,
                              double noise_var)
    {
        detail::require(!z_samples.empty() && z_samples.size() == x_p_samples.size(), "optimal_u2: need nonempty paired samples");
        detail::require(noise_var >= 0.0, "optimal_u2: negative noise variance");
        const Index nr = h.rows();
        const Index nt = x_p_samples[0].rows();
        CMatrix rxy = CMatrix::Zero(nt, nr);
        CMatrix ryy = CMatrix::Zero(nr, nr);
        double uses = 0.0;
        for (std::size_t i = 0; i < z_samples.size(); ++i)
        {
            detail::require<DimensionError>(z_samples[i].rows() == h.cols() && x_p_samples[i].rows() == nt &&
                                                z_samples[i].cols() == x_p_samples[i].cols(),
                                            "optimal_u2: sample shape mismatch");
            const CMatrix hz = h * z_samples[i];
            rxy += x_p_samples[i] * hz.adjoint();
            ryy += hz * hz.adjoint();
            uses += static_cast<double>(hz.cols());
        }
        rxy /= uses;
        ryy /= uses;
        ryy.diagonal().array() += noise_var;
        // U2 R = Rxy  <=>  R^H U2^H = Rxy^H ; R is Hermitian
        Eigen::FullPivLU<CMatrix> lu(ryy);
        if (!lu.isInvertible())
            throw SingularityError("optimal_u2: regularized covariance is singular");
        return lu.solve(rxy.adjoint()).adjoint();
    }

    inline CMatrix optimal_u2(const CMatrix &z, const CMatrix &x_p, const CMatrix &h, double noise_var)
    {
        return optimal_u2(std::span<const CMatrix>(&z, 1), std::span<const CMatrix>(&x_p, 1), h, noise_var);
    }

    /// Noise-averaged loss for one block in closed form:
    ///   (||X - U2 H Z||_F^2 + k noise_var ||U2||_F^2) / (n_t k)
    inline double expected_loss(const CMatrix &x_p, const CMatrix &z, const CMatrix &u2, const CMatrix &h, double noise_var)
    {
        const double k = static_cast<double>(x_p.cols());
        const double fit = (x_p - u2 * (h * z)).squaredNorm();
        return (fit + k * noise_var * u2.squaredNorm()) / (static_cast<double>(x_p.rows()) * k);
    }

    struct PcenBatch
    {
        std::vector<CMatrix> x_p_samples; // n_t x k each
        ChannelRealization channel;
        double noise_var = 0.0;
    };

    enum class PenMode
    {
        unrolled,
        bypass // z = x_p
    };

    /// Monte-Carlo loss: mean over samples and noise draws of
    /// ||x_p - U2 (H z + n)||_F^2 / (n_t k). The PEN designs with the channel
    /// estimate; propagation uses the true channel.
    inline double pcen_loss(const PcenBatch &batch, const PcenParams &params, const Constellation &c, SeededRng &rng,
                            PenMode mode = PenMode::unrolled, int noise_draws = 1)
    {
        detail::require(!batch.x_p_samples.empty(), "pcen_loss: empty batch");
        detail::require(batch.noise_var >= 0.0, "pcen_loss: negative noise variance");
        detail::require(noise_draws >= 1, "pcen_loss: noise_draws must be >= 1");
        double acc = 0.0;
        std::size_t count = 0;
        for (const CMatrix &x : batch.x_p_samples)
        {
            const CMatrix z = mode == PenMode::unrolled ? pen_forward(x, batch.channel.estimate(), params, c) : x;
            for (int d = 0; d < noise_draws; ++d)
            {
                const CMatrix y = apply(batch.channel, z, NoiseSpec{batch.noise_var}, rng);
                acc += (x - cen_forward(y, params)).squaredNorm() / static_cast<double>(x.size());
                ++count;
            }
        }
        return acc / static_cast<double>(count);
    }

    /// Per-realization combiner for fixed (gamma, alpha): starts from the Wiener
    /// combiner of the unmodified precoder output, then alternates PEN and Wiener
    /// updates, keeping a step only if the closed-form loss drops.
    struct CombinerFit
    {
        CMatrix u2;
        double loss = 0.0;
    };

    inline CombinerFit fit_combiner(const CMatrix &x_p, const CMatrix &h, const PcenParams &theta, double noise_var,
                                    const Constellation &c, int rounds)
    {
        PcenParams p = theta;
        p.u2 = optimal_u2(x_p, x_p, h, noise_var);
        CombinerFit best{p.u2, expected_loss(x_p, pen_forward(x_p, h, p, c), p.u2, h, noise_var)};
        for (int r = 0; r < rounds; ++r)
        {
            const CMatrix z = pen_forward(x_p, h, p, c);
            PcenParams cand = p;
            try
            {
                cand.u2 = optimal_u2(z, x_p, h, noise_var);
                const double l = expected_loss(x_p, pen_forward(x_p, h, cand, c), cand.u2, h, noise_var);
                if (!(l < best.loss))
                    break;
                best = {cand.u2, l};
                p = std::move(cand);
            }
            catch (const SingularityError &)
            {
                break;
            }
        }
        return best;
    }

    // ---------------------------------------------------------------------
    // JSON: {"t_iters", "gamma": [], "alpha": [], "u2": {"rows", "cols", "re": [], "im": []}}
    // ---------------------------------------------------------------------

    inline nlohmann::json matrix_to_json(const CMatrix &m)
    {
        std::vector<double> re, im;
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j)
            {
                re.push_back(m(i, j).real());
                im.push_back(m(i, j).imag());
            }
        return {{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
    }

    inline CMatrix matrix_from_json(const nlohmann::json &j)
    {
        const auto rows = j.at("rows").get<Index>();
        const auto cols = j.at("cols").get<Index>();
        const auto re = j.at("re").get<std::vector<double>>();
        const auto im = j.at("im").get<std::vector<double>>();
        detail::require<DimensionError>(rows >= 0 && cols >= 0 && re.size() == static_cast<std::size_t>(rows * cols) && im.size() == re.size(),
                                        "matrix json: size mismatch");
        CMatrix m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index jj = 0; jj < cols; ++jj)
                m(i, jj) = cplx{re[static_cast<std::size_t>(i * cols + jj)], im[static_cast<std::size_t>(i * cols + jj)]};
        return m;
    }

    inline nlohmann::json pcen_to_json(const PcenParams &p)
    {
        return {{"t_iters", p.t_iters}, {"gamma", p.gamma}, {"alpha", p.alpha}, {"u2", matrix_to_json(p.u2)}};
    }

    inline PcenParams pcen_from_json(const nlohmann::json &j)
    {
        PcenParams p;
        try
        {
            p.t_iters = j.at("t_iters").get<int>();
            p.gamma = j.at("gamma").get<std::vector<double>>();
            p.alpha = j.at("alpha").get<std::vector<double>>();
            p.u2 = matrix_from_json(j.at("u2"));
        }
        catch (const nlohmann::json::exception &e)
        {
            throw InvalidInput(std::string("pcen params: ") + e.what());
        }
        p.validate();
        return p;
    }

    inline PcenParams load_pcen(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw InvalidInput("cannot open PCEN params " + path);
        nlohmann::json j;
        try
        {
            in >> j;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw InvalidInput(std::string("pcen params parse error: ") + e.what());
        }
        return pcen_from_json(j);
    }
} // namespace mimolab

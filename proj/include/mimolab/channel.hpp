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

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "numerics.hpp"

namespace mimolab
{
    /// One block-fading realization: the true channel and, under imperfect
    /// CSI, the estimate available to the transceiver.
    struct ChannelRealization
    {
        CMatrix h; // n_r x n_t
        std::optional<CMatrix> h_est;

        const CMatrix &estimate() const { return h_est ? *h_est : h; }
    };

    /// Total noise variance per complex entry (each real dimension carries half).
    struct NoiseSpec
    {
        double variance = 0.0;
    };

    inline ChannelRealization sample_rayleigh(const LinkConfig &cfg, SeededRng &rng)
    {
        detail::require(cfg.n_r >= 1 && cfg.n_t >= 1, "sample_rayleigh: antenna counts must be >= 1");
        return {sample_cgauss(rng, cfg.n_r, cfg.n_t, 1.0), std::nullopt};
    }

    /// y = H z + n with n ~ CN(0, noise.variance) i.i.d.
    inline CMatrix apply(const ChannelRealization &ch, const CMatrix &z, const NoiseSpec &noise, SeededRng &rng)
    {
        detail::require<DimensionError>(z.rows() == ch.h.cols(), "channel apply: z rows must equal n_t");
        detail::require(noise.variance >= 0.0, "channel apply: negative noise variance");
        CMatrix y = ch.h * z;
        if (noise.variance > 0.0)
            y += sample_cgauss(rng, y.rows(), y.cols(), noise.variance);
        return y;
    }

    inline ChannelRealization perturb_csi(const ChannelRealization &ch, double err_variance, SeededRng &rng)
    {
        detail::require(err_variance >= 0.0, "perturb_csi: negative error variance");
        ChannelRealization out{ch.h, std::nullopt};
        out.h_est = ch.h + sample_cgauss(rng, ch.h.rows(), ch.h.cols(), err_variance);
        return out;
    }

    /// Transmit-side SNR convention: snr = p_z / sigma^2.
    inline double snr_to_noise_var(double snr_db, double p_z)
    {
        detail::require(p_z > 0.0, "snr_to_noise_var: p_z must be positive");
        return p_z / std::pow(10.0, snr_db / 10.0);
    }

    // ---------------------------------------------------------------------
    // CSI ensemble file
    //
    //   offset 0   "CSI1"
    //   offset 4   u32 n_r, u32 n_t, u32 count   (little endian)
    //   offset 16  count records of n_r*n_t (re, im) f64 pairs, row-major
    // ---------------------------------------------------------------------

    struct CsiEnsemble
    {
        std::uint32_t n_r = 0;
        std::uint32_t n_t = 0;
        std::vector<CMatrix> matrices;

        /// Replays matrices in file order, wrapping around.
        const CMatrix &at_block(std::uint64_t block) const
        {
            detail::require(!matrices.empty(), "CSI ensemble is empty");
            return matrices[static_cast<std::size_t>(block % matrices.size())];
        }
    };

    namespace detail
    {
        inline void put_u32(std::ostream &out, std::uint32_t v)
        {
            const std::array<unsigned char, 4> b{static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                                 static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
            out.write(reinterpret_cast<const char *>(b.data()), 4);
        }

        inline std::uint32_t get_u32(const unsigned char *p)
        {
            return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                   (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
        }

        inline void put_f64(std::ostream &out, double v)
        {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            std::array<unsigned char, 8> b;
            for (int i = 0; i < 8; ++i)
                b[static_cast<std::size_t>(i)] = static_cast<unsigned char>(bits >> (8 * i));
            out.write(reinterpret_cast<const char *>(b.data()), 8);
        }

        inline double get_f64(const unsigned char *p)
        {
            std::uint64_t bits = 0;
            for (int i = 0; i < 8; ++i)
                bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
            double v;
            std::memcpy(&v, &bits, 8);
            return v;
        }
    } // namespace detail

    inline void write_csi_file(const std::string &path, const CsiEnsemble &ens)
    {
        for (const auto &m : ens.matrices)
            detail::require<DimensionError>(m.rows() == ens.n_r && m.cols() == ens.n_t, "CSI matrix shape mismatch");
        const std::string tmp = path + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out)
                throw InvalidInput("cannot write " + tmp);
            out.write("CSI1", 4);
            detail::put_u32(out, ens.n_r);
            detail::put_u32(out, ens.n_t);
            detail::put_u32(out, static_cast<std::uint32_t>(ens.matrices.size()));
            for (const auto &m : ens.matrices)
                for (Index i = 0; i < m.rows(); ++i)
                    for (Index j = 0; j < m.cols(); ++j)
                    {
                        detail::put_f64(out, m(i, j).real());
                        detail::put_f64(out, m(i, j).imag());
                    }
        }
        std::filesystem::rename(tmp, path);
    }

    inline CsiEnsemble read_csi_file(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw InvalidInput("cannot open CSI file " + path);
        std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        detail::require(buf.size() >= 16 && std::memcmp(buf.data(), "CSI1", 4) == 0, "CSI file: bad magic");
        CsiEnsemble ens;
        ens.n_r = detail::get_u32(buf.data() + 4);
        ens.n_t = detail::get_u32(buf.data() + 8);
        const std::uint32_t count = detail::get_u32(buf.data() + 12);
        const std::size_t per = static_cast<std::size_t>(ens.n_r) * ens.n_t * 16;
        detail::require(ens.n_r > 0 && ens.n_t > 0, "CSI file: zero dimension");
        detail::require(buf.size() == 16 + per * count, "CSI file: size does not match header");
        ens.matrices.reserve(count);
        const unsigned char *p = buf.data() + 16;
        for (std::uint32_t c = 0; c < count; ++c)
        {
            CMatrix m(ens.n_r, ens.n_t);
            for (Index i = 0; i < m.rows(); ++i)
                for (Index j = 0; j < m.cols(); ++j, p += 16)
                    m(i, j) = cplx{detail::get_f64(p), detail::get_f64(p + 8)};
            detail::require(all_finite(m), "CSI file: non-finite entry");
            ens.matrices.push_back(std::move(m));
        }
        return ens;
    }
} // namespace mimolab

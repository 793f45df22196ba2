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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <tuple>
#include <vector>

#include "channel.hpp"
#include "config.hpp"
#include "detection.hpp"
#include "image.hpp"
#include "ldpc.hpp"
#include "metrics.hpp"
#include "modem.hpp"
#include "pcen.hpp"
#include "pcen_train.hpp"
#include "precoder.hpp"
#include "report.hpp"

namespace mimolab
{
    inline Bits bytes_to_bits(std::span<const std::uint8_t> bytes)
    {
        Bits bits;
        bits.reserve(bytes.size() * 8);
        for (std::uint8_t b : bytes)
            for (int i = 7; i >= 0; --i)
                bits.push_back(static_cast<std::uint8_t>((b >> i) & 1u));
        return bits;
    }

    inline std::vector<std::uint8_t> bits_to_bytes(std::span<const std::uint8_t> bits)
    {
        std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
        for (std::size_t i = 0; i < bits.size(); ++i)
            if (bits[i])
                out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
        return out;
    }

    /// Raw bit payload, or an image whose pixel bytes are sent uncompressed.
    struct Payload
    {
        Bits bits;
        std::optional<Image> image;

        static Payload from_bits(Bits b) { return {std::move(b), std::nullopt}; }
        static Payload from_bytes(std::span<const std::uint8_t> bytes) { return {bytes_to_bits(bytes), std::nullopt}; }
        static Payload from_image(const Image &img) { return {bytes_to_bits(img.rgb), img}; }

        static Payload random(std::size_t n_bits, std::uint64_t seed)
        {
            SeededRng rng(seed);
            Bits b(n_bits);
            for (auto &x : b)
                x = static_cast<std::uint8_t>(rng.below(2));
            return from_bits(std::move(b));
        }

        /// Source symbols for the bandwidth ratio: pixel samples for images, bytes otherwise.
        std::uint64_t source_symbols() const { return image ? image->samples() : (bits.size() + 7) / 8; }
    };

    struct LinkRun
    {
        SimReport report;
        Bits received;
        std::optional<Image> image;
    };

    namespace detail
    {
        inline std::shared_ptr<const ChannelCode> cached_code(const LinkConfig &cfg)
        {
            static std::mutex mu;
            static std::map<std::tuple<int, int, std::uint64_t>, std::shared_ptr<const ChannelCode>> cache;
            const auto key = std::make_tuple(static_cast<int>(cfg.code_rate), cfg.ldpc_n, cfg.code_seed);
            std::lock_guard<std::mutex> lock(mu);
            auto it = cache.find(key);
            if (it != cache.end())
                return it->second;
            auto code = cfg.code_rate == CodeRate::passthrough
                            ? std::make_shared<const ChannelCode>(passthrough_code(static_cast<std::size_t>(cfg.ldpc_n)))
                            : std::make_shared<const ChannelCode>(
                                  LdpcCode::build_with_retry(cfg.code_rate, static_cast<std::size_t>(cfg.ldpc_n), cfg.code_seed));
            cache.emplace(key, code);
            return code;
        }

        template <typename F>
        auto in_stage(const char *name, F &&fn) -> decltype(fn())
        {
            try
            {
                return fn();
            }
            catch (const StageError &)
            {
                throw;
            }
            catch (const std::exception &e)
            {
                throw StageError(name, e.what());
            }
        }

        /// Runs fn(i) for i in [0, n) on up to `threads` workers, static chunks.
        template <typename F>
        void parallel_for(std::size_t n, int threads, F &&fn)
        {
            const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
            if (workers <= 1)
            {
                for (std::size_t i = 0; i < n; ++i)
                    fn(i);
                return;
            }
            std::vector<std::exception_ptr> errors(workers);
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back(
                    [&, w]
                    {
                        try
                        {
                            for (std::size_t i = w; i < n; i += workers)
                                fn(i);
                        }
                        catch (...)
                        {
                            errors[w] = std::current_exception();
                        }
                    });
            for (auto &t : pool)
                t.join();
            for (auto &e : errors)
                if (e)
                    std::rethrow_exception(e);
        }

        struct BlockOutput
        {
            std::vector<double> llr;     // n_s * k * bps
            std::vector<cplx> estimate;  // soft (linear) or decided (ml) symbols
            std::vector<std::size_t> hard;
        };

        struct LinkPlan
        {
            std::uint64_t info_bits = 0, pad_bits = 0, codewords = 0, coded_bits = 0, fill_bits = 0, blocks = 0;
        };

        inline LinkPlan plan_link(const LinkConfig &cfg, const ChannelCode &code, std::size_t payload_bits, int bps)
        {
            LinkPlan p;
            p.info_bits = payload_bits;
            p.codewords = (payload_bits + code.k_info() - 1) / code.k_info();
            p.pad_bits = p.codewords * code.k_info() - payload_bits;
            p.coded_bits = p.codewords * code.n();
            const std::uint64_t per_block = static_cast<std::uint64_t>(cfg.n_s) * static_cast<std::uint64_t>(cfg.k) *
                                            static_cast<std::uint64_t>(bps);
            p.blocks = (p.coded_bits + per_block - 1) / per_block;
            p.fill_bits = p.blocks * per_block - p.coded_bits;
            return p;
        }

        inline ChannelRealization block_channel(const LinkConfig &cfg, const CsiEnsemble *file, std::uint64_t b, SeededRng blk)
        {
            ChannelRealization ch;
            if (file)
                ch.h = file->at_block(b);
            else if (cfg.channel == ChannelModel::identity)
                ch.h = CMatrix::Identity(cfg.n_r, cfg.n_t);
            else
            {
                SeededRng r = blk.split(0);
                ch = sample_rayleigh(cfg, r);
            }
            if (cfg.csi.mode == CsiMode::noisy)
            {
                SeededRng r = blk.split(1);
                ch = perturb_csi(ch, cfg.csi.err_var, r);
            }
            return ch;
        }

        inline void append_llr(std::vector<double> &out, cplx sym, const Constellation &c, double nv)
        {
            const auto l = demodulate_llr(std::span<const cplx>(&sym, 1), c, nv);
            out.insert(out.end(), l.begin(), l.end());
        }
    } // namespace detail

    /// Full chain: encode, modulate, precode, optional PEN, channel, optional
    /// CEN, detect, demodulate, decode. Deterministic in (cfg, payload).
    inline LinkRun run_link(const LinkConfig &cfg, const Payload &payload)
    {
        cfg.validate();
        detail::require(!payload.bits.empty(), "run_link: empty payload");
        const Constellation c = make_constellation(cfg.modulation);
        const int bps = c.bits_per_symbol;
        const auto code = detail::in_stage("code", [&] { return detail::cached_code(cfg); });
        detail::require(code->n() % static_cast<std::size_t>(bps) == 0, "run_link: codeword length not a multiple of bits per symbol");
        const detail::LinkPlan plan = detail::plan_link(cfg, *code, payload.bits.size(), bps);
        const double noise_var = snr_to_noise_var(cfg.snr_db, cfg.p_z);

        std::optional<CsiEnsemble> file;
        if (cfg.csi.mode == CsiMode::file)
        {
            file = detail::in_stage("csi", [&] { return read_csi_file(cfg.csi.path); });
            detail::require<DimensionError>(file->n_r == static_cast<std::uint32_t>(cfg.n_r) && file->n_t == static_cast<std::uint32_t>(cfg.n_t),
                                            "run_link: CSI file antenna counts do not match config");
        }

        std::optional<PcenParams> theta;
        if (cfg.pcen.enabled)
            theta = detail::in_stage("pcen",
                                     [&]
                                     {
                                         PcenParams p = cfg.pcen.params_path.empty() ? PcenParams::defaults(cfg.pcen.t_iters, CMatrix())
                                                                                     : load_pcen(cfg.pcen.params_path);
                                         p.validate();
                                         return p;
                                     });

        // encode
        Bits coded = detail::in_stage("encode",
                                      [&]
                                      {
                                          Bits out;
                                          out.reserve(plan.coded_bits + plan.fill_bits);
                                          Bits info(code->k_info());
                                          for (std::uint64_t w = 0; w < plan.codewords; ++w)
                                          {
                                              for (std::size_t i = 0; i < info.size(); ++i)
                                              {
                                                  const std::uint64_t at = w * code->k_info() + i;
                                                  info[i] = at < payload.bits.size() ? payload.bits[at] : 0;
                                              }
                                              const Bits cw = code->encode(info);
                                              out.insert(out.end(), cw.begin(), cw.end());
                                          }
                                          out.resize(out.size() + plan.fill_bits, 0);
                                          return out;
                                      });
        const std::vector<cplx> symbols = detail::in_stage("modulate", [&] { return modulate(coded, c); });
        const std::size_t per_block = static_cast<std::size_t>(cfg.n_s) * static_cast<std::size_t>(cfg.k);
        const std::size_t real_symbols = plan.coded_bits / static_cast<std::uint64_t>(bps);

        std::vector<detail::BlockOutput> blocks(plan.blocks);
        const SeededRng master(cfg.seed);
        detail::parallel_for(plan.blocks, cfg.threads,
                             [&](std::size_t b)
                             {
                                 const SeededRng blk = master.split(b);
                                 const ChannelRealization ch =
                                     detail::in_stage("channel", [&] { return detail::block_channel(cfg, file ? &*file : nullptr, b, blk); });
                                 const CMatrix &h_tx = cfg.csi.at_tx ? ch.estimate() : ch.h;
                                 const CMatrix &h_rx = cfg.csi.at_rx ? ch.estimate() : ch.h;
                                 const std::span<const cplx> xe(symbols.data() + b * per_block, per_block);

                                 const PrecoderSpec spec = detail::in_stage("precode", [&] { return build_precoder(h_tx, cfg, noise_var); });
                                 const CMatrix g = spec.matrix();
                                 const CMatrix x_p = standard_precode(xe, spec, cfg);

                                 CMatrix z = x_p;
                                 PcenParams p;
                                 double distortion = 0.0;
                                 if (theta)
                                 {
                                     detail::in_stage("pen",
                                                      [&]
                                                      {
                                                          SeededRng tr = blk.split(2);
                                                          const CMatrix x_train = training_block({h_tx, std::nullopt}, cfg, c, noise_var,
                                                                                                 cfg.pcen.combiner_samples, tr);
                                                          p = *theta;
                                                          const CombinerFit fit =
                                                              fit_combiner(x_train, h_tx, p, noise_var, c, cfg.pcen.combiner_rounds);
                                                          p.u2 = fit.u2;
                                                          distortion = std::max(0.0, fit.loss - noise_var * p.u2.squaredNorm() / cfg.n_t);
                                                          z = pen_forward(x_p, h_tx, p, c);
                                                          return 0;
                                                      });
                                 }

                                 // channel uses, repeated
                                 const int reps = cfg.repetition;
                                 CMatrix y_obs, h_obs;
                                 double nv_obs = noise_var;
                                 if (theta)
                                 {
                                     y_obs = CMatrix::Zero(cfg.n_t, cfg.k);
                                     for (int r = 0; r < reps; ++r)
                                     {
                                         SeededRng nr = blk.split(16 + static_cast<std::uint64_t>(r));
                                         y_obs += cen_forward(apply(ch, z, NoiseSpec{noise_var}, nr), p);
                                     }
                                     y_obs /= static_cast<double>(reps);
                                     h_obs = g;
                                     nv_obs = distortion + noise_var * p.u2.squaredNorm() / (cfg.n_t * reps);
                                 }
                                 else
                                 {
                                     y_obs.resize(cfg.n_r * reps, cfg.k);
                                     h_obs.resize(cfg.n_r * reps, cfg.n_s);
                                     const CMatrix h_eff = h_rx * g;
                                     for (int r = 0; r < reps; ++r)
                                     {
                                         SeededRng nr = blk.split(16 + static_cast<std::uint64_t>(r));
                                         y_obs.middleRows(r * cfg.n_r, cfg.n_r) = apply(ch, z, NoiseSpec{noise_var}, nr);
                                         h_obs.middleRows(r * cfg.n_r, cfg.n_r) = h_eff;
                                     }
                                 }

                                 detail::BlockOutput &out = blocks[b];
                                 detail::in_stage("detect",
                                                  [&]
                                                  {
                                                      out.llr.reserve(per_block * static_cast<std::size_t>(bps));
                                                      const double nv_llr = std::max(nv_obs, 1e-12);
                                                      if (cfg.detector == Detector::ml)
                                                      {
                                                          const DetectionResult d = ml_detect(y_obs, h_obs, c);
                                                          out.estimate = symbols_from_streams(d.symbols);
                                                          out.llr = ml_llr(y_obs, h_obs, nv_llr, c);
                                                      }
                                                      else
                                                      {
                                                          const LinearEstimate est = linear_estimate(y_obs, h_obs, nv_obs, cfg.detector);
                                                          out.estimate = symbols_from_streams(est.soft);
                                                          for (std::size_t i = 0; i < out.estimate.size(); ++i)
                                                              detail::append_llr(out.llr, out.estimate[i], c,
                                                                                 est.noise_var[i % static_cast<std::size_t>(cfg.n_s)]);
                                                      }
                                                      out.hard.reserve(out.estimate.size());
                                                      for (cplx s : out.estimate)
                                                          out.hard.push_back(nearest_index(s, c));
                                                      return 0;
                                                  });
                             });

        // decode
        std::vector<double> llr;
        llr.reserve(coded.size());
        for (const auto &b : blocks)
            llr.insert(llr.end(), b.llr.begin(), b.llr.end());
        std::vector<DecodeResult> decoded(plan.codewords);
        detail::parallel_for(plan.codewords, cfg.threads,
                             [&](std::size_t w)
                             {
                                 decoded[w] = detail::in_stage(
                                     "decode",
                                     [&]
                                     {
                                         return code->decode(std::span<const double>(llr.data() + w * code->n(), code->n()), cfg.ldpc_iters,
                                                             cfg.min_sum_factor);
                                     });
                             });

        LinkRun run;
        SimReport &rep = run.report;
        run.received.reserve(payload.bits.size());
        for (std::uint64_t w = 0; w < plan.codewords; ++w)
        {
            bool block_error = false;
            for (std::size_t i = 0; i < code->k_info(); ++i)
            {
                const std::uint64_t at = w * code->k_info() + i;
                if (at >= payload.bits.size())
                    break;
                const std::uint8_t bit = decoded[w].info[i];
                run.received.push_back(bit);
                if (bit != payload.bits[at])
                {
                    ++rep.bit_errors;
                    block_error = true;
                }
            }
            rep.block_errors += block_error ? 1 : 0;
        }

        double se = 0.0;
        for (std::size_t i = 0; i < real_symbols; ++i)
        {
            const auto &b = blocks[i / per_block];
            const std::size_t j = i % per_block;
            se += std::norm(b.estimate[j] - symbols[i]);
            if (c.points[b.hard[j]] != symbols[i])
                ++rep.symbol_errors;
        }

        rep.snr_db = cfg.snr_db;
        rep.payload_bits = payload.bits.size();
        rep.pad_bits = plan.pad_bits;
        rep.fill_bits = plan.fill_bits;
        rep.coded_bits = plan.coded_bits;
        rep.codewords = plan.codewords;
        rep.symbols = real_symbols;
        rep.trials = plan.blocks;
        rep.channel_uses = plan.blocks * static_cast<std::uint64_t>(cfg.k) * static_cast<std::uint64_t>(cfg.repetition);
        rep.ber = static_cast<double>(rep.bit_errors) / static_cast<double>(rep.payload_bits);
        rep.ser = static_cast<double>(rep.symbol_errors) / static_cast<double>(real_symbols);
        rep.bler = static_cast<double>(rep.block_errors) / static_cast<double>(plan.codewords);
        rep.symbol_mse = se / static_cast<double>(real_symbols);
        const std::uint64_t n_source = cfg.source_symbols ? cfg.source_symbols : payload.source_symbols();
        const Rational cbr = make_rational(rep.channel_uses, n_source);
        rep.cbr_num = cbr.num;
        rep.cbr_den = cbr.den;
        rep.cbr = cbr.value();
        rep.config_hash = config_hash(cfg);
        rep.seed = cfg.seed;
        rep.pcen = cfg.pcen.enabled;
        rep.repetition = cfg.repetition;

        if (payload.image)
        {
            Image img = *payload.image;
            img.rgb = bits_to_bytes(run.received);
            rep.psnr_db = compute_psnr(*payload.image, img);
            run.image = std::move(img);
        }
        return run;
    }

    /// Es/N0 in dB for a target Eb/N0 with the given bits per symbol and code rate.
    inline double ebn0_to_snr_db(double ebn0_db, int bits_per_symbol, double code_rate)
    {
        detail::require(bits_per_symbol >= 1 && code_rate > 0.0, "ebn0_to_snr_db: invalid arguments");
        return ebn0_db + 10.0 * std::log10(static_cast<double>(bits_per_symbol) * code_rate);
    }

    enum class SweepAxis
    {
        snr_db,
        cbr
    };

    /// Channel uses per source symbol with no repetition.
    inline Rational base_cbr(const LinkConfig &cfg, const Payload &payload)
    {
        const auto code = detail::cached_code(cfg);
        const auto plan = detail::plan_link(cfg, *code, payload.bits.size(), make_constellation(cfg.modulation).bits_per_symbol);
        const std::uint64_t n_source = cfg.source_symbols ? cfg.source_symbols : payload.source_symbols();
        return make_rational(plan.blocks * static_cast<std::uint64_t>(cfg.k), n_source);
    }

    /// One report per axis point. Every point reuses the template seed, so
    /// channel and noise draws are shared across points and configurations.
    /// CBR targets are reached by repeating each block round(target / base) times.
    inline std::vector<SimReport> sweep(const LinkConfig &tmpl, SweepAxis axis, std::span<const double> values, const Payload &payload)
    {
        detail::require(!values.empty(), "sweep: empty axis");
        std::vector<SimReport> out;
        const double base = axis == SweepAxis::cbr ? base_cbr(tmpl, payload).value() : 0.0;
        for (double v : values)
        {
            LinkConfig cfg = tmpl;
            if (axis == SweepAxis::snr_db)
                cfg.snr_db = v;
            else
            {
                detail::require(v > 0.0, "sweep: CBR targets must be positive");
                cfg.repetition = static_cast<int>(std::max<long long>(1, std::llround(v / base)));
            }
            out.push_back(run_link(cfg, payload).report);
        }
        return out;
    }

    struct Throughput
    {
        double single = 0.0;   // payload bits per second, one thread
        double parallel = 0.0; // payload bits per second, `threads` workers
        int threads = 1;
        std::uint64_t runs_single = 0;
        std::uint64_t runs_parallel = 0;
    };

    inline Throughput measure_throughput(const LinkConfig &cfg, const Payload &payload, double duration_s, int threads = 0)
    {
        detail::require(duration_s > 0.0, "measure_throughput: duration must be positive");
        Throughput t;
        t.threads = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        auto timed = [&](int workers, std::uint64_t &runs)
        {
            LinkConfig c = cfg;
            c.threads = workers;
            run_link(c, payload); // warm caches
            const auto t0 = std::chrono::steady_clock::now();
            double elapsed = 0.0;
            runs = 0;
            do
            {
                run_link(c, payload);
                ++runs;
                elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            } while (elapsed < duration_s);
            return static_cast<double>(runs) * static_cast<double>(payload.bits.size()) / elapsed;
        };
        t.single = timed(1, t.runs_single);
        t.parallel = timed(t.threads, t.runs_parallel);
        return t;
    }
} // namespace mimolab

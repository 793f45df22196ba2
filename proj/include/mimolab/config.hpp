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
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace mimolab
{
    enum class Modulation
    {
        bpsk,
        qpsk,
        qam16
    };

    enum class CodeRate
    {
        half,
        three_quarters,
        passthrough
    };

    enum class ChannelModel
    {
        rayleigh,
        identity
    };

    enum class Detector
    {
        zf,
        mmse,
        ml,
        mf
    };

    enum class CsiMode
    {
        perfect,
        noisy, // h_est = h + CN(0, err_var)
        file   // channel matrices replayed from a CSI ensemble file
    };

    struct CsiConfig
    {
        CsiMode mode = CsiMode::perfect;
        double err_var = 0.1;
        std::string path;
        bool at_tx = true; // transmitter designs from h_est
        bool at_rx = true; // receiver detects with h_est
    };

    struct PcenConfig
    {
        bool enabled = false;
        std::string params_path; // empty: default unrolled parameters
        int t_iters = 8;
        int combiner_rounds = 3;  // PEN/Wiener alternations when fitting U2 per block
        int combiner_samples = 256; // training symbols per block for the U2 fit
    };

    /// Link parameters shared by every pipeline stage.
    struct LinkConfig
    {
        int n_t = 2;
        int n_r = 2;
        int n_s = 2;
        int k = 256; // channel uses per fading block
        Modulation modulation = Modulation::qpsk;
        CodeRate code_rate = CodeRate::half;
        int ldpc_n = 1024;
        int ldpc_iters = 50;
        double min_sum_factor = 0.75;
        std::uint64_t code_seed = 1;
        double p_z = 1.0;
        double snr_db = 6.0;
        ChannelModel channel = ChannelModel::rayleigh;
        CsiConfig csi;
        PcenConfig pcen;
        Detector detector = Detector::mmse;
        int repetition = 1;              // each channel block sent this many times
        std::uint64_t source_symbols = 0; // CBR denominator; 0 derives it from the payload
        std::uint64_t seed = 1;
        int threads = 1;

        void validate() const
        {
            detail::require(n_t >= 1 && n_r >= 1 && n_s >= 1, "config: antenna and stream counts must be >= 1");
            detail::require(n_s <= std::min(n_t, n_r), "config: n_s must not exceed min(n_t, n_r)");
            detail::require(k >= 1, "config: k must be >= 1");
            detail::require(p_z > 0.0, "config: p_z must be positive");
            detail::require(ldpc_iters >= 1, "config: ldpc_iters must be >= 1");
            detail::require(repetition >= 1, "config: repetition must be >= 1");
            detail::require(threads >= 1, "config: threads must be >= 1");
            detail::require(csi.err_var >= 0.0, "config: csi.err_var must be >= 0");
            detail::require(csi.mode != CsiMode::file || !csi.path.empty(), "config: csi.path required in file mode");
            detail::require(pcen.t_iters >= 1, "config: pcen.t_iters must be >= 1");
            detail::require(pcen.combiner_rounds >= 1 && pcen.combiner_samples >= 1, "config: pcen combiner settings must be >= 1");
        }
    };

    NLOHMANN_JSON_SERIALIZE_ENUM(Modulation, {{Modulation::bpsk, "bpsk"}, {Modulation::qpsk, "qpsk"}, {Modulation::qam16, "qam16"}})
    NLOHMANN_JSON_SERIALIZE_ENUM(CodeRate, {{CodeRate::half, "1/2"}, {CodeRate::three_quarters, "3/4"}, {CodeRate::passthrough, "passthrough"}})
    NLOHMANN_JSON_SERIALIZE_ENUM(ChannelModel, {{ChannelModel::rayleigh, "rayleigh"}, {ChannelModel::identity, "identity"}})
    NLOHMANN_JSON_SERIALIZE_ENUM(Detector, {{Detector::zf, "zf"}, {Detector::mmse, "mmse"}, {Detector::ml, "ml"}, {Detector::mf, "mf"}})
    NLOHMANN_JSON_SERIALIZE_ENUM(CsiMode, {{CsiMode::perfect, "perfect"}, {CsiMode::noisy, "noisy"}, {CsiMode::file, "file"}})

    namespace detail
    {
        inline void reject_unknown(const nlohmann::json &j, const std::set<std::string> &known, const char *where)
        {
            for (auto it = j.begin(); it != j.end(); ++it)
                if (!known.count(it.key()))
                    throw InvalidInput(std::string(where) + ": unknown key '" + it.key() + "'");
        }

        template <typename T>
        void get_opt(const nlohmann::json &j, const char *key, T &dst)
        {
            if (j.contains(key))
                j.at(key).get_to(dst);
        }

        template <typename E>
        void get_enum(const nlohmann::json &j, const char *key, E &dst)
        {
            if (!j.contains(key))
                return;
            const nlohmann::json probe = j.at(key);
            // nlohmann maps unknown strings to the first enumerator; reject them instead
            const E parsed = probe.get<E>();
            if (nlohmann::json(parsed) != probe)
                throw InvalidInput(std::string("config: invalid value for '") + key + "'");
            dst = parsed;
        }
    } // namespace detail

    inline void to_json(nlohmann::json &j, const CsiConfig &c)
    {
        j = {{"mode", c.mode}, {"err_var", c.err_var}, {"path", c.path}, {"at_tx", c.at_tx}, {"at_rx", c.at_rx}};
    }

    inline void from_json(const nlohmann::json &j, CsiConfig &c)
    {
        detail::reject_unknown(j, {"mode", "err_var", "path", "at_tx", "at_rx"}, "config.csi");
        detail::get_enum(j, "mode", c.mode);
        detail::get_opt(j, "err_var", c.err_var);
        detail::get_opt(j, "path", c.path);
        detail::get_opt(j, "at_tx", c.at_tx);
        detail::get_opt(j, "at_rx", c.at_rx);
    }

    inline void to_json(nlohmann::json &j, const PcenConfig &c)
    {
        j = {{"enabled", c.enabled},
             {"params_path", c.params_path},
             {"t_iters", c.t_iters},
             {"combiner_rounds", c.combiner_rounds},
             {"combiner_samples", c.combiner_samples}};
    }

    inline void from_json(const nlohmann::json &j, PcenConfig &c)
    {
        detail::reject_unknown(j, {"enabled", "params_path", "t_iters", "combiner_rounds", "combiner_samples"}, "config.pcen");
        detail::get_opt(j, "enabled", c.enabled);
        detail::get_opt(j, "params_path", c.params_path);
        detail::get_opt(j, "t_iters", c.t_iters);
        detail::get_opt(j, "combiner_rounds", c.combiner_rounds);
        detail::get_opt(j, "combiner_samples", c.combiner_samples);
    }

    inline void to_json(nlohmann::json &j, const LinkConfig &c)
    {
        j = {{"n_t", c.n_t},
             {"n_r", c.n_r},
             {"n_s", c.n_s},
             {"k", c.k},
             {"modulation", c.modulation},
             {"code_rate", c.code_rate},
             {"ldpc_n", c.ldpc_n},
             {"ldpc_iters", c.ldpc_iters},
             {"min_sum_factor", c.min_sum_factor},
             {"code_seed", c.code_seed},
             {"p_z", c.p_z},
             {"snr_db", c.snr_db},
             {"channel", c.channel},
             {"csi", c.csi},
             {"pcen", c.pcen},
             {"detector", c.detector},
             {"repetition", c.repetition},
             {"source_symbols", c.source_symbols},
             {"seed", c.seed},
             {"threads", c.threads}};
    }

    inline void from_json(const nlohmann::json &j, LinkConfig &c)
    {
        detail::reject_unknown(j,
                               {"n_t", "n_r", "n_s", "k", "modulation", "code_rate", "ldpc_n", "ldpc_iters",
                                "min_sum_factor", "code_seed", "p_z", "snr_db", "channel", "csi", "pcen", "detector",
                                "repetition", "source_symbols", "seed", "threads"},
                               "config");
        detail::get_opt(j, "n_t", c.n_t);
        detail::get_opt(j, "n_r", c.n_r);
        detail::get_opt(j, "n_s", c.n_s);
        detail::get_opt(j, "k", c.k);
        detail::get_enum(j, "modulation", c.modulation);
        detail::get_enum(j, "code_rate", c.code_rate);
        detail::get_opt(j, "ldpc_n", c.ldpc_n);
        detail::get_opt(j, "ldpc_iters", c.ldpc_iters);
        detail::get_opt(j, "min_sum_factor", c.min_sum_factor);
        detail::get_opt(j, "code_seed", c.code_seed);
        detail::get_opt(j, "p_z", c.p_z);
        detail::get_opt(j, "snr_db", c.snr_db);
        detail::get_enum(j, "channel", c.channel);
        if (j.contains("csi"))
            j.at("csi").get_to(c.csi);
        if (j.contains("pcen"))
            j.at("pcen").get_to(c.pcen);
        detail::get_enum(j, "detector", c.detector);
        detail::get_opt(j, "repetition", c.repetition);
        detail::get_opt(j, "source_symbols", c.source_symbols);
        detail::get_opt(j, "seed", c.seed);
        detail::get_opt(j, "threads", c.threads);
    }

    inline LinkConfig parse_config(const nlohmann::json &j)
    {
        LinkConfig cfg;
        try
        {
            cfg = j.get<LinkConfig>();
        }
        catch (const nlohmann::json::exception &e)
        {
            throw InvalidInput(std::string("config: ") + e.what());
        }
        cfg.validate();
        return cfg;
    }

    inline LinkConfig load_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw InvalidInput("cannot open config file " + path);
        nlohmann::json j;
        try
        {
            in >> j;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw InvalidInput(std::string("config parse error: ") + e.what());
        }
        return parse_config(j);
    }

    /// FNV-1a digest of the canonical JSON form; `threads` is excluded since it
    /// never changes results.
    inline std::string config_hash(const LinkConfig &cfg)
    {
        nlohmann::json j = cfg;
        j.erase("threads");
        const std::string text = j.dump();
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : text)
        {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
} // namespace mimolab

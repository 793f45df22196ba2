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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace mimolab
{
    inline constexpr const char *kReportVersion = "mimolab-report/1";

    struct SimReport
    {
        double snr_db = 0.0;
        double ber = 0.0;
        double ser = 0.0;
        double bler = 0.0;
        double symbol_mse = 0.0;
        std::optional<double> psnr_db; // image payloads only; +inf when lossless
        double cbr = 0.0;
        std::uint64_t cbr_num = 0;
        std::uint64_t cbr_den = 1;
        double throughput = 0.0; // payload bits per second, when measured
        std::uint64_t trials = 0; // fading blocks
        std::string config_hash;
        std::uint64_t seed = 0;
        bool pcen = false;
        int repetition = 1;

        // bit accounting
        std::uint64_t payload_bits = 0;
        std::uint64_t pad_bits = 0;  // zero info bits completing the last codeword
        std::uint64_t fill_bits = 0; // zero coded bits completing the last block
        std::uint64_t coded_bits = 0;
        std::uint64_t codewords = 0;
        std::uint64_t channel_uses = 0;
        std::uint64_t bit_errors = 0;
        std::uint64_t symbol_errors = 0;
        std::uint64_t symbols = 0;
        std::uint64_t block_errors = 0;
    };

    namespace detail
    {
        inline nlohmann::json real_or_inf(double v)
        {
            if (std::isinf(v))
                return v > 0 ? "inf" : "-inf";
            if (std::isnan(v))
                return "nan";
            return v;
        }

        inline std::string fmt_real(double v)
        {
            if (std::isinf(v))
                return v > 0 ? "inf" : "-inf";
            if (std::isnan(v))
                return "nan";
            std::ostringstream os;
            os << std::setprecision(17) << v;
            return os.str();
        }
    } // namespace detail

    inline nlohmann::json report_to_json(const SimReport &r, bool with_timing = true)
    {
        nlohmann::json j{{"snr_db", r.snr_db},
                         {"ber", r.ber},
                         {"ser", r.ser},
                         {"bler", r.bler},
                         {"symbol_mse", r.symbol_mse},
                         {"psnr_db", r.psnr_db ? detail::real_or_inf(*r.psnr_db) : nlohmann::json(nullptr)},
                         {"cbr", r.cbr},
                         {"cbr_rational", std::to_string(r.cbr_num) + "/" + std::to_string(r.cbr_den)},
                         {"trials", r.trials},
                         {"config_hash", r.config_hash},
                         {"seed", r.seed},
                         {"pcen", r.pcen},
                         {"repetition", r.repetition},
                         {"bits",
                          {{"payload", r.payload_bits},
                           {"pad", r.pad_bits},
                           {"fill", r.fill_bits},
                           {"coded", r.coded_bits},
                           {"codewords", r.codewords},
                           {"channel_uses", r.channel_uses},
                           {"bit_errors", r.bit_errors},
                           {"symbols", r.symbols},
                           {"symbol_errors", r.symbol_errors},
                           {"block_errors", r.block_errors}}}};
        if (with_timing)
            j["throughput"] = r.throughput;
        return j;
    }

    inline nlohmann::json reports_to_json(const std::vector<SimReport> &rs)
    {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto &r : rs)
            arr.push_back(report_to_json(r));
        return {{"version", kReportVersion}, {"reports", arr}};
    }

    inline std::string csv_header()
    {
        return "snr_db,ber,ser,bler,symbol_mse,psnr_db,cbr,cbr_num,cbr_den,throughput,trials,payload_bits,pad_bits,fill_bits,"
               "coded_bits,channel_uses,bit_errors,symbol_errors,block_errors,pcen,repetition,seed,config_hash";
    }

    inline std::string reports_to_csv(const std::vector<SimReport> &rs)
    {
        std::ostringstream os;
        os << "# " << kReportVersion << "\n" << csv_header() << "\n";
        for (const auto &r : rs)
        {
            os << detail::fmt_real(r.snr_db) << ',' << detail::fmt_real(r.ber) << ',' << detail::fmt_real(r.ser) << ','
               << detail::fmt_real(r.bler) << ',' << detail::fmt_real(r.symbol_mse) << ','
               << (r.psnr_db ? detail::fmt_real(*r.psnr_db) : std::string()) << ',' << detail::fmt_real(r.cbr) << ',' << r.cbr_num << ','
               << r.cbr_den << ',' << detail::fmt_real(r.throughput) << ',' << r.trials << ',' << r.payload_bits << ',' << r.pad_bits
               << ',' << r.fill_bits << ',' << r.coded_bits << ',' << r.channel_uses << ',' << r.bit_errors << ',' << r.symbol_errors
               << ',' << r.block_errors << ',' << (r.pcen ? 1 : 0) << ',' << r.repetition << ',' << r.seed << ',' << r.config_hash
               << "\n";
        }
        return os.str();
    }

    /// Write to a sibling temporary file, then rename over the target.
    inline void write_atomic(const std::string &path, const std::string &content)
    {
        const std::string tmp = path + ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            detail::require(f.good(), "cannot open " + tmp + " for writing");
            f.write(content.data(), static_cast<std::streamsize>(content.size()));
            f.flush();
            detail::require(f.good(), "write failed: " + tmp);
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec)
        {
            std::filesystem::remove(tmp);
            throw InvalidInput("cannot rename " + tmp + " to " + path + ": " + ec.message());
        }
    }
} // namespace mimolab

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

#include <cstdint>
#include <string>

#include "link.hpp"
#include "report.hpp"

namespace mimolab
{
    struct SelftestResult
    {
        bool identical = false;
        std::string first;  // canonical report JSON of run 1
        std::string second; // canonical report JSON of run 2
        std::string detail;
    };

    /// Full coded 2x2 link with noisy CSI, PCEN and an image payload, run twice
    /// with the same seed. Reports must agree bit for bit (timings excluded).
    inline SelftestResult selftest(std::uint64_t seed, int threads = 2)
    {
        LinkConfig cfg;
        cfg.seed = seed;
        cfg.k = 128;
        cfg.csi.mode = CsiMode::noisy;
        cfg.csi.err_var = 0.1;
        cfg.pcen.enabled = true;
        cfg.threads = threads;

        Image img{16, 16, std::vector<std::uint8_t>(3 * 16 * 16)};
        SeededRng rng(seed ^ 0x5eedULL);
        for (auto &b : img.rgb)
            b = static_cast<std::uint8_t>(rng.below(256));
        const Payload payload = Payload::from_image(img);

        const LinkRun a = run_link(cfg, payload);
        const LinkRun b = run_link(cfg, payload);
        SelftestResult r;
        r.first = report_to_json(a.report, false).dump();
        r.second = report_to_json(b.report, false).dump();
        const bool same_bits = a.received == b.received;
        const bool same_image = a.image && b.image && a.image->rgb == b.image->rgb;
        r.identical = r.first == r.second && same_bits && same_image;
        if (r.first != r.second)
            r.detail = "reports differ";
        else if (!same_bits)
            r.detail = "received payloads differ";
        else if (!same_image)
            r.detail = "reconstructed images differ";
        return r;
    }
} // namespace mimolab

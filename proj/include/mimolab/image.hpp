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
#include <fstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace mimolab
{
    /// 8-bit RGB image, row-major, 3 bytes per pixel.
    struct Image
    {
        std::size_t width = 0;
        std::size_t height = 0;
        std::vector<std::uint8_t> rgb;

        std::size_t samples() const { return 3 * width * height; }
    };

    namespace detail
    {
        inline void ppm_skip(std::istream &in)
        {
            for (;;)
            {
                const int ch = in.peek();
                if (ch == '#')
                {
                    std::string line;
                    std::getline(in, line);
                }
                else if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r')
                    in.get();
                else
                    return;
            }
        }
    } // namespace detail

    /// Binary PPM (P6), maxval 255.
    inline Image read_ppm(std::istream &in)
    {
        std::string magic;
        in >> magic;
        detail::require(magic == "P6", "read_ppm: only binary P6 images are supported");
        long w = 0, h = 0, maxval = 0;
        detail::ppm_skip(in);
        in >> w;
        detail::ppm_skip(in);
        in >> h;
        detail::ppm_skip(in);
        in >> maxval;
        detail::require(in.good() && w > 0 && h > 0, "read_ppm: bad header");
        detail::require(maxval == 255, "read_ppm: only 8-bit images (maxval 255) are supported");
        in.get(); // single whitespace before raster
        Image img{static_cast<std::size_t>(w), static_cast<std::size_t>(h), {}};
        img.rgb.resize(img.samples());
        in.read(reinterpret_cast<char *>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
        detail::require(static_cast<std::size_t>(in.gcount()) == img.rgb.size(), "read_ppm: truncated raster");
        return img;
    }

    inline Image read_ppm(const std::string &path)
    {
        std::ifstream f(path, std::ios::binary);
        detail::require(f.good(), "read_ppm: cannot open " + path);
        return read_ppm(f);
    }

    inline void write_ppm(std::ostream &out, const Image &img)
    {
        detail::require<DimensionError>(img.rgb.size() == img.samples(), "write_ppm: raster size mismatch");
        out << "P6\n" << img.width << " " << img.height << "\n255\n";
        out.write(reinterpret_cast<const char *>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
    }
} // namespace mimolab

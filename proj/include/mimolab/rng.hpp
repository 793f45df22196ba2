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
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>

namespace mimolab
{
    /// Counter-based splittable random generator.
    ///
    /// Output n of a stream is a pure function of (key, n): the SplitMix64
    /// finalizer applied to key + n * golden_gamma. Child streams are derived
    /// with split(), so per-trial streams depend only on (master seed, trial
    /// index) and Monte-Carlo trials can run in any order or in parallel.
    /// Gaussian draws use Box-Muller so results are identical across standard
    /// library implementations.
    class SeededRng
    {
    public:
        using result_type = std::uint64_t;

        explicit SeededRng(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6a09e667f3bcc908ULL)) {}

        SeededRng split(std::uint64_t index) const
        {
            SeededRng child;
            child.key_ = mix(key_ ^ mix(index + 0xd1b54a32d192ed03ULL));
            return child;
        }

        std::uint64_t next_u64() { return mix(key_ + (counter_++) * kGamma); }
        result_type operator()() { return next_u64(); }
        static constexpr result_type min() { return 0; }
        static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

        /// Uniform on [0, 1).
        double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

        /// Uniform integer in [0, n). Lemire-style rejection keeps it unbiased.
        std::uint64_t below(std::uint64_t n)
        {
            if (n == 0)
                return 0;
            const std::uint64_t limit = max() - max() % n;
            std::uint64_t v;
            do
            {
                v = next_u64();
            } while (v >= limit);
            return v % n;
        }

        double gaussian()
        {
            if (has_spare_)
            {
                has_spare_ = false;
                return spare_;
            }
            double u1 = 0.0;
            while (u1 <= 0.0)
                u1 = uniform();
            const double u2 = uniform();
            const double rad = std::sqrt(-2.0 * std::log(u1));
            const double ang = 2.0 * std::numbers::pi * u2;
            spare_ = rad * std::sin(ang);
            has_spare_ = true;
            return rad * std::cos(ang);
        }

        /// Circularly symmetric CN(0, variance): real and imaginary parts each variance/2.
        std::complex<double> cgauss(double variance)
        {
            const double s = std::sqrt(variance / 2.0);
            const double re = gaussian();
            const double im = gaussian();
            return {s * re, s * im};
        }

        std::uint64_t counter() const { return counter_; }

    private:
        static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

        static std::uint64_t mix(std::uint64_t z)
        {
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        }

        std::uint64_t key_ = 0;
        std::uint64_t counter_ = 0;
        double spare_ = 0.0;
        bool has_spare_ = false;
    };

    template <typename T>
    void shuffle(T &items, SeededRng &rng)
    {
        for (std::size_t i = items.size(); i > 1; --i)
        {
            const auto j = static_cast<std::size_t>(rng.below(i));
            std::swap(items[i - 1], items[j]);
        }
    }
} // namespace mimolab

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

#include <stdexcept>
#include <string>

namespace mimolab
{
    // Root of every error the library throws.
    struct Error : std::runtime_error
    {
        using std::runtime_error::runtime_error;
    };

    struct InvalidInput : Error
    {
        using Error::Error;
    };

    struct DimensionError : Error
    {
        using Error::Error;
    };

    struct PaddingError : Error
    {
        using Error::Error;
    };

    // LDPC construction produced a rank-deficient parity matrix; retry with another seed.
    struct ConstructionError : Error
    {
        using Error::Error;
    };

    struct SingularityError : Error
    {
        using Error::Error;
    };

    struct RankError : Error
    {
        using Error::Error;
    };

    // Exhaustive search space too large for the ML oracle.
    struct ScaleError : Error
    {
        using Error::Error;
    };

    struct NoOverlapError : Error
    {
        using Error::Error;
    };

    // Wraps an error raised inside one stage of the link pipeline.
    struct StageError : Error
    {
        StageError(std::string stage_name, const std::string &what)
            : Error(stage_name + ": " + what), stage(std::move(stage_name))
        {
        }
        std::string stage;
    };

    namespace detail
    {
        template <typename E = InvalidInput>
        inline void require(bool cond, const std::string &msg)
        {
            if (!cond)
                throw E(msg);
        }
    } // namespace detail
} // namespace mimolab

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

#include "mimolab/channel.hpp"
#include "mimolab/config.hpp"
#include "mimolab/detection.hpp"
#include "mimolab/errors.hpp"
#include "mimolab/image.hpp"
#include "mimolab/ldpc.hpp"
#include "mimolab/link.hpp"
#include "mimolab/metrics.hpp"
#include "mimolab/modem.hpp"
#include "mimolab/numerics.hpp"
#include "mimolab/pcen.hpp"
#include "mimolab/pcen_train.hpp"
#include "mimolab/ppen.hpp"
#include "mimolab/precoder.hpp"
#include "mimolab/proxy.hpp"
#include "mimolab/report.hpp"
#include "mimolab/rng.hpp"
#include "mimolab/selftest.hpp"

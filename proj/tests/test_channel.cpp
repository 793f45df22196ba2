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

#include <filesystem>

#include "test_util.hpp"

using namespace mimolab_test;
using Catch::Approx;

TEST_CASE("Channel - Rayleigh draws")
{
    LinkConfig cfg;
    SeededRng a(3), b(3);
    const auto ha = sample_rayleigh(cfg, a), hb = sample_rayleigh(cfg, b);
    CHECK(ha.h == hb.h);
    CHECK(ha.h.rows() == 2);
    CHECK(ha.h.cols() == 2);
    CHECK_FALSE(ha.h_est.has_value());

    cfg.n_t = cfg.n_r = cfg.n_s = 1;
    SeededRng c(4);
    CHECK(sample_rayleigh(cfg, c).h.size() == 1);

    SeededRng m(5);
    double acc = 0.0;
    for (int i = 0; i < 100000; ++i)
        acc += std::norm(sample_rayleigh(cfg, m).h(0, 0));
    const double p = acc / 1e5;
    CHECK(p >= 0.98);
    CHECK(p <= 1.02);
}

TEST_CASE("Channel - apply")
{
    SeededRng rng(6);
    const CMatrix z = random_matrix(rng, 2, 5);
    ChannelRealization eye{CMatrix::Identity(2, 2), std::nullopt};
    CHECK(apply(eye, z, NoiseSpec{0.0}, rng) == z);

    ChannelRealization diag{CMatrix::Zero(2, 2), std::nullopt};
    diag.h(0, 0) = 2.0;
    diag.h(1, 1) = 1.0;
    const CMatrix y = apply(diag, CMatrix::Identity(2, 2), NoiseSpec{0.0}, rng);
    CHECK(y(0, 0) == cplx(2.0));
    CHECK(y(1, 1) == cplx(1.0));
    CHECK(y(0, 1) == cplx(0.0));

    CHECK_THROWS_AS(apply(eye, CMatrix::Zero(3, 4), NoiseSpec{0.0}, rng), DimensionError);
    CHECK_THROWS_AS(apply(eye, z, NoiseSpec{-1.0}, rng), InvalidInput);

    // pure noise moments
    const CMatrix n = apply(eye, CMatrix::Zero(2, 50000), NoiseSpec{1.0}, rng);
    CHECK(n.squaredNorm() / 1e5 == Approx(1.0).margin(0.02));
    CHECK(n.real().squaredNorm() / 1e5 == Approx(0.5).margin(0.01));
    CHECK(std::abs(n.mean()) < 0.01);

    // linearity without noise
    ChannelRealization h{random_matrix(rng, 3, 2), std::nullopt};
    const CMatrix z1 = random_matrix(rng, 2, 4), z2 = random_matrix(rng, 2, 4);
    const CMatrix lhs = apply(h, z1 + z2, NoiseSpec{0.0}, rng);
    const CMatrix rhs = apply(h, z1, NoiseSpec{0.0}, rng) + apply(h, z2, NoiseSpec{0.0}, rng);
    CHECK(max_abs_diff(lhs, rhs) < 1e-14);
}

TEST_CASE("Channel - imperfect CSI")
{
    SeededRng rng(7);
    ChannelRealization ch{random_matrix(rng, 2, 2), std::nullopt};
    SeededRng a(1), b(1);
    CHECK(*perturb_csi(ch, 0.0, a).h_est == ch.h);
    CHECK(perturb_csi(ch, 0.1, b).h == ch.h);
    SeededRng c(9), d(9);
    CHECK(*perturb_csi(ch, 0.1, c).h_est == *perturb_csi(ch, 0.1, d).h_est);
    CHECK_THROWS_AS(perturb_csi(ch, -0.1, c), InvalidInput);

    double acc = 0.0;
    SeededRng m(10);
    for (int i = 0; i < 10000; ++i)
        acc += (*perturb_csi(ch, 0.1, m).h_est - ch.h).squaredNorm() / 4.0;
    CHECK(acc / 1e4 == Approx(0.1).epsilon(0.03));
}

TEST_CASE("Channel - SNR conversion")
{
    CHECK(snr_to_noise_var(0.0, 1.0) == Approx(1.0));
    CHECK(snr_to_noise_var(10.0, 1.0) == Approx(0.1));
    CHECK(snr_to_noise_var(6.0, 1.0) == Approx(0.2512).margin(1e-4));
    CHECK(snr_to_noise_var(6.0, 2.0) == Approx(2.0 * 0.251188643));
    CHECK_THROWS_AS(snr_to_noise_var(6.0, 0.0), InvalidInput);
}

TEST_CASE("Channel - CSI ensemble file round trip")
{
    SeededRng rng(12);
    CsiEnsemble ens{2, 3, {}};
    for (int i = 0; i < 5; ++i)
        ens.matrices.push_back(random_matrix(rng, 2, 3));
    const auto path = (std::filesystem::temp_directory_path() / "mimolab_test_csi.bin").string();
    write_csi_file(path, ens);
    CHECK(std::filesystem::file_size(path) == 16 + 5 * 6 * 16);
    const CsiEnsemble back = read_csi_file(path);
    CHECK(back.n_r == 2);
    CHECK(back.n_t == 3);
    REQUIRE(back.matrices.size() == 5);
    for (int i = 0; i < 5; ++i)
        CHECK(back.matrices[static_cast<std::size_t>(i)] == ens.matrices[static_cast<std::size_t>(i)]);
    CHECK(back.at_block(7) == ens.matrices[2]);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(read_csi_file(path), InvalidInput);
    {
        std::ofstream f(path, std::ios::binary);
        f << "CSI2xxxxxxxxxxxxxxxx";
    }
    CHECK_THROWS_AS(read_csi_file(path), InvalidInput);
    std::filesystem::remove(path);
}

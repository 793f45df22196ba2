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

#include "test_util.hpp"

using namespace mimolab_test;

namespace
{
    // W from its definition, entry by entry
    CMatrix w_oracle(const CMatrix &u2, const CMatrix &h)
    {
        const CMatrix a = u2 * h;
        CMatrix w(a.cols(), a.rows());
        for (Index i = 0; i < a.cols(); ++i)
        {
            cplx d = 0.0;
            for (Index r = 0; r < a.rows(); ++r)
                d += std::conj(a(r, i)) * a(r, i);
            for (Index r = 0; r < a.rows(); ++r)
                w(i, r) = std::conj(a(r, i)) / d;
        }
        return w;
    }

    double quad_objective(const CMatrix &x, const CMatrix &z, const CMatrix &u2, const CMatrix &h, double nv)
    {
        return (x - u2 * h * z).squaredNorm() + static_cast<double>(x.cols()) * nv * u2.squaredNorm();
    }

    CMatrix alphabet_block(SeededRng &rng, const Constellation &c, Index rows, Index cols)
    {
        CMatrix m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j)
                m(i, j) = c.points[rng.below(c.size())];
        return m;
    }
} // namespace

TEST_CASE("PCEN - compute_w")
{
    const CMatrix id = CMatrix::Identity(2, 2);
    CHECK(max_abs_diff(compute_w(id, id), id) < 1e-15);

    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 1.0;
    CHECK(max_abs_diff(compute_w(id, d), w_oracle(id, d)) < 1e-15);
    // diag(2,1): rows scaled by 1/|a_i|^2, so W = diag(2/4, 1/1)
    CMatrix wd = CMatrix::Zero(2, 2);
    wd(0, 0) = 0.5;
    wd(1, 1) = 1.0;
    CHECK(max_abs_diff(compute_w(id, d), wd) < 1e-15);

    SeededRng rng(41);
    for (int t = 0; t < 20; ++t)
    {
        const CMatrix u2 = random_matrix(rng, 2, 3), h = random_matrix(rng, 3, 2);
        const CMatrix w = compute_w(u2, h);
        CHECK(max_abs_diff(w, w_oracle(u2, h)) < 1e-12);
        const CMatrix g = w * u2 * h;
        for (Index i = 0; i < 2; ++i)
            CHECK(std::abs(g(i, i) - 1.0) < 1e-12);
    }

    CMatrix z = CMatrix::Identity(2, 2);
    z(1, 1) = 0.0;
    CHECK_THROWS_AS(compute_w(id, z), SingularityError);
    CHECK_THROWS_AS(compute_w(CMatrix::Identity(2, 3), id), DimensionError);
}

TEST_CASE("PCEN - pen_forward cases")
{
    const auto q = make_constellation(Modulation::qpsk);
    SeededRng rng(42);
    const CMatrix id = CMatrix::Identity(2, 2);

    SECTION("fixed point")
    {
        const CMatrix x = alphabet_block(rng, q, 2, 16);
        for (int t : {1, 8})
            CHECK(max_abs_diff(pen_forward(x, id, PcenParams::defaults(t, id, 1.0, 0.95), q), x) == 0.0);
    }
    SECTION("single step")
    {
        for (int trial = 0; trial < 20; ++trial)
        {
            const CMatrix h = random_matrix(rng, 2, 2), u2 = random_matrix(rng, 2, 2), x = random_matrix(rng, 2, 8);
            const CMatrix r = w_oracle(u2, h) * x;
            CMatrix expect(2, 8);
            for (Index i = 0; i < 2; ++i)
                for (Index j = 0; j < 8; ++j)
                    expect(i, j) = q.points[nearest_brute(r(i, j), q.points)];
            CHECK(max_abs_diff(pen_forward(x, h, PcenParams::defaults(1, u2), q), expect) == 0.0);
        }
    }
    SECTION("full damping")
    {
        const CMatrix h = random_matrix(rng, 2, 2), u2 = random_matrix(rng, 2, 2), x = random_matrix(rng, 2, 8);
        PcenParams p = PcenParams::defaults(5, u2, 1.0, 1.0);
        p.gamma = {0.3, 0.7, 1.1, 1.9, 0.6};
        CHECK(max_abs_diff(pen_forward(x, h, p, q), project(CMatrix(0.6 * (w_oracle(u2, h) * x)), q)) == 0.0);
    }
    SECTION("errors")
    {
        PcenParams p = PcenParams::defaults(2, id);
        p.alpha[0] = 1.5;
        CHECK_THROWS_AS(pen_forward(id, id, p, q), InvalidInput);
        p = PcenParams::defaults(2, id);
        p.gamma[1] = 0.0;
        CHECK_THROWS_AS(pen_forward(id, id, p, q), InvalidInput);
        CHECK_THROWS_AS(PcenParams::defaults(0, id).validate(), InvalidInput);
    }
}

TEST_CASE("PCEN - finite alphabet and determinism")
{
    SeededRng rng(43);
    for (auto scheme : {Modulation::bpsk, Modulation::qpsk, Modulation::qam16})
    {
        const auto c = make_constellation(scheme);
        std::size_t probes = 0;
        while (probes < 10000)
        {
            const CMatrix h = random_matrix(rng, 2, 2), u2 = random_matrix(rng, 2, 2), x = random_matrix(rng, 2, 50);
            PcenParams p = PcenParams::defaults(4, u2, rng.uniform(0.1, 2.0), rng.uniform(0.0, 1.0));
            const CMatrix z = pen_forward(x, h, p, c);
            CHECK(max_abs_diff(z, pen_forward(x, h, p, c)) == 0.0);
            bool all_in = true;
            for (Index i = 0; i < z.size(); ++i)
                all_in = all_in && std::find(c.points.begin(), c.points.end(), z(i)) != c.points.end();
            CHECK(all_in);
            const double pw = z.squaredNorm() / static_cast<double>(z.size());
            if (scheme == Modulation::qam16)
                CHECK((pw >= 0.2 - 1e-12 && pw <= 1.8 + 1e-12));
            else
                CHECK(std::abs(pw - 1.0) < 1e-12);
            probes += static_cast<std::size_t>(z.size());
        }
    }
}

TEST_CASE("PCEN - cen_forward")
{
    SeededRng rng(44);
    const CMatrix y1 = random_matrix(rng, 3, 5), y2 = random_matrix(rng, 3, 5);
    PcenParams p = PcenParams::defaults(1, CMatrix::Identity(3, 3));
    CHECK(max_abs_diff(cen_forward(y1, p), y1) == 0.0);
    p.u2 = CMatrix::Zero(2, 3);
    CHECK(cen_forward(y1, p).norm() == 0.0);
    p.u2 = random_matrix(rng, 2, 3);
    CHECK(max_abs_diff(cen_forward(y1 + y2, p), cen_forward(y1, p) + cen_forward(y2, p)) < 1e-13);
    CHECK_THROWS_AS(cen_forward(random_matrix(rng, 2, 5), p), DimensionError);
}

TEST_CASE("PCEN - optimal_u2")
{
    const auto q = make_constellation(Modulation::qpsk);
    SeededRng rng(45);

    // scalar Wiener: E|x|^2 / (E|x|^2 + 1) = 1/2 for unit-power x
    const CMatrix xs = alphabet_block(rng, q, 1, 64);
    CHECK(std::abs(optimal_u2(xs, xs, CMatrix::Identity(1, 1), 1.0)(0, 0) - 0.5) < 1e-14);

    const CMatrix x2 = alphabet_block(rng, q, 2, 32);
    CHECK(max_abs_diff(optimal_u2(x2, x2, CMatrix::Identity(2, 2), 0.0), CMatrix::Identity(2, 2)) < 1e-12);

    const CMatrix ones = CMatrix::Ones(2, 4);
    CHECK_THROWS_AS(optimal_u2(ones, ones, CMatrix::Identity(2, 2), 0.0), SingularityError);

    SECTION("gradient descent oracle")
    {
        const CMatrix h = random_matrix(rng, 2, 2), x = random_matrix(rng, 2, 40), z = alphabet_block(rng, q, 2, 40);
        const double nv = 0.3;
        const CMatrix closed = optimal_u2(z, x, h, nv);
        const CMatrix hz = h * z;
        const double k = 40.0;
        const double lmax = (hz * hz.adjoint() / k).norm() + nv;
        CMatrix u = CMatrix::Zero(2, 2);
        for (int it = 0; it < 20000; ++it)
        {
            const CMatrix grad = -(x - u * hz) * hz.adjoint() / k + nv * u;
            u -= (0.9 / lmax) * grad;
        }
        CHECK(max_abs_diff(u, closed) < 1e-3);
    }
    SECTION("no perturbation does better")
    {
        const CMatrix h = random_matrix(rng, 2, 2), x = random_matrix(rng, 2, 40), z = alphabet_block(rng, q, 2, 40);
        const double nv = 0.2;
        const CMatrix u = optimal_u2(z, x, h, nv);
        const double best = quad_objective(x, z, u, h, nv);
        for (int t = 0; t < 100; ++t)
            CHECK(quad_objective(x, z, CMatrix(u + 0.05 * random_matrix(rng, 2, 2)), h, nv) >= best);
    }
}

TEST_CASE("PCEN - loss decomposition")
{
    const auto q = make_constellation(Modulation::qpsk);
    SeededRng rng(46);
    const CMatrix id = CMatrix::Identity(2, 2);

    SECTION("lossless fixed point")
    {
        PcenBatch b{{alphabet_block(rng, q, 2, 16), alphabet_block(rng, q, 2, 16)}, {id, std::nullopt}, 0.0};
        CHECK(pcen_loss(b, PcenParams::defaults(8, id), q, rng) == 0.0);
    }
    SECTION("Monte Carlo against the closed form")
    {
        const CMatrix h = random_matrix(rng, 2, 2), x = random_matrix(rng, 2, 16);
        const double nv = 0.4;
        PcenParams p = PcenParams::defaults(1, random_matrix(rng, 2, 2));
        PcenBatch b{{x}, {h, std::nullopt}, nv};
        const int draws = 4000;
        double s = 0.0, s2 = 0.0;
        for (int d = 0; d < draws; ++d)
        {
            const double l = pcen_loss(b, p, q, rng, PenMode::bypass, 1);
            s += l;
            s2 += l * l;
        }
        const double mean = s / draws;
        const double se = std::sqrt((s2 / draws - mean * mean) / draws);
        const double closed = expected_loss(x, x, p.u2, h, nv);
        INFO("mc " << mean << " closed " << closed << " se " << se);
        CHECK(std::abs(mean - closed) <= 3.0 * se);
        const double direct = ((x - p.u2 * h * x).squaredNorm() + 16.0 * nv * p.u2.squaredNorm()) / 32.0;
        CHECK(std::abs(closed - direct) < 1e-14);
    }
    SECTION("noise increment")
    {
        const CMatrix h = random_matrix(rng, 2, 2), x = random_matrix(rng, 2, 16), u2 = random_matrix(rng, 2, 2);
        const double nv = 0.25;
        const double inc = expected_loss(x, x, u2, h, 2.0 * nv) - expected_loss(x, x, u2, h, nv);
        // per-entry normalization: the k channel uses cancel
        CHECK(std::abs(inc - nv * u2.squaredNorm() / 2.0) < 1e-13);
    }
}

TEST_CASE("PCEN - training")
{
    const auto q = make_constellation(Modulation::qpsk);
    LinkConfig cfg;
    cfg.n_t = 2;
    cfg.n_r = 2;
    cfg.n_s = 2;

    SECTION("loss never increases")
    {
        SeededRng rng(47);
        std::vector<ChannelRealization> ens;
        for (int i = 0; i < 12; ++i)
            ens.push_back(sample_rayleigh(cfg, rng));
        TrainOptions opts;
        opts.max_rounds = 4;
        opts.block_len = 32;
        const auto r = train_pcen(ens, cfg, q, opts);
        REQUIRE(!r.history.empty());
        CHECK(r.history.front() <= r.initial_loss);
        for (std::size_t i = 1; i < r.history.size(); ++i)
            CHECK(r.history[i] <= r.history[i - 1]);
        CHECK(r.final_loss <= r.initial_loss);
        CHECK(r.params.t_iters == 8);
        CHECK(r.combiners.size() == ens.size());
        CHECK_NOTHROW(r.params.validate());
    }
    SECTION("identity channels without noise")
    {
        cfg.n_t = cfg.n_r = cfg.n_s = 1;
        cfg.snr_db = 400.0;
        std::vector<ChannelRealization> ens(4, ChannelRealization{CMatrix::Identity(1, 1), std::nullopt});
        TrainOptions opts;
        opts.max_rounds = 2;
        const auto r = train_pcen(ens, cfg, q, opts);
        CHECK(r.final_loss < 1e-30);
        CHECK(std::abs(r.params.u2(0, 0) - 1.0) < 1e-12);
    }
}

TEST_CASE("PCEN - JSON round trip")
{
    SeededRng rng(48);
    PcenParams p = PcenParams::defaults(3, random_matrix(rng, 2, 3), 0.8, 0.9);
    p.gamma[1] = 1.25;
    const PcenParams back = pcen_from_json(nlohmann::json::parse(pcen_to_json(p).dump()));
    CHECK(back.t_iters == 3);
    CHECK(back.gamma == p.gamma);
    CHECK(back.alpha == p.alpha);
    CHECK(max_abs_diff(back.u2, p.u2) == 0.0);
    nlohmann::json bad = pcen_to_json(p);
    bad["alpha"][0] = 2.0;
    CHECK_THROWS_AS(pcen_from_json(bad), InvalidInput);
}

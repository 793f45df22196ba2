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
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "rng.hpp"

namespace mimolab
{
    using cplx = std::complex<double>;
    using CMatrix = Eigen::MatrixXcd;
    using CVector = Eigen::VectorXcd;
    using Index = Eigen::Index;

    struct SvdResult
    {
        CMatrix u;             // rows x rows, unitary
        std::vector<double> s; // min(rows, cols) values, descending
        CMatrix v;             // cols x cols, unitary
    };

    inline double frob_norm(const CMatrix &a)
    {
        double acc = 0.0;
        for (Index j = 0; j < a.cols(); ++j)
            for (Index i = 0; i < a.rows(); ++i)
                acc += std::norm(a(i, j));
        return std::sqrt(acc);
    }

    inline bool all_finite(const CMatrix &a)
    {
        for (Index j = 0; j < a.cols(); ++j)
            for (Index i = 0; i < a.rows(); ++i)
                if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag()))
                    return false;
        return true;
    }

    /// i.i.d. CN(0, variance) entries, drawn in row-major order.
    inline CMatrix sample_cgauss(SeededRng &rng, Index rows, Index cols, double variance)
    {
        detail::require(variance >= 0.0, "sample_cgauss: negative variance");
        CMatrix out(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j)
                out(i, j) = variance == 0.0 ? cplx{} : rng.cgauss(variance);
        return out;
    }

    namespace detail
    {
        // Hestenes one-sided Jacobi: rotates columns of `work` until mutually
        // orthogonal, accumulating the rotations in `v` so that a * v == work.
        inline void one_sided_jacobi(CMatrix &work, CMatrix &v)
        {
            const Index n = work.cols();
            v = CMatrix::Identity(n, n);
            constexpr double tol = 1e-15;
            for (int sweep = 0; sweep < 80; ++sweep)
            {
                bool rotated = false;
                for (Index p = 0; p + 1 < n; ++p)
                {
                    for (Index q = p + 1; q < n; ++q)
                    {
                        const double alpha = work.col(p).squaredNorm();
                        const double beta = work.col(q).squaredNorm();
                        const cplx gamma = work.col(p).dot(work.col(q)); // a_p^H a_q
                        const double g = std::abs(gamma);
                        if (g == 0.0 || g <= tol * std::sqrt(alpha * beta))
                            continue;
                        rotated = true;
                        const cplx phase = std::conj(gamma / g);
                        const double zeta = (beta - alpha) / (2.0 * g);
                        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                        const double c = 1.0 / std::sqrt(1.0 + t * t);
                        const double s = c * t;

                        const CVector wp = work.col(p);
                        const CVector wq = phase * work.col(q);
                        work.col(p) = c * wp - s * wq;
                        work.col(q) = s * wp + c * wq;

                        const CVector vp = v.col(p);
                        const CVector vq = phase * v.col(q);
                        v.col(p) = c * vp - s * vq;
                        v.col(q) = s * vp + c * vq;
                    }
                }
                if (!rotated)
                    break;
            }
        }

        // Replaces columns flagged invalid by unit vectors orthogonal to the rest.
        // Picks the coordinate vector with the largest residual each time.
        inline void complete_basis(CMatrix &q, std::vector<bool> valid)
        {
            const Index m = q.rows();
            for (Index j = 0; j < q.cols(); ++j)
            {
                if (valid[static_cast<std::size_t>(j)])
                    continue;
                CVector best;
                double best_norm = -1.0;
                for (Index e = 0; e < m; ++e)
                {
                    CVector cand = CVector::Zero(m);
                    cand(e) = 1.0;
                    for (int pass = 0; pass < 2; ++pass)
                        for (Index k = 0; k < q.cols(); ++k)
                            if (valid[static_cast<std::size_t>(k)])
                                cand -= q.col(k).dot(cand) * q.col(k);
                    const double nrm = cand.norm();
                    if (nrm > best_norm)
                    {
                        best_norm = nrm;
                        best = cand;
                    }
                }
                q.col(j) = best / best_norm;
                for (Index k = 0; k < q.cols(); ++k)
                    if (valid[static_cast<std::size_t>(k)])
                        q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
                q.col(j).normalize();
                valid[static_cast<std::size_t>(j)] = true;
            }
        }

        // Thin SVD of a tall (rows >= cols) matrix, U completed to square.
        inline SvdResult svd_tall(const CMatrix &a)
        {
            const Index m = a.rows();
            const Index n = a.cols();
            CMatrix work = a;
            CMatrix v;
            one_sided_jacobi(work, v);

            std::vector<double> norms(static_cast<std::size_t>(n));
            for (Index j = 0; j < n; ++j)
                norms[static_cast<std::size_t>(j)] = work.col(j).norm();
            std::vector<Index> order(static_cast<std::size_t>(n));
            std::iota(order.begin(), order.end(), Index{0});
            std::stable_sort(order.begin(), order.end(), [&](Index x, Index y)
                             { return norms[static_cast<std::size_t>(x)] > norms[static_cast<std::size_t>(y)]; });

            SvdResult out;
            out.u = CMatrix::Zero(m, m);
            out.v = CMatrix(n, n);
            out.s.resize(static_cast<std::size_t>(n));
            const double smax = n > 0 ? norms[static_cast<std::size_t>(order[0])] : 0.0;
            std::vector<bool> valid(static_cast<std::size_t>(m), false);
            for (Index j = 0; j < n; ++j)
            {
                const Index src = order[static_cast<std::size_t>(j)];
                const double sj = norms[static_cast<std::size_t>(src)];
                out.s[static_cast<std::size_t>(j)] = sj;
                out.v.col(j) = v.col(src);
                if (sj > 0.0 && sj > 1e-300 && sj >= 1e-14 * smax)
                {
                    out.u.col(j) = work.col(src) / sj;
                    valid[static_cast<std::size_t>(j)] = true;
                }
            }
            complete_basis(out.u, valid);
            return out;
        }
    } // namespace detail

    /// Singular value decomposition a = U diag(S) V^H with square unitary U, V
    /// and S descending. Intended for the small (<= 8x8) matrices of the link.
    inline SvdResult svd(const CMatrix &a)
    {
        detail::require(a.size() > 0, "svd: empty matrix");
        detail::require(all_finite(a), "svd: non-finite input");
        if (a.rows() >= a.cols())
            return detail::svd_tall(a);

        // a^H = U' S V'^H  =>  a = V' S U'^H
        SvdResult t = detail::svd_tall(a.adjoint());
        const Index m = a.rows();
        const Index n = a.cols();
        SvdResult out;
        out.s = t.s;
        out.u = t.v;
        out.v = CMatrix(n, n);
        out.v.leftCols(m) = t.u.leftCols(m);
        std::vector<bool> valid(static_cast<std::size_t>(n), false);
        for (Index j = 0; j < m; ++j)
            valid[static_cast<std::size_t>(j)] = true;
        out.v.rightCols(n - m).setZero();
        detail::complete_basis(out.v, valid);
        return out;
    }

    /// U * diag(S) * V^H with the rectangular diagonal implied by the shapes.
    inline CMatrix reconstruct(const SvdResult &r)
    {
        const Index k = static_cast<Index>(r.s.size());
        CMatrix d = CMatrix::Zero(r.u.cols(), r.v.cols());
        for (Index i = 0; i < k; ++i)
            d(i, i) = r.s[static_cast<std::size_t>(i)];
        return r.u * d * r.v.adjoint();
    }

    /// Rows-by-cols matrix from a row-major list of values.
    inline CMatrix from_rows(Index rows, Index cols, const std::vector<cplx> &values)
    {
        detail::require<DimensionError>(static_cast<Index>(values.size()) == rows * cols, "from_rows: size mismatch");
        CMatrix m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j)
                m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
        return m;
    }
} // namespace mimolab

/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/prox.hpp
 *
 * Copyright 2026 The shapelift authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef SHAPELIFT_PROX_HPP
#define SHAPELIFT_PROX_HPP

#include "shapelift/types.hpp"

#include "Eigen/SVD"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <vector>

namespace shapelift {
namespace prox {

/// Thin SVD of a 2 x 3 matrix: input = u * diag(sigma) * vt, sigma[0] >= sigma[1] >= 0.
struct SvdTriple
{
    Eigen::Matrix2d u;
    Eigen::Vector2d sigma;
    Matrix23d vt; ///< two orthonormal rows
};

namespace detail {

inline SvdTriple svd_2x3_general(const Matrix23d& a)
{
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdTriple out;
    out.u = svd.matrixU();
    out.sigma = svd.singularValues();
    out.vt = svd.matrixV().transpose();
    return out;
}

} // namespace detail

/**
 * SVD of a 2 x 3 matrix via the eigen-decomposition of the 2 x 2 Gram
 * matrix A A^T, which is cheap and deterministic. Falls back to a
 * general SVD when the two singular values nearly coincide
 * (sigma1 - sigma2 < 1e-12), where recovering the singular vectors from
 * the Gram matrix is ill conditioned.
 */
inline SvdTriple svd_2x3(const Matrix23d& a)
{
    const Eigen::Matrix2d gram = a * a.transpose();
    const double g00 = gram(0, 0), g11 = gram(1, 1);
    const double g01 = 0.5 * (gram(0, 1) + gram(1, 0));

    const double mean = 0.5 * (g00 + g11);
    const double det = g00 * g11 - g01 * g01;
    const double disc = std::sqrt(std::max(0.0, mean * mean - det));
    const double lambda1 = mean + disc;
    const double lambda2 = std::max(0.0, mean - disc);
    const double sigma1 = std::sqrt(std::max(0.0, lambda1));
    const double sigma2 = std::sqrt(lambda2);

    if (sigma1 - sigma2 < 1e-12) return detail::svd_2x3_general(a);

    Eigen::Vector2d u1;
    if (std::abs(g01) > 1e-300) {
        // Pick the better-conditioned of the two eigenvector expressions.
        const Eigen::Vector2d cand_a(g01, lambda1 - g00);
        const Eigen::Vector2d cand_b(lambda1 - g11, g01);
        u1 = cand_a.norm() >= cand_b.norm() ? cand_a : cand_b;
        u1.normalize();
    } else {
        u1 = g00 >= g11 ? Eigen::Vector2d(1, 0) : Eigen::Vector2d(0, 1);
    }
    const Eigen::Vector2d u2(-u1[1], u1[0]);

    SvdTriple out;
    out.u.col(0) = u1;
    out.u.col(1) = u2;
    out.sigma = Eigen::Vector2d(sigma1, sigma2);
    out.vt.row(0) = (u1.transpose() * a) / sigma1;
    if (sigma2 > 1e-13 * std::max(1.0, sigma1)) {
        out.vt.row(1) = (u2.transpose() * a) / sigma2;
    } else {
        // Rank-1 input: the second right singular vector is any unit
        // vector orthogonal to the first. Complete deterministically.
        const Eigen::Vector3d v1 = out.vt.row(0).transpose();
        int j = 0;
        v1.cwiseAbs().minCoeff(&j);
        Eigen::Vector3d v2 = Eigen::Vector3d::Unit(j) - v1[j] * v1;
        out.vt.row(1) = v2.normalized();
    }
    return out;
}

/// Largest singular value of a 2 x 3 matrix.
inline double spectral_norm(const Matrix23d& a)
{
    const Eigen::Matrix2d gram = a * a.transpose();
    const double mean = 0.5 * (gram(0, 0) + gram(1, 1));
    const double det = gram(0, 0) * gram(1, 1) - gram(0, 1) * gram(1, 0);
    const double disc = std::sqrt(std::max(0.0, mean * mean - det));
    return std::sqrt(std::max(0.0, mean + disc));
}

/// Sum of the two singular values of a 2 x 3 matrix.
inline double nuclear_norm(const Matrix23d& a)
{
    const Eigen::Matrix2d gram = a * a.transpose();
    const double mean = 0.5 * (gram(0, 0) + gram(1, 1));
    const double det = gram(0, 0) * gram(1, 1) - gram(0, 1) * gram(1, 0);
    const double disc = std::sqrt(std::max(0.0, mean * mean - det));
    return std::sqrt(std::max(0.0, mean + disc)) + std::sqrt(std::max(0.0, mean - disc));
}

/**
 * Euclidean projection of a nonnegative vector onto the l1 ball of the
 * given radius, by sorting and thresholding: finds tau such that
 * sum_i max(v_i - tau, 0) = radius when the input lies outside the ball.
 */
inline Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius)
{
    assert(radius > 0.0);
    if (v.sum() <= radius) return v;

    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::stable_sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cumulative = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        cumulative += sorted[j];
        const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
        if (sorted[j] - candidate > 0.0) tau = candidate;
    }
    return (v.array() - tau).max(0.0).matrix();
}

/**
 * Proximal operator of the spectral norm for a 2 x 3 matrix:
 * the minimizer of 0.5 * ||A - X||_F^2 + lambda * ||X||_2.
 *
 * Computed as U * diag(sigma - lambda * P(sigma / lambda)) * V^T where P
 * is the projection onto the unit l1 ball. Shrinks the matrix toward
 * zero and drives the two singular values toward each other, so small
 * blocks are pruned and surviving blocks are pushed toward (scaled)
 * orthogonality. The output is exactly zero iff the nuclear norm of A
 * is <= lambda.
 */
inline Matrix23d prox_spectral(const Matrix23d& a, double lambda)
{
    assert(lambda >= 0.0);
    if (lambda == 0.0) return a; // avoid 0/0 in sigma/lambda

    const SvdTriple svd = svd_2x3(a);
    const Eigen::VectorXd projected = project_l1_ball(svd.sigma / lambda, 1.0);
    const Eigen::Vector2d shrunk =
        (svd.sigma - lambda * projected).cwiseMax(0.0); // exact math keeps this >= 0
    return svd.u * shrunk.asDiagonal() * svd.vt;
}

/// Elementwise soft-thresholding: sign(x) * max(|x| - beta, 0).
inline Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& x, double beta)
{
    assert(beta >= 0.0);
    return (x.array().sign() * (x.array().abs() - beta).max(0.0)).matrix();
}

} // namespace prox
} // namespace shapelift

#endif /* SHAPELIFT_PROX_HPP */

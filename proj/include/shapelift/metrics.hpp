/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/metrics.hpp
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

#ifndef SHAPELIFT_METRICS_HPP
#define SHAPELIFT_METRICS_HPP

#include "shapelift/types.hpp"

#include "Eigen/SVD"

#include <stdexcept>

namespace shapelift {

struct ProcrustesResult
{
    Rotation rotation;
    double scale = 1.0;
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    Shape3D aligned;   ///< scale * R * a + t, column-wise
    double residual = 0.0; ///< Frobenius norm of (aligned - b)
};

/**
 * Finds the similarity transform (R, s, t) minimizing
 * || s * R * a + t * 1^T - b ||_F over rotations, using the SVD-based
 * closed form with determinant correction (Kabsch convention).
 */
inline ProcrustesResult procrustes_align(const Shape3D& a, const Shape3D& b)
{
    if (a.landmark_count() != b.landmark_count())
        throw std::invalid_argument("procrustes_align: landmark counts differ");

    const Eigen::Vector3d mean_a = a.points.rowwise().mean();
    const Eigen::Vector3d mean_b = b.points.rowwise().mean();
    Eigen::Matrix3Xd ac = a.points.colwise() - mean_a;
    Eigen::Matrix3Xd bc = b.points.colwise() - mean_b;

    const double a_norm_sq = ac.squaredNorm();
    if (a_norm_sq <= 0.0 || bc.squaredNorm() <= 0.0)
        throw std::invalid_argument("procrustes_align: degenerate shape");

    const Eigen::Matrix3d h = bc * ac.transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d signs = Eigen::Vector3d::Ones();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) signs[2] = -1.0;
    const Eigen::Matrix3d r = svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();

    const double scale = (svd.singularValues().array() * signs.array()).sum() / a_norm_sq;
    const Eigen::Vector3d t = mean_b - scale * (r * mean_a);

    Eigen::Matrix3Xd aligned = scale * (r * a.points);
    aligned.colwise() += t;
    const double residual = (aligned - b.points).norm();
    return {Rotation(r), scale, t, Shape3D(std::move(aligned)), residual};
}

/**
 * Mean per-landmark Euclidean distance after aligning the estimate to
 * the ground truth with translation and a nonnegative uniform scale
 * only. Rotation is deliberately not compensated, so viewpoint errors
 * count.
 */
inline double error_3d(const Shape3D& estimate, const Shape3D& truth)
{
    if (estimate.landmark_count() != truth.landmark_count())
        throw std::invalid_argument("error_3d: landmark counts differ");

    const Eigen::Matrix3Xd ec = estimate.points.colwise() - estimate.points.rowwise().mean().eval();
    const Eigen::Matrix3Xd tc = truth.points.colwise() - truth.points.rowwise().mean().eval();
    if (tc.squaredNorm() <= 0.0) throw std::invalid_argument("error_3d: degenerate truth");

    const double denom = ec.squaredNorm();
    // Closed-form optimal scale, clamped to >= 0 so a reflected/inverted
    // estimate is not rewarded by a negative scale.
    const double scale = denom > 0.0 ? std::max(0.0, (ec.array() * tc.array()).sum() / denom) : 0.0;
    return (scale * ec - tc).colwise().norm().mean();
}

/// Mean Euclidean distance per mutually visible landmark.
inline double error_2d(const Landmarks2D& model, const Landmarks2D& annotation)
{
    if (model.landmark_count() != annotation.landmark_count())
        throw std::invalid_argument("error_2d: landmark counts differ");
    double sum = 0.0;
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < model.landmark_count(); ++i) {
        if (!model.visibility[i] || !annotation.visibility[i]) continue;
        sum += (model.points.col(i) - annotation.points.col(i)).norm();
        ++n;
    }
    if (n == 0) throw std::invalid_argument("error_2d: no mutually visible landmarks");
    return sum / static_cast<double>(n);
}

} // namespace shapelift

#endif /* SHAPELIFT_METRICS_HPP */

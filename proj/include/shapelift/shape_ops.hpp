/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/shape_ops.hpp
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

#ifndef SHAPELIFT_SHAPE_OPS_HPP
#define SHAPELIFT_SHAPE_OPS_HPP

#include "shapelift/types.hpp"

#include <stdexcept>

namespace shapelift {

template <typename ValueT, int Dim>
struct CentralizeResult
{
    ValueT value;
    Eigen::Matrix<double, Dim, 1> mean;
};

/// Removes the row means of a 3D shape. Idempotent.
inline CentralizeResult<Shape3D, 3> centralize(const Shape3D& shape)
{
    const Eigen::Vector3d mean = shape.points.rowwise().mean();
    Eigen::Matrix3Xd pts = shape.points;
    pts.colwise() -= mean;
    return {Shape3D(std::move(pts)), mean};
}

/**
 * Removes the row means of 2D landmarks, computed over visible columns
 * only. The mean is subtracted from every column, visible or not, so
 * the visible part is exactly centered and invisible entries stay
 * consistent with the shift.
 */
inline CentralizeResult<Landmarks2D, 2> centralize(const Landmarks2D& landmarks)
{
    const Eigen::Index nvis = landmarks.visible_count();
    if (nvis == 0) throw std::invalid_argument("centralize: no observations");
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (Eigen::Index i = 0; i < landmarks.landmark_count(); ++i)
        if (landmarks.visibility[i]) mean += landmarks.points.col(i);
    mean /= static_cast<double>(nvis);
    Eigen::Matrix2Xd pts = landmarks.points;
    pts.colwise() -= mean;
    return {Landmarks2D(std::move(pts), landmarks.visibility), mean};
}

template <typename ValueT>
struct NormalizeResult
{
    ValueT value;
    double sigma; ///< divide by this to normalize, multiply to undo
};

namespace detail {

inline double unit_variance_sigma(double sum_sq, Eigen::Index entries)
{
    if (entries == 0) throw std::invalid_argument("normalize_unit_variance: no observations");
    const double sigma = std::sqrt(sum_sq / static_cast<double>(entries));
    if (!(sigma > 0.0)) throw std::invalid_argument("normalize_unit_variance: degenerate shape");
    return sigma;
}

} // namespace detail

/**
 * Scales a centralized shape so that the average variance per direction
 * is one: divides by sigma with sigma^2 = sum(entries^2) / (3 p).
 */
inline NormalizeResult<Shape3D> normalize_unit_variance(const Shape3D& shape)
{
    const double sigma =
        detail::unit_variance_sigma(shape.points.squaredNorm(), 3 * shape.landmark_count());
    return {Shape3D(shape.points / sigma), sigma};
}

/// Same as above for 2D landmarks; sums and counts run over visible columns only.
inline NormalizeResult<Landmarks2D> normalize_unit_variance(const Landmarks2D& landmarks)
{
    double sum_sq = 0.0;
    Eigen::Index nvis = 0;
    for (Eigen::Index i = 0; i < landmarks.landmark_count(); ++i)
        if (landmarks.visibility[i]) {
            sum_sq += landmarks.points.col(i).squaredNorm();
            ++nvis;
        }
    const double sigma = detail::unit_variance_sigma(sum_sq, 2 * nvis);
    return {Landmarks2D(landmarks.points / sigma, landmarks.visibility), sigma};
}

} // namespace shapelift

#endif /* SHAPELIFT_SHAPE_OPS_HPP */

/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/types.hpp
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

#ifndef SHAPELIFT_TYPES_HPP
#define SHAPELIFT_TYPES_HPP

#include "Eigen/Core"
#include "Eigen/Geometry"

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace shapelift {

using Matrix23d = Eigen::Matrix<double, 2, 3>;
using VisibilityMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/**
 * A 3D shape defined by p ordered landmarks, stored as a 3 x p matrix
 * (one column per landmark). A shape is "centralized" when every row
 * has zero mean.
 */
struct Shape3D
{
    Eigen::Matrix3Xd points;

    Shape3D() = default;

    explicit Shape3D(Eigen::Matrix3Xd pts) : points(std::move(pts))
    {
        if (points.cols() < 1)
            throw std::invalid_argument("Shape3D: landmark count must be >= 1");
        if (!points.allFinite())
            throw std::invalid_argument("Shape3D: entries must be finite");
    }

    Eigen::Index landmark_count() const { return points.cols(); }

    bool is_centralized(double tol = 1e-9) const
    {
        return points.rowwise().mean().cwiseAbs().maxCoeff() <= tol;
    }
};

/**
 * 2D landmark observations, 2 x p, with a per-landmark visibility flag.
 * A landmark is visible or invisible as a whole; solvers ignore the
 * coordinates stored at invisible positions.
 */
struct Landmarks2D
{
    Eigen::Matrix2Xd points;
    VisibilityMask visibility;

    Landmarks2D() = default;

    explicit Landmarks2D(Eigen::Matrix2Xd pts)
        : points(std::move(pts)), visibility(VisibilityMask::Constant(points.cols(), true))
    {
        check();
    }

    Landmarks2D(Eigen::Matrix2Xd pts, VisibilityMask vis)
        : points(std::move(pts)), visibility(std::move(vis))
    {
        if (visibility.size() != points.cols())
            throw std::invalid_argument("Landmarks2D: visibility length must equal landmark count");
        check();
    }

    Eigen::Index landmark_count() const { return points.cols(); }

    Eigen::Index visible_count() const
    {
        Eigen::Index n = 0;
        for (Eigen::Index i = 0; i < visibility.size(); ++i)
            if (visibility[i]) ++n;
        return n;
    }

private:
    void check() const
    {
        if (points.cols() < 1)
            throw std::invalid_argument("Landmarks2D: landmark count must be >= 1");
        for (Eigen::Index i = 0; i < points.cols(); ++i)
            if ((visibility.size() == 0 || visibility[i]) && !points.col(i).allFinite())
                throw std::invalid_argument("Landmarks2D: visible entries must be finite");
    }
};

/// Weak-perspective camera: orthographic projection followed by a uniform scale.
struct CameraWeakPerspective
{
    double scale = 1.0;

    CameraWeakPerspective() = default;

    explicit CameraWeakPerspective(double s) : scale(s)
    {
        if (!(s > 0.0))
            throw std::invalid_argument("CameraWeakPerspective: scale must be positive");
    }
};

/**
 * A proper rotation (element of SO(3)). The first two rows form the
 * 2 x 3 matrix that maps a 3D point into the image plane of an
 * orthographic camera.
 */
struct Rotation
{
    Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();

    Rotation() = default;
    explicit Rotation(Eigen::Matrix3d m) : matrix(std::move(m)) {}

    static Rotation identity() { return Rotation{}; }

    static Rotation about_x(double angle)
    {
        return Rotation(Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitX()).toRotationMatrix());
    }
    static Rotation about_y(double angle)
    {
        return Rotation(Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix());
    }
    static Rotation about_z(double angle)
    {
        return Rotation(Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix());
    }

    /// Z-Y-Z Euler angle composition: Rz(a) * Ry(b) * Rz(c).
    static Rotation from_euler_zyz(double a, double b, double c)
    {
        return Rotation((Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()) *
                         Eigen::AngleAxisd(b, Eigen::Vector3d::UnitY()) *
                         Eigen::AngleAxisd(c, Eigen::Vector3d::UnitZ()))
                            .toRotationMatrix());
    }

    /**
     * Completes a 2 x 3 matrix with orthonormal rows to a full rotation;
     * the third row is the cross product of the first two, which makes
     * the determinant +1.
     */
    static Rotation from_top_rows(const Matrix23d& top)
    {
        Eigen::Matrix3d m;
        m.row(0) = top.row(0);
        m.row(1) = top.row(1);
        m.row(2) = top.row(0).cross(top.row(1));
        return Rotation(std::move(m));
    }

    Matrix23d top_rows() const { return matrix.topRows<2>(); }

    bool is_valid(double tol = 1e-8) const
    {
        const Eigen::Matrix3d gram = matrix.transpose() * matrix;
        return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
               std::abs(matrix.determinant() - 1.0) <= tol;
    }
};

/// Basis-shape weights. In nonnegative mode every entry is >= 0.
struct Coefficients
{
    Eigen::VectorXd values;

    Coefficients() = default;
    explicit Coefficients(Eigen::VectorXd v) : values(std::move(v)) {}

    Eigen::Index size() const { return values.size(); }
    bool is_nonnegative(double tol = 0.0) const { return values.minCoeff() >= -tol; }
};

/**
 * An ordered set of k basis shapes sharing the same landmark count p,
 * together with the cached 3k x p stacked form used by the solvers.
 *
 * Conventions for learned dictionaries: every basis is centralized and
 * has Frobenius norm <= 1, and shapes are represented with nonnegative
 * weights. Randomly generated dictionaries need not follow either.
 */
class ShapeDictionary
{
public:
    bool nonneg = true;
    bool normalized = false;

    ShapeDictionary() = default;

    explicit ShapeDictionary(std::vector<Shape3D> bases, bool nonneg_mode = true,
                             bool normalized_mode = false)
        : nonneg(nonneg_mode), normalized(normalized_mode), bases_(std::move(bases))
    {
        if (bases_.empty()) throw std::invalid_argument("ShapeDictionary: needs at least one basis");
        const Eigen::Index p = bases_[0].landmark_count();
        for (const auto& b : bases_)
            if (b.landmark_count() != p)
                throw std::invalid_argument("ShapeDictionary: all bases must share the landmark count");
        stacked_.resize(3 * static_cast<Eigen::Index>(bases_.size()), p);
        for (Eigen::Index i = 0; i < basis_count(); ++i)
            stacked_.middleRows(3 * i, 3) = bases_[static_cast<std::size_t>(i)].points;
    }

    Eigen::Index basis_count() const { return static_cast<Eigen::Index>(bases_.size()); }
    Eigen::Index landmark_count() const { return bases_.empty() ? 0 : bases_[0].landmark_count(); }

    const Shape3D& basis(Eigen::Index i) const { return bases_.at(static_cast<std::size_t>(i)); }
    const std::vector<Shape3D>& bases() const { return bases_; }

    /// Row-stacked form [B_1; ...; B_k], 3k x p.
    const Eigen::MatrixXd& stacked() const { return stacked_; }

private:
    std::vector<Shape3D> bases_;
    Eigen::MatrixXd stacked_;
};

/// S = sum_i c_i * B_i.
inline Shape3D compose_shape(const ShapeDictionary& dict, const Coefficients& c)
{
    if (c.size() != dict.basis_count())
        throw std::invalid_argument("compose_shape: coefficient count must equal basis count");
    Eigen::Matrix3Xd s = Eigen::Matrix3Xd::Zero(3, dict.landmark_count());
    for (Eigen::Index i = 0; i < dict.basis_count(); ++i)
        s += c.values[i] * dict.basis(i).points;
    return Shape3D(std::move(s));
}

/// S = sum_i c_i * R_i * B_i, one rotation per basis.
inline Shape3D compose_relaxed(const ShapeDictionary& dict, const Coefficients& c,
                               const std::vector<Rotation>& rotations)
{
    if (c.size() != dict.basis_count() ||
        static_cast<Eigen::Index>(rotations.size()) != dict.basis_count())
        throw std::invalid_argument("compose_relaxed: coefficient/rotation counts must equal basis count");
    Eigen::Matrix3Xd s = Eigen::Matrix3Xd::Zero(3, dict.landmark_count());
    for (Eigen::Index i = 0; i < dict.basis_count(); ++i)
        s += c.values[i] * (rotations[static_cast<std::size_t>(i)].matrix * dict.basis(i).points);
    return Shape3D(std::move(s));
}

/// W = s * (Rbar * S) + t * 1^T, with every landmark marked visible.
inline Landmarks2D project_weak_perspective(const Shape3D& shape, const CameraWeakPerspective& camera,
                                            const Rotation& rotation,
                                            const Eigen::Vector2d& translation = Eigen::Vector2d::Zero())
{
    Eigen::Matrix2Xd w = camera.scale * (rotation.top_rows() * shape.points);
    w.colwise() += translation;
    return Landmarks2D(std::move(w));
}

} // namespace shapelift

#endif /* SHAPELIFT_TYPES_HPP */

/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/reconstruct.hpp
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

#ifndef SHAPELIFT_RECONSTRUCT_HPP
#define SHAPELIFT_RECONSTRUCT_HPP

#include "shapelift/solver.hpp"

#include "Eigen/Eigenvalues"

#include <cmath>
#include <random>
#include <stdexcept>

namespace shapelift {

struct DirectReconstruction
{
    Shape3D shape;
    Coefficients coefficients;
    std::vector<Rotation> rotations;
};

/**
 * Recovers the per-basis weights and rotations from the motion blocks
 * and composes the 3D shape under the rotatable-basis model:
 * c_i = ||M_i||_2 and the rotation rows come from the polar factor of
 * M_i, completed by a cross product so det = +1. For an exactly
 * orthogonal block (M_i M_i^T = c_i^2 I) this inverts the construction;
 * a non-orthogonal block is projected to the nearest scaled rotation,
 * so recomposing c_i * Rbar_i does not reproduce M_i in that case.
 * Blocks with c_i <= eps are skipped and contribute nothing.
 */
inline DirectReconstruction direct_reconstruct(const MotionStack& m, const ShapeDictionary& dict,
                                               double eps = 1e-9)
{
    if (m.block_count() != dict.basis_count())
        throw std::invalid_argument("direct_reconstruct: block count must equal basis count");

    const Eigen::Index k = dict.basis_count();
    DirectReconstruction out;
    out.coefficients.values = Eigen::VectorXd::Zero(k);
    out.rotations.assign(static_cast<std::size_t>(k), Rotation::identity());
    Eigen::Matrix3Xd s = Eigen::Matrix3Xd::Zero(3, dict.landmark_count());

    for (Eigen::Index i = 0; i < k; ++i) {
        const auto svd = prox::svd_2x3(m.block(i));
        const double c = svd.sigma[0];
        out.coefficients.values[i] = c;
        if (c <= eps) continue;
        const Matrix23d rbar = svd.u * svd.vt;
        const Rotation r = Rotation::from_top_rows(rbar);
        out.rotations[static_cast<std::size_t>(i)] = r;
        s += c * (r.matrix * dict.basis(i).points);
    }
    out.shape = Shape3D(std::move(s));
    return out;
}

struct SyncOptions
{
    int max_iter = 200;
    double tol = 1e-12;   ///< stop when the objective decrease falls below tol * max(1, objective)
    int restarts = 1;     ///< total starts; the first is deterministic, extras are seeded random
    std::uint64_t seed = 0;
};

struct SyncResult
{
    Coefficients coefficients;
    Rotation rotation;
    double residual = 0.0; ///< final value of sum_i ||M_i - c_i Rbar||_F^2
};

namespace detail {

inline Matrix23d polar_2x3(const Matrix23d& a)
{
    const auto svd = prox::svd_2x3(a);
    return svd.u * svd.vt;
}

inline double sync_objective(const MotionStack& m, const Eigen::VectorXd& c, const Matrix23d& rbar)
{
    double obj = 0.0;
    for (Eigen::Index i = 0; i < m.block_count(); ++i)
        obj += (m.block(i) - c[i] * rbar).squaredNorm();
    return obj;
}

} // namespace detail

/**
 * Fits a single rotation and nonnegative weights to the motion blocks:
 *   min over c >= 0, Rbar with Rbar Rbar^T = I of sum_i ||M_i - c_i Rbar||_F^2.
 *
 * Alternates two exact updates: c_i = max(0, <M_i, Rbar> / 2) and
 * Rbar = polar factor of sum_i c_i M_i, so the objective never
 * increases. The first start orthonormalizes the block with the largest
 * spectral norm; additional seeded random starts can be requested and
 * the best result is returned. A large residual signals that the blocks
 * do not share a rotation and the consensus is unreliable.
 */
inline SyncResult sync_rotations(const MotionStack& m, const SyncOptions& opts = {})
{
    const Eigen::Index k = m.block_count();
    if (m.stacked.norm() == 0.0)
        throw std::invalid_argument("sync_rotations: nothing to synchronize");

    // Deterministic start: the dominant block, orthonormalized.
    Eigen::Index dominant = 0;
    double best_norm = -1.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        const double s = prox::spectral_norm(m.block(i));
        if (s > best_norm) {
            best_norm = s;
            dominant = i;
        }
    }

    std::vector<Matrix23d> starts;
    starts.push_back(detail::polar_2x3(m.block(dominant)));
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int r = 1; r < opts.restarts; ++r) {
        Matrix23d g;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 3; ++b) g(a, b) = gauss(rng);
        starts.push_back(detail::polar_2x3(g));
    }

    SyncResult best;
    bool have_best = false;
    for (const Matrix23d& start : starts) {
        Matrix23d rbar = start;
        Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
        double obj = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < opts.max_iter; ++iter) {
            for (Eigen::Index i = 0; i < k; ++i)
                c[i] = std::max(0.0, 0.5 * (m.block(i).array() * rbar.array()).sum());
            Matrix23d weighted = Matrix23d::Zero();
            for (Eigen::Index i = 0; i < k; ++i) weighted += c[i] * m.block(i);
            if (weighted.norm() > 0.0) rbar = detail::polar_2x3(weighted);
            const double next = detail::sync_objective(m, c, rbar);
            if (obj - next < opts.tol * std::max(1.0, obj)) {
                obj = next;
                break;
            }
            obj = next;
        }
        if (!have_best || obj < best.residual) {
            best.coefficients.values = c;
            best.rotation = Rotation::from_top_rows(rbar);
            best.residual = obj;
            have_best = true;
        }
    }
    return best;
}

/**
 * Nonnegative l1-penalized least squares
 *   min over x >= 0 of 0.5 * ||A x - b||^2 + alpha * sum(x),
 * solved by an accelerated proximal-gradient method with a monotone
 * safeguard (the best iterate seen, including the warm start, is
 * returned). With alpha = 0 this is plain nonnegative least squares.
 */
inline Eigen::VectorXd nonneg_l1_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                               double alpha, const Eigen::VectorXd& x0,
                                               double tol = 1e-8, int max_iter = 5000)
{
    const Eigen::Index k = a.cols();
    const Eigen::MatrixXd gram = a.transpose() * a;
    const Eigen::VectorXd atb = a.transpose() * b;
    const double lipschitz =
        std::max(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues().maxCoeff(), 1e-12);
    const double step = 1.0 / lipschitz;

    const auto value = [&](const Eigen::VectorXd& x) {
        return 0.5 * (a * x - b).squaredNorm() + alpha * x.sum();
    };

    Eigen::VectorXd x = x0.size() == k ? x0.cwiseMax(0.0).eval() : Eigen::VectorXd::Zero(k).eval();
    Eigen::VectorXd momentum = x;
    Eigen::VectorXd best_x = x;
    double best_value = value(x);
    double theta = 1.0;

    for (int iter = 0; iter < max_iter; ++iter) {
        const Eigen::VectorXd grad = gram * momentum - atb;
        const Eigen::VectorXd x_next = ((momentum - step * grad).array() - step * alpha).matrix();
        const Eigen::VectorXd x_proj = x_next.cwiseMax(0.0);

        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        momentum = x_proj + ((theta - 1.0) / theta_next) * (x_proj - x);

        const double move = (x_proj - x).norm();
        x = x_proj;
        theta = theta_next;

        const double v = value(x);
        if (v < best_value) {
            best_value = v;
            best_x = x;
        }
        if (move <= tol * std::max(1.0, x.norm())) break;
    }
    return best_x;
}

/// Value of the single-rotation objective 0.5 * ||W - Rbar * sum_i c_i B_i||_F^2 + alpha * ||c||_1
/// over visible landmarks.
inline double objective_bilinear(const Landmarks2D& w, const ShapeDictionary& dict,
                                 const Coefficients& c, const Rotation& rotation, double alpha)
{
    const auto problem = detail::drop_invisible(w, dict);
    const Eigen::Index k = dict.basis_count();
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, problem.w.cols());
    for (Eigen::Index i = 0; i < k; ++i) s += c.values[i] * problem.b.middleRows(3 * i, 3);
    return 0.5 * (problem.w - rotation.top_rows() * s).squaredNorm() +
           alpha * c.values.cwiseAbs().sum();
}

enum class RotationUpdate
{
    svd_projection,  ///< one-shot polar factor of W S^T; approximate, may increase the objective
    stiefel_gradient ///< projected gradient with polar retraction and backtracking; enforces descent
};

struct AlternatingOptions
{
    RotationUpdate rot_mode = RotationUpdate::stiefel_gradient;
    int max_outer = 200;
    double outer_tol = 1e-8;   ///< stop when the objective decrease drops below this
    double subproblem_tol = 1e-8;
    int rot_steps = 50;        ///< inner projected-gradient steps per outer iteration
};

struct AlternatingResult
{
    Coefficients coefficients;
    Rotation rotation;
    double objective = 0.0;
    int iterations = 0;
    /// Objective value at the start and after every half-step (c update, rotation update).
    std::vector<double> objective_trace;
};

/**
 * Alternating minimization of the nonconvex single-rotation model:
 * fixes the rotation and solves the nonnegative l1 subproblem for c,
 * then updates the rotation per rot_mode. In stiefel_gradient mode
 * every step is safeguarded so the objective sequence is monotonically
 * non-increasing; svd_projection replicates the classic approximate
 * update and carries no such guarantee. The result depends on the
 * initialization; see refine_reconstruct for the recommended one.
 */
inline AlternatingResult alternating_minimize(const Landmarks2D& w, const ShapeDictionary& dict,
                                              const Coefficients& init_c, const Rotation& init_r,
                                              double alpha, const AlternatingOptions& opts = {})
{
    if (init_c.size() != dict.basis_count())
        throw std::invalid_argument("alternating_minimize: coefficient count must equal basis count");
    const auto problem = detail::drop_invisible(w, dict);
    const Eigen::Index k = dict.basis_count();
    const Eigen::Index pv = problem.w.cols();

    const Eigen::VectorXd w_vec = Eigen::Map<const Eigen::VectorXd>(problem.w.data(), 2 * pv);

    Eigen::VectorXd c = init_c.values.cwiseMax(0.0);
    Matrix23d rbar = init_r.top_rows();

    const auto compose_visible = [&](const Eigen::VectorXd& coeff) {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, pv);
        for (Eigen::Index i = 0; i < k; ++i) s += coeff[i] * problem.b.middleRows(3 * i, 3);
        return s;
    };
    const auto objective = [&](const Eigen::VectorXd& coeff, const Matrix23d& rot) {
        return 0.5 * (problem.w - rot * compose_visible(coeff)).squaredNorm() + alpha * coeff.sum();
    };

    double obj = objective(c, rbar);
    std::vector<double> trace;
    trace.reserve(2 * static_cast<std::size_t>(opts.max_outer) + 1);
    trace.push_back(obj);
    int outer = 0;
    for (; outer < opts.max_outer; ++outer) {
        // c step: nonnegative l1 least squares at fixed rotation.
        Eigen::MatrixXd design(2 * pv, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            const Eigen::MatrixXd col = rbar * problem.b.middleRows(3 * i, 3);
            design.col(i) = Eigen::Map<const Eigen::VectorXd>(col.data(), 2 * pv);
        }
        const Eigen::VectorXd c_next =
            nonneg_l1_least_squares(design, w_vec, alpha, c, opts.subproblem_tol);
        if (objective(c_next, rbar) <= obj) c = c_next; // safeguard against subproblem tolerance noise
        trace.push_back(objective(c, rbar));

        // rotation step
        const Eigen::MatrixXd s = compose_visible(c);
        if (opts.rot_mode == RotationUpdate::svd_projection) {
            const Matrix23d target = problem.w * s.transpose();
            if (target.norm() > 0.0) rbar = detail::polar_2x3(target);
        } else {
            const double lip = std::max(
                Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>((s * s.transpose()).eval())
                    .eigenvalues()
                    .maxCoeff(),
                1e-12);
            for (int step = 0; step < opts.rot_steps; ++step) {
                const Matrix23d grad = (rbar * s - problem.w) * s.transpose();
                // Riemannian gradient: project out the component normal to the constraint.
                const Eigen::Matrix2d sym =
                    0.5 * (grad * rbar.transpose() + rbar * grad.transpose());
                const Matrix23d tangent = grad - sym * rbar;
                const double tangent_norm = tangent.norm();
                if (tangent_norm <= 1e-12 * std::max(1.0, grad.norm())) break;

                double t = 1.0 / lip;
                const double f0 = 0.5 * (problem.w - rbar * s).squaredNorm();
                bool moved = false;
                for (int bt = 0; bt < 40; ++bt) {
                    const Matrix23d candidate = detail::polar_2x3(rbar - t * tangent);
                    const double f1 = 0.5 * (problem.w - candidate * s).squaredNorm();
                    if (f1 <= f0 - 1e-4 * t * tangent_norm * tangent_norm) {
                        rbar = candidate;
                        moved = true;
                        break;
                    }
                    t *= 0.5;
                }
                if (!moved) break;
            }
        }

        const double next = objective(c, rbar);
        trace.push_back(next);
        // In stiefel_gradient mode next <= obj always; the svd update may
        // overshoot, so stall on the magnitude of the change.
        const bool stalled = std::abs(obj - next) < opts.outer_tol;
        obj = next;
        if (stalled) {
            ++outer;
            break;
        }
    }

    AlternatingResult out;
    out.coefficients.values = c;
    out.rotation = Rotation::from_top_rows(rbar);
    out.objective = obj;
    out.iterations = outer;
    out.objective_trace = std::move(trace);
    return out;
}

struct RefineOptions
{
    SyncOptions sync;
    AlternatingOptions alternating;
    /// Sync residual above this fraction of the total block energy marks the consensus as unreliable.
    double degenerate_ratio = 0.3;
};

struct RefineResult
{
    Shape3D shape;
    Coefficients coefficients;
    Rotation rotation;
    double objective_initial = 0.0; ///< single-rotation objective at the synchronized initialization
    double objective_refined = 0.0;
    double sync_residual = 0.0;
    bool degenerate_rotations = false;
};

/**
 * Full refinement pipeline: synchronizes the motion blocks to a single
 * rotation and weights, refines both by alternating minimization, and
 * composes the shape under the single-rotation model S = sum_i c_i B_i.
 * When the blocks disagree strongly (large synchronization residual)
 * the result is flagged; the consensus initialization is then
 * unreliable and the direct reconstruction may be preferable.
 */
inline RefineResult refine_reconstruct(const MotionStack& m, const Landmarks2D& w,
                                       const ShapeDictionary& dict, double alpha,
                                       const RefineOptions& opts = {})
{
    const SyncResult sync = sync_rotations(m, opts.sync);

    RefineResult out;
    out.sync_residual = sync.residual;
    const double energy = m.stacked.squaredNorm();
    out.degenerate_rotations = sync.residual > opts.degenerate_ratio * std::max(energy, 1e-300);
    out.objective_initial = objective_bilinear(w, dict, sync.coefficients, sync.rotation, alpha);

    const AlternatingResult refined =
        alternating_minimize(w, dict, sync.coefficients, sync.rotation, alpha, opts.alternating);
    out.coefficients = refined.coefficients;
    out.rotation = refined.rotation;
    out.objective_refined = refined.objective;
    out.shape = compose_shape(dict, refined.coefficients);
    return out;
}

} // namespace shapelift

#endif /* SHAPELIFT_RECONSTRUCT_HPP */

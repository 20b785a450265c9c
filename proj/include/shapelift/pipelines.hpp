/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/pipelines.hpp
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

#ifndef SHAPELIFT_PIPELINES_HPP
#define SHAPELIFT_PIPELINES_HPP

#include "shapelift/metrics.hpp"
#include "shapelift/reconstruct.hpp"
#include "shapelift/robust.hpp"
#include "shapelift/shape_ops.hpp"
#include "shapelift/solver.hpp"
#include "shapelift/synthetic.hpp"

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace shapelift {
namespace synth {

/// Nonnegative least-squares fit of the dictionary to the mean shape; the
/// standard initialization of the alternating baseline.
inline Coefficients mean_shape_coefficients(const ShapeDictionary& dict, const Shape3D& mean_shape)
{
    const Eigen::Index p = dict.landmark_count();
    if (mean_shape.landmark_count() != p)
        throw std::invalid_argument("mean_shape_coefficients: landmark counts differ");
    Eigen::MatrixXd design(3 * p, dict.basis_count());
    for (Eigen::Index i = 0; i < dict.basis_count(); ++i)
        design.col(i) = Eigen::Map<const Eigen::VectorXd>(dict.basis(i).points.data(), 3 * p);
    const Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(mean_shape.points.data(), 3 * p);
    return Coefficients(
        nonneg_l1_least_squares(design, target, 0.0, Eigen::VectorXd::Zero(dict.basis_count())));
}

/// Mean of the dictionary bases; the fallback mean shape when no training set is available.
inline Shape3D dictionary_mean_shape(const ShapeDictionary& dict)
{
    Eigen::Matrix3Xd mean = Eigen::Matrix3Xd::Zero(3, dict.landmark_count());
    for (Eigen::Index i = 0; i < dict.basis_count(); ++i) mean += dict.basis(i).points;
    mean /= static_cast<double>(dict.basis_count());
    return Shape3D(std::move(mean));
}

struct RobustAlternatingResult
{
    Coefficients coefficients;
    Rotation rotation;
    Eigen::Matrix2Xd outliers;
    Eigen::Vector2d translation;
    double objective = 0.0;
};

/**
 * Outlier-aware variant of the alternating baseline: minimizes
 *   0.5 * ||W - Rbar S(c) - E - T 1^T||_F^2 + alpha * sum(c) + beta * ||E||_1
 * by cycling exact updates of c, Rbar (svd projection, as the plain
 * baseline), E (soft-thresholding) and T (row means). Like the plain
 * baseline it starts from the mean shape and is sensitive to that
 * initialization.
 */
inline RobustAlternatingResult robust_alternating(const Landmarks2D& w, const ShapeDictionary& dict,
                                                  const Coefficients& init_c, const Rotation& init_r,
                                                  double alpha, double beta, int max_outer = 200,
                                                  double tol = 1e-8)
{
    const auto problem = detail::drop_invisible(w, dict);
    const Eigen::Index k = dict.basis_count();
    const Eigen::Index pv = problem.w.cols();

    Eigen::VectorXd c = init_c.values.cwiseMax(0.0);
    Matrix23d rbar = init_r.top_rows();
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(2, pv);
    Eigen::Vector2d t = Eigen::Vector2d::Zero();

    const auto compose_visible = [&](const Eigen::VectorXd& coeff) {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, pv);
        for (Eigen::Index i = 0; i < k; ++i) s += coeff[i] * problem.b.middleRows(3 * i, 3);
        return s;
    };
    const auto objective = [&]() {
        return 0.5 * ((problem.w - rbar * compose_visible(c) - e).colwise() - t).squaredNorm() +
               alpha * c.sum() + beta * e.cwiseAbs().sum();
    };

    double obj = objective();
    for (int outer = 0; outer < max_outer; ++outer) {
        const Eigen::MatrixXd w_eff = (problem.w - e).colwise() - t;
        const Eigen::VectorXd w_vec = Eigen::Map<const Eigen::VectorXd>(w_eff.data(), 2 * pv);
        Eigen::MatrixXd design(2 * pv, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            const Eigen::MatrixXd col = rbar * problem.b.middleRows(3 * i, 3);
            design.col(i) = Eigen::Map<const Eigen::VectorXd>(col.data(), 2 * pv);
        }
        c = nonneg_l1_least_squares(design, w_vec, alpha, c);

        const Eigen::MatrixXd s = compose_visible(c);
        const Matrix23d target = w_eff * s.transpose();
        if (target.norm() > 0.0) rbar = detail::polar_2x3(target);

        const Eigen::MatrixXd fit = rbar * s;
        e = prox::soft_threshold((problem.w - fit).colwise() - t, beta);
        t = (problem.w - fit - e).rowwise().mean();

        const double next = objective();
        const bool stalled = std::abs(obj - next) < tol;
        obj = next;
        if (stalled) break;
    }

    RobustAlternatingResult out;
    out.coefficients.values = c;
    out.rotation = Rotation::from_top_rows(rbar);
    out.outliers = Eigen::Matrix2Xd::Zero(2, w.landmark_count());
    for (std::size_t j = 0; j < problem.columns.size(); ++j)
        out.outliers.col(problem.columns[j]) = e.col(static_cast<Eigen::Index>(j));
    out.translation = t;
    out.objective = obj;
    return out;
}

/// A test problem paired with its camera-frame ground truth.
struct EvalInstance
{
    Landmarks2D w;
    Shape3D truth; ///< in the camera frame (viewpoint errors count)
    std::uint64_t seed = 0;
};

struct PipelineOptions
{
    double alpha = 1.0;
    double beta = 0.1;
    SolverConfig solver{};
    AlternatingOptions altern{.rot_mode = RotationUpdate::svd_projection};
    RefineOptions refine{};
};

struct PipelineOutcome
{
    Shape3D camera_shape; ///< estimate expressed in the camera frame
    double objective = 0.0;
    bool converged = true;
};

/**
 * Runs one named pipeline on one instance. Names:
 *  - "convex":        penalized solve + per-basis reconstruction
 *  - "convex-refine": penalized solve + synchronization + alternating refinement
 *  - "altern":        alternating baseline from the mean shape (svd rotation update)
 *  - "direct":        equality-constrained solve + per-basis reconstruction
 *  - "robust-convex": outlier-robust solve + per-basis reconstruction
 *  - "robust-altern": outlier-aware alternating baseline from the mean shape
 * Observations are normalized internally (centering over visible
 * landmarks plus unit average variance; robust pipelines scale only,
 * since their translation is estimated by the solver).
 */
inline PipelineOutcome run_pipeline(const std::string& name, const Landmarks2D& w,
                                    const ShapeDictionary& dict, const Shape3D& mean_shape,
                                    const PipelineOptions& opts = {})
{
    PipelineOutcome out;
    if (name == "convex" || name == "convex-refine" || name == "direct") {
        const auto centered = centralize(w);
        const auto normalized = normalize_unit_variance(centered.value);
        SolverConfig cfg = opts.solver;
        cfg.alpha = opts.alpha;
        const SolveResult solved = name == "direct" ? solve_noiseless(normalized.value, dict, cfg)
                                                    : solve_penalized(normalized.value, dict, cfg);
        out.converged = solved.report.converged;
        if (name == "convex-refine") {
            const RefineResult refined =
                refine_reconstruct(solved.motions, normalized.value, dict, opts.alpha, opts.refine);
            out.camera_shape = Shape3D(refined.rotation.matrix * refined.shape.points);
            out.objective = refined.objective_refined;
        } else {
            const DirectReconstruction direct = direct_reconstruct(solved.motions, dict);
            out.camera_shape = direct.shape;
            out.objective = solved.report.objective;
        }
    } else if (name == "altern") {
        const auto centered = centralize(w);
        const auto normalized = normalize_unit_variance(centered.value);
        const Coefficients init_c = mean_shape_coefficients(dict, mean_shape);
        const AlternatingResult fit = alternating_minimize(normalized.value, dict, init_c,
                                                           Rotation::identity(), opts.alpha,
                                                           opts.altern);
        const Shape3D shape = compose_shape(dict, fit.coefficients);
        out.camera_shape = Shape3D(fit.rotation.matrix * shape.points);
        out.objective = fit.objective;
    } else if (name == "robust-convex") {
        const auto normalized = normalize_unit_variance(centralize(w).value);
        Landmarks2D scaled(w.points / normalized.sigma, w.visibility);
        RobustConfig cfg;
        static_cast<SolverConfig&>(cfg) = opts.solver;
        cfg.alpha = opts.alpha;
        cfg.beta = opts.beta;
        const RobustSolution solved = solve_robust(scaled, dict, cfg);
        out.converged = solved.report.converged;
        const DirectReconstruction direct = direct_reconstruct(solved.motions, dict);
        out.camera_shape = direct.shape;
        out.objective = solved.report.objective;
    } else if (name == "robust-altern") {
        const auto normalized = normalize_unit_variance(centralize(w).value);
        Landmarks2D scaled(w.points / normalized.sigma, w.visibility);
        const Coefficients init_c = mean_shape_coefficients(dict, mean_shape);
        const RobustAlternatingResult fit = robust_alternating(
            scaled, dict, init_c, Rotation::identity(), opts.alpha, opts.beta);
        const Shape3D shape = compose_shape(dict, fit.coefficients);
        out.camera_shape = Shape3D(fit.rotation.matrix * shape.points);
        out.objective = fit.objective;
    } else {
        throw std::invalid_argument("run_pipeline: unknown pipeline '" + name + "'");
    }
    return out;
}

struct PipelineRow
{
    std::string pipeline;
    int instances = 0;
    double mean_error_3d = 0.0;
    double mean_objective = 0.0;
    double mean_seconds = 0.0;
};

/// Runs every named pipeline on every instance and aggregates the results.
inline std::vector<PipelineRow> compare_pipelines(const ShapeDictionary& dict,
                                                  const Shape3D& mean_shape,
                                                  const std::vector<EvalInstance>& instances,
                                                  const std::vector<std::string>& pipelines,
                                                  const PipelineOptions& opts = {})
{
    if (instances.empty()) throw std::invalid_argument("compare_pipelines: no instances");
    std::vector<PipelineRow> rows;
    rows.reserve(pipelines.size());
    for (const std::string& name : pipelines) {
        PipelineRow row;
        row.pipeline = name;
        row.instances = static_cast<int>(instances.size());
        for (const EvalInstance& instance : instances) {
            const auto start = std::chrono::steady_clock::now();
            const PipelineOutcome outcome = run_pipeline(name, instance.w, dict, mean_shape, opts);
            const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            row.mean_error_3d += error_3d(outcome.camera_shape, instance.truth);
            row.mean_objective += outcome.objective;
            row.mean_seconds += elapsed.count();
        }
        const auto n = static_cast<double>(instances.size());
        row.mean_error_3d /= n;
        row.mean_objective /= n;
        row.mean_seconds /= n;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace synth
} // namespace shapelift

#endif /* SHAPELIFT_PIPELINES_HPP */

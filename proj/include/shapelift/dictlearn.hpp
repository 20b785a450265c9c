/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/dictlearn.hpp
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

#ifndef SHAPELIFT_DICTLEARN_HPP
#define SHAPELIFT_DICTLEARN_HPP

#include "shapelift/metrics.hpp"
#include "shapelift/shape_ops.hpp"
#include "shapelift/types.hpp"

#include "Eigen/Eigenvalues"
#include "Eigen/SVD"

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace shapelift {
namespace dict {

/// Centralized training shapes, Procrustes-aligned to a common reference.
struct TrainingSet
{
    std::vector<Shape3D> shapes;
    double alignment_residual = 0.0; ///< mean Frobenius residual of the alignment
    Eigen::Index p = 0;

    Eigen::Index size() const { return static_cast<Eigen::Index>(shapes.size()); }
};

/// Centralizes every shape and aligns each to the first one by a similarity transform.
inline TrainingSet make_training_set(const std::vector<Shape3D>& raw)
{
    if (raw.empty()) throw std::invalid_argument("make_training_set: needs at least one shape");
    TrainingSet out;
    out.p = raw[0].landmark_count();
    const Shape3D reference = centralize(raw[0]).value;
    double residual_sum = 0.0;
    for (const auto& shape : raw) {
        if (shape.landmark_count() != out.p)
            throw std::invalid_argument("make_training_set: landmark counts differ");
        const Shape3D centered = centralize(shape).value;
        const auto aligned = procrustes_align(centered, reference);
        residual_sum += aligned.residual;
        out.shapes.push_back(centralize(aligned.aligned).value);
    }
    out.alignment_residual = residual_sum / static_cast<double>(raw.size());
    return out;
}

/// Column j holds the (column-major) vectorization of training shape j; 3p x n.
inline Eigen::MatrixXd data_matrix(const TrainingSet& training)
{
    Eigen::MatrixXd x(3 * training.p, training.size());
    for (Eigen::Index j = 0; j < training.size(); ++j)
        x.col(j) = Eigen::Map<const Eigen::VectorXd>(
            training.shapes[static_cast<std::size_t>(j)].points.data(), 3 * training.p);
    return x;
}

/// 3p x k matrix whose columns are the vectorized basis shapes.
inline Eigen::MatrixXd dictionary_matrix(const ShapeDictionary& dictionary)
{
    const Eigen::Index p = dictionary.landmark_count();
    Eigen::MatrixXd d(3 * p, dictionary.basis_count());
    for (Eigen::Index i = 0; i < dictionary.basis_count(); ++i)
        d.col(i) = Eigen::Map<const Eigen::VectorXd>(dictionary.basis(i).points.data(), 3 * p);
    return d;
}

inline ShapeDictionary dictionary_from_matrix(const Eigen::MatrixXd& d, Eigen::Index p,
                                              bool nonneg, bool normalized)
{
    std::vector<Shape3D> bases;
    bases.reserve(static_cast<std::size_t>(d.cols()));
    for (Eigen::Index i = 0; i < d.cols(); ++i) {
        Eigen::Matrix3Xd b = Eigen::Map<const Eigen::Matrix3Xd>(d.col(i).data(), 3, p);
        bases.emplace_back(std::move(b));
    }
    return ShapeDictionary(std::move(bases), nonneg, normalized);
}

struct DictLearnConfig
{
    int k = 128;          ///< basis count; overcomplete for pose-scale experiments
    double lambda = 0.1;  ///< sparsity weight
    double delta1 = 0.0;  ///< initial coding step size; 0 = 1/L from the Gram matrix
    double delta2 = 0.0;  ///< initial dictionary step size; 0 = 1/L
    int outer_iters = 100;
    int inner_iters = 300;
    std::uint64_t seed = 0;
    bool nonneg = true;   ///< clamp coefficients at zero; false uses signed soft-thresholding
    double outer_tol = 1e-6;
    double inner_tol = 1e-8;
};

/// k x n coefficient matrix; elementwise nonnegative in nonneg mode.
struct CoefficientMatrix
{
    Eigen::MatrixXd values;
};

namespace detail {

/// Total cost 0.5 * ||X - D C||_F^2 + lambda * sum|C_ij| (sum C_ij in nonneg mode).
inline double coding_cost(const Eigen::MatrixXd& x, const Eigen::MatrixXd& d,
                          const Eigen::MatrixXd& c, double lambda, bool nonneg)
{
    const double fit = 0.5 * (x - d * c).squaredNorm();
    return fit + lambda * (nonneg ? c.sum() : c.cwiseAbs().sum());
}

inline double max_eigenvalue(const Eigen::MatrixXd& sym)
{
    if (sym.rows() == 0) return 0.0;
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues().maxCoeff();
}

/**
 * Projected/proximal gradient loop for the coding subproblem at a fixed
 * dictionary: gradient step on the smooth part, then clamp at zero
 * (nonneg mode) or soft-threshold (signed mode). Backtracks the step
 * size whenever the total cost would not decrease.
 */
inline Eigen::MatrixXd code_matrix(const Eigen::MatrixXd& x, const Eigen::MatrixXd& d,
                                   Eigen::MatrixXd c, double lambda, bool nonneg,
                                   double step0, int max_iter, double tol)
{
    const Eigen::MatrixXd gram = d.transpose() * d;
    const Eigen::MatrixXd dtx = d.transpose() * x;
    double step = step0 > 0.0 ? step0 : 1.0 / std::max(max_eigenvalue(gram), 1e-12);

    double cost = coding_cost(x, d, c, lambda, nonneg);
    for (int iter = 0; iter < max_iter; ++iter) {
        const Eigen::MatrixXd grad = gram * c - dtx;
        Eigen::MatrixXd c_next;
        double cost_next = cost;
        double t = step;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            const Eigen::MatrixXd stepped = c - t * grad;
            if (nonneg)
                c_next = (stepped.array() - t * lambda).max(0.0).matrix();
            else
                c_next = ((stepped.array().abs() - t * lambda).max(0.0) *
                          stepped.array().sign())
                             .matrix();
            cost_next = coding_cost(x, d, c_next, lambda, nonneg);
            if (cost_next <= cost) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        c = std::move(c_next);
        const double decrease = cost - cost_next;
        cost = cost_next;
        if (decrease < tol * std::max(1.0, cost)) break;
    }
    return c;
}

} // namespace detail

/**
 * Nonnegative (or signed, per cfg.nonneg) sparse coding of the training
 * shapes in the given dictionary: minimizes
 * 0.5 * sum_j ||S_j - sum_i C_ij B_i||_F^2 + lambda * sum C_ij over C >= 0
 * by projected gradient iterations.
 */
inline CoefficientMatrix nonneg_sparse_code(const ShapeDictionary& dictionary,
                                            const TrainingSet& training, double lambda,
                                            const DictLearnConfig& cfg = {},
                                            const Eigen::MatrixXd* warm_start = nullptr)
{
    if (dictionary.landmark_count() != training.p)
        throw std::invalid_argument("nonneg_sparse_code: landmark counts differ");
    const Eigen::MatrixXd x = data_matrix(training);
    const Eigen::MatrixXd d = dictionary_matrix(dictionary);
    Eigen::MatrixXd c = warm_start && warm_start->rows() == d.cols() && warm_start->cols() == x.cols()
                            ? *warm_start
                            : Eigen::MatrixXd::Zero(d.cols(), x.cols());
    CoefficientMatrix out;
    out.values = detail::code_matrix(x, d, std::move(c), lambda, cfg.nonneg, cfg.delta1,
                                     cfg.inner_iters, cfg.inner_tol);
    return out;
}

struct DictLearnResult
{
    ShapeDictionary dictionary;
    CoefficientMatrix coefficients;
    std::vector<double> cost_trace; ///< total cost after every outer iteration; non-increasing
};

/**
 * Learns the basis shapes by alternating sparse coding and projected
 * gradient steps on the dictionary, with each basis renormalized to the
 * unit Frobenius ball whenever it leaves it. The dictionary is
 * initialized by uniformly sampling k training shapes with the given
 * seed, so runs are reproducible. Every accepted step decreases the
 * total cost; the trace records it per outer iteration.
 */
inline DictLearnResult learn_dictionary(const TrainingSet& training, const DictLearnConfig& cfg = {})
{
    if (cfg.k < 1) throw std::invalid_argument("learn_dictionary: k must be >= 1");
    if (training.size() < 1) throw std::invalid_argument("learn_dictionary: empty training set");

    const Eigen::MatrixXd x = data_matrix(training);
    const Eigen::Index n = x.cols();

    // Seeded uniform sampling of training shapes as the starting dictionary.
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    Eigen::MatrixXd d(x.rows(), cfg.k);
    for (int i = 0; i < cfg.k; ++i) {
        const Eigen::VectorXd sample = x.col(pick(rng));
        const double norm = sample.norm();
        d.col(i) = norm > 1.0 ? (sample / norm).eval() : sample;
    }

    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(cfg.k, n);
    double cost = detail::coding_cost(x, d, c, cfg.lambda, cfg.nonneg);
    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(cfg.outer_iters) + 1);
    trace.push_back(cost);

    for (int outer = 0; outer < cfg.outer_iters; ++outer) {
        // Coding pass, warm-started from the previous coefficients.
        c = detail::code_matrix(x, d, std::move(c), cfg.lambda, cfg.nonneg, cfg.delta1,
                                cfg.inner_iters, cfg.inner_tol);

        // One projected gradient step on the dictionary with backtracking;
        // the renormalization onto the unit ball is part of the projected step.
        const Eigen::MatrixXd cct = c * c.transpose();
        const Eigen::MatrixXd grad = (d * c - x) * c.transpose();
        double t = cfg.delta2 > 0.0 ? cfg.delta2 : 1.0 / std::max(detail::max_eigenvalue(cct), 1e-12);
        const double cost_before = detail::coding_cost(x, d, c, cfg.lambda, cfg.nonneg);
        for (int bt = 0; bt < 40; ++bt) {
            Eigen::MatrixXd d_next = d - t * grad;
            for (Eigen::Index i = 0; i < d_next.cols(); ++i) {
                const double norm = d_next.col(i).norm();
                if (norm > 1.0) d_next.col(i) /= norm;
            }
            if (detail::coding_cost(x, d_next, c, cfg.lambda, cfg.nonneg) <= cost_before) {
                d = std::move(d_next);
                break;
            }
            t *= 0.5;
        }

        const double cost_next = detail::coding_cost(x, d, c, cfg.lambda, cfg.nonneg);
        trace.push_back(cost_next);
        const double decrease = cost - cost_next;
        cost = cost_next;
        if (decrease < cfg.outer_tol * std::max(1.0, cost)) break;
    }

    DictLearnResult out;
    out.dictionary = dictionary_from_matrix(d, training.p, cfg.nonneg, true);
    out.coefficients.values = std::move(c);
    out.cost_trace = std::move(trace);
    return out;
}

struct RepresentabilityPoint
{
    double control = 0.0;              ///< lambda (sparse coding) or component count (PCA)
    double mean_active_atoms = 0.0;    ///< mean count of coefficients with |C_ij| > 1e-6
    double reconstruction_error = 0.0; ///< 0.5 * sum_j ||S_j - reconstruction_j||_F^2
};

/// Codes the training set at every lambda in the grid and reports (atoms, error) pairs.
inline std::vector<RepresentabilityPoint> representability_curve(const ShapeDictionary& dictionary,
                                                                 const TrainingSet& training,
                                                                 const std::vector<double>& lambda_grid,
                                                                 const DictLearnConfig& cfg = {})
{
    if (lambda_grid.empty())
        throw std::invalid_argument("representability_curve: empty lambda grid");
    const Eigen::MatrixXd x = data_matrix(training);
    const Eigen::MatrixXd d = dictionary_matrix(dictionary);
    std::vector<RepresentabilityPoint> out;
    out.reserve(lambda_grid.size());
    for (const double lambda : lambda_grid) {
        const Eigen::MatrixXd c =
            detail::code_matrix(x, d, Eigen::MatrixXd::Zero(d.cols(), x.cols()), lambda,
                                cfg.nonneg, cfg.delta1, cfg.inner_iters, cfg.inner_tol);
        RepresentabilityPoint point;
        point.control = lambda;
        point.mean_active_atoms =
            static_cast<double>((c.cwiseAbs().array() > 1e-6).count()) / static_cast<double>(x.cols());
        point.reconstruction_error = 0.5 * (x - d * c).squaredNorm();
        out.push_back(point);
    }
    return out;
}

struct PcaBasis
{
    Eigen::MatrixXd components; ///< 3p x m, orthonormal columns
    Eigen::VectorXd mean;       ///< 3p
    Eigen::VectorXd scatter_eigenvalues; ///< all squared singular values of the centered data
    Shape3D mean_shape;
};

/// Top-m principal directions of the vectorized training shapes.
inline PcaBasis pca_basis(const TrainingSet& training, Eigen::Index m)
{
    const Eigen::MatrixXd x = data_matrix(training);
    const Eigen::Index max_rank = std::min(x.rows(), x.cols());
    if (m < 1 || m > max_rank) throw std::invalid_argument("pca_basis: component count out of range");
    PcaBasis out;
    out.mean = x.rowwise().mean();
    const Eigen::MatrixXd centered = x.colwise() - out.mean;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
    out.components = svd.matrixU().leftCols(m);
    out.scatter_eigenvalues = svd.singularValues().array().square();
    out.mean_shape = Shape3D(Eigen::Map<const Eigen::Matrix3Xd>(out.mean.data(), 3, training.p));
    return out;
}

/// Reconstruction error of the m-component PCA model: 0.5 * ||X - X_hat||_F^2.
inline double pca_reconstruction_error(const TrainingSet& training, Eigen::Index m)
{
    const PcaBasis basis = pca_basis(training, m);
    const Eigen::MatrixXd x = data_matrix(training);
    const Eigen::MatrixXd centered = x.colwise() - basis.mean;
    const Eigen::MatrixXd projected = basis.components * (basis.components.transpose() * centered);
    return 0.5 * (centered - projected).squaredNorm();
}

/// PCA counterpart of representability_curve: (component count, error) pairs.
inline std::vector<RepresentabilityPoint> pca_curve(const TrainingSet& training,
                                                    const std::vector<Eigen::Index>& components)
{
    std::vector<RepresentabilityPoint> out;
    out.reserve(components.size());
    for (const Eigen::Index m : components) {
        RepresentabilityPoint point;
        point.control = static_cast<double>(m);
        point.mean_active_atoms = static_cast<double>(m);
        point.reconstruction_error = pca_reconstruction_error(training, m);
        out.push_back(point);
    }
    return out;
}

} // namespace dict
} // namespace shapelift

#endif /* SHAPELIFT_DICTLEARN_HPP */

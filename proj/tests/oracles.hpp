// Test-only numerical oracles. Everything here recomputes expected values
// through routes independent of the library implementation: different
// decompositions (Eigen's JacobiSVD instead of the Gram closed form),
// different projection algorithms (bisection instead of sort-based
// thresholding), first-order methods, and plain enumeration.
#pragma once

#include "shapelift/types.hpp"

#include "Eigen/SVD"

#include <cmath>
#include <random>
#include <vector>

namespace oracles {

using shapelift::Matrix23d;

/// Spectral norm by power iteration on A^T A; independent of any SVD routine.
inline double spectral_norm_power(const Eigen::MatrixXd& a, int iters = 300)
{
    Eigen::VectorXd v = Eigen::VectorXd::Ones(a.cols());
    v[0] += 0.5; // break symmetric starting points
    v.normalize();
    double sigma = 0.0;
    for (int i = 0; i < iters; ++i) {
        Eigen::VectorXd next = a.transpose() * (a * v);
        const double norm = next.norm();
        if (norm == 0.0) return 0.0;
        v = next / norm;
        sigma = std::sqrt(norm);
    }
    return sigma;
}

/// Projection of a nonnegative vector onto the l1 ball by bisection on the
/// piecewise-linear threshold equation (no sorting involved).
inline Eigen::VectorXd project_l1_bisection(const Eigen::VectorXd& v, double radius)
{
    if (v.sum() <= radius) return v;
    double lo = 0.0, hi = v.maxCoeff();
    for (int i = 0; i < 200; ++i) {
        const double tau = 0.5 * (lo + hi);
        const double mass = (v.array() - tau).max(0.0).sum();
        if (mass > radius) lo = tau;
        else hi = tau;
    }
    const double tau = 0.5 * (lo + hi);
    return (v.array() - tau).max(0.0).matrix();
}

/**
 * Minimizer of 0.5 * ||A - X||_F^2 + lambda * ||X||_2, obtained from the
 * dual route: X* = A - P(A), where P projects onto the nuclear-norm ball
 * of radius lambda (one exact projected-gradient step solves the dual).
 * Uses JacobiSVD and the bisection projection above, so no code path is
 * shared with the implementation under test.
 */
inline Matrix23d prox_spectral_oracle(const Matrix23d& a, double lambda)
{
    if (lambda == 0.0) return a;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd projected = project_l1_bisection(svd.singularValues(), lambda);
    const Eigen::MatrixXd dual = svd.matrixU() * projected.asDiagonal() * svd.matrixV().transpose();
    return a - dual;
}

/// Objective of the proximal problem above.
inline double prox_objective(const Matrix23d& a, const Matrix23d& x, double lambda)
{
    return 0.5 * (a - x).squaredNorm() + lambda * spectral_norm_power(x);
}

/**
 * Local-minimality probe for a convex function: checks that no random
 * direction of the given step size improves the objective. For a convex
 * objective this certifies (approximate) global optimality.
 */
template <typename ObjectiveFn>
inline bool perturbation_certified(const ObjectiveFn& objective, const Matrix23d& x, double step,
                                   int directions, std::mt19937_64& rng, double slack)
{
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double base = objective(x);
    for (int d = 0; d < directions; ++d) {
        Matrix23d dir;
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 3; ++c) dir(r, c) = gauss(rng);
        dir /= dir.norm();
        if (objective((x + step * dir).eval()) < base - slack) return false;
    }
    return true;
}

/// Nonnegative l1-penalized least squares by cyclic coordinate descent.
inline Eigen::VectorXd nonneg_lasso_cd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                       double alpha, int sweeps = 20000, double tol = 1e-12)
{
    const Eigen::Index k = a.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd residual = b; // residual = b - A x
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double max_change = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) {
            const double col_sq = a.col(i).squaredNorm();
            if (col_sq == 0.0) continue;
            const double raw = a.col(i).dot(residual) + col_sq * x[i];
            const double next = std::max(0.0, (raw - alpha) / col_sq);
            const double change = next - x[i];
            if (change != 0.0) {
                residual -= change * a.col(i);
                x[i] = next;
                max_change = std::max(max_change, std::abs(change));
            }
        }
        if (max_change < tol) break;
    }
    return x;
}

/**
 * Subgradient descent on the full penalized objective
 * 0.5 * ||W - M B||_F^2 + alpha * sum_i ||M_i||_2, with diminishing steps
 * and best-value tracking. Slow but entirely independent; used to bound
 * the optimal value of small instances.
 */
inline double penalized_subgradient_best(const Eigen::MatrixXd& w, const Eigen::MatrixXd& b,
                                         double alpha, int steps)
{
    const Eigen::Index k = b.rows() / 3;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 3 * k);

    const auto objective = [&](const Eigen::MatrixXd& mm) {
        double obj = 0.5 * (w - mm * b).squaredNorm();
        for (Eigen::Index i = 0; i < k; ++i)
            obj += alpha * spectral_norm_power(mm.middleCols(3 * i, 3));
        return obj;
    };

    double best = objective(m);
    const double step0 = 1.0 / std::max(1.0, spectral_norm_power(b * b.transpose()));
    for (int t = 1; t <= steps; ++t) {
        Eigen::MatrixXd grad = (m * b - w) * b.transpose();
        for (Eigen::Index i = 0; i < k; ++i) {
            const Eigen::MatrixXd block = m.middleCols(3 * i, 3);
            if (block.norm() < 1e-14) continue; // 0 is a valid subgradient at the origin
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
            grad.middleCols(3 * i, 3) +=
                alpha * svd.matrixU().col(0) * svd.matrixV().col(0).transpose();
        }
        m -= (step0 / std::sqrt(static_cast<double>(t))) * grad;
        best = std::min(best, objective(m));
    }
    return best;
}

/**
 * Nested grid search for the nonnegative coding problem of one sample:
 * min over c >= 0 of 0.5 * ||x - D c||^2 + lambda * sum(c). Enumerates a
 * shrinking grid around the best point; pure enumeration, no gradients.
 */
inline double coding_cost_grid_oracle(const Eigen::MatrixXd& d, const Eigen::VectorXd& x,
                                      double lambda, double c_max, int levels = 12,
                                      int points_per_axis = 7)
{
    const Eigen::Index k = d.cols();
    Eigen::VectorXd center = Eigen::VectorXd::Constant(k, 0.5 * c_max);
    double radius = 0.5 * c_max;

    const auto cost = [&](const Eigen::VectorXd& c) {
        return 0.5 * (x - d * c).squaredNorm() + lambda * c.sum();
    };

    Eigen::VectorXd best = center.cwiseMax(0.0);
    double best_cost = cost(best);
    std::vector<int> digits(static_cast<std::size_t>(k), 0);
    for (int level = 0; level < levels; ++level) {
        const long total = static_cast<long>(std::pow(points_per_axis, static_cast<double>(k)));
        for (long idx = 0; idx < total; ++idx) {
            long rest = idx;
            Eigen::VectorXd c(k);
            for (Eigen::Index i = 0; i < k; ++i) {
                const int digit = static_cast<int>(rest % points_per_axis);
                rest /= points_per_axis;
                const double frac =
                    points_per_axis == 1 ? 0.0
                                         : (2.0 * digit / static_cast<double>(points_per_axis - 1) - 1.0);
                c[i] = std::max(0.0, center[i] + frac * radius);
            }
            const double value = cost(c);
            if (value < best_cost) {
                best_cost = value;
                best = c;
            }
        }
        center = best;
        radius *= 2.0 / static_cast<double>(points_per_axis - 1); // keep one coarse cell of slack
    }
    return best_cost;
}

} // namespace oracles

/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/solver.hpp
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

#ifndef SHAPELIFT_SOLVER_HPP
#define SHAPELIFT_SOLVER_HPP

#include "shapelift/prox.hpp"
#include "shapelift/types.hpp"

#include "Eigen/Cholesky"
#include "Eigen/QR"

#include <stdexcept>
#include <utility>
#include <vector>

namespace shapelift {

/**
 * The unknowns of the convex programs: k blocks M_i of size 2 x 3,
 * stored stacked side by side as a 2 x 3k matrix. Block i is the
 * product of the weight c_i and the first two rows of a rotation, so at
 * a clean solution it satisfies M_i M_i^T = c_i^2 I.
 */
struct MotionStack
{
    Eigen::MatrixXd stacked; ///< 2 x 3k

    MotionStack() = default;

    explicit MotionStack(Eigen::MatrixXd m) : stacked(std::move(m))
    {
        if (stacked.rows() != 2 || stacked.cols() < 3 || stacked.cols() % 3 != 0)
            throw std::invalid_argument("MotionStack: expected a 2 x 3k matrix with k >= 1");
    }

    static MotionStack zero(Eigen::Index k) { return MotionStack(Eigen::MatrixXd::Zero(2, 3 * k)); }

    Eigen::Index block_count() const { return stacked.cols() / 3; }

    Matrix23d block(Eigen::Index i) const { return stacked.middleCols(3 * i, 3); }
    void set_block(Eigen::Index i, const Matrix23d& m) { stacked.middleCols(3 * i, 3) = m; }

    std::vector<Matrix23d> blocks() const
    {
        std::vector<Matrix23d> out(static_cast<std::size_t>(block_count()));
        for (Eigen::Index i = 0; i < block_count(); ++i) out[static_cast<std::size_t>(i)] = block(i);
        return out;
    }

    /// Sum of per-block spectral norms; the regularizer of the convex programs.
    double spectral_norm_sum() const
    {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < block_count(); ++i) sum += prox::spectral_norm(block(i));
        return sum;
    }
};

struct SolverConfig
{
    double alpha = 1.0;     ///< weight of the spectral-norm regularizer
    double mu0 = 1.0;       ///< initial augmented-Lagrangian step size
    double tol = 1e-4;      ///< relative residual tolerance
    int max_iter = 500;
    bool adaptive_mu = true;
    double mu_ratio = 10.0;  ///< rebalance when one residual exceeds ratio * other
    double mu_factor = 2.0;  ///< multiplicative mu adjustment
};

struct SolverReport
{
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double objective = 0.0;
    bool converged = false;
    /// Objective evaluated on the auxiliary-variable (Z) path, one entry per iteration.
    std::vector<double> objective_trace;
};

/// Iterate state shared by the solver loops; exposed for the per-step operations.
struct AdmmState
{
    Eigen::MatrixXd m_tilde; ///< 2 x 3k
    Eigen::MatrixXd z;       ///< 2 x 3k auxiliary
    Eigen::MatrixXd y;       ///< 2 x 3k dual
    double mu = 1.0;
};

struct SolveResult
{
    MotionStack motions;
    SolverReport report;
};

namespace detail {

/// Columns of a 2 x p matrix (and the matching dictionary columns) restricted to visible landmarks.
struct VisibleProblem
{
    Eigen::MatrixXd w;     ///< 2 x p_vis
    Eigen::MatrixXd b;     ///< 3k x p_vis
    std::vector<Eigen::Index> columns;
};

inline VisibleProblem drop_invisible(const Landmarks2D& landmarks, const ShapeDictionary& dict)
{
    if (landmarks.landmark_count() != dict.landmark_count())
        throw std::invalid_argument("solver: landmark count of observations and dictionary differ");
    VisibleProblem out;
    for (Eigen::Index i = 0; i < landmarks.landmark_count(); ++i)
        if (landmarks.visibility[i]) out.columns.push_back(i);
    if (out.columns.empty()) throw std::invalid_argument("solver: no observations");
    out.w.resize(2, static_cast<Eigen::Index>(out.columns.size()));
    out.b.resize(dict.stacked().rows(), static_cast<Eigen::Index>(out.columns.size()));
    for (std::size_t j = 0; j < out.columns.size(); ++j) {
        out.w.col(static_cast<Eigen::Index>(j)) = landmarks.points.col(out.columns[j]);
        out.b.col(static_cast<Eigen::Index>(j)) = dict.stacked().col(out.columns[j]);
    }
    return out;
}

inline double objective_penalized_raw(const Eigen::MatrixXd& w, const Eigen::MatrixXd& b,
                                      const Eigen::MatrixXd& m, double alpha)
{
    double obj = 0.5 * (w - m * b).squaredNorm();
    for (Eigen::Index i = 0; i < m.cols() / 3; ++i)
        obj += alpha * prox::spectral_norm(m.middleCols(3 * i, 3));
    return obj;
}

} // namespace detail

/**
 * Value of the penalized objective
 *   0.5 * || W - sum_i M_i B_i ||_F^2 + alpha * sum_i ||M_i||_2,
 * with the data term restricted to visible landmarks.
 */
inline double objective_penalized(const Landmarks2D& w, const ShapeDictionary& dict,
                                  const MotionStack& m, double alpha)
{
    if (m.block_count() != dict.basis_count())
        throw std::invalid_argument("objective_penalized: block count must equal basis count");
    const auto problem = detail::drop_invisible(w, dict);
    return detail::objective_penalized_raw(problem.w, problem.b, m.stacked, alpha);
}

/**
 * Proximal step of the ADMM iteration: each block of the result is
 * D_{alpha/mu} applied to the corresponding column-triplet of
 * Z - Y / mu. Blocks are independent of each other.
 */
inline MotionStack update_M(const AdmmState& state, double alpha)
{
    if (!(state.mu > 0.0)) throw std::invalid_argument("update_M: mu must be positive");
    const Eigen::MatrixXd q = state.z - state.y / state.mu;
    MotionStack m = MotionStack::zero(q.cols() / 3);
    for (Eigen::Index i = 0; i < m.block_count(); ++i)
        m.set_block(i, prox::prox_spectral(q.middleCols(3 * i, 3), alpha / state.mu));
    return m;
}

/**
 * Closed-form minimization of the augmented Lagrangian over the
 * auxiliary variable:
 *   Z = (W B^T + mu M + Y) (B B^T + mu I)^-1,
 * restricted to visible landmarks.
 */
inline Eigen::MatrixXd update_Z(const Landmarks2D& w, const ShapeDictionary& dict,
                                const MotionStack& m, const Eigen::MatrixXd& y, double mu)
{
    if (!(mu > 0.0)) throw std::invalid_argument("update_Z: mu must be positive");
    const auto problem = detail::drop_invisible(w, dict);
    Eigen::MatrixXd lhs = problem.b * problem.b.transpose();
    lhs.diagonal().array() += mu;
    const Eigen::LLT<Eigen::MatrixXd> llt(lhs);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("update_Z: factorization failed");
    const Eigen::MatrixXd rhs = problem.w * problem.b.transpose() + mu * m.stacked + y;
    return llt.solve(rhs.transpose()).transpose();
}

namespace detail {

/// Shared residual bookkeeping for the ADMM loops.
struct Residuals
{
    double primal = 0.0;
    double dual = 0.0;
    double scale = 1.0;

    bool below(double tol) const { return primal <= tol * scale && dual <= tol * scale; }
};

inline Residuals measure(const Eigen::MatrixXd& m, const Eigen::MatrixXd& z,
                         const Eigen::MatrixXd& z_prev, double mu)
{
    Residuals r;
    r.primal = (m - z).norm();
    r.dual = mu * (z - z_prev).norm();
    r.scale = std::max({m.norm(), z.norm(), 1.0});
    return r;
}

} // namespace detail

/**
 * ADMM solver for the penalized least-squares program
 *   min over M_i of 0.5 * ||W - sum_i M_i B_i||_F^2 + alpha * sum_i ||M_i||_2.
 *
 * W is expected to be centralized over its visible landmarks; invisible
 * columns are dropped from W and the stacked dictionary before solving.
 * Alternates the per-block proximal step, the closed-form auxiliary
 * update and a dual ascent step, starting from Z = Y = 0. Residual
 * tolerances are relative (scaled by max(||M||_F, ||Z||_F, 1)); when
 * the iteration budget runs out the best-effort result is returned with
 * converged = false rather than by throwing.
 */
inline SolveResult solve_penalized(const Landmarks2D& landmarks, const ShapeDictionary& dict,
                                   const SolverConfig& cfg = {})
{
    const auto problem = detail::drop_invisible(landmarks, dict);
    const Eigen::Index k = dict.basis_count();
    const Eigen::Index n = 3 * k;

    const Eigen::MatrixXd bbt = problem.b * problem.b.transpose();
    const Eigen::MatrixXd wbt = problem.w * problem.b.transpose();

    AdmmState state;
    state.m_tilde = Eigen::MatrixXd::Zero(2, n);
    state.z = Eigen::MatrixXd::Zero(2, n);
    state.y = Eigen::MatrixXd::Zero(2, n);
    state.mu = cfg.mu0;

    Eigen::LLT<Eigen::MatrixXd> llt;
    double factored_mu = -1.0;
    const auto refactor = [&](double mu) {
        Eigen::MatrixXd lhs = bbt;
        lhs.diagonal().array() += mu;
        llt.compute(lhs);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("solve_penalized: factorization failed");
        factored_mu = mu;
    };
    refactor(state.mu);

    SolverReport report;
    report.objective_trace.reserve(static_cast<std::size_t>(cfg.max_iter));

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        if (state.mu != factored_mu) refactor(state.mu);

        // M step: independent per-block proximal problems.
        const Eigen::MatrixXd q = state.z - state.y / state.mu;
        for (Eigen::Index i = 0; i < k; ++i)
            state.m_tilde.middleCols(3 * i, 3) =
                prox::prox_spectral(q.middleCols(3 * i, 3), cfg.alpha / state.mu);

        // Z step: ridge-type closed form.
        const Eigen::MatrixXd z_prev = state.z;
        const Eigen::MatrixXd rhs = wbt + state.mu * state.m_tilde + state.y;
        state.z = llt.solve(rhs.transpose()).transpose();

        // Dual ascent.
        state.y += state.mu * (state.m_tilde - state.z);

        if (!state.z.allFinite() || !state.m_tilde.allFinite())
            throw std::runtime_error("solve_penalized: numerical divergence");

        const auto res = detail::measure(state.m_tilde, state.z, z_prev, state.mu);
        report.iterations = iter + 1;
        report.primal_residual = res.primal;
        report.dual_residual = res.dual;
        report.objective_trace.push_back(
            detail::objective_penalized_raw(problem.w, problem.b, state.z, cfg.alpha));

        if (res.below(cfg.tol)) {
            report.converged = true;
            break;
        }

        if (cfg.adaptive_mu) {
            if (res.primal > cfg.mu_ratio * res.dual) state.mu *= cfg.mu_factor;
            else if (res.dual > cfg.mu_ratio * res.primal) state.mu /= cfg.mu_factor;
        }
    }

    report.objective =
        detail::objective_penalized_raw(problem.w, problem.b, state.m_tilde, cfg.alpha);
    return {MotionStack(state.m_tilde), report};
}

/**
 * ADMM solver for the equality-constrained program
 *   min over M_i of sum_i ||M_i||_2  subject to  W = sum_i M_i B_i.
 *
 * The auxiliary update projects M + Y / mu onto the affine constraint
 * set via a cached pseudoinverse of the stacked dictionary, so both
 * tall (p <= 3k) and consistent overdetermined systems are handled.
 * Throws "infeasible or degenerate constraint" when no Z satisfies the
 * equations. Convergence additionally requires the equality residual
 * ||W - M B||_F <= tol * ||W||_F.
 */
inline SolveResult solve_noiseless(const Landmarks2D& landmarks, const ShapeDictionary& dict,
                                   const SolverConfig& cfg = {})
{
    const auto problem = detail::drop_invisible(landmarks, dict);
    const Eigen::Index k = dict.basis_count();
    const Eigen::Index n = 3 * k;

    const Eigen::MatrixXd pinv =
        problem.b.completeOrthogonalDecomposition().pseudoInverse(); // p_vis x 3k
    const double w_norm = problem.w.norm();

    // Feasibility check: the least-squares solution must satisfy the constraint.
    const Eigen::MatrixXd z_feasible = problem.w * pinv;
    if ((z_feasible * problem.b - problem.w).norm() > 1e-8 * std::max(1.0, w_norm))
        throw std::runtime_error("solve_noiseless: infeasible or degenerate constraint");

    AdmmState state;
    state.m_tilde = Eigen::MatrixXd::Zero(2, n);
    state.z = Eigen::MatrixXd::Zero(2, n);
    state.y = Eigen::MatrixXd::Zero(2, n);
    state.mu = cfg.mu0;

    SolverReport report;
    report.objective_trace.reserve(static_cast<std::size_t>(cfg.max_iter));

    const auto spectral_sum = [&](const Eigen::MatrixXd& m) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) sum += prox::spectral_norm(m.middleCols(3 * i, 3));
        return sum;
    };

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        const Eigen::MatrixXd q = state.z - state.y / state.mu;
        for (Eigen::Index i = 0; i < k; ++i)
            state.m_tilde.middleCols(3 * i, 3) =
                prox::prox_spectral(q.middleCols(3 * i, 3), 1.0 / state.mu);

        // Z step: projection of M + Y / mu onto {Z : Z B = W}.
        const Eigen::MatrixXd z_prev = state.z;
        const Eigen::MatrixXd target = state.m_tilde + state.y / state.mu;
        state.z = target - (target * problem.b - problem.w) * pinv;

        state.y += state.mu * (state.m_tilde - state.z);

        if (!state.z.allFinite() || !state.m_tilde.allFinite())
            throw std::runtime_error("solve_noiseless: numerical divergence");

        const auto res = detail::measure(state.m_tilde, state.z, z_prev, state.mu);
        report.iterations = iter + 1;
        report.primal_residual = res.primal;
        report.dual_residual = res.dual;
        report.objective_trace.push_back(spectral_sum(state.z));

        const double eq_residual = (state.m_tilde * problem.b - problem.w).norm();
        if (res.below(cfg.tol) && eq_residual <= cfg.tol * w_norm) {
            report.converged = true;
            break;
        }

        if (cfg.adaptive_mu) {
            if (res.primal > cfg.mu_ratio * res.dual) state.mu *= cfg.mu_factor;
            else if (res.dual > cfg.mu_ratio * res.primal) state.mu /= cfg.mu_factor;
        }
    }

    report.objective = spectral_sum(state.m_tilde);
    return {MotionStack(state.m_tilde), report};
}

} // namespace shapelift

#endif /* SHAPELIFT_SOLVER_HPP */

/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/robust.hpp
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

#ifndef SHAPELIFT_ROBUST_HPP
#define SHAPELIFT_ROBUST_HPP

#include "shapelift/solver.hpp"

namespace shapelift {

struct RobustConfig : SolverConfig
{
    double beta = 0.1; ///< weight of the l1 penalty on the outlier matrix
};

struct RobustSolution
{
    MotionStack motions;
    Eigen::Matrix2Xd outliers;    ///< E, 2 x p; exactly zero at invisible columns
    Eigen::Vector2d translation;  ///< T
    SolverReport report;
};

/**
 * ADMM solver for the outlier-robust program
 *   min 0.5 * ||W - sum_i M_i B_i - E - T 1^T||_F^2
 *       + alpha * sum_i ||M_i||_2 + beta * ||E||_1.
 *
 * W must NOT be pre-centralized: the translation T is estimated inside
 * because subtracting the mean of contaminated observations would
 * spread outlier energy over all landmarks. Invisible columns are
 * dropped as in the plain solver and the returned E is zero there.
 *
 * One sweep updates, in this order: M (per-block proximal step on
 * Z - Y/mu), Z (ridge closed form against W - E - T 1^T), E
 * (soft-thresholding of the current fit residual), T (row means of the
 * residual without E), and the dual Y. This is a multi-block splitting,
 * so convergence is declared only when the primal/dual residuals and
 * the change in E all drop below tolerance; otherwise the result is
 * returned with converged = false.
 */
inline RobustSolution solve_robust(const Landmarks2D& landmarks, const ShapeDictionary& dict,
                                   const RobustConfig& cfg = {})
{
    const auto problem = detail::drop_invisible(landmarks, dict);
    const Eigen::Index k = dict.basis_count();
    const Eigen::Index n = 3 * k;
    const Eigen::Index pv = problem.w.cols();

    const Eigen::MatrixXd bbt = problem.b * problem.b.transpose();

    AdmmState state;
    state.m_tilde = Eigen::MatrixXd::Zero(2, n);
    state.z = Eigen::MatrixXd::Zero(2, n);
    state.y = Eigen::MatrixXd::Zero(2, n);
    state.mu = cfg.mu0;
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(2, pv);
    Eigen::Vector2d t = Eigen::Vector2d::Zero();

    Eigen::LLT<Eigen::MatrixXd> llt;
    double factored_mu = -1.0;
    const auto refactor = [&](double mu) {
        Eigen::MatrixXd lhs = bbt;
        lhs.diagonal().array() += mu;
        llt.compute(lhs);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("solve_robust: factorization failed");
        factored_mu = mu;
    };
    refactor(state.mu);

    const auto objective = [&](const Eigen::MatrixXd& m, const Eigen::MatrixXd& e_cur,
                               const Eigen::Vector2d& t_cur) {
        double obj = 0.5 * ((problem.w - m * problem.b - e_cur).colwise() - t_cur).squaredNorm();
        for (Eigen::Index i = 0; i < k; ++i)
            obj += cfg.alpha * prox::spectral_norm(m.middleCols(3 * i, 3));
        return obj + cfg.beta * e_cur.cwiseAbs().sum();
    };

    SolverReport report;
    report.objective_trace.reserve(static_cast<std::size_t>(cfg.max_iter));

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        if (state.mu != factored_mu) refactor(state.mu);

        const Eigen::MatrixXd q = state.z - state.y / state.mu;
        for (Eigen::Index i = 0; i < k; ++i)
            state.m_tilde.middleCols(3 * i, 3) =
                prox::prox_spectral(q.middleCols(3 * i, 3), cfg.alpha / state.mu);

        const Eigen::MatrixXd z_prev = state.z;
        const Eigen::MatrixXd w_eff = (problem.w - e).colwise() - t;
        const Eigen::MatrixXd rhs = w_eff * problem.b.transpose() + state.mu * state.m_tilde + state.y;
        state.z = llt.solve(rhs.transpose()).transpose();

        const Eigen::MatrixXd e_prev = e;
        const Eigen::MatrixXd fit = state.z * problem.b;
        e = prox::soft_threshold((problem.w - fit).colwise() - t, cfg.beta);
        t = (problem.w - fit - e).rowwise().mean();

        state.y += state.mu * (state.m_tilde - state.z);

        if (!state.z.allFinite() || !e.allFinite() || !t.allFinite())
            throw std::runtime_error("solve_robust: numerical divergence");

        const auto res = detail::measure(state.m_tilde, state.z, z_prev, state.mu);
        const double e_change = (e - e_prev).norm();
        report.iterations = iter + 1;
        report.primal_residual = res.primal;
        report.dual_residual = res.dual;
        report.objective_trace.push_back(objective(state.z, e, t));

        if (res.below(cfg.tol) && e_change <= cfg.tol * res.scale) {
            report.converged = true;
            break;
        }

        if (cfg.adaptive_mu) {
            if (res.primal > cfg.mu_ratio * res.dual) state.mu *= cfg.mu_factor;
            else if (res.dual > cfg.mu_ratio * res.primal) state.mu /= cfg.mu_factor;
        }
    }

    report.objective = objective(state.m_tilde, e, t);

    RobustSolution out;
    out.motions = MotionStack(state.m_tilde);
    out.outliers = Eigen::Matrix2Xd::Zero(2, landmarks.landmark_count());
    for (std::size_t j = 0; j < problem.columns.size(); ++j)
        out.outliers.col(problem.columns[j]) = e.col(static_cast<Eigen::Index>(j));
    out.translation = t;
    out.report = report;
    return out;
}

/// Flags landmark i as an outlier when the i-th column of E has norm above the threshold.
inline VisibilityMask classify_outliers(const RobustSolution& solution, double threshold)
{
    VisibilityMask mask(solution.outliers.cols());
    for (Eigen::Index i = 0; i < solution.outliers.cols(); ++i)
        mask[i] = solution.outliers.col(i).norm() > threshold;
    return mask;
}

} // namespace shapelift

#endif /* SHAPELIFT_ROBUST_HPP */

/*
 * shapelift - 3D shape and viewpoint estimation from 2D landmarks in modern C++.
 *
 * File: include/shapelift/synthetic.hpp
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

#ifndef SHAPELIFT_SYNTHETIC_HPP
#define SHAPELIFT_SYNTHETIC_HPP

#include "shapelift/parallel.hpp"
#include "shapelift/solver.hpp"
#include "shapelift/types.hpp"

#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace shapelift {
namespace synth {

/// splitmix64 step; used to derive independent per-trial seeds.
inline std::uint64_t mix_seed(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return mix_seed(a ^ mix_seed(b)); }

template <typename... Rest>
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, Rest... rest)
{
    return mix_seed(mix_seed(a, b), static_cast<std::uint64_t>(rest)...);
}

/// Rotation from three Euler angles each uniform on [0, 2pi). Not Haar-uniform.
inline Rotation random_rotation_euler(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    const double a = angle(rng), b = angle(rng), c = angle(rng);
    return Rotation::from_euler_zyz(a, b, c);
}

/// Haar-uniform rotation via a normalized Gaussian quaternion.
inline Rotation random_rotation_haar(std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    return Rotation(q.toRotationMatrix());
}

/// In-place seeded Fisher-Yates; avoids std::shuffle's unspecified engine usage.
template <typename T>
inline void shuffle_indices(std::vector<T>& values, std::mt19937_64& rng)
{
    for (std::size_t i = values.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(values[i - 1], values[pick(rng)]);
    }
}

/**
 * A noiseless ground-truth problem: random Gaussian bases, exactly z
 * nonzero motion blocks M_i = c_i * Rbar_i with c_i ~ U(0,1) and
 * random rotations, and the observations W = sum_i M_i B_i.
 */
struct RecoveryInstance
{
    ShapeDictionary dict;
    MotionStack true_motions;
    Landmarks2D w;
    std::uint64_t seed = 0;
    int z = 0;
};

inline RecoveryInstance make_recovery_instance(int k, int p, int z, std::uint64_t seed,
                                               bool haar_rotations = false)
{
    if (k < 1 || p < 1 || z < 1 || z > k)
        throw std::invalid_argument("make_recovery_instance: need k >= 1, p >= 1, 1 <= z <= k");

    std::mt19937_64 rng(mix_seed(seed));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Shape3D> bases;
    bases.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        Eigen::Matrix3Xd b(3, p);
        for (Eigen::Index r = 0; r < 3; ++r)
            for (Eigen::Index c = 0; c < p; ++c) b(r, c) = gauss(rng);
        bases.emplace_back(std::move(b));
    }

    std::vector<int> order(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) order[static_cast<std::size_t>(i)] = i;
    shuffle_indices(order, rng);

    RecoveryInstance out;
    out.dict = ShapeDictionary(std::move(bases), /*nonneg=*/true, /*normalized=*/false);
    out.true_motions = MotionStack::zero(k);
    out.seed = seed;
    out.z = z;
    for (int j = 0; j < z; ++j) {
        const int i = order[static_cast<std::size_t>(j)];
        const double c = unit(rng);
        const Rotation r = haar_rotations ? random_rotation_haar(rng) : random_rotation_euler(rng);
        out.true_motions.set_block(i, c * r.top_rows());
    }
    out.w = Landmarks2D(out.true_motions.stacked * out.dict.stacked());
    return out;
}

/// || estimate - truth ||_F / || truth ||_F over the stacked blocks.
inline double relative_error(const MotionStack& estimate, const MotionStack& truth)
{
    const double denom = truth.stacked.norm();
    if (denom == 0.0) throw std::invalid_argument("relative_error: zero truth");
    return (estimate.stacked - truth.stacked).norm() / denom;
}

struct PhaseGridResult
{
    std::vector<int> p_values;
    std::vector<int> z_values;
    Eigen::MatrixXd frequency; ///< rows index p, columns index z; values in [0, 1]
    int k = 0;
    int trials = 0;
    std::uint64_t seed = 0;
};

struct PhaseGridOptions
{
    /// Budget of the inner equality-constrained solves. Tighter than the
    /// defaults so that solver precision does not blur the transition
    /// measured against the 1e-3 recovery threshold.
    SolverConfig solver{.tol = 1e-6, .max_iter = 2000};
    double recovery_threshold = 1e-3;
    bool haar_rotations = false;
};

/**
 * Exact-recovery frequency over a (p, z) grid: every cell runs `trials`
 * independent instances through the equality-constrained solver and
 * counts recoveries with relative error below the threshold. Per-trial
 * seeds derive deterministically from (seed, p, z, trial), so the
 * result is reproducible and independent of the parallel schedule.
 * Solver failures (infeasible instances, divergence) count as
 * non-recoveries.
 */
inline PhaseGridResult phase_grid(int k, const std::vector<int>& p_values,
                                  const std::vector<int>& z_values, int trials, std::uint64_t seed,
                                  const PhaseGridOptions& opts = {})
{
    if (trials < 1) throw std::invalid_argument("phase_grid: trials must be >= 1");
    PhaseGridResult out;
    out.p_values = p_values;
    out.z_values = z_values;
    out.k = k;
    out.trials = trials;
    out.seed = seed;
    out.frequency = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p_values.size()),
                                          static_cast<Eigen::Index>(z_values.size()));

    const long cells = static_cast<long>(p_values.size() * z_values.size());
    parallel_for(cells, [&](long cell) {
        const auto pi = static_cast<std::size_t>(cell) / z_values.size();
        const auto zi = static_cast<std::size_t>(cell) % z_values.size();
        const int p = p_values[pi];
        const int z = z_values[zi];
        int successes = 0;
        for (int trial = 0; trial < trials; ++trial) {
            const std::uint64_t trial_seed =
                mix_seed(seed, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(z),
                         static_cast<std::uint64_t>(trial));
            try {
                const RecoveryInstance instance =
                    make_recovery_instance(k, p, z, trial_seed, opts.haar_rotations);
                const SolveResult solved = solve_noiseless(instance.w, instance.dict, opts.solver);
                if (relative_error(solved.motions, instance.true_motions) < opts.recovery_threshold)
                    ++successes;
            } catch (const std::exception&) {
                // counts as non-recovery
            }
        }
        out.frequency(static_cast<Eigen::Index>(pi), static_cast<Eigen::Index>(zi)) =
            static_cast<double>(successes) / static_cast<double>(trials);
    });
    return out;
}

/**
 * Orthographic views of a shape sequence from a camera orbiting the
 * vertical (y) axis: frame t uses azimuth 2 pi t / frames_per_rev,
 * unit scale and zero image translation.
 */
inline std::vector<Landmarks2D> simulate_camera_orbit(const std::vector<Shape3D>& shapes,
                                                      int frames_per_rev)
{
    if (frames_per_rev < 1)
        throw std::invalid_argument("simulate_camera_orbit: frames_per_rev must be >= 1");
    std::vector<Landmarks2D> out;
    out.reserve(shapes.size());
    for (std::size_t t = 0; t < shapes.size(); ++t) {
        const double azimuth =
            2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(frames_per_rev);
        out.push_back(project_weak_perspective(shapes[t], CameraWeakPerspective{},
                                               Rotation::about_y(azimuth)));
    }
    return out;
}

/// Adds iid N(0, sigma^2) noise to every coordinate. sigma = 0 returns the input unchanged.
inline Landmarks2D add_gaussian_noise(const Landmarks2D& w, double sigma, std::uint64_t seed)
{
    if (sigma < 0.0) throw std::invalid_argument("add_gaussian_noise: sigma must be >= 0");
    if (sigma == 0.0) return w;
    std::mt19937_64 rng(mix_seed(seed));
    std::normal_distribution<double> gauss(0.0, sigma);
    Eigen::Matrix2Xd pts = w.points;
    for (Eigen::Index i = 0; i < pts.cols(); ++i)
        for (Eigen::Index r = 0; r < 2; ++r) pts(r, i) += gauss(rng);
    return Landmarks2D(std::move(pts), w.visibility);
}

struct Box2D
{
    Eigen::Vector2d lo = Eigen::Vector2d::Zero();
    Eigen::Vector2d hi = Eigen::Vector2d::Zero();
};

/// Bounding box of the visible landmarks, expanded by the given fraction on each side.
inline Box2D bounding_box(const Landmarks2D& w, double expand = 0.2)
{
    Box2D box;
    bool first = true;
    for (Eigen::Index i = 0; i < w.landmark_count(); ++i) {
        if (!w.visibility[i]) continue;
        const Eigen::Vector2d point = w.points.col(i);
        if (first) {
            box.lo = box.hi = point;
            first = false;
        } else {
            box.lo = box.lo.cwiseMin(point);
            box.hi = box.hi.cwiseMax(point);
        }
    }
    if (first) throw std::invalid_argument("bounding_box: no observations");
    const Eigen::Vector2d margin = expand * (box.hi - box.lo);
    box.lo -= margin;
    box.hi += margin;
    return box;
}

struct OutlierResult
{
    Landmarks2D w;
    VisibilityMask mask; ///< true where the landmark was replaced
};

/**
 * Replaces floor(fraction * p + 0.5) randomly chosen landmarks with
 * positions uniform in the given box. The true corruption mask is
 * returned for evaluation.
 */
inline OutlierResult add_outliers(const Landmarks2D& w, double fraction, const Box2D& box,
                                  std::uint64_t seed)
{
    if (fraction < 0.0 || fraction > 1.0)
        throw std::invalid_argument("add_outliers: fraction must be in [0, 1]");
    const Eigen::Index p = w.landmark_count();
    const auto count = static_cast<Eigen::Index>(
        std::floor(fraction * static_cast<double>(p) + 0.5));

    OutlierResult out;
    out.w = w;
    out.mask = VisibilityMask::Constant(p, false);
    if (count == 0) return out;

    std::mt19937_64 rng(mix_seed(seed));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i) order[static_cast<std::size_t>(i)] = i;
    shuffle_indices(order, rng);

    std::uniform_real_distribution<double> ux(box.lo.x(), box.hi.x());
    std::uniform_real_distribution<double> uy(box.lo.y(), box.hi.y());
    for (Eigen::Index j = 0; j < count; ++j) {
        const Eigen::Index i = order[static_cast<std::size_t>(j)];
        out.w.points(0, i) = ux(rng);
        out.w.points(1, i) = uy(rng);
        out.mask[i] = true;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Articulated-chain synthetic shapes (15-joint skeleton).
// ---------------------------------------------------------------------------

struct SkeletonModel
{
    std::vector<int> parents;              ///< parent joint index, -1 for the root
    std::vector<Eigen::Vector3d> offsets;  ///< rest bone vector from the parent
};

/// 15-joint kinematic tree: pelvis, spine, head, two arms, two legs.
inline SkeletonModel default_skeleton()
{
    SkeletonModel m;
    m.parents = {-1, 0, 1, 1, 3, 4, 1, 6, 7, 0, 9, 10, 0, 12, 13};
    m.offsets = {
        {0.0, 0.0, 0.0},    // 0 pelvis (root)
        {0.0, 0.5, 0.0},    // 1 thorax
        {0.0, 0.25, 0.0},   // 2 head
        {0.2, 0.0, 0.0},    // 3 left shoulder
        {0.3, 0.0, 0.0},    // 4 left elbow
        {0.25, 0.0, 0.0},   // 5 left wrist
        {-0.2, 0.0, 0.0},   // 6 right shoulder
        {-0.3, 0.0, 0.0},   // 7 right elbow
        {-0.25, 0.0, 0.0},  // 8 right wrist
        {0.12, -0.1, 0.0},  // 9 left hip
        {0.0, -0.45, 0.0},  // 10 left knee
        {0.0, -0.45, 0.0},  // 11 left ankle
        {-0.12, -0.1, 0.0}, // 12 right hip
        {0.0, -0.45, 0.0},  // 13 right knee
        {0.0, -0.45, 0.0},  // 14 right ankle
    };
    return m;
}

/**
 * Forward kinematics with a random bounded rotation at every joint;
 * rotations accumulate down the tree, so larger amplitudes produce
 * poses far from the rest configuration.
 */
inline Shape3D random_pose(const SkeletonModel& model, double amplitude, std::mt19937_64& rng)
{
    const std::size_t joints = model.parents.size();
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> angle(-amplitude, amplitude);

    std::vector<Eigen::Matrix3d> accumulated(joints, Eigen::Matrix3d::Identity());
    Eigen::Matrix3Xd points(3, static_cast<Eigen::Index>(joints));
    for (std::size_t j = 0; j < joints; ++j) {
        Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
        if (axis.norm() < 1e-12) axis = Eigen::Vector3d::UnitZ();
        axis.normalize();
        const Eigen::Matrix3d local = Eigen::AngleAxisd(angle(rng), axis).toRotationMatrix();
        if (model.parents[j] < 0) {
            accumulated[j] = local;
            points.col(static_cast<Eigen::Index>(j)) = Eigen::Vector3d::Zero();
        } else {
            const auto parent = static_cast<std::size_t>(model.parents[j]);
            accumulated[j] = accumulated[parent] * local;
            points.col(static_cast<Eigen::Index>(j)) =
                points.col(static_cast<Eigen::Index>(parent)) + accumulated[j] * model.offsets[j];
        }
    }
    return Shape3D(std::move(points));
}

inline std::vector<Shape3D> make_pose_set(int count, double amplitude, std::uint64_t seed)
{
    std::mt19937_64 rng(mix_seed(seed));
    const SkeletonModel model = default_skeleton();
    std::vector<Shape3D> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(random_pose(model, amplitude, rng));
    return out;
}

} // namespace synth
} // namespace shapelift

#endif /* SHAPELIFT_SYNTHETIC_HPP */

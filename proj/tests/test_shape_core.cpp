#include "shapelift/metrics.hpp"
#include "shapelift/shape_ops.hpp"
#include "shapelift/types.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

using namespace shapelift;

namespace {

Eigen::Matrix3Xd random_shape_points(Eigen::Index p, std::mt19937_64& rng)
{
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Matrix3Xd pts(3, p);
    for (Eigen::Index r = 0; r < 3; ++r)
        for (Eigen::Index c = 0; c < p; ++c) pts(r, c) = gauss(rng);
    return pts;
}

} // namespace

TEST_CASE("centralize removes 2D row means")
{
    Eigen::Matrix2Xd pts(2, 3);
    pts << 1, 2, 3, 4, 5, 6;
    const auto result = centralize(Landmarks2D(pts));
    Eigen::Matrix2Xd expected(2, 3);
    expected << -1, 0, 1, -1, 0, 1;
    CHECK((result.value.points - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(result.mean.isApprox(Eigen::Vector2d(2, 5), 1e-12));
}

TEST_CASE("centralize is idempotent")
{
    std::mt19937_64 rng(7);
    const Shape3D shape(random_shape_points(9, rng));
    const auto once = centralize(shape);
    const auto twice = centralize(once.value);
    CHECK(once.value.points.isApprox(twice.value.points, 1e-12));
    CHECK(twice.mean.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(once.value.is_centralized(1e-12));
}

TEST_CASE("centralize uses visible columns only")
{
    Eigen::Matrix2Xd pts(2, 3);
    pts << 1, 3, 100, 0, 0, 100;
    VisibilityMask vis(3);
    vis << true, true, false;
    const auto result = centralize(Landmarks2D(pts, vis));
    CHECK(result.mean.isApprox(Eigen::Vector2d(2, 0), 1e-12));
    CHECK(result.value.points(0, 0) == Catch::Approx(-1.0));
    CHECK(result.value.points(0, 1) == Catch::Approx(1.0));
    CHECK(result.value.points(1, 0) == Catch::Approx(0.0));
}

TEST_CASE("centralize rejects fully occluded input")
{
    Eigen::Matrix2Xd pts = Eigen::Matrix2Xd::Zero(2, 2);
    const VisibilityMask vis = VisibilityMask::Constant(2, false);
    CHECK_THROWS_WITH(centralize(Landmarks2D(pts, vis)), Catch::Matchers::ContainsSubstring("no observations"));
}

TEST_CASE("normalize_unit_variance examples")
{
    Eigen::Matrix2Xd pts(2, 2);
    pts << 1, -1, 1, -1;
    const auto result = normalize_unit_variance(Landmarks2D(pts));
    CHECK(result.sigma == Catch::Approx(1.0));
    CHECK(result.value.points.isApprox(pts, 1e-12));

    const auto scaled = normalize_unit_variance(Landmarks2D((5.0 * pts).eval()));
    CHECK(scaled.sigma == Catch::Approx(5.0));
    CHECK(scaled.value.points.isApprox(result.value.points, 1e-12));
}

TEST_CASE("normalize_unit_variance produces unit mean-square entries")
{
    std::mt19937_64 rng(21);
    const auto shape = centralize(Shape3D(random_shape_points(15, rng))).value;
    const auto result = normalize_unit_variance(shape);
    const double mean_sq =
        result.value.points.squaredNorm() / static_cast<double>(3 * result.value.landmark_count());
    CHECK(mean_sq == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("normalize_unit_variance rejects the zero shape")
{
    CHECK_THROWS_WITH(normalize_unit_variance(Shape3D(Eigen::Matrix3Xd::Zero(3, 4))),
                      Catch::Matchers::ContainsSubstring("degenerate shape"));
}

TEST_CASE("compose_shape selects bases lineally")
{
    std::mt19937_64 rng(3);
    std::vector<Shape3D> bases{Shape3D(random_shape_points(6, rng)),
                               Shape3D(random_shape_points(6, rng))};
    const ShapeDictionary dict(bases);

    Eigen::VectorXd one_hot(2);
    one_hot << 1, 0;
    CHECK(compose_shape(dict, Coefficients(one_hot)).points.isApprox(bases[0].points, 1e-14));

    CHECK(compose_shape(dict, Coefficients(Eigen::VectorXd::Zero(2))).points.norm() == 0.0);

    const ShapeDictionary twin({bases[0], bases[0]});
    Eigen::VectorXd half = Eigen::VectorXd::Constant(2, 0.5);
    CHECK(compose_shape(twin, Coefficients(half)).points.isApprox(bases[0].points, 1e-14));

    CHECK_THROWS_AS(compose_shape(dict, Coefficients(Eigen::VectorXd::Zero(3))), std::invalid_argument);
}

TEST_CASE("compose_relaxed matches brute-force evaluation")
{
    std::mt19937_64 rng(11);
    std::vector<Shape3D> bases;
    for (int i = 0; i < 3; ++i) bases.emplace_back(random_shape_points(5, rng));
    const ShapeDictionary dict(bases);

    std::vector<Rotation> rots{Rotation::about_z(0.3), Rotation::about_y(-1.1), Rotation::about_x(2.0)};
    Eigen::VectorXd c(3);
    c << 0.5, 1.5, 0.25;

    const Shape3D composed = compose_relaxed(dict, Coefficients(c), rots);
    Eigen::Matrix3Xd expected = Eigen::Matrix3Xd::Zero(3, 5);
    for (int i = 0; i < 3; ++i)
        expected += c[i] * (rots[static_cast<std::size_t>(i)].matrix * bases[static_cast<std::size_t>(i)].points);
    CHECK(composed.points.isApprox(expected, 1e-13));

    // identity rotations reduce to compose_shape
    const std::vector<Rotation> ids(3, Rotation::identity());
    CHECK(compose_relaxed(dict, Coefficients(c), ids).points.isApprox(compose_shape(dict, Coefficients(c)).points, 1e-13));

    // shared rotation distributes over the sum
    const std::vector<Rotation> shared(3, rots[0]);
    CHECK(compose_relaxed(dict, Coefficients(c), shared)
              .points.isApprox((rots[0].matrix * compose_shape(dict, Coefficients(c)).points).eval(), 1e-13));
}

TEST_CASE("compose_relaxed rotates a single basis as expected")
{
    Eigen::Matrix3Xd pts(3, 2);
    pts << 1, 0, 0, 1, 0, 0;
    const ShapeDictionary dict({Shape3D(pts)});
    const std::vector<Rotation> rot{Rotation::about_z(std::numbers::pi / 2.0)};
    Eigen::VectorXd c = Eigen::VectorXd::Ones(1);
    const Shape3D out = compose_relaxed(dict, Coefficients(c), rot);
    Eigen::Matrix3Xd expected(3, 2);
    expected << 0, -1, 1, 0, 0, 0;
    CHECK((out.points - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("project_weak_perspective affine action")
{
    std::mt19937_64 rng(5);
    const Shape3D shape(random_shape_points(7, rng));

    const Landmarks2D identity_proj =
        project_weak_perspective(shape, CameraWeakPerspective{}, Rotation::identity());
    CHECK(identity_proj.points.isApprox(shape.points.topRows<2>(), 1e-14));
    CHECK(identity_proj.visible_count() == 7);

    const Landmarks2D affine = project_weak_perspective(shape, CameraWeakPerspective(2.0),
                                                        Rotation::identity(), Eigen::Vector2d(1, 1));
    CHECK(affine.points.isApprox((2.0 * shape.points.topRows<2>()).colwise() + Eigen::Vector2d(1, 1),
                                 1e-14));
}

TEST_CASE("project_weak_perspective matches per-frame manual rotation over an orbit")
{
    std::mt19937_64 rng(13);
    const Shape3D shape(random_shape_points(10, rng));
    for (int frame = 0; frame < 16; ++frame) {
        const double azimuth = 2.0 * std::numbers::pi * frame / 16.0;
        const Rotation rot = Rotation::about_y(azimuth);
        const Landmarks2D projected = project_weak_perspective(shape, CameraWeakPerspective{}, rot);
        const Eigen::Matrix3Xd rotated = rot.matrix * shape.points;
        CHECK(projected.points.isApprox(rotated.topRows<2>(), 1e-12));
    }
}

TEST_CASE("procrustes_align recovers an exact similarity")
{
    std::mt19937_64 rng(17);
    const Shape3D a(random_shape_points(12, rng));

    const auto self = procrustes_align(a, a);
    CHECK(self.residual < 1e-10);
    CHECK(self.scale == Catch::Approx(1.0).margin(1e-10));
    CHECK(self.rotation.matrix.isApprox(Eigen::Matrix3d::Identity(), 1e-8));

    const Rotation r0 = Rotation::from_euler_zyz(0.4, 1.2, -0.7);
    const Eigen::Vector3d t0(0.3, -2.0, 5.0);
    Eigen::Matrix3Xd b_pts = 2.0 * (r0.matrix * a.points);
    b_pts.colwise() += t0;
    const auto rec = procrustes_align(a, Shape3D(b_pts));
    CHECK(rec.residual < 1e-9);
    CHECK(rec.scale == Catch::Approx(2.0).epsilon(1e-9));
    CHECK(rec.rotation.matrix.isApprox(r0.matrix, 1e-9));
    CHECK(rec.translation.isApprox(t0, 1e-9));
    CHECK(rec.rotation.is_valid(1e-9));
}

TEST_CASE("procrustes_align beats random similarity transforms on a noisy pair")
{
    std::mt19937_64 rng(23);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Shape3D a(random_shape_points(10, rng));
    Eigen::Matrix3Xd b_pts = 1.4 * (Rotation::from_euler_zyz(1.0, 0.5, 0.2).matrix * a.points);
    for (Eigen::Index i = 0; i < b_pts.size(); ++i) b_pts(i / 10, i % 10) += 0.05 * gauss(rng);
    const Shape3D b(b_pts);

    const auto aligned = procrustes_align(a, b);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> scale(0.5, 2.5);
    for (int trial = 0; trial < 100; ++trial) {
        const Rotation r = Rotation::from_euler_zyz(angle(rng), angle(rng), angle(rng));
        Eigen::Matrix3Xd candidate = scale(rng) * (r.matrix * a.points);
        candidate.colwise() += Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
        CHECK((candidate - b.points).norm() >= aligned.residual - 1e-9);
    }
}

TEST_CASE("procrustes_align rejects rank-0 shapes")
{
    const Shape3D degenerate(Eigen::Matrix3Xd::Ones(3, 4)); // all landmarks coincide
    std::mt19937_64 rng(29);
    const Shape3D fine(random_shape_points(4, rng));
    CHECK_THROWS_AS(procrustes_align(degenerate, fine), std::invalid_argument);
}

TEST_CASE("error_3d compensates translation and positive scale only")
{
    std::mt19937_64 rng(31);
    const Shape3D truth(random_shape_points(8, rng));

    CHECK(error_3d(truth, truth) == Catch::Approx(0.0).margin(1e-12));

    Eigen::Matrix3Xd scaled = 3.0 * truth.points;
    scaled.colwise() += Eigen::Vector3d(1, 2, 3);
    CHECK(error_3d(Shape3D(scaled), truth) == Catch::Approx(0.0).margin(1e-10));

    const Shape3D rotated(Rotation::about_z(1.0).matrix * truth.points);
    CHECK(error_3d(rotated, truth) > 1e-3);
}

TEST_CASE("error_2d averages distances over mutually visible landmarks")
{
    Eigen::Matrix2Xd pts = Eigen::Matrix2Xd::Random(2, 5);
    const Landmarks2D base(pts);
    CHECK(error_2d(base, base) == Catch::Approx(0.0));

    Eigen::Matrix2Xd shifted = pts;
    shifted.col(2) += Eigen::Vector2d(3, 4);
    CHECK(error_2d(Landmarks2D(shifted), base) == Catch::Approx(1.0));

    std::mt19937_64 rng(37);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Matrix2Xd other(2, 5);
    for (Eigen::Index i = 0; i < other.size(); ++i) other(i % 2, i / 2) = gauss(rng);
    double manual = 0.0;
    for (int i = 0; i < 5; ++i) manual += (pts.col(i) - other.col(i)).norm();
    CHECK(error_2d(Landmarks2D(other), base) == Catch::Approx(manual / 5.0));

    VisibilityMask none = VisibilityMask::Constant(5, false);
    // visible flags that never overlap
    VisibilityMask left(5), right(5);
    left << true, true, false, false, false;
    right << false, false, true, true, true;
    CHECK_THROWS_AS(error_2d(Landmarks2D(pts, left), Landmarks2D(pts, right)), std::invalid_argument);
    (void)none;
}

TEST_CASE("rotation top rows have unit spectral norm")
{
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < 200; ++i) {
        const Rotation r = Rotation::from_euler_zyz(angle(rng), angle(rng), angle(rng));
        REQUIRE(r.is_valid(1e-8));
        const Matrix23d top = r.top_rows();
        const Eigen::Matrix2d gram = top * top.transpose();
        CHECK((gram - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-8);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(top);
        CHECK(svd.singularValues()[0] == Catch::Approx(1.0).margin(1e-8));
    }
}

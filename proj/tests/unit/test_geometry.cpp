#include <doctest.h>

#include <cmath>
#include <numbers>

#include "trapwave/geometry.hpp"
#include "trapwave/rng.hpp"

using namespace trapwave;

namespace {

Scene two_balls(double r1 = 1, double r2 = 1, double d = 2)
{
    return Scene::pair(Body::ball(Vec3(-d, 0, 0), r1), Body::ball(Vec3(d, 0, 0), r2));
}

//! Smallest root t > 0 of |o + t d - c| = r.
std::optional<double> sphere_entry(const Vec3& o, const Vec3& d, const Vec3& c, double r)
{
    const Vec3 oc = o - c;
    const double b = oc.dot(d);
    const double disc = b * b - (oc.squaredNorm() - r * r);
    if (disc <= 0) return std::nullopt;
    const double t = -b - std::sqrt(disc);
    if (t <= 0) return std::nullopt;
    return t;
}

}  // namespace

TEST_CASE("first_hit on a ball")
{
    const Scene s = Scene::single(Body::ball(Vec3::Zero(), 1));
    const auto hit = first_hit(s, Ray(Vec3(-3, 0, 0), Vec3(1, 0, 0)));
    REQUIRE(hit);
    CHECK(hit->time == doctest::Approx(2).epsilon(1e-12));
    CHECK((hit->point - Vec3(-1, 0, 0)).norm() < 1e-12);
    CHECK((hit->normal - Vec3(1, 0, 0)).norm() < 1e-12);
    CHECK(hit->obstacle == 1);

    CHECK_FALSE(first_hit(s, Ray(Vec3(-3, 0, 0), Vec3(-1, 0, 0))));
}

TEST_CASE("first_hit on an ellipsoid")
{
    const Scene s = Scene::single(Body::ellipsoid(Vec3::Zero(), Vec3(2, 1, 1)));
    const auto hit = first_hit(s, Ray(Vec3(-5, 0.5, 0), Vec3(1, 0, 0)));
    REQUIRE(hit);
    CHECK(hit->time == doctest::Approx(5 - 2 * std::sqrt(0.75)).epsilon(1e-12));
}

TEST_CASE("first_hit agrees with the line-sphere quadratic")
{
    const Scene s = two_balls();
    int hits = 0;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        CounterRng rng(1, i);
        const Vec3 o = 6.0 * uniform_on_sphere(rng);
        const Vec3 d = (uniform_in_ball(rng, Vec3::Zero(), 2.5) - o).normalized();
        const auto a = sphere_entry(o, d, Vec3(-2, 0, 0), 1);
        const auto b = sphere_entry(o, d, Vec3(2, 0, 0), 1);
        std::optional<double> expect = a;
        if (b && (!a || *b < *a)) expect = b;
        std::optional<Hit> hit;
        try {
            hit = first_hit(s, Ray(o, d));
        } catch (const TangentHit&) {
            continue;
        }
        REQUIRE(hit.has_value() == expect.has_value());
        if (!hit) continue;
        ++hits;
        CHECK(hit->time == doctest::Approx(*expect).epsilon(1e-10));
        const Body& body = s.bodies()[static_cast<std::size_t>(hit->obstacle - 1)];
        CHECK(std::abs(body.level(hit->point)) < 1e-9);
        CHECK(hit->normal.dot(d) > 0);
    }
    CHECK(hits > 500);
}

TEST_CASE("first_hit error paths")
{
    const Scene s = Scene::single(Body::ball(Vec3::Zero(), 1));
    CHECK_THROWS_AS(first_hit(s, Ray(Vec3(-1, 0, 0), Vec3(1, 0, 0))), DegenerateRay);
    CHECK_THROWS_AS(first_hit(s, Ray(Vec3(-3, 1, 0), Vec3(1, 0, 0))), TangentHit);
    CHECK_THROWS_AS(Ray(Vec3::Zero(), Vec3(1, 1, 0)), std::invalid_argument);
}

TEST_CASE("surface_normal")
{
    CHECK((surface_normal(Body::ball(Vec3::Zero(), 1), Vec3(1, 0, 0)) - Vec3(-1, 0, 0)).norm() < 1e-15);
    CHECK((surface_normal(Body::ball(Vec3(2, 0, 0), 1), Vec3(1, 0, 0)) - Vec3(1, 0, 0)).norm() < 1e-15);
    const Body se = Body::superellipsoid(Vec3::Zero(), Vec3(1, 2, 3), 4);
    CHECK((surface_normal(se, Vec3(0, 2, 0)) - Vec3(0, -1, 0)).norm() < 1e-12);
    CHECK_THROWS_AS(surface_normal(Body::ball(Vec3::Zero(), 1), Vec3(1.1, 0, 0)), OffSurface);
}

TEST_CASE("trapped segment of two balls")
{
    const Scene s = two_balls();
    const TrappedSegment& seg = *s.trapped();
    CHECK((seg.p - Vec3(-1, 0, 0)).norm() < 1e-10);
    CHECK((seg.q - Vec3(1, 0, 0)).norm() < 1e-10);
    CHECK(seg.gap == doctest::Approx(2).epsilon(1e-10));
    CHECK(seg.normality_defect < 1e-10);

    CHECK(two_balls(1, 2, 3).gap() == doctest::Approx(3).epsilon(1e-10));
    CHECK_THROWS_AS(two_balls(1, 1, 0.9), std::invalid_argument);
}

TEST_CASE("trapped segment of a generic ellipsoid pair against dense sampling")
{
    const Body a = Body::ellipsoid(Vec3(-2.5, 0.3, 0.1), Vec3(1, 0.7, 0.9), frame_from_axis<double>(Vec3(1, 0.3, 0.2)));
    const Body b = Body::ellipsoid(Vec3(2, -0.2, 0.4), Vec3(1.2, 0.8, 0.6), frame_from_axis<double>(Vec3(0.2, 1, -0.4)));
    const Scene s = Scene::pair(a, b);
    const TrappedSegment& seg = *s.trapped();
    CHECK(seg.normality_defect < 1e-8);
    CHECK(std::abs(a.level(seg.p)) < 1e-9);
    CHECK(std::abs(b.level(seg.q)) < 1e-9);

    const std::size_t n = 3000;
    std::vector<Vec3> pa(n), pb(n);
    for (std::size_t i = 0; i < n; ++i) {
        pa[i] = a.radial_point(fibonacci_sphere(i, n));
        pb[i] = b.radial_point(fibonacci_sphere(i, n));
    }
    double dense = std::numeric_limits<double>::infinity();
    for (const Vec3& p : pa)
        for (const Vec3& q : pb) dense = std::min(dense, (p - q).norm());
    CHECK(seg.gap <= dense + 1e-12);
    CHECK(dense - seg.gap < 0.02);
}

TEST_CASE("principal curvatures")
{
    const Body ball = Body::ball(Vec3(1, 2, 3), 2);
    const auto k = principal_curvatures(ball, Vec3(1, 2, 5));
    CHECK(k[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(k[1] == doctest::Approx(0.5).epsilon(1e-12));

    // Tip of an ellipsoid: a / b^2 and a / c^2.
    const Body ell = Body::ellipsoid(Vec3::Zero(), Vec3(2, 1, 0.5));
    const auto ke = principal_curvatures(ell, Vec3(2, 0, 0));
    CHECK(ke[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(ke[1] == doctest::Approx(8.0).epsilon(1e-10));

    CHECK(min_principal_curvature(ell, 10000) > 0.1);
    // Flat faces at the superellipsoid's axis points.
    CHECK(min_principal_curvature(Body::superellipsoid(Vec3::Zero(), Vec3(1, 1, 1), 4), 10000) < 1e-3);
}

TEST_CASE("cap_slab_volume")
{
    const VolumeEstimate none = cap_slab_volume(Vec3(10, 0, 0), 1, 1, 3, 10000, 1);
    CHECK(none.value == 0);
    CHECK(none.stderr_ == 0);

    const VolumeEstimate full = cap_slab_volume(Vec3(5, 0, 0), 0.5, 10, 5, 10000, 1);
    CHECK(full.value == doctest::Approx(4.0 / 3.0 * std::numbers::pi * 0.125).epsilon(1e-12));

    // Thin shell through the centre of the ball: volume ~ 2 R pi r^2.
    const VolumeEstimate thin = cap_slab_volume(Vec3(100, 0, 0), 1, 0.1, 100, 200000, 3);
    const double oracle = 2 * 0.1 * std::numbers::pi * (1 - 0.1 * 0.1 / 3);
    CHECK(std::abs(thin.value - oracle) < 4 * thin.stderr_ + 2e-3);
}

TEST_CASE("scene queries")
{
    const Scene s = two_balls();
    CHECK(s.bounding_radius() >= 3);
    CHECK(s.inside(Vec3(2, 0, 0)) == 1);
    CHECK(s.inside(Vec3(0, 0, 0)) == -1);
    CHECK(s.level(Vec3(0, 0, 0)) == doctest::Approx(1));
    CHECK(std::isinf(Scene::empty().gap()));
    const Vec3 c = closest_point(s.bodies()[0], Vec3(-2, 3, 0));
    CHECK((c - Vec3(-2, 1, 0)).norm() < 1e-9);
}

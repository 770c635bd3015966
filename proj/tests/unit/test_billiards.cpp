#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "trapwave/billiards.hpp"
#include "trapwave/rng.hpp"

using namespace trapwave;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Scene two_balls() { return Scene::pair(Body::ball(Vec3(-2, 0, 0), 1), Body::ball(Vec3(2, 0, 0), 1)); }

//! Independent planar billiard between unit circles at (+-2, 0): bounce count and escape time from |p| = R.
struct Planar {
    int bounces = 0;
    double escape = 0;
};

Planar planar_trace(double px, double py, double dx, double dy, double R)
{
    Planar out;
    double t = 0;
    for (;;) {
        double best = std::numeric_limits<double>::infinity();
        double cx = 0;
        for (double c : {-2.0, 2.0}) {
            const double ox = px - c, oy = py;
            const double b = ox * dx + oy * dy;
            const double disc = b * b - (ox * ox + oy * oy - 1);
            if (disc <= 0) continue;
            const double s = -b - std::sqrt(disc);
            if (s > 1e-12 && s < best) {
                best = s;
                cx = c;
            }
        }
        if (!std::isfinite(best)) {
            // Straight exit: solve |p + s d| = R.
            const double b = px * dx + py * dy;
            out.escape = t - b + std::sqrt(b * b - (px * px + py * py - R * R));
            return out;
        }
        px += best * dx;
        py += best * dy;
        t += best;
        const double nx = cx - px, ny = -py;
        const double dn = dx * nx + dy * ny;
        dx -= 2 * dn * nx;
        dy -= 2 * dn * ny;
        ++out.bounces;
    }
}

}  // namespace

TEST_CASE("reflect examples")
{
    const Vec3 n(1, 0, 0);
    CHECK((reflect(Vec3(1, 0, 0), n) - Vec3(-1, 0, 0)).norm() == 0);
    CHECK((reflect(Vec3(0, 1, 0), n) - Vec3(0, 1, 0)).norm() == 0);
    const double s = std::sqrt(0.5);
    CHECK((reflect(Vec3(s, s, 0), n) - Vec3(-s, s, 0)).norm() < 1e-16);
}

TEST_CASE("reflect is a norm-preserving involution")
{
    for (std::uint64_t i = 0; i < 10000; ++i) {
        CounterRng rng(2, i);
        const Vec3 xi = uniform_on_sphere(rng);
        const Vec3 n = uniform_on_sphere(rng);
        const Vec3 r = reflect(xi, n);
        CHECK(std::abs(r.norm() - 1) < 1e-12);
        CHECK((reflect(r, n) - xi).norm() < 1e-12);
        CHECK(std::abs(r.dot(n) + xi.dot(n)) < 1e-12);
    }
}

TEST_CASE("trapped axis ray bounces until the horizon")
{
    const Trajectory tr = trace(two_balls(), Ray(Vec3::Zero(), Vec3(1, 0, 0)), 20, 10);
    CHECK(tr.terminal == Terminal::horizon);
    CHECK(tr.bounces() == 10);
    for (std::size_t k = 0; k < tr.bounces(); ++k) CHECK(tr.story[k] == (k % 2 == 0 ? 2 : 1));
    CHECK(tr.total_time() == doctest::Approx(20).epsilon(1e-12));
}

TEST_CASE("trajectory invariants")
{
    const Scene s = two_balls();
    for (std::uint64_t i = 0; i < 200; ++i) {
        CounterRng rng(3, i);
        const Vec3 x(-0.5 + rng.uniform(), -0.3 + 0.6 * rng.uniform(), -0.3 + 0.6 * rng.uniform());
        const Vec3 xi = (Vec3(1, 0, 0) + 0.05 * uniform_on_sphere(rng)).normalized();
        const Trajectory tr = trace(s, Ray(x, xi), 100, 10);
        REQUIRE(tr.points.size() == tr.flight_times.size() + 1);
        for (std::size_t k = 0; k < tr.flight_times.size(); ++k) {
            CHECK((tr.points[k] + tr.flight_times[k] * tr.directions[k] - tr.points[k + 1]).norm() < 1e-9);
            CHECK(tr.flight_times[k] >= 0);
        }
        for (const Vec3& d : tr.directions) CHECK(std::abs(d.norm() - 1) < 1e-12);
        for (std::size_t k = 1; k < tr.story.size(); ++k) CHECK(tr.story[k] != tr.story[k - 1]);
    }
}

TEST_CASE("escape without hits")
{
    const Trajectory tr = trace(two_balls(), Ray(Vec3::Zero(), Vec3(0, 1, 0)), 100, 10);
    CHECK(tr.terminal == Terminal::escaped);
    CHECK(tr.bounces() == 0);
    CHECK(tr.escape_time == doctest::Approx(10));
}

TEST_CASE("near-axis rays match the planar recursion")
{
    int previous = -1;
    for (double off : {1e-2, 1e-4, 1e-6}) {
        const Trajectory tr = trace(two_balls(), Ray(Vec3(0, off, 0), Vec3(1, 0, 0)), 1e4, 10);
        const Planar p = planar_trace(0, off, 1, 0, 10);
        CHECK(tr.terminal == Terminal::escaped);
        CHECK(static_cast<int>(tr.bounces()) == p.bounces);
        CHECK(tr.escape_time == doctest::Approx(p.escape).epsilon(1e-8));
        CHECK(p.bounces > previous);
        previous = p.bounces;
    }
}

TEST_CASE("monotonicity certificate")
{
    const Scene s = two_balls();
    const Trajectory a = trace(s, Ray(Vec3(0, 0.1, 0), Vec3(1, 0.02, 0).normalized()), 5, 10);
    const auto same = monotonicity_certificate(a, a);
    CHECK(same.lhs == 0);
    CHECK(same.rhs == 0);
    CHECK(same.margin == 0);

    // Without reflections the inequality is an identity.
    const Scene none = Scene::empty();
    const Trajectory f1 = trace(none, Ray(Vec3::Zero(), Vec3(1, 0, 0)), 3, kInf);
    const Trajectory f2 = trace(none, Ray(Vec3::Zero(), Vec3(0.6, 0.8, 0)), 3, kInf);
    const auto free = monotonicity_certificate(f1, f2);
    CHECK(free.lhs == doctest::Approx(free.rhs).epsilon(1e-12));

    const Trajectory b = trace(s, Ray(Vec3(0, 0.1, 0), Vec3(-1, 0.02, 0).normalized()), 5, 10);
    CHECK_THROWS_AS(monotonicity_certificate(a, b), StoryMismatch);
}

TEST_CASE("monotonicity margin on random same-story pairs")
{
    const Scene s = two_balls();
    double worst = kInf;
    int pairs = 0;
    for (std::uint64_t i = 0; pairs < 1000; ++i) {
        CounterRng rng(4, i);
        const Vec3 x(-0.5 + rng.uniform(), -0.4 + 0.8 * rng.uniform(), -0.4 + 0.8 * rng.uniform());
        const Vec3 xi = (Vec3(1, 0, 0) + 0.2 * uniform_on_sphere(rng)).normalized();
        const Vec3 xi2 = (xi + 0.01 * uniform_on_sphere(rng)).normalized();
        const Trajectory a = trace(s, Ray(x, xi), 15, 10);
        const Trajectory b = trace(s, Ray(x, xi2), 15, 10);
        std::size_t n = 0;
        while (n < a.bounces() && n < b.bounces() && a.story[n] == b.story[n]) ++n;
        if (n < 2) continue;
        worst = std::min(worst, monotonicity_certificate(truncate(a, n), truncate(b, n)).margin);
        ++pairs;
    }
    CHECK(worst >= -1e-10);
}

TEST_CASE("wilson interval matches the quadratic form")
{
    const double z = 1.959963984540054;
    for (auto [k, n] : {std::pair<std::size_t, std::size_t>{5, 100}, {0, 50}, {50, 50}, {13, 1000}}) {
        const auto [lo, hi] = wilson_interval(k, n);
        // Roots in p of (phat - p)^2 = z^2 p (1 - p) / n.
        const double ph = static_cast<double>(k) / static_cast<double>(n), q = z * z / static_cast<double>(n);
        const double a = 1 + q, b = -(2 * ph + q), c = ph * ph;
        const double disc = std::sqrt(b * b - 4 * a * c);
        CHECK(lo == doctest::Approx(std::max(0.0, (-b - disc) / (2 * a))).epsilon(1e-12));
        CHECK(hi == doctest::Approx(std::min(1.0, (-b + disc) / (2 * a))).epsilon(1e-12));
    }
}

TEST_CASE("direction clustering")
{
    std::vector<Vec3> dirs;
    for (std::uint64_t i = 0; i < 200; ++i) {
        CounterRng rng(5, i);
        const Vec3 axis = i % 2 ? Vec3(1, 0, 0) : Vec3(-1, 0, 0);
        dirs.push_back((axis + 0.02 * uniform_on_sphere(rng)).normalized());
    }
    const auto clusters = cluster_directions(dirs, 0.1);
    REQUIRE(clusters.size() == 2);
    for (const auto& c : clusters) {
        CHECK(c.count == 100);
        CHECK(std::abs(std::abs(c.center.x()) - 1) < 1e-3);
        CHECK(c.spread < 0.03);
    }
}

TEST_CASE("reconcentration probe in free space")
{
    const Scene none = Scene::empty();
    const Vec3 e = Vec3(0.3, -0.5, 0.8).normalized();
    const double t = 4;
    for (double eps : {1e-2, 1e-3}) {
        const ProbeResult r = reconcentration_probe(none, Vec3::Zero(), t * e, t, eps);
        REQUIRE(r.caps.size() == 1);
        CHECK(angle_between(r.caps[0].center, e) < 1e-6);
        const double cap = 2 * std::numbers::pi * (1 - std::cos(std::asin(eps / t)));
        CHECK(r.total_measure == doctest::Approx(cap).epsilon(1e-3));
    }
    // Target inside an obstacle.
    CHECK(reconcentration_probe(two_balls(), Vec3(0, 2, 0), Vec3(2, 0, 0), 3, 0.01).caps.empty());
}

TEST_CASE("trapping report")
{
    const Scene s = two_balls();
    const auto reps = trapping_report(s, Vec3::Zero(), 10, {10, 20, 40}, 20000, 9);
    for (std::size_t i = 0; i < reps.size(); ++i) {
        CHECK(reps[i].trapped_fraction >= 0);
        CHECK(reps[i].trapped_fraction <= 1);
        CHECK(reps[i].ci_low <= reps[i].trapped_fraction);
        CHECK(reps[i].ci_high >= reps[i].trapped_fraction);
        if (i) CHECK(reps[i].trapped_fraction <= reps[i - 1].trapped_fraction);
    }
    // At T = R every ray that misses both balls has just escaped: the survivors are the
    // directions that hit a ball, two cones of half-angle 30 degrees.
    const double hit_fraction = 1 - std::cos(std::numbers::pi / 6);
    CHECK(reps[0].ci_low <= hit_fraction);
    CHECK(reps[0].ci_high >= hit_fraction);

    const auto empty = trapping_report(Scene::empty(), Vec3(-1, 0, 0), 10, {12}, 5000, 9);
    CHECK(empty[0].trapped == 0);
}

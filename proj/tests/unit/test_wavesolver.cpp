#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "trapwave/diagnostics.hpp"
#include "trapwave/profiles.hpp"
#include "trapwave/rng.hpp"

using namespace trapwave;

namespace {

Scene two_balls() { return Scene::pair(Body::ball(Vec3(-2, 0, 0), 1), Body::ball(Vec3(2, 0, 0), 1)); }

using GridPtr = std::shared_ptr<const ExteriorGrid>;

GridPtr make_grid(const Scene& s, const GridSpec& spec) { return std::make_shared<const ExteriorGrid>(s, spec); }

template <typename F>
void fill(WaveField& w, F f)
{
    const ExteriorGrid& g = w.grid();
    for (std::size_t i = 0; i < g.padded_size(); ++i)
        if (g.active(i)) w.u[static_cast<Eigen::Index>(i)] = f(g.position(i));
}

void bump(WaveField& w, const Vec3& c, double sigma, double amp = 1)
{
    fill(w, [&](const Vec3& x) { return amp * std::exp(-(x - c).squaredNorm() / (sigma * sigma)); });
}

std::size_t steps_for(const ExteriorGrid& g, double T, double cfl = 0.5)
{
    return static_cast<std::size_t>(std::ceil(T / stable_dt(g, cfl)));
}

}  // namespace

TEST_CASE("grid masks")
{
    const auto empty = make_grid(Scene::empty(), GridSpec::cube(0.25, 2));
    CHECK(empty->cells()[0] == 16);
    CHECK(empty->active_count() == 16u * 16u * 16u);
    CHECK(empty->obstacle_count() == 0);

    const double h = 1.0 / 16;
    const auto ball = make_grid(Scene::single(Body::ball(Vec3::Zero(), 1)), GridSpec::cube(h, 1.5));
    const double cells = 4.0 / 3.0 * std::numbers::pi / (h * h * h);
    CHECK(std::abs(static_cast<double>(ball->obstacle_count()) - cells) < 0.05 * cells);

    for (std::size_t i = 0; i < ball->padded_size(); ++i) {
        if (!ball->active(i)) continue;
        CHECK(ball->scene().level(ball->position(i)) >= 0);
    }
    CHECK_THROWS_AS(make_grid(two_balls(), GridSpec::cube(0.5, 6)), ResolutionTooCoarse);
}

TEST_CASE("surface quadrature")
{
    const auto g = make_grid(Scene::single(Body::ball(Vec3::Zero(), 1)), GridSpec::cube(0.05, 2));
    double area = 0;
    for (const SurfacePoint& p : g->surface_points()) {
        area += p.weight;
        CHECK(std::abs(p.x.norm() - 1) < 1e-12);
        CHECK((p.normal + p.x).norm() < 1e-12);
    }
    CHECK(area == doctest::Approx(4 * std::numbers::pi).epsilon(1e-9));

    // u = |x| - 1 has d_n u = -1 with n pointing into the ball.
    Eigen::ArrayXd u(static_cast<Eigen::Index>(g->padded_size()));
    for (std::size_t i = 0; i < g->padded_size(); ++i) u[static_cast<Eigen::Index>(i)] = g->position(i).norm() - 1;
    double worst = 0;
    for (const SurfacePoint& p : g->surface_points()) worst = std::max(worst, std::abs(g->normal_derivative(u.data(), p) + 1));
    // Trilinear sampling of |x| errs by at most h^2 / 4; the stencil weights sum to 12 / h.
    CHECK(worst < 3 * 0.05);

    const auto fine = make_grid(Scene::single(Body::ball(Vec3::Zero(), 1)), GridSpec::cube(0.025, 2));
    Eigen::ArrayXd uf(static_cast<Eigen::Index>(fine->padded_size()));
    for (std::size_t i = 0; i < fine->padded_size(); ++i) uf[static_cast<Eigen::Index>(i)] = fine->position(i).norm() - 1;
    double worst_fine = 0;
    for (const SurfacePoint& p : fine->surface_points())
        worst_fine = std::max(worst_fine, std::abs(fine->normal_derivative(uf.data(), p) + 1));
    CHECK(worst_fine < 0.6 * worst);
}

TEST_CASE("zero field stays zero")
{
    const auto g = make_grid(two_balls(), GridSpec::cube(0.2, 5));
    WaveField w(g, Nonlinearity::quintic);
    for (int s = 0; s < 10; ++s) step(w, stable_dt(*g, 0.5));
    CHECK(w.u.abs().maxCoeff() == 0);
    CHECK(w.v.abs().maxCoeff() == 0);
    const Energy e = energy(w);
    CHECK(e.total == 0);
    CHECK(e.kinetic == 0);
    CHECK(e.gradient == 0);
    CHECK(e.l6_sixth == 0);
    CHECK(boundary_flux(w) == 0);
}

TEST_CASE("Dirichlet cells stay zero")
{
    const auto g = make_grid(two_balls(), GridSpec::cube(0.2, 5));
    WaveField w(g, Nonlinearity::quintic);
    bump(w, Vec3(0, 1.5, 0), 0.8);
    const double dt = stable_dt(*g, 0.5);
    for (int s = 0; s < 60; ++s) {
        step(w, dt);
        for (std::size_t i = 0; i < g->padded_size(); ++i) {
            if (g->active(i)) continue;
            REQUIRE(w.u[static_cast<Eigen::Index>(i)] == 0);
            REQUIRE(w.v[static_cast<Eigen::Index>(i)] == 0);
        }
    }
}

TEST_CASE("linear evolution is linear")
{
    const auto g = make_grid(two_balls(), GridSpec::cube(0.2, 5));
    auto random_field = [&](std::uint64_t seed) {
        WaveField w(g, Nonlinearity::linear);
        for (std::size_t i = 0; i < g->padded_size(); ++i) {
            if (!g->active(i)) continue;
            CounterRng rng(seed, i);
            w.u[static_cast<Eigen::Index>(i)] = rng.uniform() - 0.5;
            w.v[static_cast<Eigen::Index>(i)] = rng.uniform() - 0.5;
        }
        return w;
    };
    WaveField a = random_field(1), b = random_field(2);
    WaveField c = a;
    c.u = 2 * a.u - 3 * b.u;
    c.v = 2 * a.v - 3 * b.v;
    const double dt = stable_dt(*g, 0.5);
    for (int s = 0; s < 20; ++s) {
        step(a, dt);
        step(b, dt);
        step(c, dt);
    }
    const double scale = c.u.abs().maxCoeff();
    CHECK((c.u - (2 * a.u - 3 * b.u)).abs().maxCoeff() < 1e-12 * scale);
    CHECK((c.v - (2 * a.v - 3 * b.v)).abs().maxCoeff() < 1e-11 * scale);
}

TEST_CASE("kinetic energy of a Gaussian")
{
    const double sigma = 0.5;
    const auto g = make_grid(Scene::empty(), GridSpec::cube(0.1, 3));
    WaveField w(g, Nonlinearity::linear);
    for (std::size_t i = 0; i < g->padded_size(); ++i)
        if (g->active(i)) w.v[static_cast<Eigen::Index>(i)] = std::exp(-g->position(i).squaredNorm() / (sigma * sigma));
    const double exact = std::pow(std::numbers::pi, 1.5) * sigma * sigma * sigma / std::pow(2.0, 1.5);
    const Energy e = energy(w);
    CHECK(e.kinetic == doctest::Approx(exact).epsilon(1e-6));
    CHECK(e.total == doctest::Approx(exact / 2).epsilon(1e-6));
}

TEST_CASE("quintic energy drift")
{
    const auto g = make_grid(two_balls(), GridSpec::cube(0.2, 6));
    WaveField w(g, Nonlinearity::quintic);
    bump(w, Vec3(0, 0.5, 2.5), 1);
    const double e0 = energy(w).total;
    evolve(w, stable_dt(*g, 0.5), 1000);
    CHECK(std::abs(energy(w).total - e0) < 0.01 * e0);
}

TEST_CASE("standing wave converges at second order")
{
    // Box with Dirichlet walls at the ghost-cell centres; the continuous sine mode is exact.
    auto run = [](double h) {
        const double L = 1;
        const auto g = make_grid(Scene::empty(), GridSpec::cube(h, L));
        const double k = std::numbers::pi / (2 * L + h);
        auto mode = [&](const Vec3& x) {
            return std::sin(k * (x.x() + L + h / 2)) * std::sin(k * (x.y() + L + h / 2)) * std::sin(k * (x.z() + L + h / 2));
        };
        WaveField w(g, Nonlinearity::linear);
        fill(w, mode);
        const double T = 1;
        const std::size_t n = steps_for(*g, T);
        evolve(w, T / static_cast<double>(n), n);
        double err = 0;
        for (std::size_t i = 0; i < g->padded_size(); ++i)
            if (g->active(i))
                err = std::max(err, std::abs(w.u[static_cast<Eigen::Index>(i)] - std::cos(std::sqrt(3.0) * k * T) * mode(g->position(i))));
        return err;
    };
    const double coarse = run(0.1);
    const double fine = run(0.05);
    CHECK(coarse < 1e-2);
    CHECK(coarse / fine > 3);
}

TEST_CASE("manufactured solution")
{
    const Scene s = two_balls();
    const Vec3 x0(0.2, 2.5, -0.3);
    const double sig = 0.6, om = 2, T = 0.5;
    auto exact = [&](const Vec3& x, double t) { return std::cos(om * t) * std::exp(-(x - x0).squaredNorm() / (sig * sig)); };
    const Forcing forcing = [&](const Vec3& x, double t) {
        const double r2 = (x - x0).squaredNorm();
        const double e = std::exp(-r2 / (sig * sig));
        return std::cos(om * t) * e * (-om * om - (4 * r2 / std::pow(sig, 4) - 6 / (sig * sig)));
    };
    std::vector<double> errs;
    for (double h : {0.2, 0.1}) {
        const auto g = make_grid(s, GridSpec::cube(h, 4.4));
        WaveField w(g, Nonlinearity::linear);
        fill(w, [&](const Vec3& x) { return exact(x, 0); });
        const std::size_t n = steps_for(*g, T);
        evolve(w, T / static_cast<double>(n), n, nullptr, &forcing);
        double e2 = 0;
        for (std::size_t i = 0; i < g->padded_size(); ++i) {
            if (!g->active(i) || s.level(g->position(i)) < 0.5) continue;
            const double d = w.u[static_cast<Eigen::Index>(i)] - exact(g->position(i), w.t);
            e2 += d * d * g->cell_volume();
        }
        errs.push_back(std::sqrt(e2));
    }
    CHECK(std::log2(errs[0] / errs[1]) >= 1.8);
}

TEST_CASE("quintic and linear agree at small amplitude")
{
    const auto g = make_grid(two_balls(), GridSpec::cube(0.2, 5));
    const double a = 0.05;
    WaveField lin(g, Nonlinearity::linear), quin(g, Nonlinearity::quintic);
    bump(lin, Vec3(0, 1.5, 0), 0.6, a);
    bump(quin, Vec3(0, 1.5, 0), 0.6, a);
    const double T = 1;
    const std::size_t n = steps_for(*g, T);
    evolve(lin, T / static_cast<double>(n), n);
    evolve(quin, T / static_cast<double>(n), n);
    const double diff = (lin.u - quin.u).abs().maxCoeff();
    // |u^5| <= a^5, so Duhamel bounds the difference by a^5 T^2 / 2.
    CHECK(diff <= std::pow(a, 5) * T * T / 2);
    CHECK(diff > 0);
}

TEST_CASE("blowup guard")
{
    const auto g = make_grid(Scene::empty(), GridSpec::cube(0.25, 2));
    WaveField w(g, Nonlinearity::linear);
    bump(w, Vec3::Zero(), 0.5);
    const double dt = 2 * g->h() / std::sqrt(3.0);
    CHECK_THROWS_AS(step(w, dt), std::invalid_argument);

    const double ok = stable_dt(*g, 0.5);
    WaveField big(g, Nonlinearity::linear);
    bump(big, Vec3::Zero(), 0.5, 10 * kBlowupGuard);
    CHECK_THROWS_AS(step(big, ok), Blowup);
    WaveField nan(g, Nonlinearity::linear);
    nan.u[static_cast<Eigen::Index>(g->index(4, 4, 4))] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(step(nan, ok), Blowup);
}

TEST_CASE("causality of the boundary flux")
{
    const auto g = make_grid(Scene::single(Body::ball(Vec3::Zero(), 1)), GridSpec::cube(0.1, 5));
    WaveField w(g, Nonlinearity::linear);
    // Support (to e^-100) ends 1 before the ball.
    bump(w, Vec3(0, 0, 4), 0.2);
    DiagnosticsOptions o;
    o.every = 1;
    DiagnosticsRecorder rec(g, o);
    const std::size_t n = steps_for(*g, 0.9);
    evolve(w, 0.9 / static_cast<double>(n), n, &rec);
    double worst = 0;
    for (const auto& r : rec.series().records) worst = std::max(worst, r.flux);
    CHECK(worst < 1e-10);
}

TEST_CASE("diagnostics of a zero field")
{
    const Scene s = two_balls();
    const auto g = make_grid(s, GridSpec::cube(0.2, 5));
    WaveField w(g, Nonlinearity::quintic);
    DiagnosticsOptions o;
    o.every = 2;
    o.local_radius = 3;
    o.weight = weight_for(s, 4);
    DiagnosticsRecorder rec(g, o);
    evolve(w, stable_dt(*g, 0.5), 10, &rec);
    const auto& series = rec.series();
    const MorawetzResidual r = morawetz_residual(series, 0, w.t);
    CHECK(r.lhs == 0);
    CHECK(r.rhs == 0);
    CHECK(flux_time_average(series, w.t) == 0);
    CHECK(local_energy_average(series, 3, w.t) == 0);
    const AprioriFlux ap = apriori_flux_bound_check(series, 0, w.t);
    CHECK(ap.flux_integral == 0);

    DiagnosticsOptions at_centres;
    at_centres.weight = weight_for(s, 2);
    CHECK_THROWS_AS(DiagnosticsRecorder(g, at_centres), FociInsideObstacle);
}

TEST_CASE("flux integral is quadratic in the amplitude")
{
    const auto g = make_grid(two_balls(), GridSpec::cube(0.2, 5));
    std::vector<AprioriFlux> out;
    for (double a : {1.0, 2.0}) {
        WaveField w(g, Nonlinearity::linear);
        bump(w, Vec3(0, 1.8, 0), 0.5, a);
        DiagnosticsOptions o;
        o.every = 1;
        DiagnosticsRecorder rec(g, o);
        const std::size_t n = steps_for(*g, 2);
        evolve(w, 2.0 / static_cast<double>(n), n, &rec);
        out.push_back(apriori_flux_bound_check(rec.series(), 0, w.t));
    }
    CHECK(out[0].flux_integral > 0);
    CHECK(out[1].flux_integral == doctest::Approx(4 * out[0].flux_integral).epsilon(1e-10));
    CHECK(out[1].ratio == doctest::Approx(out[0].ratio).epsilon(1e-10));
}

TEST_CASE("profile data")
{
    SUBCASE("identity for the unit core in free space")
    {
        const auto g = make_grid(Scene::empty(), GridSpec::cube(0.1, 3));
        const GaussianProfile base{1, 0.5, 0.5};
        const ProfileData d = make_profile_data(base, ScaleCore{}, g);
        CHECK(d.removed_fraction == 0);
        double worst = 0;
        for (std::size_t i = 0; i < g->padded_size(); ++i) {
            if (!g->active(i)) continue;
            const Vec3 x = g->position(i);
            worst = std::max(worst, std::abs(d.field.u[static_cast<Eigen::Index>(i)] - std::exp(-x.squaredNorm() / 0.25)));
            worst = std::max(worst, std::abs(d.field.v[static_cast<Eigen::Index>(i)] - 0.5 * std::exp(-x.squaredNorm() / 0.25)));
        }
        CHECK(worst < 1e-15);
    }
    SUBCASE("transport is an isometry")
    {
        const GaussianProfile base{1, 0.7, 0.5};
        const ScaleCore core{1, 0.5, 0, Vec3(0.1, 0, 0)};
        std::vector<double> err;
        for (double h : {0.05, 0.025}) {
            const auto g = make_grid(Scene::empty(), GridSpec::cube(h, 1.6));
            const ProfileData d = make_profile_data(base, core, g);
            err.push_back(std::abs(energy_norm(*g, d.field.u, d.field.v) / base.energy_norm() - 1));
        }
        CHECK(err[0] < 0.02);
        CHECK(err[1] < err[0] / 3);
    }
    SUBCASE("collar near an obstacle")
    {
        const double lambda = 0.25;
        const Scene small = Scene::pair(Body::ball(Vec3(-1, 0, 0), 0.5), Body::ball(Vec3(1, 0, 0), 0.5));
        GridSpec spec{lambda / 16, Vec3::Zero(), Vec3(1.6, 0.8, 0.8)};
        const auto g = make_grid(small, spec);
        // The Gaussian tail reaches the collar of the right ball.
        const GaussianProfile base{};
        const ScaleCore core{0, lambda, 0, Vec3(0.15, 0, 0)};
        const ProfileData d = make_profile_data(base, core, g);

        // Energy density of the uncut data summed over the clipped annulus (within 4h of a ball) and over all cells.
        const double h = spec.h, e = 1e-6;
        double clipped = 0, total = 0;
        for (std::size_t i = 0; i < g->padded_size(); ++i) {
            const Vec3 x = g->position(i);
            if ((x.cwiseAbs() - spec.half_width).maxCoeff() > 0) continue;
            Vec3 grad;
            for (int a = 0; a < 3; ++a)
                grad[a] = (base.u0(core, x + e * Vec3::Unit(a)) - base.u0(core, x - e * Vec3::Unit(a))) / (2 * e);
            const double density = grad.squaredNorm() + std::pow(base.u1(core, x), 2);
            const double dist = std::min((x - Vec3(1, 0, 0)).norm(), (x + Vec3(1, 0, 0)).norm()) - 0.5;
            total += density;
            if (dist < 4 * h) clipped += density;
        }
        CHECK(clipped > 0);
        CHECK(clipped <= 0.05 * total);
        CHECK(std::abs(d.removed_fraction) <= 0.05);
        for (std::size_t i = 0; i < g->padded_size(); ++i)
            if (g->active(i) && g->scene().level(g->position(i)) < 1e-3) CHECK(d.field.u[static_cast<Eigen::Index>(i)] == 0);
    }
    SUBCASE("support must fit the box")
    {
        const auto g = make_grid(Scene::empty(), GridSpec::cube(0.1, 2));
        CHECK_THROWS_AS(make_profile_data(GaussianProfile{}, ScaleCore{0, 1, 0, Vec3(1, 0, 0)}, g), SupportClipped);
    }
}

TEST_CASE("closed-form free solution")
{
    // Against the free grid evolution of the same data.
    const GaussianProfile base{1, 0.7, 0.5};
    const ScaleCore core{0, 1, 0, Vec3(0.1, 0, 0)};
    const auto g = make_grid(Scene::empty(), GridSpec::cube(0.05, 3));
    ProfileData d = make_profile_data(base, core, g);
    const double T = 1;
    const std::size_t n = steps_for(*g, T);
    evolve(d.field, T / static_cast<double>(n), n);
    double err = 0, peak = 0;
    for (std::size_t i = 0; i < g->padded_size(); ++i) {
        if (!g->active(i)) continue;
        const double e = base.free_solution(core, g->position(i), T);
        err = std::max(err, std::abs(d.field.u[static_cast<Eigen::Index>(i)] - e));
        peak = std::max(peak, std::abs(e));
    }
    CHECK(err < 0.02 * peak);
    // At t = t_n the closed form is the data itself.
    CHECK(base.free_solution(core, Vec3(0.3, 0.2, 0), 0) == doctest::Approx(base.u0(core, Vec3(0.3, 0.2, 0))));
    CHECK(base.free_solution(core, core.x, 0) == doctest::Approx(1));
}

TEST_CASE("compare_to_free before the obstacles are reached")
{
    const Scene s = Scene::pair(Body::ball(Vec3(-1, 0, 0), 0.5), Body::ball(Vec3(1, 0, 0), 0.5));
    const GaussianProfile base{1, 0, 0.3};
    const ScaleCore core{0, 1, 0, Vec3(0, 3.5, 0)};
    CompareOptions o;
    o.horizon = 0.5;
    o.every = 1;
    const auto grid_gap = compare_to_free(s, GridSpec::cube(0.1, 6), base, {core}, o);
    CHECK(grid_gap[0].gap < 1e-8);
    o.reference = FreeReference::analytic;
    const auto analytic_gap = compare_to_free(s, GridSpec::cube(0.1, 6), base, {core}, o);
    CHECK(analytic_gap[0].gap < 1e-8);

    const ScaleCore touching{0, 1, 0, Vec3(0, 1, 0)};
    CHECK_THROWS_AS(compare_to_free(s, GridSpec::cube(0.1, 6), base, {touching}, o), std::invalid_argument);
}

TEST_CASE("nonconcentration scan")
{
    const Scene s = Scene::pair(Body::ball(Vec3(-1, 0, 0), 0.5), Body::ball(Vec3(1, 0, 0), 0.5));
    const GridSpec spec{1.0 / 32, Vec3(0, 1.6, 0), Vec3(1.6, 2.4, 1.2)};
    const ScaleCore core{0, 0.5, 0, Vec3(0, 2.5, 0)};
    const GaussianProfile base{1, 0, 0.3};

    const auto zero = nonconcentration_scan(s, spec, GaussianProfile{0, 0, 0.3}, core, 2, 1.2, 0.5, 2);
    CHECK(zero.sup_l6 == 0);

    const auto ext = nonconcentration_scan(s, spec, base, core, 2, 1.2, 0.5, 2);
    const auto free = nonconcentration_scan(Scene::empty(), spec, base, core, 2, 1.2, 0.5, 2);
    CHECK(ext.sup_l6 > 0);
    CHECK(ext.sup_l6 < ext.peak_l6);
    CHECK(ext.sup_l6 == doctest::Approx(free.sup_l6).epsilon(1e-6));
    CHECK(std::abs(ext.time_of_sup) >= 2 * core.lambda);

    CHECK_THROWS_AS(nonconcentration_scan(s, GridSpec::cube(0.1, 4), base, core, 2, 1.2), ResolutionTooCoarse);
}

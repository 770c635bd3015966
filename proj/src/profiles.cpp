#include "trapwave/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace trapwave {
namespace {

double gaussian(double r2, double s) { return std::exp(-r2 / (s * s)); }

//! Carry a field along the linear flow by `duration` (either sign) with steps at the given CFL.
void shift_time(WaveField& field, double duration, double cfl)
{
    if (duration == 0) return;
    const double dt_max = stable_dt(field.grid(), cfl);
    const auto steps = static_cast<std::size_t>(std::ceil(std::abs(duration) / dt_max));
    const double dt = duration / static_cast<double>(steps);
    const Nonlinearity keep = field.nonlinearity;
    field.nonlinearity = Nonlinearity::linear;
    evolve(field, dt, steps);
    field.v = synchronized_velocity(field);
    field.stagger = 0;
    field.nonlinearity = keep;
}

//! Fill u, v with the transported data times `cut(x)` on active cells.
template <typename Cut>
void fill(WaveField& f, const GaussianProfile& base, const ScaleCore& core, Cut cut)
{
    const ExteriorGrid& g = f.grid();
    g.for_each_row([&](int i, int j, std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            if (!g.active(idx)) continue;
            const Vec3 x = g.position(i, j, static_cast<int>(idx - begin) + 1);
            const double c = cut(x);
            if (c == 0) continue;
            f.u[static_cast<Eigen::Index>(idx)] = c * base.u0(core, x);
            f.v[static_cast<Eigen::Index>(idx)] = c * base.u1(core, x);
        }
    });
}

double distance_to_scene(const Scene& scene, const Vec3& x)
{
    double d = std::numeric_limits<double>::infinity();
    for (const Body& b : scene.bodies()) d = std::min(d, (x - b.center()).norm() - b.bounding_radius());
    return d;
}

}  // namespace

double GaussianProfile::u0(const ScaleCore& core, const Vec3& x) const
{
    if (a0 == 0) return 0;
    return a0 / std::sqrt(core.lambda) * gaussian((x - core.x).squaredNorm(), core.lambda * sigma);
}

double GaussianProfile::u1(const ScaleCore& core, const Vec3& x) const
{
    if (a1 == 0) return 0;
    return a1 / std::pow(core.lambda, 1.5) * gaussian((x - core.x).squaredNorm(), core.lambda * sigma);
}

double GaussianProfile::energy_norm() const
{
    const double mass = std::pow(std::numbers::pi / 2, 1.5) * sigma * sigma * sigma;
    // int |grad g|^2 = 3 pi^{3/2} sigma / 2^{3/2}; int g^2 = (pi / 2)^{3/2} sigma^3.
    return a0 * a0 * 3 * mass / (sigma * sigma) + a1 * a1 * mass;
}

double GaussianProfile::free_solution(const ScaleCore& core, const Vec3& x, double t) const
{
    const double s = core.lambda * sigma;
    const double A0 = a0 / std::sqrt(core.lambda);
    const double A1 = a1 / std::pow(core.lambda, 1.5);
    const double tau = t - core.t;
    const double r = (x - core.x).norm();
    auto f = [&](double p) { return A0 * gaussian(p * p, s); };
    auto g = [&](double p) { return A1 * gaussian(p * p, s); };
    if (r < 1e-6 * s) return f(tau) * (1 - 2 * tau * tau / (s * s)) + tau * g(tau);
    // Radial d'Alembert: r u = [(r + tau) f(r + tau) + (r - tau) f(r - tau)] / 2 + [G(r + tau) - G(r - tau)] / 2
    // with G' = p g(p), i.e. G = -s^2 / 2 g.
    const double wave0 = 0.5 * ((r + tau) * f(r + tau) + (r - tau) * f(r - tau));
    const double wave1 = -0.25 * s * s * (g(r + tau) - g(r - tau));
    return (wave0 + wave1) / r;
}

double collar_cutoff(const ExteriorGrid& grid, const Vec3& x)
{
    const double h = grid.h();
    const double inner = kCollarCells * h;
    double d = std::numeric_limits<double>::infinity();
    for (const Body& b : grid.scene().bodies()) {
        if ((x - b.center()).norm() > b.bounding_radius() + 2 * inner) continue;
        d = std::min(d, b.level(x) < 0 ? 0.0 : (x - closest_point(b, x)).norm());
    }
    if (d >= 2 * inner) return 1;
    if (d <= inner) return 0;
    const double s = (d - inner) / inner;
    return s * s * s * (10 - 15 * s + 6 * s * s);
}

ProfileData make_profile_data(const GaussianProfile& base, const ScaleCore& core,
                              std::shared_ptr<const ExteriorGrid> grid, Nonlinearity nonlinearity)
{
    if (!(core.lambda > 0)) throw std::invalid_argument("scale lambda must be positive");
    const GridSpec& spec = grid->spec();
    const Vec3 reach = (core.x - spec.center).cwiseAbs() + Vec3::Constant(core.lambda * base.support_radius());
    for (int a = 0; a < 3; ++a)
        if (reach[a] > 0.9 * spec.half_width[a])
            throw SupportClipped("scaled support reaches " + std::to_string(reach[a]) + " along axis " + std::to_string(a) +
                                 ", box allows " + std::to_string(0.9 * spec.half_width[a]));

    ProfileData out{WaveField(grid, nonlinearity), 0};
    fill(out.field, base, core, [&](const Vec3& x) { return collar_cutoff(*grid, x); });

    const ExteriorGrid free_grid(Scene::empty(), spec);
    Eigen::ArrayXd u = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(free_grid.padded_size()));
    Eigen::ArrayXd v = u;
    for (std::size_t idx = 0; idx < free_grid.padded_size(); ++idx) {
        if (!free_grid.active(idx)) continue;
        const Vec3 x = free_grid.position(idx);
        u[static_cast<Eigen::Index>(idx)] = base.u0(core, x);
        v[static_cast<Eigen::Index>(idx)] = base.u1(core, x);
    }
    const double uncut = energy_norm(free_grid, u, v);
    const double cut = energy_norm(*grid, out.field.u, out.field.v);
    out.removed_fraction = uncut > 0 ? 1 - cut / uncut : 0.0;

    shift_time(out.field, -core.t, 0.5);
    out.field.t = 0;
    return out;
}

std::vector<FreeGap> compare_to_free(const Scene& scene, const GridSpec& spec, const GaussianProfile& base,
                                     const std::vector<ScaleCore>& cores, const CompareOptions& options)
{
    if (!(options.horizon > 0)) throw std::invalid_argument("horizon must be positive");
    if (options.every < 1) throw std::invalid_argument("recording interval must be at least one step");
    auto grid = std::make_shared<const ExteriorGrid>(scene, spec);
    const double dt_max = stable_dt(*grid, options.cfl);
    std::vector<FreeGap> out;

    for (const ScaleCore& core : cores) {
        FreeGap res;
        res.core = core;
        auto track = [&](const Eigen::ArrayXd& du, const Eigen::ArrayXd& dv, double t) {
            const double gap = energy_norm(*grid, du, dv);
            if (gap > res.gap) {
                res.gap = gap;
                res.time_of_sup = t;
            }
        };

        if (options.reference == FreeReference::analytic) {
            const double supp = core.lambda * base.support_radius();
            const double clear = distance_to_scene(scene, core.x) - supp - 2 * kCollarCells * grid->h();
            if (!(clear > 0))
                throw std::invalid_argument("analytic reference needs data clear of the obstacle collars");
            // Before the free wave reaches the obstacles the difference vanishes identically.
            const double quiet = distance_to_scene(scene, core.x) - supp;
            double start = 0;
            if (std::abs(core.t) < quiet) start = std::max(0.0, core.t + quiet - grid->h());
            res.start_time = std::min(start, options.horizon);

            WaveField w(grid, Nonlinearity::linear);
            w.t = res.start_time;
            // The stencil reads obstacle cells next to the fluid, so holding them at -v(t)
            // imposes the boundary values of the difference field.
            std::vector<std::size_t> ring;
            for (const Face& f : grid->obstacle_faces())
                ring.push_back(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(f.index) + f.sign * grid->strides()[f.axis]));
            std::sort(ring.begin(), ring.end());
            ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
            auto impose = [&] {
                for (std::size_t idx : ring)
                    w.u[static_cast<Eigen::Index>(idx)] = -base.free_solution(core, grid->position(idx), w.t);
            };
            const double span = options.horizon - res.start_time;
            const auto steps = static_cast<std::size_t>(std::ceil(span / dt_max));
            const double dt = steps ? span / static_cast<double>(steps) : 0;
            for (std::size_t s = 1; s <= steps; ++s) {
                impose();
                step(w, dt);
                if (s % static_cast<std::size_t>(options.every) == 0 || s == steps) {
                    impose();
                    track(w.u, synchronized_velocity(w), w.t);
                }
            }
        } else {
            ProfileData data = make_profile_data(base, ScaleCore{core.n, core.lambda, 0, core.x}, grid);
            res.removed_fraction = data.removed_fraction;
            auto free_grid = std::make_shared<const ExteriorGrid>(Scene::empty(), spec);
            WaveField ext = std::move(data.field);
            WaveField free(free_grid, Nonlinearity::linear);
            free.u = ext.u;
            free.v = ext.v;
            shift_time(ext, -core.t, options.cfl);
            shift_time(free, -core.t, options.cfl);
            ext.t = free.t = 0;
            track(ext.u - free.u, ext.v - free.v, 0);
            const auto steps = static_cast<std::size_t>(std::ceil(options.horizon / dt_max));
            const double dt = options.horizon / static_cast<double>(steps);
            for (std::size_t s = 1; s <= steps; ++s) {
                step(ext, dt);
                step(free, dt);
                if (s % static_cast<std::size_t>(options.every) == 0 || s == steps)
                    track(ext.u - free.u, synchronized_velocity(ext) - synchronized_velocity(free), ext.t);
            }
        }
        out.push_back(res);
    }
    return out;
}

NonconcentrationResult nonconcentration_scan(const Scene& scene, const GridSpec& spec, const GaussianProfile& base,
                                             const ScaleCore& core, double C, double horizon, double cfl, int every)
{
    if (core.lambda < 16 * spec.h)
        throw ResolutionTooCoarse("lambda = " + std::to_string(core.lambda) + " needs h <= lambda / 16");
    if (!(C > 0) || !(horizon > C * core.lambda))
        throw std::invalid_argument("horizon must exceed the excluded window C lambda");
    if (every < 1) throw std::invalid_argument("recording interval must be at least one step");
    auto grid = std::make_shared<const ExteriorGrid>(scene, spec);
    const ProfileData data = make_profile_data(base, ScaleCore{core.n, core.lambda, 0, core.x}, grid);

    NonconcentrationResult res;
    res.core = core;
    res.C = C;
    res.peak_l6 = std::pow(energy(data.field).l6_sixth, 1.0 / 6.0);
    const double dt_max = stable_dt(*grid, cfl);
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt_max));
    for (int dir : {1, -1}) {
        WaveField f = data.field;
        const double dt = dir * horizon / static_cast<double>(steps);
        for (std::size_t s = 1; s <= steps; ++s) {
            step(f, dt);
            if (s % static_cast<std::size_t>(every) != 0 && s != steps) continue;
            if (std::abs(f.t) < C * core.lambda) continue;
            const double l6 = std::pow(energy(f).l6_sixth, 1.0 / 6.0);
            if (l6 > res.sup_l6) {
                res.sup_l6 = l6;
                res.time_of_sup = f.t;
            }
        }
    }
    return res;
}

}  // namespace trapwave

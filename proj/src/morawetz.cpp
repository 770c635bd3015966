#include "trapwave/morawetz.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>

#include "trapwave/parallel.hpp"
#include "trapwave/rng.hpp"

namespace trapwave {
namespace {

double boundary_flux_sign(const Body& body, const MorawetzWeight& w, const Vec3& x)
{
    return w.grad(x).dot(body.gradient(x).normalized());
}

struct Candidate {
    double value;
    Vec3 point;
};

//! Compass search over the radial parametrisation of the boundary.
Candidate refine_on_boundary(const Body& body, const MorawetzWeight& w, Vec3 u, double step)
{
    auto eval = [&](const Vec3& dir) {
        const Vec3 x = body.radial_point(dir);
        return Candidate{boundary_flux_sign(body, w, x), x};
    };
    Candidate best = eval(u);
    while (step > 1e-10) {
        const Mat3 basis = frame_from_axis<double>(u);
        bool moved = false;
        for (int c = 1; c <= 2 && !moved; ++c) {
            for (double sgn : {1.0, -1.0}) {
                const Vec3 cand_dir = (u + sgn * step * basis.col(c)).normalized();
                const Candidate cand = eval(cand_dir);
                if (cand.value < best.value) {
                    best = cand;
                    u = cand_dir;
                    moved = true;
                    break;
                }
            }
        }
        if (!moved) step *= 0.5;
    }
    return best;
}

}  // namespace

WeightCertificate boundary_certificate(const Scene& scene, const MorawetzWeight& w, std::size_t samples)
{
    if (samples == 0) throw std::invalid_argument("samples must be positive");
    WeightCertificate cert;
    cert.c1 = w.c1();
    cert.samples = samples;
    cert.min_flux = std::numeric_limits<double>::infinity();

    auto consider = [&](double value, const Vec3& x, int obstacle) {
        if (value < cert.min_flux) {
            cert.min_flux = value;
            cert.argmin = x;
            cert.argmin_obstacle = obstacle;
        }
    };

    const auto bodies = scene.bodies();
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        const Body& body = bodies[i];
        const int index = static_cast<int>(i + 1);
        std::vector<double> values(samples);
        parallel_chunks(samples, 4096, [&](std::size_t b, std::size_t e) {
            for (std::size_t k = b; k < e; ++k)
                values[k] = boundary_flux_sign(body, w, body.radial_point(fibonacci_sphere(k, samples)));
        });

        std::vector<std::size_t> order(samples);
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t keep = std::min<std::size_t>(8, samples);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                          [&](auto a, auto b) { return values[a] < values[b] || (values[a] == values[b] && a < b); });

        const double spacing = std::sqrt(4 * std::numbers::pi / static_cast<double>(samples));
        for (std::size_t r = 0; r < keep; ++r) {
            const std::size_t k = order[r];
            consider(values[k], body.radial_point(fibonacci_sphere(k, samples)), index);
            const Candidate c = refine_on_boundary(body, w, fibonacci_sphere(k, samples), 2 * spacing);
            consider(c.value, c.point, index);
        }

        // The focal axis meets each boundary where the sign is typically tightest.
        const Frame& f = w.frame();
        if (const auto hits = line_intersections(body, f.origin, f.axis())) {
            for (double s : {hits->first, hits->second}) {
                const Vec3 x = body.radial_point((f.origin + s * f.axis() - body.center()).normalized());
                consider(boundary_flux_sign(body, w, x), x, index);
            }
        }
    }
    cert.pass = cert.min_flux >= -kCertificateTolerance;
    return cert;
}

MinimalC1 minimal_c1(const Scene& scene, double tol, std::size_t samples)
{
    if (scene.size() != 2) throw std::invalid_argument("minimal_c1 needs a two-obstacle scene");
    if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
    MinimalC1 out;
    out.tolerance = tol;
    auto passes = [&](double c1) {
        ++out.evaluations;
        try {
            return boundary_certificate(scene, weight_for(scene, c1), samples).pass;
        } catch (const AtFocus&) {
            return false;
        }
    };

    double lo = scene.gap() / 2;
    double hi = 1e3 * scene.bounding_radius();
    if (!passes(hi)) throw NeverPasses("certificate fails at c1 = " + std::to_string(hi));
    if (passes(lo)) {
        hi = lo;
    } else {
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            (passes(mid) ? hi : lo) = mid;
        }
    }
    out.c1 = hi;

    out.monotone = true;
    for (double factor : {1.1, 1.5, 2.0, 4.0, 10.0}) {
        const double c1 = std::min(factor * out.c1, 1e3 * scene.bounding_radius());
        const bool ok = passes(c1);
        out.probes.emplace_back(c1, ok);
        out.monotone = out.monotone && ok;
    }
    return out;
}

VolumeEstimate m_alpha(const Scene& scene, const MorawetzWeight& w, double A, double alpha, std::size_t samples,
                       std::uint64_t seed)
{
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (!(A > 0) || samples == 0) throw std::invalid_argument("A and samples must be positive");
    if (w.focus(1).norm() <= A || w.focus(-1).norm() <= A) throw std::invalid_argument("foci must lie outside B(0, A)");

    const std::size_t count = parallel_reduce(
        samples, 4096, std::size_t{0},
        [&](std::size_t b, std::size_t e) {
            std::size_t n = 0;
            for (std::size_t i = b; i < e; ++i) {
                CounterRng rng(seed, i);
                const Vec3 x = uniform_in_ball(rng, Vec3::Zero(), A);
                if (scene.level(x) < 0) continue;
                const double bb = w.angle_functions(x).second;
                if (bb * bb < alpha) ++n;
            }
            return n;
        },
        std::plus<>());

    VolumeEstimate est;
    est.seed = seed;
    est.samples = samples;
    const double ball = 4.0 / 3.0 * std::numbers::pi * A * A * A;
    const double frac = static_cast<double>(count) / static_cast<double>(samples);
    est.value = ball * frac;
    est.stderr_ = ball * std::sqrt(frac * (1 - frac) / static_cast<double>(samples));
    return est;
}

CoercivitySweep coercivity_sweep(const Scene& scene, const MorawetzWeight& w, double A, double alpha, int n)
{
    if (n < 2) throw std::invalid_argument("sweep needs at least two points per axis");
    struct Best {
        double value = std::numeric_limits<double>::infinity();
        Vec3 x = Vec3::Zero();
        std::size_t points = 0;
    };
    const auto nn = static_cast<std::size_t>(n);
    const double step = 2 * A / (n - 1);
    const Best best = parallel_reduce(
        nn * nn * nn, 4096, Best{},
        [&](std::size_t b, std::size_t e) {
            Best local;
            for (std::size_t idx = b; idx < e; ++idx) {
                const Vec3 x(-A + step * static_cast<double>(idx / (nn * nn)),
                             -A + step * static_cast<double>((idx / nn) % nn), -A + step * static_cast<double>(idx % nn));
                if (x.norm() > A || scene.level(x) < 0) continue;
                const double bb = w.angle_functions(x).second;
                if (bb * bb < alpha) continue;
                ++local.points;
                const double v = w.coercivity(x);
                if (v < local.value) {
                    local.value = v;
                    local.x = x;
                }
            }
            return local;
        },
        [](Best acc, const Best& p) {
            acc.points += p.points;
            if (p.value < acc.value) {
                acc.value = p.value;
                acc.x = p.x;
            }
            return acc;
        });
    return {best.value, best.x, best.points};
}

}  // namespace trapwave

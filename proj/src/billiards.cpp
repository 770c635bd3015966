#include "trapwave/billiards.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "trapwave/parallel.hpp"
#include "trapwave/rng.hpp"

namespace trapwave {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

//! Time to leave B(0, R) for good along p + s xi (0 when already outside and receding).
double exit_time(const Vec3& p, const Vec3& xi, double R)
{
    if (!std::isfinite(R)) return kInf;
    const double b = p.dot(xi);
    const double c = p.squaredNorm() - R * R;
    const double disc = b * b - c;
    if (disc < 0) return std::max(0.0, -b);
    return std::max(0.0, -b + std::sqrt(disc));
}

}  // namespace

const char* to_string(Terminal t)
{
    switch (t) {
    case Terminal::escaped: return "escaped";
    case Terminal::horizon: return "horizon";
    case Terminal::grazing: return "grazing";
    }
    return "unknown";
}

double Trajectory::total_time() const { return std::accumulate(flight_times.begin(), flight_times.end(), 0.0); }

Trajectory trace(const Scene& scene, const Ray& ray, double horizon, double escape_radius, const TraceOptions& options)
{
    if (!(horizon > 0)) throw std::invalid_argument("horizon must be positive");
    if (!(escape_radius > scene.bounding_radius()))
        throw std::invalid_argument("escape radius must exceed the scene bounding radius");

    Trajectory traj;
    traj.points.push_back(ray.origin);
    traj.directions.push_back(ray.direction);

    Vec3 xi = ray.direction;
    Vec3 probe = ray.origin;   // current search origin (differs from points.back() after a pass-through)
    double elapsed = 0;        // time at points.back()
    double segment = 0;        // time from points.back() to probe

    auto finish = [&](double flight, Terminal terminal) {
        traj.points.push_back(traj.points.back() + flight * xi);
        traj.directions.push_back(xi);
        traj.flight_times.push_back(flight);
        traj.terminal = terminal;
        if (terminal == Terminal::escaped) traj.escape_time = elapsed + flight;
        return traj;
    };

    while (true) {
        std::optional<Hit> hit;
        bool grazing = false;
        try {
            hit = first_hit(scene, Ray(probe, xi));
        } catch (const TangentHit& th) {
            hit = th.hit;
            grazing = true;
        }
        const double s_exit = exit_time(probe, xi, escape_radius);
        const double remaining = horizon - elapsed - segment;
        const double s_hit = hit ? hit->time : kInf;

        if (hit && s_hit <= remaining) {
            if (grazing) {
                if (options.stop_on_grazing) return finish(segment + s_hit, Terminal::grazing);
                probe = hit->point;
                segment += s_hit;
                continue;
            }
            if (traj.story.size() >= options.max_bounces) return finish(segment + s_hit, Terminal::horizon);
            const double flight = segment + s_hit;
            traj.flight_times.push_back(flight);
            traj.points.push_back(hit->point);
            xi = reflect(xi, hit->normal).normalized();
            traj.directions.push_back(xi);
            traj.story.push_back(hit->obstacle);
            elapsed += flight;
            segment = 0;
            probe = hit->point;
            continue;
        }
        if (s_exit <= remaining && s_exit <= s_hit) return finish(segment + s_exit, Terminal::escaped);
        return finish(segment + remaining, Terminal::horizon);
    }
}

Vec3 flow_position(const Scene& scene, const Vec3& x, const Vec3& xi, double t)
{
    TraceOptions opts;
    opts.stop_on_grazing = false;
    return trace(scene, Ray(x, xi), t, kInf, opts).endpoint();
}

Trajectory truncate(const Trajectory& traj, std::size_t n)
{
    if (n > traj.bounces()) throw std::invalid_argument("truncate: trajectory has fewer reflections");
    Trajectory out;
    out.points.assign(traj.points.begin(), traj.points.begin() + static_cast<std::ptrdiff_t>(n + 1));
    out.directions.assign(traj.directions.begin(), traj.directions.begin() + static_cast<std::ptrdiff_t>(n + 1));
    out.flight_times.assign(traj.flight_times.begin(), traj.flight_times.begin() + static_cast<std::ptrdiff_t>(n));
    out.story.assign(traj.story.begin(), traj.story.begin() + static_cast<std::ptrdiff_t>(n));
    out.terminal = Terminal::horizon;
    return out;
}

MonotonicityCertificate monotonicity_certificate(const Trajectory& a, const Trajectory& b)
{
    if (a.story != b.story || a.flight_times.size() != b.flight_times.size())
        throw StoryMismatch("trajectories follow different stories");
    if ((a.points.front() - b.points.front()).norm() > 1e-12 * (1 + a.points.front().norm()))
        throw std::invalid_argument("trajectories start at different points");
    MonotonicityCertificate cert;
    cert.lhs = (a.points.back() - b.points.back()).dot(a.directions.back() - b.directions.back());
    for (std::size_t k = 0; k < a.flight_times.size(); ++k)
        // 1 - a.b written as |a - b|^2 / 2 to avoid cancellation for nearby directions.
        cert.rhs += (a.flight_times[k] + b.flight_times[k]) * 0.5 * (a.directions[k] - b.directions[k]).squaredNorm();
    cert.margin = cert.lhs - cert.rhs;
    return cert;
}

//---------------------------------------------------------------------------//
// Reconcentration probe
//---------------------------------------------------------------------------//

namespace {

//! min over s in [t - eps, t + eps] of |gamma_s(x, xi) - x0|.
double window_miss(const Scene& scene, const Vec3& x, const Vec3& xi, const Vec3& x0, double t, double eps)
{
    TraceOptions opts;
    opts.stop_on_grazing = false;
    const Trajectory traj = trace(scene, Ray(x, xi), t + eps, kInf, opts);
    double best = kInf;
    double start = 0;
    for (std::size_t k = 0; k < traj.flight_times.size(); ++k) {
        const double end = start + traj.flight_times[k];
        const double lo = std::max(start, t - eps);
        const double hi = std::min(end, t + eps);
        if (lo <= hi) {
            const Vec3& p = traj.points[k];
            const Vec3& d = traj.directions[k];
            const double s = std::clamp(start + (x0 - p).dot(d), lo, hi);
            best = std::min(best, (p + (s - start) * d - x0).norm());
        }
        start = end;
    }
    return best;
}

Vec3 tilt(const Vec3& center, const Mat3& basis, double r, double psi)
{
    return (std::cos(r) * center + std::sin(r) * (std::cos(psi) * basis.col(1) + std::sin(psi) * basis.col(2)))
        .normalized();
}

//! Gauss-Newton on gamma_t(xi) = x0 over the tangent plane of the sphere.
Vec3 refine_direction(const Scene& scene, const Vec3& x, const Vec3& x0, double t, Vec3 xi)
{
    auto residual = [&](const Vec3& d) { return Vec3(flow_position(scene, x, d, t) - x0); };
    Vec3 r = residual(xi);
    const double scale = 1 + x0.norm() + t;
    for (int it = 0; it < 60 && r.norm() > 1e-14 * scale; ++it) {
        const Mat3 basis = frame_from_axis<double>(xi);
        Eigen::Matrix<double, 3, 2> jac;
        const double h = 1e-7;
        for (int c = 0; c < 2; ++c) {
            const Vec3 plus = (xi + h * basis.col(c + 1)).normalized();
            const Vec3 minus = (xi - h * basis.col(c + 1)).normalized();
            jac.col(c) = (residual(plus) - residual(minus)) / (2 * h);
        }
        const Eigen::Vector2d step = jac.colPivHouseholderQr().solve(-r);
        if (!step.allFinite()) break;
        double lambda = 1;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            const Vec3 cand = (xi + lambda * (step[0] * basis.col(1) + step[1] * basis.col(2))).normalized();
            const Vec3 rc = residual(cand);
            if (rc.norm() < r.norm()) {
                xi = cand;
                r = rc;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
    }
    return xi;
}

}  // namespace

ProbeResult reconcentration_probe(const Scene& scene, const Vec3& x, const Vec3& x0, double t, double eps,
                                  const ProbeOptions& options)
{
    if (!(t > 0) || !(eps > 0)) throw std::invalid_argument("t and eps must be positive");
    if (!(options.angular_resolution > 0) || options.azimuths < 3)
        throw std::invalid_argument("invalid probe resolution");
    ProbeResult result;
    if (scene.level(x0) < 0) return result;

    const auto nth = static_cast<std::size_t>(std::ceil(std::numbers::pi / options.angular_resolution));
    const auto nph = static_cast<std::size_t>(std::ceil(2 * std::numbers::pi / options.angular_resolution));
    auto grid_dir = [&](std::size_t i, std::size_t j) {
        const double th = (static_cast<double>(i) + 0.5) * std::numbers::pi / static_cast<double>(nth);
        const double ph = static_cast<double>(j) * 2 * std::numbers::pi / static_cast<double>(nph);
        return Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
    };

    std::vector<double> g(nth * nph);
    parallel_chunks(g.size(), 256, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k)
            g[k] = (flow_position(scene, x, grid_dir(k / nph, k % nph), t) - x0).norm();
    });

    std::vector<std::size_t> seeds;
    for (std::size_t i = 0; i < nth; ++i) {
        for (std::size_t j = 0; j < nph; ++j) {
            const double v = g[i * nph + j];
            bool minimum = true;
            for (int di = -1; di <= 1 && minimum; ++di) {
                const auto ii = static_cast<std::ptrdiff_t>(i) + di;
                if (ii < 0 || ii >= static_cast<std::ptrdiff_t>(nth)) continue;
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const std::size_t jj = (j + nph + static_cast<std::size_t>(dj + 1) - 1) % nph;
                    if (g[static_cast<std::size_t>(ii) * nph + jj] < v) {
                        minimum = false;
                        break;
                    }
                }
            }
            if (minimum) seeds.push_back(i * nph + j);
        }
    }
    std::stable_sort(seeds.begin(), seeds.end(), [&](auto a, auto b) { return g[a] < g[b]; });
    if (seeds.size() > 64) seeds.resize(64);

    std::vector<DirectionCap> found;
    for (const std::size_t s : seeds) {
        const Vec3 center = refine_direction(scene, x, x0, t, grid_dir(s / nph, s % nph));
        const double miss = window_miss(scene, x, center, x0, t, eps);
        if (miss > eps) continue;

        const Mat3 basis = frame_from_axis<double>(center);
        const int K = options.azimuths;
        double measure = 0;
        double mean_radius = 0;
        for (int k = 0; k < K; ++k) {
            const double psi = 2 * std::numbers::pi * k / K;
            auto inside = [&](double r) { return window_miss(scene, x, tilt(center, basis, r, psi), x0, t, eps) <= eps; };
            double lo = 0;
            double hi = 1e-9;
            while (hi < std::numbers::pi && inside(hi)) {
                lo = hi;
                hi *= 2;
            }
            hi = std::min(hi, std::numbers::pi);
            for (int it = 0; it < 60 && hi - lo > 1e-6 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (inside(mid) ? lo : hi) = mid;
            }
            const double r = 0.5 * (lo + hi);
            const double half = std::sin(0.5 * r);
            measure += 2 * half * half * 2 * std::numbers::pi / K;
            mean_radius += r / K;
        }
        found.push_back({center, mean_radius, measure, miss});
    }

    // Distinct seeds often converge to the same cap.
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.miss < b.miss; });
    for (const auto& cap : found) {
        const bool duplicate = std::any_of(result.caps.begin(), result.caps.end(), [&](const DirectionCap& other) {
            return angle_between(cap.center, other.center) <= cap.radius + other.radius;
        });
        if (duplicate) continue;
        result.caps.push_back(cap);
        result.total_measure += cap.measure;
    }
    return result;
}

//---------------------------------------------------------------------------//
// Trapping report
//---------------------------------------------------------------------------//

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z)
{
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1 + z2 / nn;
    const double center = (p + z2 / (2 * nn)) / denom;
    const double half = z / denom * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::vector<SurvivorCluster> cluster_directions(const std::vector<Vec3>& dirs, double link_angle)
{
    const std::size_t n = dirs.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    const double cos_link = std::cos(link_angle);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (dirs[i].dot(dirs[j]) >= cos_link) {
                const std::size_t a = find(i);
                const std::size_t b = find(j);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }

    std::vector<SurvivorCluster> clusters;
    std::vector<std::ptrdiff_t> slot(n, -1);
    std::vector<Vec3> sums;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = find(i);
        if (slot[root] < 0) {
            slot[root] = static_cast<std::ptrdiff_t>(clusters.size());
            clusters.push_back({});
            sums.push_back(Vec3::Zero());
        }
        const auto c = static_cast<std::size_t>(slot[root]);
        sums[c] += dirs[i];
        ++clusters[c].count;
    }
    for (std::size_t c = 0; c < clusters.size(); ++c) clusters[c].center = sums[c].normalized();
    for (std::size_t i = 0; i < n; ++i) {
        auto& cl = clusters[static_cast<std::size_t>(slot[find(i)])];
        cl.spread = std::max(cl.spread, static_cast<double>(angle_between(cl.center, dirs[i])));
    }
    return clusters;
}

std::vector<TrappingReport> trapping_report(const Scene& scene, const Vec3& x0, double escape_radius,
                                            const std::vector<double>& horizons, std::size_t samples,
                                            std::uint64_t seed)
{
    if (samples == 0) throw std::invalid_argument("samples must be positive");
    if (horizons.empty()) throw std::invalid_argument("at least one horizon is required");
    if (scene.level(x0) < 0) throw std::invalid_argument("base point lies inside an obstacle");
    const double tmax = *std::max_element(horizons.begin(), horizons.end());

    std::vector<double> escape(samples);
    std::vector<Vec3> dirs(samples);
    parallel_chunks(samples, 512, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            CounterRng rng(seed, i);
            dirs[i] = uniform_on_sphere(rng).normalized();
            escape[i] = trace(scene, Ray(x0, dirs[i]), tmax, escape_radius).escape_time;
        }
    });

    std::vector<TrappingReport> reports;
    for (const double T : horizons) {
        TrappingReport rep;
        rep.x0 = x0;
        rep.horizon = T;
        rep.escape_radius = escape_radius;
        rep.samples = samples;
        rep.seed = seed;
        std::vector<Vec3> survivors;
        for (std::size_t i = 0; i < samples; ++i)
            if (escape[i] > T) survivors.push_back(dirs[i]);
        rep.trapped = survivors.size();
        rep.trapped_fraction = static_cast<double>(rep.trapped) / static_cast<double>(samples);
        std::tie(rep.ci_low, rep.ci_high) = wilson_interval(rep.trapped, samples);
        rep.clusters = cluster_directions(survivors, 10.0 * std::numbers::pi / 180.0);
        reports.push_back(std::move(rep));
    }
    return reports;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    os << "k,x,y,z,xi_x,xi_y,xi_z,t,obstacle\n";
    char buf[512];
    for (std::size_t k = 0; k < traj.points.size(); ++k) {
        const Vec3& p = traj.points[k];
        const Vec3& d = traj.directions[k];
        const double t = k < traj.flight_times.size() ? traj.flight_times[k] : 0.0;
        const int obstacle = (k >= 1 && k <= traj.story.size()) ? traj.story[k - 1] : 0;
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", k, p.x(), p.y(), p.z(),
                      d.x(), d.y(), d.z(), t, obstacle);
        os << buf;
    }
}

}  // namespace trapwave

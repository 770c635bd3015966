#include "trapwave/grid.hpp"

#include "trapwave/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace trapwave {

ExteriorGrid::ExteriorGrid(const Scene& scene, const GridSpec& spec) : scene_(scene), spec_(spec)
{
    const double h = spec.h;
    if (!(h > 0) || !(spec.half_width.array() > 0).all()) throw std::invalid_argument("grid spacing and box must be positive");
    if (scene.size() == 2 && !(h < scene.gap() / 8))
        throw ResolutionTooCoarse("h = " + std::to_string(h) + " must be below gap/8 = " + std::to_string(scene.gap() / 8));
    for (std::size_t b = 0; b < scene.size(); ++b) {
        const Body& body = scene.bodies()[b];
        if (body.min_width() / h < 8)
            throw ResolutionTooCoarse("obstacle " + std::to_string(b + 1) + " spans " +
                                      std::to_string(body.min_width() / h) + " cells, at least 8 needed");
    }

    for (int a = 0; a < 3; ++a) {
        n_[a] = std::max(1, static_cast<int>(std::lround(2 * spec.half_width[a] / h)));
        spec_.half_width[a] = 0.5 * n_[a] * h;
    }
    for (const Body& body : scene.bodies()) {
        const Vec3 off = (body.center() - spec_.center).cwiseAbs();
        if (((off.array() + body.bounding_radius()) > (spec_.half_width.array() - h)).any())
            throw std::invalid_argument("obstacle does not fit inside the grid box");
    }
    stride_ = {static_cast<std::ptrdiff_t>(n_[1] + 2) * (n_[2] + 2), n_[2] + 2, 1};
    const std::size_t total = static_cast<std::size_t>(n_[0] + 2) * stride_[0];
    mask_.assign(total, 0);
    obstacle_.assign(total, 0);

    for_each_row([&](int i, int j, std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            const int k = static_cast<int>(idx - begin) + 1;
            const bool solid = scene_.level(position(i, j, k)) < 0;
            mask_[idx] = solid ? 0 : 1;
            obstacle_[idx] = solid ? 1 : 0;
        }
    });

    for (int i = 1; i <= n_[0]; ++i) {
        for (int j = 1; j <= n_[1]; ++j) {
            for (int k = 1; k <= n_[2]; ++k) {
                const std::size_t idx = index(i, j, k);
                if (obstacle_[idx]) {
                    ++obstacle_count_;
                    continue;
                }
                ++active_count_;
                bool touches_obstacle = false;
                for (int a = 0; a < 3; ++a) {
                    for (int sign : {-1, 1}) {
                        const auto nb = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx) + sign * stride_[a]);
                        if (mask_[nb]) continue;
                        if (obstacle_[nb]) {
                            obstacle_faces_.push_back({idx, a, sign});
                            touches_obstacle = true;
                        } else {
                            wall_faces_.push_back({idx, a, sign});
                        }
                    }
                }
                if (!touches_obstacle) continue;
                const Vec3 x = position(i, j, k);
                std::size_t nearest = 0;
                for (std::size_t b = 1; b < scene_.size(); ++b)
                    if (scene_.bodies()[b].level(x) < scene_.bodies()[nearest].level(x)) nearest = b;
                const Body& body = scene_.bodies()[nearest];
                BoundaryCell cell;
                cell.index = idx;
                cell.foot = closest_point(body, x);
                cell.normal = body.inward_normal(cell.foot);
                cell.obstacle = static_cast<int>(nearest + 1);
                boundary_.push_back(cell);
            }
        }
    }

    for (std::size_t b = 0; b < scene_.size(); ++b) {
        const Body& body = scene_.bodies()[b];
        const double R = body.bounding_radius();
        const auto n = static_cast<std::size_t>(std::max(1000.0, std::ceil(16 * std::numbers::pi * R * R / (h * h))));
        for (std::size_t k = 0; k < n; ++k) {
            const Vec3 d = fibonacci_sphere(k, n);
            SurfacePoint p;
            p.x = body.radial_point(d);
            const Vec3 outward = body.gradient(p.x).normalized();
            p.normal = -outward;
            // Star-shaped surface over the sphere: dA = rho^2 / (d . nu) dOmega.
            p.weight = 4 * std::numbers::pi / static_cast<double>(n) * (p.x - body.center()).squaredNorm() / d.dot(outward);
            p.obstacle = static_cast<int>(b + 1);
            surface_.push_back(p);
        }
    }
}

double ExteriorGrid::normal_derivative(const double* values, const SurfacePoint& p) const
{
    const double h = spec_.h;
    const double u2 = interpolate(values, p.x - 2 * h * p.normal);
    const double u3 = interpolate(values, p.x - 3 * h * p.normal);
    const double u4 = interpolate(values, p.x - 4 * h * p.normal);
    // Derivative at 0 of the quadratic through (2h, u2), (3h, u3), (4h, u4), taken along -n.
    return -(-3.5 * u2 + 6 * u3 - 2.5 * u4) / h;
}

std::array<int, 3> ExteriorGrid::coords(std::size_t idx) const
{
    const auto s = static_cast<std::ptrdiff_t>(idx);
    return {static_cast<int>(s / stride_[0]), static_cast<int>((s % stride_[0]) / stride_[1]),
            static_cast<int>(s % stride_[1])};
}

Vec3 ExteriorGrid::position(int i, int j, int k) const
{
    const Vec3 lo = spec_.center - spec_.half_width;
    return lo + spec_.h * Vec3(i - 0.5, j - 0.5, k - 0.5);
}

Vec3 ExteriorGrid::position(std::size_t idx) const
{
    const auto c = coords(idx);
    return position(c[0], c[1], c[2]);
}

double ExteriorGrid::interpolate(const double* values, const Vec3& x) const
{
    // Padded coordinate: cell i has its centre at padded position i.
    const Vec3 g = (x - (spec_.center - spec_.half_width)) / spec_.h + Vec3::Constant(0.5);
    std::array<int, 3> base{};
    Vec3 frac;
    for (int a = 0; a < 3; ++a) {
        const double f = std::floor(g[a]);
        base[a] = static_cast<int>(f);
        frac[a] = g[a] - f;
        if (base[a] < 0 || base[a] > n_[a]) return 0.0;
    }
    double sum = 0;
    for (int c = 0; c < 8; ++c) {
        const int di = c >> 2 & 1;
        const int dj = c >> 1 & 1;
        const int dk = c & 1;
        const double w = (di ? frac[0] : 1 - frac[0]) * (dj ? frac[1] : 1 - frac[1]) * (dk ? frac[2] : 1 - frac[2]);
        sum += w * values[index(base[0] + di, base[1] + dj, base[2] + dk)];
    }
    return sum;
}

}  // namespace trapwave

#include "trapwave/wavefield.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace trapwave {
namespace {

//! Apply body(idx, a) to every active cell with a = Lap_h u - u^5 + f.
template <typename Body>
void for_each_acceleration(const WaveField& field, const Forcing* forcing, Body&& body)
{
    const ExteriorGrid& g = field.grid();
    const auto& mask = g.mask();
    const double* u = field.u.data();
    const std::ptrdiff_t sx = g.strides()[0];
    const std::ptrdiff_t sy = g.strides()[1];
    const double inv_h2 = 1.0 / (g.h() * g.h());
    const bool quintic = field.nonlinearity == Nonlinearity::quintic;
    g.for_each_row([&](int i, int j, std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            if (!mask[idx]) continue;
            const double c = u[idx];
            double a = (u[idx + sx] + u[idx - sx] + u[idx + sy] + u[idx - sy] + u[idx + 1] + u[idx - 1] - 6 * c) * inv_h2;
            if (quintic) {
                const double c2 = c * c;
                a -= c2 * c2 * c;
            }
            if (forcing) a += (*forcing)(g.position(i, j, static_cast<int>(idx - begin) + 1), field.t);
            body(idx, a);
        }
    });
}

}  // namespace

WaveField::WaveField(std::shared_ptr<const ExteriorGrid> grid, Nonlinearity nl)
    : u(Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(grid->padded_size()))),
      v(Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(grid->padded_size()))), nonlinearity(nl), grid_(std::move(grid))
{}

void WaveField::enforce_dirichlet()
{
    const auto& mask = grid_->mask();
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) {
            u[static_cast<Eigen::Index>(i)] = 0;
            v[static_cast<Eigen::Index>(i)] = 0;
        }
    }
}

double stable_dt(const ExteriorGrid& grid, double cfl) { return cfl * grid.h() / std::sqrt(3.0); }

Eigen::ArrayXd acceleration(const WaveField& field, const Forcing* forcing)
{
    Eigen::ArrayXd a = Eigen::ArrayXd::Zero(field.u.size());
    for_each_acceleration(field, forcing, [&](std::size_t idx, double acc) { a[static_cast<Eigen::Index>(idx)] = acc; });
    return a;
}

Eigen::ArrayXd synchronized_velocity(const WaveField& field, const Forcing* forcing)
{
    if (field.stagger == 0) return field.v;
    return field.v + 0.5 * field.stagger * acceleration(field, forcing);
}

void step(WaveField& field, double dt, const Forcing* forcing)
{
    const double limit = stable_dt(field.grid(), kMaxCfl) * (1 + 1e-12);
    if (dt == 0 || !(std::abs(dt) <= limit))
        throw std::invalid_argument("time step " + std::to_string(dt) + " violates the CFL bound " + std::to_string(limit));

    const double kick = 0.5 * (field.stagger + dt);
    double* v = field.v.data();
    for_each_acceleration(field, forcing, [&](std::size_t idx, double a) { v[idx] += kick * a; });

    const ExteriorGrid& g = field.grid();
    double* u = field.u.data();
    const double peak = g.reduce_slabs(
        0.0,
        [&](int i) {
            double m = 0;
            for (int j = 1; j <= g.cells()[1]; ++j) {
                const std::size_t begin = g.index(i, j, 1);
                for (std::size_t idx = begin; idx < begin + static_cast<std::size_t>(g.cells()[2]); ++idx) {
                    u[idx] += dt * v[idx];
                    m = std::max(m, std::abs(u[idx]));
                    if (!std::isfinite(u[idx])) m = std::numeric_limits<double>::infinity();
                }
            }
            return m;
        },
        [](double a, double b) { return std::max(a, b); });
    field.t += dt;
    field.stagger = dt;
    if (!(peak <= kBlowupGuard))
        throw Blowup("max|u| = " + std::to_string(peak) + " at t = " + std::to_string(field.t));
}

Energy energy(const WaveField& field)
{
    Energy e = energy(field.grid(), field.u, field.v);
    if (field.nonlinearity == Nonlinearity::linear) e.total = 0.5 * (e.gradient + e.kinetic);
    return e;
}

Energy energy(const ExteriorGrid& g, const Eigen::ArrayXd& uu, const Eigen::ArrayXd& vv)
{
    const auto& mask = g.mask();
    const double* u = uu.data();
    const double* v = vv.data();
    const auto& st = g.strides();
    const double h = g.h();
    const double h3 = g.cell_volume();
    const Eigen::Array3d sums = g.reduce_slabs(
        Eigen::Array3d::Zero().eval(),
        [&](int i) {
            Eigen::Array3d acc = Eigen::Array3d::Zero();
            for (int j = 1; j <= g.cells()[1]; ++j) {
                const std::size_t begin = g.index(i, j, 1);
                for (std::size_t idx = begin; idx < begin + static_cast<std::size_t>(g.cells()[2]); ++idx) {
                    if (!mask[idx]) continue;
                    const double c = u[idx];
                    double grad = 0;
                    for (int a = 0; a < 3; ++a) {
                        const double up = u[idx + st[a]] - c;
                        grad += up * up;
                        // Faces towards inactive cells on the lower side are owned by this cell.
                        if (!mask[idx - st[a]]) grad += c * c;
                    }
                    const double c2 = c * c;
                    acc[0] += v[idx] * v[idx];
                    acc[1] += grad;
                    acc[2] += c2 * c2 * c2;
                }
            }
            return acc;
        },
        [](const Eigen::Array3d& a, const Eigen::Array3d& b) { return (a + b).eval(); });
    Energy e;
    e.kinetic = h3 * sums[0];
    e.gradient = h * sums[1];
    e.l6_sixth = h3 * sums[2];
    e.total = 0.5 * e.gradient + 0.5 * e.kinetic + e.l6_sixth / 6;
    return e;
}

double energy_norm(const ExteriorGrid& g, const Eigen::ArrayXd& uu, const Eigen::ArrayXd& vv)
{
    const auto& mask = g.mask();
    const double* u = uu.data();
    const double* v = vv.data();
    const auto& st = g.strides();
    const double h = g.h();
    const double h3 = g.cell_volume();
    return g.reduce_slabs(
        0.0,
        [&](int i) {
            double acc = 0;
            for (int j = 1; j <= g.cells()[1]; ++j) {
                const std::size_t begin = g.index(i, j, 1);
                for (std::size_t idx = begin; idx < begin + static_cast<std::size_t>(g.cells()[2]); ++idx) {
                    if (!mask[idx]) continue;
                    acc += h3 * v[idx] * v[idx];
                    for (int a = 0; a < 3; ++a) {
                        if (!mask[idx + st[a]]) continue;
                        const double d = u[idx + st[a]] - u[idx];
                        acc += h * d * d;
                    }
                }
            }
            return acc;
        },
        std::plus<>());
}

}  // namespace trapwave

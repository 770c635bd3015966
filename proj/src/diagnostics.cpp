#include "trapwave/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace trapwave {
namespace {

//! Integral over [ta, tb] of a recorded quantity, trapezoid with linear interpolation at the ends.
template <typename Get>
double integrate(const std::vector<DiagnosticsRecord>& recs, double ta, double tb, Get get)
{
    double sum = 0;
    for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
        const double a = recs[k].t;
        const double b = recs[k + 1].t;
        const double lo = std::max(a, ta);
        const double hi = std::min(b, tb);
        if (hi <= lo) continue;
        auto at = [&](double s) { return get(recs[k]) + (get(recs[k + 1]) - get(recs[k])) * (s - a) / (b - a); };
        sum += 0.5 * (at(lo) + at(hi)) * (hi - lo);
    }
    return sum;
}

std::size_t nearest_record(const std::vector<DiagnosticsRecord>& recs, double t)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < recs.size(); ++k)
        if (std::abs(recs[k].t - t) < std::abs(recs[best].t - t)) best = k;
    return best;
}

void require_range(const DiagnosticsSeries& s, double ta, double tb)
{
    if (s.records.size() < 2) throw std::invalid_argument("series has fewer than two records");
    const double slack = 1e-9 * (1 + std::abs(s.records.back().t));
    if (ta < s.records.front().t - slack || tb > s.records.back().t + slack || !(tb > ta))
        throw std::invalid_argument("window outside the simulated range");
}

}  // namespace

void DiagnosticsSeries::write_csv(std::ostream& os) const
{
    os << "t,E,E_kin,E_grad,L6,local_E_A,flux,flux_avg,strichartz_acc,morawetz_lhs,morawetz_rhs\n";
    char buf[512];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t,
                      r.energy.total, 0.5 * r.energy.kinetic, 0.5 * r.energy.gradient, r.l6, r.local_energy, r.flux,
                      r.flux_avg, r.strichartz_acc, r.morawetz_lhs, r.morawetz_rhs);
        os << buf;
    }
}

DiagnosticsRecorder::DiagnosticsRecorder(std::shared_ptr<const ExteriorGrid> grid, DiagnosticsOptions options)
    : grid_(std::move(grid)), options_(std::move(options))
{
    if (options_.every < 1) throw std::invalid_argument("recording interval must be at least one step");
    if (!(options_.local_radius > 0)) throw std::invalid_argument("local radius must be positive");
    series_.local_radius = options_.local_radius;
    series_.has_weight = options_.weight.has_value();
    if (!options_.weight) return;
    const double h = grid_->h();
    for (int sign : {-1, 1}) {
        const Vec3 c = options_.weight->focus(sign);
        // The point term is sampled trilinearly, so the whole interpolation stencil must be fluid.
        bool touches = grid_->scene().level(c) < 0;
        for (int corner = 0; corner < 8 && !touches; ++corner) {
            const Vec3 off(corner & 4 ? h : -h, corner & 2 ? h : -h, corner & 1 ? h : -h);
            touches = grid_->scene().level(c + off) < 0;
        }
        if (touches) throw FociInsideObstacle("focus " + std::to_string(sign) + " lies in or next to an obstacle");
    }
}

double boundary_flux(const WaveField& field)
{
    const ExteriorGrid& g = field.grid();
    double sum = 0;
    for (const SurfacePoint& p : g.surface_points()) {
        const double dn = g.normal_derivative(field.u.data(), p);
        sum += p.weight * dn * dn;
    }
    return sum;
}

void DiagnosticsRecorder::record(const WaveField& field)
{
    const ExteriorGrid& g = *grid_;
    if (&field.grid() != grid_.get()) throw std::invalid_argument("field lives on a different grid");

    DiagnosticsRecord rec;
    rec.t = field.t;
    rec.energy = energy(field);
    rec.l6 = std::pow(rec.energy.l6_sixth, 1.0 / 6.0);
    rec.flux = boundary_flux(field);

    const auto& mask = g.mask();
    const auto& st = g.strides();
    const double h = g.h();
    const double h3 = g.cell_volume();
    const double A2 = options_.local_radius * options_.local_radius;
    const double* u = field.u.data();
    const std::optional<MorawetzWeight>& w = options_.weight;
    const bool quintic = field.nonlinearity == Nonlinearity::quintic;
    Eigen::ArrayXd vs;
    if (w) vs = synchronized_velocity(field);
    const double* v = w ? vs.data() : nullptr;

    using Acc = Eigen::Array<double, 5, 1>;
    const Acc sums = g.reduce_slabs(
        Acc::Zero().eval(),
        [&](int i) {
            Acc acc = Acc::Zero();
            for (int j = 1; j <= g.cells()[1]; ++j) {
                const std::size_t begin = g.index(i, j, 1);
                for (int k = 1; k <= g.cells()[2]; ++k) {
                    const std::size_t idx = begin + static_cast<std::size_t>(k - 1);
                    if (!mask[idx]) continue;
                    const double c = u[idx];
                    const double c2 = c * c;
                    const double c6 = c2 * c2 * c2;
                    const Vec3 x = g.position(i, j, k);

                    double local = 0;
                    for (int a = 0; a < 3; ++a) {
                        const Vec3 up = x + 0.5 * h * Vec3::Unit(a);
                        if (up.squaredNorm() <= A2) {
                            const double d = u[idx + st[a]] - c;
                            local += d * d / h;
                        }
                        const Vec3 down = x - 0.5 * h * Vec3::Unit(a);
                        if (!mask[idx - st[a]] && down.squaredNorm() <= A2) local += c2 / h;
                    }
                    if (x.squaredNorm() <= A2) local += h3 * c6;
                    acc[0] += local;
                    acc[1] += h3 * c6 * c2 * c2;

                    if (!w) continue;
                    const Vec3 y = w->frame().to_local(x);
                    const double rm = (y - Vec3(w->c1(), 0, 0)).norm();
                    const double rp = (y + Vec3(w->c1(), 0, 0)).norm();
                    if (std::min(rm, rp) < 1e-9 * h) continue;
                    const Vec3 grad_u((u[idx + st[0]] - u[idx - st[0]]) / (2 * h),
                                      (u[idx + st[1]] - u[idx - st[1]]) / (2 * h),
                                      (u[idx + st[2]] - u[idx - st[2]]) / (2 * h));
                    const Vec3 gchi = w->grad(x);
                    const double lap = w->laplacian(x);
                    acc[2] += h3 * (-v[idx] * (gchi.dot(grad_u) + 0.5 * lap * c));
                    acc[3] += h3 * grad_u.dot(w->hessian(x) * grad_u);
                    if (quintic) acc[4] += h3 * c6 * lap;
                }
            }
            return acc;
        },
        [](const Acc& a, const Acc& b) { return (a + b).eval(); });

    rec.local_energy = sums[0];
    rec.l10_fifth = std::sqrt(sums[1]);

    if (w) {
        double boundary = 0;
        for (const SurfacePoint& p : g.surface_points()) {
            const double dn = g.normal_derivative(u, p);
            boundary += p.weight * dn * dn * w->grad(p.x).dot(p.normal);
        }
        // The outer box is flat and grid aligned, so its faces are exact: h^2 (u_i / h)^2 each.
        for (const Face& f : g.wall_faces()) {
            const double ui = u[f.index];
            const Vec3 e = f.sign * Vec3::Unit(f.axis);
            boundary += ui * ui * w->grad(g.position(f.index) + 0.5 * h * e).dot(e);
        }
        const double uc = g.interpolate(u, w->focus(1));
        const double um = g.interpolate(u, w->focus(-1));
        rec.morawetz_bracket = sums[2];
        rec.morawetz_rate = sums[3] + 2 * std::numbers::pi * (uc * uc + um * um) + sums[4] / 3 - 0.5 * boundary;
    }

    auto& recs = series_.records;
    if (recs.empty()) {
        rec.flux_avg = rec.flux;
    } else {
        const DiagnosticsRecord& prev = recs.back();
        const double dt = rec.t - prev.t;
        const double span = rec.t - recs.front().t;
        const double flux_int = prev.flux_avg * (prev.t - recs.front().t) + 0.5 * (prev.flux + rec.flux) * dt;
        rec.flux_avg = span > 0 ? flux_int / span : rec.flux;
        rec.strichartz_acc = prev.strichartz_acc + 0.5 * dt * (prev.l10_fifth + rec.l10_fifth);
        rec.morawetz_lhs = rec.morawetz_bracket - recs.front().morawetz_bracket;
        rec.morawetz_rhs = prev.morawetz_rhs + 0.5 * dt * (prev.morawetz_rate + rec.morawetz_rate);
    }
    recs.push_back(rec);
}

void evolve(WaveField& field, double dt, std::size_t steps, DiagnosticsRecorder* recorder, const Forcing* forcing)
{
    if (recorder) recorder->record(field);
    for (std::size_t s = 1; s <= steps; ++s) {
        step(field, dt, forcing);
        if (recorder && (recorder->due(s) || s == steps)) recorder->record(field);
    }
}

double flux_time_average(const DiagnosticsSeries& series, double T)
{
    const double t0 = series.records.empty() ? 0 : series.records.front().t;
    require_range(series, t0, t0 + T);
    return integrate(series.records, t0, t0 + T, [](const auto& r) { return r.flux; }) / T;
}

double local_energy_average(const DiagnosticsSeries& series, double A, double T)
{
    if (std::abs(A - series.local_radius) > 1e-12 * (1 + A))
        throw std::invalid_argument("series was recorded with a different local radius");
    const double t0 = series.records.empty() ? 0 : series.records.front().t;
    require_range(series, t0, t0 + T);
    return integrate(series.records, t0, t0 + T, [](const auto& r) { return r.local_energy; }) / T;
}

MorawetzResidual morawetz_residual(const DiagnosticsSeries& series, double t0, double t1)
{
    if (!series.has_weight) throw std::invalid_argument("series was recorded without a Morawetz weight");
    require_range(series, t0, t1);
    const auto& recs = series.records;
    const std::size_t a = nearest_record(recs, t0);
    const std::size_t b = nearest_record(recs, t1);
    MorawetzResidual res;
    res.lhs = recs[b].morawetz_lhs - recs[a].morawetz_lhs;
    res.rhs = recs[b].morawetz_rhs - recs[a].morawetz_rhs;
    const double scale = std::max({std::abs(res.lhs), std::abs(res.rhs), recs[a].energy.total});
    res.mismatch = scale > 0 ? std::abs(res.lhs - res.rhs) / scale : 0.0;
    return res;
}

AprioriFlux apriori_flux_bound_check(const DiagnosticsSeries& series, double t1, double t2)
{
    require_range(series, t1, t2);
    AprioriFlux out;
    out.window = t2 - t1;
    out.flux_integral = integrate(series.records, t1, t2, [](const auto& r) { return r.flux; });
    out.energy = series.records[nearest_record(series.records, t1)].energy.total;
    const double bound = (1 + out.window) * out.energy;
    out.ratio = bound > 0 ? out.flux_integral / bound : 0.0;
    return out;
}

}  // namespace trapwave

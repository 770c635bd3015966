#include "trapwave/geometry.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "trapwave/parallel.hpp"
#include "trapwave/rng.hpp"

namespace trapwave {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double boundary_tol(const Body& body) { return kBoundaryTolerance * body.diameter(); }

//! Parameter interval where the line meets the bounding sphere of the body.
std::optional<std::pair<double, double>> sphere_interval(const Body& body, const Vec3& o, const Vec3& d,
                                                         double pad)
{
    const double r = body.bounding_radius() * (1 + 1e-9) + pad;
    const Vec3 oc = o - body.center();
    const double b = oc.dot(d);
    const double c = oc.squaredNorm() - r * r;
    const double disc = b * b - c;
    if (disc < 0) return std::nullopt;
    const double s = std::sqrt(disc);
    return std::make_pair(-b - s, -b + s);
}

struct LineFn {
    const Body& body;
    const Vec3& o;
    const Vec3& d;
    double value(double t) const { return body.level(o + t * d); }
    double slope(double t) const { return body.gradient(o + t * d).dot(d); }
};

//! Minimiser of the convex function f on [a, b] given f'(a) < 0 < f'(b).
double convex_argmin(const LineFn& f, double a, double b)
{
    for (int it = 0; it < 200 && b - a > 1e-15 * (1 + std::abs(a) + std::abs(b)); ++it) {
        const double m = 0.5 * (a + b);
        if (f.slope(m) < 0)
            a = m;
        else
            b = m;
    }
    return 0.5 * (a + b);
}

//! Root of f in [a, b] with f(a) > 0 >= f(b): Newton safeguarded by bisection.
double polish_root(const LineFn& f, double a, double b)
{
    double t = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
        const double v = f.value(t);
        if (v == 0) return t;
        if (v > 0)
            a = t;
        else
            b = t;
        const double s = f.slope(t);
        double next = (s != 0) ? t - v / s : 0.5 * (a + b);
        if (!(next > a && next < b)) next = 0.5 * (a + b);
        if (std::abs(next - t) <= 1e-16 * (1 + std::abs(t)) || b - a <= 1e-16 * (1 + std::abs(a))) return next;
        t = next;
    }
    return t;
}

/*!
 * First parameter t > 0 where the level function of `body` turns negative
 * along o + t d, searched with step `step`.
 */
std::optional<double> first_crossing(const Body& body, const Vec3& o, const Vec3& d, double step,
                                     bool skip_origin_body)
{
    if (skip_origin_body) return std::nullopt;
    const auto interval = sphere_interval(body, o, d, step);
    if (!interval || interval->second <= 0) return std::nullopt;
    const LineFn f{body, o, d};
    double a = std::max(0.0, interval->first);
    double fa = f.value(a);
    if (fa <= 0) return a;  // origin on the boundary handled by the caller
    double sa = f.slope(a);
    const double end = interval->second;
    while (a < end) {
        const double b = std::min(end, a + step);
        const double fb = f.value(b);
        if (fb <= 0) return polish_root(f, a, b);
        const double sb = f.slope(b);
        if (sa < 0 && sb > 0) {
            // The convex profile may dip below zero between samples.
            const double m = convex_argmin(f, a, b);
            if (f.value(m) <= 0) return polish_root(f, a, m);
        }
        a = b;
        sa = sb;
    }
    return std::nullopt;
}

}  // namespace

//---------------------------------------------------------------------------//
// Scene
//---------------------------------------------------------------------------//

Scene Scene::empty() { return Scene{}; }

Scene Scene::single(const Body& body)
{
    Scene s;
    s.bodies_.push_back(body);
    s.bounding_radius_ = body.center().norm() + body.bounding_radius();
    return s;
}

Scene Scene::pair(const Body& first, const Body& second)
{
    // Both centers inside the other body means overlap; the trapped-ray
    // search below detects the remaining intersecting configurations.
    if (first.level(second.center()) <= 0 || second.level(first.center()) <= 0)
        throw std::invalid_argument("obstacles intersect");
    Scene s;
    s.bodies_ = {first, second};
    s.bounding_radius_ = std::max(first.center().norm() + first.bounding_radius(),
                                  second.center().norm() + second.bounding_radius());
    s.trapped_ = trapped_ray(first, second);
    return s;
}

double Scene::gap() const { return trapped_ ? trapped_->gap : kInf; }

Frame Scene::axis_frame() const
{
    if (!trapped_) return Frame{};
    return Frame{0.5 * (trapped_->p + trapped_->q), frame_from_axis<double>(trapped_->q - trapped_->p)};
}

int Scene::inside(const Vec3& x) const
{
    for (std::size_t i = 0; i < bodies_.size(); ++i)
        if (bodies_[i].level(x) < 0) return static_cast<int>(i);
    return -1;
}

double Scene::level(const Vec3& x) const
{
    double v = kInf;
    for (const auto& b : bodies_) v = std::min(v, b.level(x));
    return v;
}

Ray::Ray(const Vec3& o, const Vec3& d) : origin(o), direction(d)
{
    if (!o.allFinite() || !d.allFinite()) throw std::invalid_argument("ray must be finite");
    if (std::abs(d.norm() - 1) > 1e-12) throw std::invalid_argument("ray direction must be a unit vector");
}

TangentHit::TangentHit(const Hit& h) : Error("TangentHit: grazing contact with obstacle " + std::to_string(h.obstacle)), hit(h) {}

//---------------------------------------------------------------------------//
// Ray queries
//---------------------------------------------------------------------------//

std::optional<Hit> first_hit(const Scene& scene, const Ray& ray)
{
    const auto bodies = scene.bodies();
    double step = scene.gap();
    if (!std::isfinite(step)) {
        step = kInf;
        for (const auto& b : bodies) step = std::min(step, b.min_width());
    }
    step /= 64;

    std::optional<Hit> best;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        const Body& body = bodies[i];
        const double phi0 = body.level(ray.origin);
        const double tol = boundary_tol(body);
        bool on_boundary_leaving = false;
        if (phi0 < -tol) throw std::invalid_argument("ray origin lies inside an obstacle");
        if (std::abs(phi0) <= tol) {
            const Vec3 n = body.inward_normal(ray.origin);
            const double dn = ray.direction.dot(n);
            if (dn > kTangencyTolerance)
                throw DegenerateRay("origin on obstacle " + std::to_string(i + 1) + " with inward direction");
            // Leaving a convex body (or grazing it): the line does not come back.
            on_boundary_leaving = true;
        }
        const auto t = first_crossing(body, ray.origin, ray.direction, step, on_boundary_leaving);
        if (!t || *t <= 0) continue;
        if (best && best->time <= *t) continue;
        Hit h;
        h.time = *t;
        h.point = ray.origin + *t * ray.direction;
        h.normal = body.inward_normal(h.point);
        h.obstacle = static_cast<int>(i + 1);
        best = h;
    }
    if (best && std::abs(best->normal.dot(ray.direction)) < kTangencyTolerance) throw TangentHit(*best);
    return best;
}

Vec3 surface_normal(const Body& body, const Vec3& x)
{
    const double phi = body.level(x);
    if (std::abs(phi) > boundary_tol(body))
        throw OffSurface("|phi(x)| = " + std::to_string(std::abs(phi)) + " exceeds the boundary tolerance");
    return body.inward_normal(x);
}

std::optional<std::pair<double, double>> line_intersections(const Body& body, const Vec3& point, const Vec3& dir)
{
    const Vec3 d = dir.normalized();
    const auto interval = sphere_interval(body, point, d, 0);
    if (!interval) return std::nullopt;
    const LineFn f{body, point, d};
    const double a = interval->first - 1e-9;
    const double b = interval->second + 1e-9;
    const double m = convex_argmin(f, a, b);
    if (f.value(m) > 0) return std::nullopt;
    const double scale = 1.0 / d.norm();
    return std::make_pair(polish_root(f, a, m) * scale, polish_root(LineFn{body, point, Vec3(-d)}, -b, -m) * -scale);
}

Vec3 closest_point(const Body& body, const Vec3& y)
{
    Vec3 dir = y - body.center();
    if (dir.norm() == 0) dir = Vec3::UnitX();
    Vec3 x = body.radial_point(dir.normalized());
    if (body.level(y) <= 0) return x;

    // Newton on (x - y + mu grad phi(x), phi(x)) = 0.
    Vec3 g = body.gradient(x);
    double mu = (y - x).dot(g) / g.squaredNorm();
    auto residual = [&](const Vec3& xx, double m) {
        Eigen::Vector4d r;
        r.head<3>() = xx - y + m * body.gradient(xx);
        r[3] = body.level(xx);
        return r;
    };
    Eigen::Vector4d r = residual(x, mu);
    for (int it = 0; it < 100 && r.norm() > 1e-15 * (1 + y.norm()); ++it) {
        Eigen::Matrix4d jac = Eigen::Matrix4d::Zero();
        g = body.gradient(x);
        jac.topLeftCorner<3, 3>() = Mat3::Identity() + mu * body.hessian(x);
        jac.topRightCorner<3, 1>() = g;
        jac.bottomLeftCorner<1, 3>() = g.transpose();
        const Eigen::Vector4d delta = jac.fullPivLu().solve(-r);
        double lambda = 1;
        bool improved = false;
        for (int ls = 0; ls < 30; ++ls) {
            const Vec3 xn = x + lambda * delta.head<3>();
            const double mn = mu + lambda * delta[3];
            const Eigen::Vector4d rn = residual(xn, mn);
            if (rn.norm() < r.norm() || ls == 29) {
                x = xn;
                mu = mn;
                r = rn;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved) break;
    }
    // Snap back to the surface along the radial map.
    return body.radial_point((x - body.center()).normalized());
}

//---------------------------------------------------------------------------//
// Trapped segment
//---------------------------------------------------------------------------//

namespace {

double normal_defect(const Body& body, const Vec3& x, const Vec3& line_dir)
{
    const Vec3 n = body.inward_normal(x);
    const double ang = angle_between(n, line_dir);
    return std::min(ang, std::numbers::pi - ang);
}

//! Newton polish of grad_p, grad_q of |p - q|^2 + mu1 phi1(p) + mu2 phi2(q).
bool polish_pair(const Body& b1, const Body& b2, Vec3& p, Vec3& q)
{
    using Vec8 = Eigen::Matrix<double, 8, 1>;
    using Mat8 = Eigen::Matrix<double, 8, 8>;
    Vec3 g1 = b1.gradient(p);
    Vec3 g2 = b2.gradient(q);
    double mu1 = -2 * (p - q).dot(g1) / g1.squaredNorm();
    double mu2 = -2 * (q - p).dot(g2) / g2.squaredNorm();
    auto residual = [&](const Vec3& pp, const Vec3& qq, double m1, double m2) {
        Vec8 r;
        r.segment<3>(0) = 2 * (pp - qq) + m1 * b1.gradient(pp);
        r.segment<3>(3) = 2 * (qq - pp) + m2 * b2.gradient(qq);
        r[6] = b1.level(pp);
        r[7] = b2.level(qq);
        return r;
    };
    Vec8 r = residual(p, q, mu1, mu2);
    const double scale = 1 + p.norm() + q.norm();
    for (int it = 0; it < 50 && r.norm() > 1e-15 * scale; ++it) {
        Mat8 jac = Mat8::Zero();
        g1 = b1.gradient(p);
        g2 = b2.gradient(q);
        jac.block<3, 3>(0, 0) = 2 * Mat3::Identity() + mu1 * b1.hessian(p);
        jac.block<3, 3>(0, 3) = -2 * Mat3::Identity();
        jac.block<3, 1>(0, 6) = g1;
        jac.block<3, 3>(3, 0) = -2 * Mat3::Identity();
        jac.block<3, 3>(3, 3) = 2 * Mat3::Identity() + mu2 * b2.hessian(q);
        jac.block<3, 1>(3, 7) = g2;
        jac.block<1, 3>(6, 0) = g1.transpose();
        jac.block<1, 3>(7, 3) = g2.transpose();
        const Vec8 delta = jac.fullPivLu().solve(-r);
        if (!delta.allFinite()) return false;
        double lambda = 1;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            const Vec3 pn = p + lambda * delta.segment<3>(0);
            const Vec3 qn = q + lambda * delta.segment<3>(3);
            const double m1 = mu1 + lambda * delta[6];
            const double m2 = mu2 + lambda * delta[7];
            const Vec8 rn = residual(pn, qn, m1, m2);
            if (rn.norm() < r.norm()) {
                p = pn;
                q = qn;
                mu1 = m1;
                mu2 = m2;
                r = rn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
    }
    return r.norm() < 1e-9 * scale;
}

}  // namespace

TrappedSegment trapped_ray(const Body& b1, const Body& b2)
{
    constexpr int kMaxIterations = 20000;
    std::optional<std::pair<Vec3, Vec3>> best;
    double best_gap = kInf;
    for (int axis = 0; axis < 3; ++axis) {
        for (int sign : {1, -1}) {
            Vec3 dir = Vec3::Zero();
            dir[axis] = sign;
            Vec3 p = b1.radial_point(dir);
            Vec3 q = closest_point(b2, p);
            for (int it = 0; it < kMaxIterations; ++it) {
                const Vec3 pn = closest_point(b1, q);
                const Vec3 qn = closest_point(b2, pn);
                const double change = (pn - p).norm() + (qn - q).norm();
                p = pn;
                q = qn;
                if (change < 1e-13 * (1 + p.norm())) break;
            }
            if (b2.level(p) <= 0 || b1.level(q) <= 0) throw std::invalid_argument("obstacles intersect");
            const double gap = (q - p).norm();
            if (gap < best_gap) {
                best_gap = gap;
                best = std::make_pair(p, q);
            }
        }
    }
    if (!best || best_gap <= 0) throw std::invalid_argument("obstacles intersect");
    Vec3 p = best->first;
    Vec3 q = best->second;
    if (!polish_pair(b1, b2, p, q)) throw NoConvergence("trapped segment did not converge");
    p = b1.radial_point((p - b1.center()).normalized());
    q = b2.radial_point((q - b2.center()).normalized());

    TrappedSegment seg;
    seg.p = p;
    seg.q = q;
    seg.gap = (q - p).norm();
    const Vec3 e = (q - p) / seg.gap;
    seg.normality_defect = std::max(angle_between(e, Vec3(-b1.inward_normal(p))), angle_between(e, b2.inward_normal(q)));

    // Remaining intersections of the full line with the two boundaries.
    double line_defect = 0;
    const Vec3 mid = 0.5 * (p + q);
    for (const Body* b : {&b1, &b2}) {
        if (const auto hits = line_intersections(*b, mid, e)) {
            for (double s : {hits->first, hits->second}) {
                const Vec3 x = mid + s * e;
                if ((x - p).norm() < 1e-6 * seg.gap || (x - q).norm() < 1e-6 * seg.gap) continue;
                line_defect = std::max(line_defect, normal_defect(*b, x, e));
            }
        }
    }
    seg.line_defect = line_defect;
    return seg;
}

//---------------------------------------------------------------------------//
// Curvature and volume
//---------------------------------------------------------------------------//

Eigen::Vector2d principal_curvatures(const Body& body, const Vec3& x)
{
    const Vec3 grad = body.gradient(x);
    const double gnorm = grad.norm();
    const Mat3 basis = frame_from_axis<double>(grad);
    Eigen::Matrix<double, 3, 2> tangent = basis.rightCols<2>();
    const Eigen::Matrix2d form = tangent.transpose() * body.hessian(x) * tangent / gnorm;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(form);
    return es.eigenvalues();
}

double min_principal_curvature(const Body& body, std::size_t samples)
{
    double kmin = kInf;
    for (std::size_t i = 0; i < samples; ++i) {
        const Vec3 x = body.radial_point(fibonacci_sphere(i, samples));
        kmin = std::min(kmin, principal_curvatures(body, x)[0]);
    }
    return kmin;
}

VolumeEstimate cap_slab_volume(const Vec3& x0, double r, double R, double t, std::size_t samples,
                               std::uint64_t seed)
{
    if (!(r > 0 && R > 0 && t > 0)) throw std::invalid_argument("r, R and t must be positive");
    if (samples < 10000) throw std::invalid_argument("cap_slab_volume needs at least 1e4 samples");
    VolumeEstimate est;
    est.seed = seed;
    est.samples = samples;
    const double dist = x0.norm();
    if (dist - r > t + R || dist + r < t - R) return est;

    const std::size_t inside = parallel_reduce(
        samples, 4096, std::size_t{0},
        [&](std::size_t b, std::size_t e) {
            std::size_t count = 0;
            for (std::size_t i = b; i < e; ++i) {
                CounterRng rng(seed, i);
                const double rho = uniform_in_ball(rng, x0, r).norm();
                if (rho >= t - R && rho <= t + R) ++count;
            }
            return count;
        },
        std::plus<>());
    const double ball = 4.0 / 3.0 * std::numbers::pi * r * r * r;
    const double frac = static_cast<double>(inside) / static_cast<double>(samples);
    est.value = ball * frac;
    est.stderr_ = ball * std::sqrt(frac * (1 - frac) / static_cast<double>(samples));
    return est;
}

}  // namespace trapwave

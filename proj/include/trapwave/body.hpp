#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "trapwave/types.hpp"

namespace trapwave {

enum class ShapeKind { ball, ellipsoid, superellipsoid };

/*!
 * Smooth convex obstacle described by a level function.
 *
 * The level function is phi = g(x) - 1 where g is the gauge of the body: in
 * body coordinates y = R^T (x - center), g(y) = || (y_k / a_k) ||_p with
 * p = 2 for balls and ellipsoids and an even p >= 2 for superellipsoids. The
 * gauge is positively homogeneous of degree one, so phi < 0 inside, phi = 0
 * on the boundary, phi / |grad phi| approximates the distance near the
 * surface, and the boundary point in direction d from the center is
 * center + d / g(d).
 */
template <typename Scalar>
class ConvexBody {
  public:
    using Vec = Vector3<Scalar>;
    using Mat = Matrix3<Scalar>;

    static ConvexBody ball(const Vec& center, Scalar radius)
    {
        return ConvexBody(ShapeKind::ball, center, Vec::Constant(radius), 2, Mat::Identity());
    }

    static ConvexBody ellipsoid(const Vec& center, const Vec& semiaxes, const Mat& rotation = Mat::Identity())
    {
        return ConvexBody(ShapeKind::ellipsoid, center, semiaxes, 2, rotation);
    }

    static ConvexBody superellipsoid(const Vec& center, const Vec& semiaxes, int exponent,
                                     const Mat& rotation = Mat::Identity())
    {
        if (exponent < 2 || exponent % 2 != 0)
            throw std::invalid_argument("superellipsoid exponent must be even and >= 2");
        return ConvexBody(ShapeKind::superellipsoid, center, semiaxes, exponent, rotation);
    }

    ShapeKind kind() const { return kind_; }
    const Vec& center() const { return center_; }
    const Vec& semiaxes() const { return semiaxes_; }
    const Mat& rotation() const { return rotation_; }
    int exponent() const { return exponent_; }

    //! Radius of a sphere about center() containing the body.
    Scalar bounding_radius() const
    {
        // The p-ball is contained in the 2-ball for p >= 2 only up to a factor
        // sqrt(3)^(1 - 2/p); the max semiaxis times that factor is safe.
        const Scalar amax = semiaxes_.maxCoeff();
        if (exponent_ == 2) return amax;
        using std::pow;
        return amax * pow(Scalar(3), Scalar(0.5) - Scalar(1) / Scalar(exponent_));
    }
    Scalar diameter() const { return 2 * bounding_radius(); }
    //! Smallest width of the body (twice the smallest semiaxis).
    Scalar min_width() const { return 2 * semiaxes_.minCoeff(); }

    Scalar gauge(const Vec& x) const { return local_gauge(scaled(x)); }

    Scalar level(const Vec& x) const { return gauge(x) - 1; }

    Vec gradient(const Vec& x) const
    {
        const Vec z = scaled(x);
        const Scalar g = local_gauge(z);
        const Vec w = gauge_gradient(z, g);
        return rotation_ * w.cwiseQuotient(semiaxes_);
    }

    Mat hessian(const Vec& x) const
    {
        const Vec z = scaled(x);
        const Scalar g = local_gauge(z);
        const Vec w = gauge_gradient(z, g);
        Mat hz;
        if (exponent_ == 2) {
            hz = (Mat::Identity() - w * w.transpose()) / g;
        } else {
            const Scalar p = Scalar(exponent_);
            Vec diag;
            for (int k = 0; k < 3; ++k) diag[k] = ipow(z[k], exponent_ - 2);
            hz = (p - 1) * (Mat(diag.asDiagonal()) / ipow(g, exponent_ - 1) - w * w.transpose() / g);
        }
        const Vec inv_a = semiaxes_.cwiseInverse();
        const Mat hy = inv_a.asDiagonal() * hz * inv_a.asDiagonal();
        return rotation_ * hy * rotation_.transpose();
    }

    //! Boundary point hit by the ray from the center in direction d.
    Vec radial_point(const Vec& d) const
    {
        const Vec y = rotation_.transpose() * d;
        return center_ + d / local_gauge(y.cwiseQuotient(semiaxes_));
    }

    //! Unit normal at x pointing into the body (x need not lie on the boundary).
    Vec inward_normal(const Vec& x) const { return -gradient(x).normalized(); }

    template <typename Other>
    ConvexBody<Other> cast() const
    {
        return ConvexBody<Other>::from_parts(kind_, center_.template cast<Other>(),
                                             semiaxes_.template cast<Other>(), exponent_,
                                             rotation_.template cast<Other>());
    }

    static ConvexBody from_parts(ShapeKind kind, const Vec& center, const Vec& semiaxes, int exponent,
                                 const Mat& rotation)
    {
        return ConvexBody(kind, center, semiaxes, exponent, rotation);
    }

  private:
    ConvexBody(ShapeKind kind, const Vec& center, const Vec& semiaxes, int exponent, const Mat& rotation)
        : kind_(kind), center_(center), semiaxes_(semiaxes), rotation_(rotation), exponent_(exponent)
    {
        if ((semiaxes_.array() <= 0).any()) throw std::invalid_argument("semiaxes must be positive");
        const Mat defect = rotation_.transpose() * rotation_ - Mat::Identity();
        if (defect.cwiseAbs().maxCoeff() > Scalar(1e-9)) throw std::invalid_argument("rotation must be orthonormal");
    }

    static Scalar ipow(Scalar v, int n)
    {
        Scalar r = 1;
        for (int i = 0; i < n; ++i) r *= v;
        return r;
    }

    Vec scaled(const Vec& x) const { return (rotation_.transpose() * (x - center_)).cwiseQuotient(semiaxes_); }

    Scalar local_gauge(const Vec& z) const
    {
        if (exponent_ == 2) return z.norm();
        // Scale by the largest entry before raising to the power.
        const Scalar m = z.cwiseAbs().maxCoeff();
        if (m == 0) return 0;
        Scalar s = 0;
        for (int k = 0; k < 3; ++k) s += ipow(z[k] / m, exponent_);
        using std::pow;
        return m * pow(s, Scalar(1) / Scalar(exponent_));
    }

    //! d g / d z.
    Vec gauge_gradient(const Vec& z, Scalar g) const
    {
        if (exponent_ == 2) return z / g;
        Vec w;
        for (int k = 0; k < 3; ++k) w[k] = ipow(z[k] / g, exponent_ - 1);
        return w;
    }

    ShapeKind kind_;
    Vec center_;
    Vec semiaxes_;
    Mat rotation_;
    int exponent_;
};

using Body = ConvexBody<double>;

}  // namespace trapwave

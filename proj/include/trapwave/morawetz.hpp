#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trapwave/errors.hpp"
#include "trapwave/geometry.hpp"
#include "trapwave/types.hpp"

namespace trapwave {

/*!
 * Two-focus weight chi(x) = |y - c| + |y + c| with c = (c1, 0, 0), where y
 * are the coordinates of x in the trapped-axis frame.
 *
 * Derivatives are returned in world coordinates. Every evaluation throws
 * AtFocus within `focus_tolerance` of either focus.
 */
template <typename Scalar>
class BasicMorawetzWeight {
  public:
    using Vec = Vector3<Scalar>;
    using Mat = Matrix3<Scalar>;

    explicit BasicMorawetzWeight(Scalar c1, const BasicFrame<Scalar>& frame = {}) : c1_(c1), frame_(frame)
    {
        if (!(c1 > 0)) throw std::invalid_argument("c1 must be positive");
    }

    Scalar c1() const { return c1_; }
    const BasicFrame<Scalar>& frame() const { return frame_; }
    Vec focus(int sign) const { return frame_.to_world(Vec(sign * c1_, 0, 0)); }

    Scalar chi(const Vec& x) const
    {
        const auto [dm, dp] = offsets(x);
        return dm.norm() + dp.norm();
    }

    Vec grad(const Vec& x) const
    {
        const auto [dm, dp] = offsets(x);
        return frame_.rotation * (dm / dm.norm() + dp / dp.norm());
    }

    Scalar laplacian(const Vec& x) const
    {
        const auto [dm, dp] = offsets(x);
        return 2 / dm.norm() + 2 / dp.norm();
    }

    Mat hessian(const Vec& x) const
    {
        const auto [dm, dp] = offsets(x);
        Mat h = projector(dm) + projector(dp);
        return frame_.rotation * h * frame_.rotation.transpose();
    }

    //! (a, b) = (cos, sin) of the angle between the two focal directions.
    std::pair<Scalar, Scalar> angle_functions(const Vec& x) const
    {
        const auto [dm, dp] = offsets(x);
        Scalar a = (dp / dp.norm()).dot(dm / dm.norm());
        a = std::clamp(a, Scalar(-1), Scalar(1));
        // b from the cross product keeps full accuracy near the axis.
        const Scalar b = std::min(Scalar(1), dp.cross(dm).norm() / (dp.norm() * dm.norm()));
        return {a, b};
    }

    //! Largest eigenvalue of the focal 2x2 quadratic form.
    Scalar lambda2(const Vec& x) const
    {
        const auto [dm, dp] = offsets(x);
        const Scalar b = angle_functions(x).second;
        using std::sqrt;
        const Scalar rm = dm.norm();
        const Scalar rp = dp.norm();
        const Scalar s = 1 / rm + 1 / rp;
        const Scalar disc = std::max(Scalar(0), s * s - 4 * b * b / (rp * rm));
        return (s + sqrt(disc)) / 2;
    }

    //! Smallest eigenvalue of the Hessian, via s - lambda2 in the stable form.
    Scalar coercivity(const Vec& x) const
    {
        const auto [dm, dp] = offsets(x);
        const Scalar b = angle_functions(x).second;
        using std::sqrt;
        const Scalar rm = dm.norm();
        const Scalar rp = dp.norm();
        const Scalar s = 1 / rm + 1 / rp;
        const Scalar q = 4 * b * b / (rp * rm);
        const Scalar disc = std::max(Scalar(0), s * s - q);
        // s - lambda2 = (s - sqrt(s^2 - q)) / 2 = q / (2 (s + sqrt(s^2 - q))).
        return q / (2 * (s + sqrt(disc)));
    }

    //! Smallest eigenvalue of the full 3x3 Hessian by a dense eigensolve.
    Scalar hessian_min_eigenvalue(const Vec& x) const
    {
        Eigen::SelfAdjointEigenSolver<Mat> es(hessian(x));
        return es.eigenvalues()[0];
    }

    template <typename Other>
    BasicMorawetzWeight<Other> cast() const
    {
        return BasicMorawetzWeight<Other>(Other(c1_), frame_.template cast<Other>());
    }

    static constexpr double focus_tolerance = 1e-12;

  private:
    std::pair<Vec, Vec> offsets(const Vec& x) const
    {
        const Vec y = frame_.to_local(x);
        const Vec c(c1_, 0, 0);
        const Vec dm = y - c;
        const Vec dp = y + c;
        const Scalar tol = Scalar(focus_tolerance) * (1 + c1_);
        if (dm.norm() < tol || dp.norm() < tol) throw AtFocus("weight evaluated at a focus");
        return {dm, dp};
    }

    static Mat projector(const Vec& d)
    {
        const Scalar r = d.norm();
        const Vec u = d / r;
        return (Mat::Identity() - u * u.transpose()) / r;
    }

    Scalar c1_;
    BasicFrame<Scalar> frame_;
};

using MorawetzWeight = BasicMorawetzWeight<double>;

//! Weight with the given offset in the scene's trapped-axis frame.
inline MorawetzWeight weight_for(const Scene& scene, double c1) { return MorawetzWeight(c1, scene.axis_frame()); }

struct WeightCertificate {
    double c1 = 0;
    std::size_t samples = 0;
    //! min over the sampled boundary of grad chi . (outward normal).
    double min_flux = 0;
    Vec3 argmin = Vec3::Zero();
    int argmin_obstacle = 0;
    bool pass = false;
};

inline constexpr double kCertificateTolerance = 1e-10;

/*!
 * Sign check of grad chi . (-n) on both boundaries.
 *
 * Evaluated on `samples` Fibonacci points per body, on the points where the
 * focal axis meets the boundaries, and refined by a local pattern search
 * around the lowest samples.
 */
WeightCertificate boundary_certificate(const Scene& scene, const MorawetzWeight& w, std::size_t samples);

struct MinimalC1 {
    double c1 = 0;
    double tolerance = 0;
    //! Certificates at multiples of c1 all passed (pass status monotone on the probe set).
    bool monotone = false;
    std::vector<std::pair<double, bool>> probes;
    std::size_t evaluations = 0;
};

/*!
 * Smallest passing c1 on [gap / 2, 1e3 A] by bisection against
 * boundary_certificate. Throws NeverPasses when the upper end fails.
 */
MinimalC1 minimal_c1(const Scene& scene, double tol, std::size_t samples);

/*!
 * Monte-Carlo volume of the points of Omega in B(0, A) with b(x)^2 < alpha.
 * The sample positions depend only on (samples, seed), so estimates for
 * several alpha share their random numbers.
 */
VolumeEstimate m_alpha(const Scene& scene, const MorawetzWeight& w, double A, double alpha, std::size_t samples,
                       std::uint64_t seed);

struct CoercivitySweep {
    double min_eigenvalue = 0;
    Vec3 argmin = Vec3::Zero();
    std::size_t points = 0;
};

//! min of the Hessian's smallest eigenvalue over grid points of Omega in B(0, A) with b^2 >= alpha.
CoercivitySweep coercivity_sweep(const Scene& scene, const MorawetzWeight& w, double A, double alpha, int n_per_axis);

}  // namespace trapwave

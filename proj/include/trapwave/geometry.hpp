#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "trapwave/body.hpp"
#include "trapwave/errors.hpp"
#include "trapwave/types.hpp"

namespace trapwave {

//! Boundary tolerance relative to the body diameter.
inline constexpr double kBoundaryTolerance = 1e-9;
//! |direction . normal| below this is treated as a grazing contact.
inline constexpr double kTangencyTolerance = 1e-7;

/*!
 * Segment realising the distance between the two obstacles.
 *
 * normality_defect is the largest angle (radians) between q - p and the
 * normals at p and q; line_defect is the same measure at the other points
 * where the full line through p and q meets the two boundaries.
 */
struct TrappedSegment {
    Vec3 p;
    Vec3 q;
    double gap = 0;
    double normality_defect = 0;
    double line_defect = 0;
};

/*!
 * Exterior domain: zero, one or two disjoint convex obstacles.
 *
 * Two-body scenes carry the trapped segment and the frame in which the
 * trapped ray lies on the first axis (origin at the segment midpoint).
 */
class Scene {
  public:
    static Scene empty();
    static Scene single(const Body& body);
    //! Throws std::invalid_argument when the bodies intersect.
    static Scene pair(const Body& first, const Body& second);

    std::span<const Body> bodies() const { return bodies_; }
    std::size_t size() const { return bodies_.size(); }
    const std::optional<TrappedSegment>& trapped() const { return trapped_; }

    //! |p - q| for pairs, +inf otherwise.
    double gap() const;
    //! A with every obstacle inside B(0, A).
    double bounding_radius() const { return bounding_radius_; }
    //! Trapped-axis frame; identity when the scene has fewer than two bodies.
    Frame axis_frame() const;

    //! Index (0-based) of the obstacle containing x strictly, or -1.
    int inside(const Vec3& x) const;
    //! min over bodies of the level function; +inf for the empty scene.
    double level(const Vec3& x) const;

  private:
    std::vector<Body> bodies_;
    std::optional<TrappedSegment> trapped_;
    double bounding_radius_ = 0;
};

struct Ray {
    Vec3 origin;
    Vec3 direction;

    //! Throws std::invalid_argument unless |direction| = 1 within 1e-12.
    Ray(const Vec3& origin, const Vec3& direction);
};

struct Hit {
    double time = 0;
    Vec3 point;
    //! Unit normal at the hit point, pointing into the obstacle.
    Vec3 normal;
    //! 1-based obstacle index.
    int obstacle = 0;
};

//! Raised by first_hit for a grazing contact; carries the contact.
class TangentHit : public Error {
  public:
    explicit TangentHit(const Hit& hit);
    Hit hit;
};

/*!
 * First boundary crossing along the ray.
 *
 * Brackets the first sign change of each level function along the ray
 * (step gap/64 inside the body's bounding sphere, with a convex-dip check
 * per step) and polishes it by safeguarded Newton. Returns nullopt when the
 * ray leaves without entering an obstacle.
 *
 * Throws TangentHit at a grazing contact and DegenerateRay when the origin
 * lies on a boundary with the direction pointing inward.
 */
std::optional<Hit> first_hit(const Scene& scene, const Ray& ray);

//! Inward unit normal at a boundary point. Throws OffSurface when |phi(x)| is above tolerance.
Vec3 surface_normal(const Body& body, const Vec3& x);

//! Closest boundary point to y (y outside or on the body).
Vec3 closest_point(const Body& body, const Vec3& y);

//! Parameters s_in <= s_out where point + s * dir crosses the boundary, if the line meets the body.
std::optional<std::pair<double, double>> line_intersections(const Body& body, const Vec3& point, const Vec3& dir);

/*!
 * Distance-realising segment between two disjoint bodies.
 *
 * Alternating closest-point projection from six axis-aligned seeds, then a
 * Newton polish of the Lagrange system. Throws NoConvergence.
 */
TrappedSegment trapped_ray(const Body& first, const Body& second);
inline TrappedSegment trapped_ray(const Scene& scene) { return *scene.trapped(); }

//! Principal curvatures at a boundary point (positive for convex bodies), ascending.
Eigen::Vector2d principal_curvatures(const Body& body, const Vec3& x);

//! Smallest principal curvature over n Fibonacci-mapped boundary points.
double min_principal_curvature(const Body& body, std::size_t samples);

//! Monte-Carlo volume with its one-sigma error.
struct VolumeEstimate {
    double value = 0;
    double stderr_ = 0;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
};

/*!
 * |B(x0, r) intersected with {t - R <= |x| <= t + R}| by uniform sampling in
 * B(x0, r). Exact zero when the triangle inequality separates the sets.
 */
VolumeEstimate cap_slab_volume(const Vec3& x0, double r, double R, double t, std::size_t samples,
                               std::uint64_t seed);

}  // namespace trapwave

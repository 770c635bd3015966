#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "trapwave/geometry.hpp"

namespace trapwave {

//! Mirror xi in the plane orthogonal to the unit normal n.
template <typename DerivedA, typename DerivedB>
auto reflect(const Eigen::MatrixBase<DerivedA>& xi, const Eigen::MatrixBase<DerivedB>& n)
{
    using Scalar = typename DerivedA::Scalar;
    const Scalar dn = xi.dot(n);
    return (xi - (dn + dn) * n).eval();
}

enum class Terminal { escaped, horizon, grazing };

const char* to_string(Terminal t);

/*!
 * Broken billiard ray.
 *
 * points[0] is the start, points[k] (1 <= k <= story.size()) the k-th
 * reflection and points.back() the endpoint. directions[k] is the heading at
 * points[k] (after reflection), so directions.back() is the final heading.
 * flight_times[k] is the time from points[k] to points[k+1] and story[k] the
 * obstacle (1-based) hit at points[k+1].
 */
struct Trajectory {
    std::vector<Vec3> points;
    std::vector<Vec3> directions;
    std::vector<double> flight_times;
    std::vector<int> story;
    Terminal terminal = Terminal::horizon;
    //! Time at which the ray left B(0, R) moving outward; +inf otherwise.
    double escape_time = std::numeric_limits<double>::infinity();

    std::size_t bounces() const { return story.size(); }
    double total_time() const;
    const Vec3& endpoint() const { return points.back(); }
};

struct TraceOptions {
    std::size_t max_bounces = 1'000'000;
    //! When false a grazing contact is passed through in a straight line.
    bool stop_on_grazing = true;
};

/*!
 * Follow the billiard flow from the ray until the horizon, the first exit of
 * B(0, R) with outward radial speed, or a grazing contact.
 *
 * Pass R = +inf to disable the escape test.
 */
Trajectory trace(const Scene& scene, const Ray& ray, double horizon, double escape_radius,
                 const TraceOptions& options = {});

//! Position at time t of the flow started at (x, xi); grazing contacts are passed through.
Vec3 flow_position(const Scene& scene, const Vec3& x, const Vec3& xi, double t);

//! Prefix of the trajectory ending at its n-th reflection point.
Trajectory truncate(const Trajectory& traj, std::size_t n);

struct MonotonicityCertificate {
    double lhs = 0;
    double rhs = 0;
    double margin = 0;
};

/*!
 * Compare the endpoint term (x1 - x2).(xi1 - xi2) with the accumulated flight
 * term sum_k (t1_k + t2_k)(1 - xi1_k . xi2_k) over all recorded flights.
 *
 * Throws StoryMismatch unless both trajectories share the same story and the
 * same number of flights, and std::invalid_argument for different starts.
 */
MonotonicityCertificate monotonicity_certificate(const Trajectory& first, const Trajectory& second);

struct DirectionCap {
    Vec3 center;
    //! Angular radius (radians); mean over the sampled azimuths.
    double radius = 0;
    //! Solid angle of the cap.
    double measure = 0;
    //! min over s in [t - eps, t + eps] of |gamma_s(center) - x0|.
    double miss = 0;
};

struct ProbeResult {
    std::vector<DirectionCap> caps;
    double total_measure = 0;
};

struct ProbeOptions {
    //! Step of the latitude/longitude scan (radians).
    double angular_resolution = 0.05;
    //! Azimuths used to measure each cap.
    int azimuths = 16;
};

/*!
 * Directions xi for which the flow from x passes within eps of x0 at some
 * time in [t - eps, t + eps].
 *
 * Seeds are the local minima of |gamma_t(xi) - x0| on a latitude/longitude
 * scan; each is refined by Gauss-Newton and, when it qualifies, its extent is
 * found by bisection along a fan of azimuths.
 */
ProbeResult reconcentration_probe(const Scene& scene, const Vec3& x, const Vec3& x0, double t, double eps,
                                  const ProbeOptions& options = {});

struct SurvivorCluster {
    Vec3 center;
    std::size_t count = 0;
    //! Largest angle between the center and a member (radians).
    double spread = 0;
};

struct TrappingReport {
    Vec3 x0;
    double horizon = 0;
    double escape_radius = 0;
    std::size_t samples = 0;
    std::size_t trapped = 0;
    double trapped_fraction = 0;
    double ci_low = 0;
    double ci_high = 0;
    std::uint64_t seed = 0;
    std::vector<SurvivorCluster> clusters;
};

//! 95% Wilson score interval for k successes out of n.
std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

/*!
 * Trace `samples` uniform directions from x0 once to the largest horizon and
 * report, per horizon, the fraction that has not escaped B(0, R). Grazing
 * rays count as trapped from the contact on, so the fractions are
 * non-increasing in the horizon on the shared sample set.
 */
std::vector<TrappingReport> trapping_report(const Scene& scene, const Vec3& x0, double escape_radius,
                                            const std::vector<double>& horizons, std::size_t samples,
                                            std::uint64_t seed);

//! Single-linkage grouping of unit vectors: two vectors closer than link_angle share a cluster.
std::vector<SurvivorCluster> cluster_directions(const std::vector<Vec3>& directions, double link_angle);

//! CSV with columns k, x, y, z, xi_x, xi_y, xi_z, t, obstacle.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace trapwave

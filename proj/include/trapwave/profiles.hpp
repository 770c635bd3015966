#pragma once

#include <vector>

#include "trapwave/diagnostics.hpp"

namespace trapwave {

//! One term (lambda_n, t_n, x_n) of a scale core.
struct ScaleCore {
    int n = 0;
    double lambda = 1;
    double t = 0;
    Vec3 x = Vec3::Zero();
};

/*!
 * Base data phi = (a0 g, a1 g) with g(y) = exp(-|y|^2 / sigma^2).
 *
 * The transported data T_n phi is
 * (lambda^{-1/2} phi0((x - x_n) / lambda), lambda^{-3/2} phi1((x - x_n) / lambda)).
 */
struct GaussianProfile {
    double a0 = 1;
    double a1 = 0;
    double sigma = 0.5;

    //! Radius beyond which the data is below exp(-25) of its peak.
    double support_radius() const { return 5 * sigma; }

    //! Transported data at x.
    double u0(const ScaleCore& core, const Vec3& x) const;
    double u1(const ScaleCore& core, const Vec3& x) const;

    //! ||grad T_n phi0||^2 + ||T_n phi1||^2 on R^3; independent of the core.
    double energy_norm() const;

    //! Free-space solution with data T_n phi at time t_n, evaluated at time t (radial closed form).
    double free_solution(const ScaleCore& core, const Vec3& x, double t) const;
};

struct ProfileData {
    WaveField field;
    //! 1 - (energy norm after the collar cutoff) / (energy norm of the uncut data on the same grid).
    double removed_fraction = 0;
};

//! The cutoff vanishes within kCollarCells * h of an obstacle and reaches 1 at twice that distance.
inline constexpr double kCollarCells = 2;

//! Smooth collar cutoff at x: smootherstep in the distance to the nearest obstacle.
double collar_cutoff(const ExteriorGrid& grid, const Vec3& x);

/*!
 * Initial data for the profile of `base` along `core` on `grid`.
 *
 * The transported data is multiplied by collar_cutoff, a surrogate for the
 * orthogonal projection onto H^1_0(Omega) x L^2(Omega), and then carried
 * to time 0 by the linear exterior flow over -t_n. The returned field is
 * synchronised and has the requested nonlinearity.
 * Throws SupportClipped when the scaled support leaves 0.9 of the box.
 */
ProfileData make_profile_data(const GaussianProfile& base, const ScaleCore& core,
                              std::shared_ptr<const ExteriorGrid> grid, Nonlinearity nonlinearity = Nonlinearity::linear);

enum class FreeReference {
    //! Second run on the unmasked grid from the same projected data.
    grid,
    //! Closed-form free solution; only the difference field is evolved.
    analytic,
};

struct CompareOptions {
    double horizon = 4;
    double cfl = 0.5;
    int every = 5;
    FreeReference reference = FreeReference::grid;
};

struct FreeGap {
    ScaleCore core;
    //! sup over recorded t of the energy norm of (u - v) restricted to Omega.
    double gap = 0;
    double time_of_sup = 0;
    double removed_fraction = 0;
    //! First simulated instant (later than 0 when causality lets the analytic mode skip ahead).
    double start_time = 0;
};

/*!
 * Linear exterior evolution against the free evolution of the same data.
 *
 * In analytic mode the difference w = u - v solves the exterior problem with
 * zero data and boundary values -v, which the closed form supplies, so the
 * box only has to hold the scattered wave. That mode requires data that the
 * collar cutoff leaves untouched.
 */
std::vector<FreeGap> compare_to_free(const Scene& scene, const GridSpec& spec, const GaussianProfile& base,
                                     const std::vector<ScaleCore>& cores, const CompareOptions& options);

struct NonconcentrationResult {
    ScaleCore core;
    double C = 0;
    //! sup of ||u(t)||_{L^6} over recorded t in [-horizon, horizon] with |t - t_n| >= C lambda_n.
    double sup_l6 = 0;
    double time_of_sup = 0;
    double peak_l6 = 0;  //!< ||u(t_n)||_{L^6}
};

/*!
 * Linear evolution of a concentrating profile on both sides of t_n = 0.
 * Throws ResolutionTooCoarse when lambda_n < 16 h.
 */
NonconcentrationResult nonconcentration_scan(const Scene& scene, const GridSpec& spec, const GaussianProfile& base,
                                             const ScaleCore& core, double C, double horizon, double cfl = 0.5,
                                             int every = 1);

}  // namespace trapwave

#pragma once

#include <functional>
#include <memory>

#include <Eigen/Core>

#include "trapwave/grid.hpp"

namespace trapwave {

enum class Nonlinearity { linear, quintic };

//! Source term f(x, t) added to the right-hand side of u_tt - Lap u + u^5 = f.
using Forcing = std::function<double(const Vec3&, double)>;

/*!
 * Leapfrog state on an exterior grid.
 *
 * u holds u^n at time t; v holds the velocity at t - stagger / 2, so a
 * freshly initialised field (stagger = 0) is synchronised. Inactive cells of
 * both arrays are zero at all times.
 */
class WaveField {
  public:
    WaveField(std::shared_ptr<const ExteriorGrid> grid, Nonlinearity nonlinearity);

    const ExteriorGrid& grid() const { return *grid_; }
    const std::shared_ptr<const ExteriorGrid>& grid_ptr() const { return grid_; }

    //! Zero u and v on every inactive cell.
    void enforce_dirichlet();

    Eigen::ArrayXd u;
    Eigen::ArrayXd v;
    double t = 0;
    double stagger = 0;
    Nonlinearity nonlinearity;

  private:
    std::shared_ptr<const ExteriorGrid> grid_;
};

inline constexpr double kMaxCfl = 0.9;
inline constexpr double kBlowupGuard = 1e6;

//! Time step cfl * h / sqrt(3).
double stable_dt(const ExteriorGrid& grid, double cfl);

//! Lap_h u - u^5 + f on active cells, zero elsewhere.
Eigen::ArrayXd acceleration(const WaveField& field, const Forcing* forcing = nullptr);

//! Velocity at time t (undoes the half-step stagger).
Eigen::ArrayXd synchronized_velocity(const WaveField& field, const Forcing* forcing = nullptr);

/*!
 * One kick-drift leapfrog step of size dt (negative dt runs backwards).
 *
 * v advances by (stagger + dt) / 2 * a(u^n, t^n), then u by dt * v, so a
 * change of step size re-centres the velocity. Throws Blowup when max|u|
 * exceeds kBlowupGuard or turns non-finite.
 */
void step(WaveField& field, double dt, const Forcing* forcing = nullptr);

struct Energy {
    double total = 0;
    double kinetic = 0;   //!< integral of v^2
    double gradient = 0;  //!< integral of |grad u|^2 over cell faces
    double l6_sixth = 0;  //!< integral of u^6
};

/*!
 * Discrete energy of the stored pair (u, v):
 * total = gradient / 2 + kinetic / 2 + l6_sixth / 6. The field overload
 * drops the potential term for linear fields; l6_sixth is still reported.
 *
 * The stored velocity lags by half a step, so the drift of this quantity is
 * first order in dt.
 */
Energy energy(const WaveField& field);
Energy energy(const ExteriorGrid& grid, const Eigen::ArrayXd& u, const Eigen::ArrayXd& v);

//! Integral of |grad u|^2 + |v|^2 over the active cells (face differences for the gradient).
double energy_norm(const ExteriorGrid& grid, const Eigen::ArrayXd& u, const Eigen::ArrayXd& v);

}  // namespace trapwave

#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "trapwave/morawetz.hpp"
#include "trapwave/wavefield.hpp"

namespace trapwave {

struct DiagnosticsRecord {
    double t = 0;
    Energy energy;
    double l6 = 0;            //!< ||u||_{L^6}
    double local_energy = 0;  //!< integral over Omega and B(0, A) of |grad u|^2 + u^6
    double flux = 0;          //!< surface integral of |d_n u|^2 over the obstacles
    double flux_avg = 0;      //!< running time average of flux since the first record
    double l10_fifth = 0;     //!< ||u||_{L^10}^5
    double strichartz_acc = 0;
    double morawetz_bracket = 0;
    double morawetz_rate = 0;
    double morawetz_lhs = 0;  //!< bracket(t) - bracket(t_first)
    double morawetz_rhs = 0;  //!< integral of the rate since the first record
};

struct DiagnosticsSeries {
    double local_radius = 0;
    bool has_weight = false;
    std::vector<DiagnosticsRecord> records;

    //! Columns t, E, E_kin, E_grad, L6, local_E_A, flux, flux_avg, strichartz_acc, morawetz_lhs, morawetz_rhs.
    void write_csv(std::ostream& os) const;
};

struct DiagnosticsOptions {
    double local_radius = 1;
    //! Record every this many steps.
    int every = 5;
    std::optional<MorawetzWeight> weight;
};

/*!
 * Accumulates diagnostics of an evolution. Time integrals use the
 * trapezoid rule over the recorded instants.
 */
class DiagnosticsRecorder {
  public:
    //! Throws FociInsideObstacle when a focus of the weight touches an obstacle cell.
    DiagnosticsRecorder(std::shared_ptr<const ExteriorGrid> grid, DiagnosticsOptions options);

    void record(const WaveField& field);
    bool due(std::size_t step_index) const { return step_index % static_cast<std::size_t>(options_.every) == 0; }
    const DiagnosticsSeries& series() const { return series_; }
    const DiagnosticsOptions& options() const { return options_; }

  private:
    std::shared_ptr<const ExteriorGrid> grid_;
    DiagnosticsOptions options_;
    DiagnosticsSeries series_;
};

//! Advance `steps` steps, recording at step 0, every options.every steps and after the last step.
void evolve(WaveField& field, double dt, std::size_t steps, DiagnosticsRecorder* recorder = nullptr,
            const Forcing* forcing = nullptr);

//! Integral of |d_n u|^2 over the obstacle surfaces (ExteriorGrid::surface_points quadrature).
double boundary_flux(const WaveField& field);

//! (1 / T) times the integral of the flux over [t_first, t_first + T].
double flux_time_average(const DiagnosticsSeries& series, double T);

//! (1 / T) times the integral of the local energy over [t_first, t_first + T]; A must match the recorded radius.
double local_energy_average(const DiagnosticsSeries& series, double A, double T);

struct MorawetzResidual {
    double lhs = 0;
    double rhs = 0;
    double mismatch = 0;
};

/*!
 * Momentum identity over [t0, t1] (snapped to recorded instants):
 * lhs is the change of the bracket, rhs the time integral of the rate,
 * mismatch = |lhs - rhs| / max(|lhs|, |rhs|, E(t0)).
 */
MorawetzResidual morawetz_residual(const DiagnosticsSeries& series, double t0, double t1);

struct AprioriFlux {
    double flux_integral = 0;
    double energy = 0;
    double window = 0;
    //! flux_integral / ((1 + window) * energy)
    double ratio = 0;
};

//! Integral of the flux over [t1, t2] against (1 + (t2 - t1)) times the energy at t1.
AprioriFlux apriori_flux_bound_check(const DiagnosticsSeries& series, double t1, double t2);

}  // namespace trapwave

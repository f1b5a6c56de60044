#pragma once

#include <cstddef>
#include <vector>

#include "tse/corridor.hpp"
#include "tse/density_field.hpp"

namespace tse {

struct SolverConfig {
    double cell_width = 2.0;   ///< internal finite-volume cell width, m
    double cfl_safety = 0.9;   ///< in (0, 1]
    double output_dx = 2.0;    ///< output sampling resolution, m
    double output_dt = 0.1;    ///< output sampling resolution, s

    void validate() const;

    bool operator==(const SolverConfig&) const = default;
};

struct SimulationResult {
    DensityField field;              ///< point-sampled output grid
    std::vector<double> mass_trace;  ///< internal cell mass at each output time
    double mass_drift = 0.0;         ///< max |m(t)-m(0)| / max(m(0), eps)
    double internal_dt = 0.0;        ///< time step actually used, s
    std::size_t cell_count = 0;
};

/// Godunov sending function: flux(rho) below the critical density, the
/// segment capacity above it.
double demand(double rho, const SegmentSpec& seg);

/// Godunov receiving function: capacity below the critical density,
/// flux(rho) above it.
double supply(double rho, const SegmentSpec& seg);

/// Interface flux min(demand(left), supply(right)). With seg_left ==
/// seg_right this is the classical Godunov flux of the scalar law.
double godunov_flux(double rho_left, const SegmentSpec& seg_left,
                    double rho_right, const SegmentSpec& seg_right);

/// Largest stable explicit step: cell_width / max segment free-flow speed.
double cfl_max_dt(const CorridorSpec& corridor, double cell_width);

/// Per-segment free-flow initial densities: invert_flux_free(f_up) where
/// feasible, the critical density where f_up exceeds the segment capacity.
std::vector<double> default_initial_density(const CorridorSpec& corridor,
                                            double cell_width);

/// Explicit conservative update over the corridor. initial_density holds one
/// value per internal cell. External boundaries use the stated inflow/outflow
/// of the end segments capped by first-cell supply / last-cell demand. The
/// output grid is point-sampled at (output_dx, output_dt); time steps divide
/// output_dt evenly and never exceed cfl_safety * cfl_max_dt.
SimulationResult simulate(const CorridorSpec& corridor,
                          const std::vector<double>& initial_density,
                          const SolverConfig& config);

/// Convenience overload using default_initial_density.
SimulationResult simulate(const CorridorSpec& corridor, const SolverConfig& config);

/// Trapezoidal vehicle count of one time row of a point-sampled field.
double total_mass(const DensityField& field, std::size_t time_index);

/// Point-sampled coarsening; output resolutions must be integer multiples of
/// the field's and divide its extent evenly.
DensityField downsample(const DensityField& field, double output_dx, double output_dt);

} // namespace tse

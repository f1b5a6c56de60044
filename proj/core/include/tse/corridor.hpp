#pragma once

#include <cstddef>
#include <vector>

namespace tse {

/// One homogeneous road segment: geometry plus the Greenshields parameters
/// that govern it (free-flow speed v_f, jam density rho_m) and the stated
/// boundary flows at its two ends.
struct SegmentSpec {
    int index = 0;          ///< 1-based segment id
    double x_start = 0.0;   ///< m
    double x_end = 0.0;     ///< m
    double v_f = 0.0;       ///< free-flow speed, m/s
    double rho_m = 0.0;     ///< jam density, veh/m
    double f_up = 0.0;      ///< stated upstream flow, veh/s
    double f_down = 0.0;    ///< stated downstream flow, veh/s

    double length() const { return x_end - x_start; }

    bool operator==(const SegmentSpec&) const = default;
};

/// A corridor of contiguous, non-overlapping segments starting at x = 0.
struct CorridorSpec {
    std::vector<SegmentSpec> segments;
    double length = 0.0;    ///< m, equals x_end of the last segment
    double horizon = 0.0;   ///< s

    /// Validates all SegmentSpec/CorridorSpec invariants; throws
    /// std::invalid_argument with the offending field on violation.
    void validate() const;

    bool operator==(const CorridorSpec&) const = default;
};

/// Greenshields speed v_f * (1 - rho/rho_m). Densities within 1e-9 of
/// [0, rho_m] are clamped, larger violations throw std::domain_error.
double greenshields_speed(double rho, const SegmentSpec& seg);

/// Greenshields flux rho * v_f * (1 - rho/rho_m), concave with zeros at
/// rho = 0 and rho = rho_m.
double greenshields_flux(double rho, const SegmentSpec& seg);

/// Density maximizing the flux: rho_m / 2.
double critical_density(const SegmentSpec& seg);

/// Maximal flux v_f * rho_m / 4, attained at the critical density.
double capacity(const SegmentSpec& seg);

/// Kinematic wave speed d(flux)/d(rho) = v_f * (1 - 2 rho/rho_m).
double wave_speed(double rho, const SegmentSpec& seg);

/// Segment owning position x. Segments own half-open intervals
/// [x_start, x_end); the last segment also owns its right endpoint.
const SegmentSpec& segment_at(double x, const CorridorSpec& corridor);

/// Index (0-based) of the segment owning x, same convention as segment_at.
std::size_t segment_index_at(double x, const CorridorSpec& corridor);

/// Smaller (free-flow) root of greenshields_flux(rho) = q. Throws
/// std::domain_error when q exceeds the segment capacity.
double invert_flux_free(double q, const SegmentSpec& seg);

/// The corridor of the five-segment variable-speed-limit test bed
/// (5000 m, 50 s horizon).
CorridorSpec testbed_corridor();

} // namespace tse

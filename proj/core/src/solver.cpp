#include "tse/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tse {

namespace {

std::size_t checked_cell_count(const CorridorSpec& corridor, double cell_width) {
    if (!(cell_width > 0.0)) throw std::invalid_argument("cell_width must be positive");
    // Cells must tile each segment exactly so no cell straddles an interface.
    std::size_t total = 0;
    for (const auto& seg : corridor.segments) {
        const double n = seg.length() / cell_width;
        const double rounded = std::round(n);
        if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n) || rounded < 1.0) {
            std::ostringstream msg;
            msg << "cell_width " << cell_width << " does not tile segment "
                << seg.index << " of length " << seg.length();
            throw std::invalid_argument(msg.str());
        }
        total += static_cast<std::size_t>(rounded);
    }
    return total;
}

std::size_t cell_index_of(double x, double cell_width, std::size_t n_cells) {
    const double raw = std::floor(x / cell_width + 1e-9);
    if (raw < 0.0) return 0;
    const auto idx = static_cast<std::size_t>(raw);
    return std::min(idx, n_cells - 1);
}

} // namespace

void SolverConfig::validate() const {
    if (!(cell_width > 0.0)) throw std::invalid_argument("cell_width must be positive");
    if (!(cfl_safety > 0.0) || cfl_safety > 1.0)
        throw std::invalid_argument("cfl_safety must be in (0, 1]");
    if (!(output_dx > 0.0) || !(output_dt > 0.0))
        throw std::invalid_argument("output resolutions must be positive");
}

double demand(double rho, const SegmentSpec& seg) {
    return rho <= critical_density(seg) ? greenshields_flux(rho, seg) : capacity(seg);
}

double supply(double rho, const SegmentSpec& seg) {
    return rho <= critical_density(seg) ? capacity(seg) : greenshields_flux(rho, seg);
}

double godunov_flux(double rho_left, const SegmentSpec& seg_left,
                    double rho_right, const SegmentSpec& seg_right) {
    return std::min(demand(rho_left, seg_left), supply(rho_right, seg_right));
}

double cfl_max_dt(const CorridorSpec& corridor, double cell_width) {
    if (!(cell_width > 0.0)) throw std::invalid_argument("cell_width must be positive");
    double vmax = 0.0;
    for (const auto& seg : corridor.segments) vmax = std::max(vmax, seg.v_f);
    return cell_width / vmax;
}

std::vector<double> default_initial_density(const CorridorSpec& corridor,
                                            double cell_width) {
    const std::size_t n_cells = checked_cell_count(corridor, cell_width);
    std::vector<double> rho(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) {
        const double xc = (static_cast<double>(i) + 0.5) * cell_width;
        const auto& seg = segment_at(xc, corridor);
        rho[i] = seg.f_up <= capacity(seg) ? invert_flux_free(seg.f_up, seg)
                                           : critical_density(seg);
    }
    return rho;
}

SimulationResult simulate(const CorridorSpec& corridor,
                          const std::vector<double>& initial_density,
                          const SolverConfig& config) {
    corridor.validate();
    config.validate();
    const std::size_t n_cells = checked_cell_count(corridor, config.cell_width);
    if (initial_density.size() != n_cells)
        throw std::invalid_argument("initial density size does not match cell count");

    const double dx = config.cell_width;

    // Per-cell owning segment, resolved once.
    std::vector<const SegmentSpec*> seg_of(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i)
        seg_of[i] = &segment_at((static_cast<double>(i) + 0.5) * dx, corridor);

    std::vector<double> rho = initial_density;
    for (std::size_t i = 0; i < n_cells; ++i) {
        if (rho[i] < 0.0 || rho[i] > seg_of[i]->rho_m)
            throw std::invalid_argument("initial density outside [0, rho_m] of owning segment");
    }

    // Equal substeps per output frame, each within the stability bound.
    const double dt_max = config.cfl_safety * cfl_max_dt(corridor, dx);
    const auto substeps =
        static_cast<std::size_t>(std::ceil(config.output_dt / dt_max - 1e-12));
    const double dt = config.output_dt / static_cast<double>(std::max<std::size_t>(1, substeps));

    SimulationResult result;
    result.internal_dt = dt;
    result.cell_count = n_cells;

    DensityField& field = result.field;
    field.dx = config.output_dx;
    field.dt = config.output_dt;
    field.nx = static_cast<std::size_t>(std::llround(corridor.length / config.output_dx)) + 1;
    field.nt = static_cast<std::size_t>(std::llround(corridor.horizon / config.output_dt)) + 1;
    field.values.resize(field.nx * field.nt);

    const auto record_frame = [&](std::size_t k) {
        for (std::size_t i = 0; i < field.nx; ++i) {
            const double x = static_cast<double>(i) * config.output_dx;
            field.at(k, i) = rho[cell_index_of(x, dx, n_cells)];
        }
        double mass = 0.0;
        for (double r : rho) mass += r;
        result.mass_trace.push_back(mass * dx);
    };

    std::vector<double> flux(n_cells + 1);
    const SegmentSpec& first_seg = corridor.segments.front();
    const SegmentSpec& last_seg = corridor.segments.back();

    record_frame(0);
    for (std::size_t k = 1; k < field.nt; ++k) {
        for (std::size_t s = 0; s < std::max<std::size_t>(1, substeps); ++s) {
            flux[0] = std::min(first_seg.f_up, supply(rho[0], first_seg));
            for (std::size_t i = 1; i < n_cells; ++i)
                flux[i] = godunov_flux(rho[i - 1], *seg_of[i - 1], rho[i], *seg_of[i]);
            flux[n_cells] = std::min(last_seg.f_down, demand(rho[n_cells - 1], last_seg));

            const double r = dt / dx;
            for (std::size_t i = 0; i < n_cells; ++i)
                rho[i] -= r * (flux[i + 1] - flux[i]);
        }
        for (std::size_t i = 0; i < n_cells; ++i) {
            if (!std::isfinite(rho[i])) {
                std::ostringstream msg;
                msg << "solver produced non-finite density in cell " << i
                    << " before output frame " << k;
                throw std::runtime_error(msg.str());
            }
        }
        record_frame(k);
    }

    const double m0 = result.mass_trace.front();
    double drift = 0.0;
    for (double m : result.mass_trace)
        drift = std::max(drift, std::abs(m - m0));
    result.mass_drift = drift / std::max(m0, 1e-300);
    return result;
}

SimulationResult simulate(const CorridorSpec& corridor, const SolverConfig& config) {
    return simulate(corridor, default_initial_density(corridor, config.cell_width), config);
}

double total_mass(const DensityField& field, std::size_t time_index) {
    if (time_index >= field.nt) throw std::out_of_range("time index outside field");
    double sum = 0.0;
    for (std::size_t i = 0; i < field.nx; ++i) {
        const double w = (i == 0 || i + 1 == field.nx) ? 0.5 : 1.0;
        sum += w * field.at(time_index, i);
    }
    return sum * field.dx;
}

DensityField downsample(const DensityField& field, double output_dx, double output_dt) {
    const double rx = output_dx / field.dx;
    const double rt = output_dt / field.dt;
    const auto step_x = static_cast<std::size_t>(std::llround(rx));
    const auto step_t = static_cast<std::size_t>(std::llround(rt));
    if (step_x == 0 || std::abs(rx - static_cast<double>(step_x)) > 1e-9 ||
        step_t == 0 || std::abs(rt - static_cast<double>(step_t)) > 1e-9)
        throw std::invalid_argument("output resolutions must be integer multiples of field resolutions");
    if ((field.nx - 1) % step_x != 0 || (field.nt - 1) % step_t != 0)
        throw std::invalid_argument("output resolutions must divide the field extent evenly");

    DensityField out;
    out.nx = (field.nx - 1) / step_x + 1;
    out.nt = (field.nt - 1) / step_t + 1;
    out.dx = output_dx;
    out.dt = output_dt;
    out.x0 = field.x0;
    out.t0 = field.t0;
    out.values.resize(out.nx * out.nt);
    for (std::size_t k = 0; k < out.nt; ++k)
        for (std::size_t i = 0; i < out.nx; ++i)
            out.at(k, i) = field.at(k * step_t, i * step_x);
    return out;
}

} // namespace tse

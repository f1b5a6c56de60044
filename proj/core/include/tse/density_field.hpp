#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tse {

/// Dense space-time grid of density values rho(x, t), row-major with time
/// as the slow index: values[k * nx + i] = rho(x0 + i*dx, t0 + k*dt).
struct DensityField {
    std::size_t nx = 0;
    std::size_t nt = 0;
    double dx = 0.0;
    double dt = 0.0;
    double x0 = 0.0;
    double t0 = 0.0;
    std::vector<double> values;

    double x_at(std::size_t i) const { return x0 + static_cast<double>(i) * dx; }
    double t_at(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }

    double& at(std::size_t k, std::size_t i) { return values[k * nx + i]; }
    double at(std::size_t k, std::size_t i) const { return values[k * nx + i]; }

    std::size_t size() const { return nx * nt; }

    bool same_grid(const DensityField& other) const;

    /// Checks shape, finiteness and rho >= 0; throws std::runtime_error on
    /// violation. Upper bounds are per owning segment and checked by callers
    /// that know the corridor.
    void validate() const;
};

/// Writes the CSV interchange format: one header line
/// "nx,nt,dx,dt,x0,t0" followed by nt rows of nx comma-separated densities,
/// 17 significant digits.
void write_density_csv(const DensityField& field, const std::string& path);

/// Reads the format produced by write_density_csv.
DensityField read_density_csv(const std::string& path);

} // namespace tse

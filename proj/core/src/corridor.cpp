#include "tse/corridor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tse {

namespace {

constexpr double kDensitySlack = 1e-9;

// Clamps rho into [0, rho_m] when it is within the floating-point slack the
// solver can produce; anything further out is a caller error.
double checked_density(double rho, const SegmentSpec& seg) {
    if (rho < 0.0) {
        if (rho >= -kDensitySlack) return 0.0;
        std::ostringstream msg;
        msg << "density " << rho << " below 0 on segment " << seg.index;
        throw std::domain_error(msg.str());
    }
    if (rho > seg.rho_m) {
        if (rho <= seg.rho_m + kDensitySlack) return seg.rho_m;
        std::ostringstream msg;
        msg << "density " << rho << " above rho_m=" << seg.rho_m
            << " on segment " << seg.index;
        throw std::domain_error(msg.str());
    }
    return rho;
}

} // namespace

void CorridorSpec::validate() const {
    if (segments.empty()) throw std::invalid_argument("corridor has no segments");
    if (horizon <= 0.0) throw std::invalid_argument("corridor horizon must be positive");
    for (const auto& seg : segments) {
        if (!(seg.x_start < seg.x_end))
            throw std::invalid_argument("segment must satisfy x_start < x_end");
        if (!(seg.v_f > 0.0)) throw std::invalid_argument("segment v_f must be positive");
        if (!(seg.rho_m > 0.0)) throw std::invalid_argument("segment rho_m must be positive");
        if (seg.f_up < 0.0 || seg.f_down < 0.0)
            throw std::invalid_argument("segment boundary flows must be nonnegative");
    }
    if (segments.front().x_start != 0.0)
        throw std::invalid_argument("first segment must start at x = 0");
    for (std::size_t i = 1; i < segments.size(); ++i) {
        if (segments[i].x_start != segments[i - 1].x_end)
            throw std::invalid_argument("segments must be contiguous and non-overlapping");
    }
    if (length != segments.back().x_end)
        throw std::invalid_argument("corridor length must equal last segment x_end");
}

double greenshields_speed(double rho, const SegmentSpec& seg) {
    rho = checked_density(rho, seg);
    return seg.v_f - (seg.v_f / seg.rho_m) * rho;
}

double greenshields_flux(double rho, const SegmentSpec& seg) {
    rho = checked_density(rho, seg);
    return rho * (seg.v_f - (seg.v_f / seg.rho_m) * rho);
}

double critical_density(const SegmentSpec& seg) { return seg.rho_m / 2.0; }

double capacity(const SegmentSpec& seg) { return seg.v_f * seg.rho_m / 4.0; }

double wave_speed(double rho, const SegmentSpec& seg) {
    rho = checked_density(rho, seg);
    return seg.v_f * (1.0 - 2.0 * rho / seg.rho_m);
}

std::size_t segment_index_at(double x, const CorridorSpec& corridor) {
    if (x < 0.0 || x > corridor.length) {
        std::ostringstream msg;
        msg << "position " << x << " outside corridor [0, " << corridor.length << "]";
        throw std::domain_error(msg.str());
    }
    // Half-open ownership; the final segment claims its right endpoint.
    for (std::size_t i = 0; i + 1 < corridor.segments.size(); ++i) {
        if (x < corridor.segments[i].x_end) return i;
    }
    return corridor.segments.size() - 1;
}

const SegmentSpec& segment_at(double x, const CorridorSpec& corridor) {
    return corridor.segments[segment_index_at(x, corridor)];
}

double invert_flux_free(double q, const SegmentSpec& seg) {
    if (q < 0.0) throw std::domain_error("flow must be nonnegative");
    const double cap = capacity(seg);
    if (q > cap) {
        std::ostringstream msg;
        msg << "demand " << q << " exceeds capacity " << cap << " of segment "
            << seg.index;
        throw std::domain_error(msg.str());
    }
    // Smaller root of rho*v_f*(1 - rho/rho_m) = q, written to avoid
    // cancellation as q -> 0.
    const double disc = std::sqrt(std::max(0.0, 1.0 - q / cap));
    return 2.0 * q / (seg.v_f * (1.0 + disc));
}

CorridorSpec testbed_corridor() {
    CorridorSpec c;
    c.horizon = 50.0;
    const double vf[] = {40.0, 30.0, 50.0, 40.0, 30.0};
    const double rm[] = {0.10, 0.15, 0.10, 0.15, 0.10};
    const double fu[] = {0.0, 1.0, 1.125, 1.25, 1.5};
    const double fd[] = {1.0, 1.125, 1.25, 1.5, 0.0};
    double x = 0.0;
    for (int i = 0; i < 5; ++i) {
        SegmentSpec s;
        s.index = i + 1;
        s.x_start = x;
        s.x_end = x + 1000.0;
        s.v_f = vf[i];
        s.rho_m = rm[i];
        s.f_up = fu[i];
        s.f_down = fd[i];
        c.segments.push_back(s);
        x = s.x_end;
    }
    c.length = x;
    c.validate();
    return c;
}

} // namespace tse

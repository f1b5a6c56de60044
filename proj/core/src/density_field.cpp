#include "tse/density_field.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace tse {

bool DensityField::same_grid(const DensityField& other) const {
    return nx == other.nx && nt == other.nt && dx == other.dx && dt == other.dt &&
           x0 == other.x0 && t0 == other.t0;
}

void DensityField::validate() const {
    if (nx == 0 || nt == 0) throw std::runtime_error("density field has empty grid");
    if (values.size() != nx * nt)
        throw std::runtime_error("density field value count does not match nx*nt");
    for (double v : values) {
        if (!std::isfinite(v)) throw std::runtime_error("density field contains non-finite value");
        if (v < 0.0) throw std::runtime_error("density field contains negative value");
    }
}

void write_density_csv(const DensityField& field, const std::string& path) {
    field.validate();
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    std::fprintf(f.get(), "%zu,%zu,%.17g,%.17g,%.17g,%.17g\n", field.nx, field.nt,
                 field.dx, field.dt, field.x0, field.t0);
    char buf[32];
    std::string line;
    line.reserve(field.nx * 20);
    for (std::size_t k = 0; k < field.nt; ++k) {
        line.clear();
        for (std::size_t i = 0; i < field.nx; ++i) {
            int n = std::snprintf(buf, sizeof(buf), "%.17g", field.at(k, i));
            if (i) line.push_back(',');
            line.append(buf, static_cast<std::size_t>(n));
        }
        line.push_back('\n');
        if (std::fwrite(line.data(), 1, line.size(), f.get()) != line.size())
            throw std::runtime_error("short write to " + path);
    }
}

DensityField read_density_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("empty density file " + path);

    DensityField field;
    {
        std::istringstream hs(header);
        char comma;
        if (!(hs >> field.nx >> comma >> field.nt >> comma >> field.dx >> comma >>
              field.dt >> comma >> field.x0 >> comma >> field.t0))
            throw std::runtime_error("malformed density header in " + path);
    }
    field.values.resize(field.nx * field.nt);

    std::string line;
    for (std::size_t k = 0; k < field.nt; ++k) {
        if (!std::getline(in, line))
            throw std::runtime_error("truncated density file " + path);
        const char* p = line.c_str();
        for (std::size_t i = 0; i < field.nx; ++i) {
            char* end = nullptr;
            field.at(k, i) = std::strtod(p, &end);
            if (end == p) throw std::runtime_error("malformed density row in " + path);
            p = (*end == ',') ? end + 1 : end;
        }
    }
    field.validate();
    return field;
}

} // namespace tse

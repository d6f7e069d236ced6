#include "mfglab/field_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace mfglab {

namespace {

constexpr char kMagic[8] = {'M', 'F', 'G', 'F', 'L', 'D', '1', '\0'};

template <typename T>
void write_raw(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("field container: truncated file");
    return v;
}

} // namespace

void write_field_binary(const ScalarField& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    const auto& g = f.grid();
    os.write(kMagic, sizeof(kMagic));
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
    write_raw<std::uint32_t>(os, f.spatial() ? 0u : 1u);
    write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(g.time_steps()));
    write_raw<double>(os, g.time_horizon());
    for (int ax = 0; ax < g.dim(); ++ax) {
        write_raw<std::uint32_t>(os, static_cast<std::uint32_t>(g.nodes(ax)));
        write_raw<double>(os, g.domain().half_widths[ax]);
    }
    auto vals = f.values();
    os.write(reinterpret_cast<const char*>(vals.data()),
             static_cast<std::streamsize>(vals.size() * sizeof(double)));
    if (!os) throw std::runtime_error("write failed: " + path);
}

ScalarField read_field_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a field container: " + path);
    const auto dim = read_raw<std::uint32_t>(is);
    const auto kind_tag = read_raw<std::uint32_t>(is);
    const auto time_steps = read_raw<std::uint32_t>(is);
    const double T = read_raw<double>(is);
    std::vector<int> nodes(dim);
    std::vector<double> half(dim);
    for (std::uint32_t ax = 0; ax < dim; ++ax) {
        nodes[ax] = static_cast<int>(read_raw<std::uint32_t>(is));
        half[ax] = read_raw<double>(is);
    }
    auto grid = std::make_shared<SpaceTimeGrid>(PrismDomain(half), T, nodes,
                                                static_cast<int>(time_steps));
    ScalarField f(grid, kind_tag == 0 ? FieldKind::spatial : FieldKind::spacetime);
    auto vals = f.values();
    is.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * sizeof(double)));
    if (!is) throw std::runtime_error("field container: truncated values: " + path);
    return f;
}

void write_field_csv(const ScalarField& f, const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("cannot open for writing: " + path);
    const auto& g = f.grid();
    for (int ax = 0; ax < g.dim(); ++ax) std::fprintf(fp, "x%d,", ax + 1);
    if (!f.spatial()) std::fprintf(fp, "t,");
    std::fprintf(fp, "value\r\n");
    std::vector<int> idx(g.dim());
    const int levels = f.spatial() ? 1 : g.time_levels();
    for (int k = 0; k < levels; ++k) {
        auto s = f.slice(k);
        for (std::int64_t sp = 0; sp < g.space_size(); ++sp) {
            g.decode(sp, idx);
            for (int ax = 0; ax < g.dim(); ++ax)
                std::fprintf(fp, "%.17g,", g.coordinate(ax, idx[ax]));
            if (!f.spatial()) std::fprintf(fp, "%.17g,", g.time(k));
            std::fprintf(fp, "%.17g\r\n", s[static_cast<std::size_t>(sp)]);
        }
    }
    std::fclose(fp);
}

} // namespace mfglab

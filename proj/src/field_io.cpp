#include "ksv/field_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "ksv/errors.hpp"

namespace ksv {

namespace {

constexpr std::array<char, 8> kMagic{'K', 'S', 'V', 'F', 'I', 'E', 'L', 'D'};

std::uint64_t to_little(std::uint64_t x) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t y = 0;
        for (int b = 0; b < 8; ++b) y |= ((x >> (8 * b)) & 0xffu) << (8 * (7 - b));
        return y;
    }
    return x;
}

void put_u64(std::ostream& out, std::uint64_t x) {
    x = to_little(x);
    out.write(reinterpret_cast<const char*>(&x), sizeof x);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
    std::uint64_t x = 0;
    if (!in.read(reinterpret_cast<char*>(&x), sizeof x)) throw Error("field dump truncated");
    return to_little(x);
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::string species_file(const std::string& stem, std::size_t i) {
    return stem + "_species" + std::to_string(i + 1) + ".bin";
}

std::string hex(double v) {
    std::ostringstream s;
    s << std::hexfloat << v;
    return s.str();
}

double parse_hex(const std::string& text) {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw Error("field dump sidecar: bad number '" + text + "'");
    return v;
}

}  // namespace

std::vector<std::filesystem::path> write_field_dump(const DensityField& field, const std::filesystem::path& dir,
                                                    const std::string& stem) {
    std::filesystem::create_directories(dir);
    const Grid2D& g = field.grid();
    std::vector<std::filesystem::path> written;
    for (std::size_t i = 0; i < field.species(); ++i) {
        const auto path = dir / species_file(stem, i);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot open " + path.string() + " for writing");
        out.write(kMagic.data(), kMagic.size());
        put_u64(out, g.cells_per_side());
        put_f64(out, g.half_width());
        put_u64(out, i);
        for (double v : field.species_values(i)) put_f64(out, v);
        if (!out) throw Error("write failed: " + path.string());
        written.push_back(path);
    }
    const auto sidecar = dir / (stem + ".txt");
    std::ofstream meta(sidecar);
    if (!meta) throw Error("cannot open " + sidecar.string() + " for writing");
    meta << "format = ksv-field-dump-1\n";
    meta << "species = " << field.species() << "\n";
    meta << "cells_per_side = " << g.cells_per_side() << "\n";
    meta << "half_width = " << hex(g.half_width()) << "\n";
    meta << "spacing = " << g.spacing() << "\n";
    for (std::size_t i = 0; i < field.species(); ++i) {
        meta << "target_mass_" << i + 1 << " = " << hex(field.target_mass()[i]) << "\n";
        meta << "file_" << i + 1 << " = " << species_file(stem, i) << "\n";
    }
    written.push_back(sidecar);
    return written;
}

DensityField read_field_dump(const std::filesystem::path& dir, const std::string& stem) {
    const auto sidecar = dir / (stem + ".txt");
    std::ifstream meta(sidecar);
    if (!meta) throw Error("cannot open " + sidecar.string());
    std::map<std::string, std::string> kv;
    for (std::string line; std::getline(meta, line);) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    auto need = [&](const std::string& key) -> const std::string& {
        const auto it = kv.find(key);
        if (it == kv.end()) throw Error("field dump sidecar lacks '" + key + "'");
        return it->second;
    };
    const std::size_t n = std::stoul(need("species"));
    const std::size_t N = std::stoul(need("cells_per_side"));
    const double L = parse_hex(need("half_width"));
    const Grid2D grid(L, N);

    std::vector<double> values;
    values.reserve(n * grid.cell_count());
    std::vector<double> target;
    for (std::size_t i = 0; i < n; ++i) {
        target.push_back(parse_hex(need("target_mass_" + std::to_string(i + 1))));
        const auto path = dir / need("file_" + std::to_string(i + 1));
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open " + path.string());
        std::array<char, 8> magic{};
        if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw Error(path.string() + ": bad magic");
        if (get_u64(in) != N || get_f64(in) != L || get_u64(in) != i)
            throw Error(path.string() + ": header does not match the sidecar");
        for (std::size_t k = 0; k < grid.cell_count(); ++k) values.push_back(get_f64(in));
    }
    return DensityField(grid, n, std::move(values), std::move(target));
}

}  // namespace ksv

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "ksv/errors.hpp"
#include "ksv/field_io.hpp"
#include "oracles.hpp"

using namespace ksv;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ksv_field_io_" + name);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_SUITE("field_io") {
    TEST_CASE("dumps reload bit for bit") {
        std::mt19937_64 rng(3);
        const Grid2D g(7.25, 48);
        const auto f = oracle::random_mixture(rng, g, {1.0 / 3.0, 17.0}, {{0, 0}, {1, 1}}, 2.0);
        const auto dir = scratch("roundtrip");
        const auto files = write_field_dump(f, dir, "final");
        CHECK(files.size() == 3);
        const auto back = read_field_dump(dir, "final");
        CHECK(back.grid() == g);
        CHECK(back.species() == 2);
        REQUIRE(back.values().size() == f.values().size());
        CHECK(std::memcmp(back.values().data(), f.values().data(), f.values().size() * sizeof(double)) == 0);
        CHECK(std::memcmp(back.target_mass().data(), f.target_mass().data(), 2 * sizeof(double)) == 0);
        fs::remove_all(dir);
    }

    TEST_CASE("binary layout") {
        const Grid2D g(2.0, 4);
        const auto f = DensityField::normalized(g, 1, std::vector<double>(16, 1.0), {16.0});
        const auto dir = scratch("layout");
        write_field_dump(f, dir, "x");
        const auto bin = dir / "x_species1.bin";
        CHECK(fs::file_size(bin) == 32 + 16 * 8);
        std::ifstream in(bin, std::ios::binary);
        char magic[8];
        in.read(magic, 8);
        CHECK(std::string(magic, 8) == "KSVFIELD");
        fs::remove_all(dir);
    }

    TEST_CASE("malformed dumps are rejected") {
        const auto dir = scratch("broken");
        CHECK_THROWS_AS(read_field_dump(dir, "missing"), Error);
        const Grid2D g(2.0, 4);
        write_field_dump(DensityField::normalized(g, 1, std::vector<double>(16, 1.0), {16.0}), dir, "x");
        fs::resize_file(dir / "x_species1.bin", 40);
        CHECK_THROWS_AS(read_field_dump(dir, "x"), Error);
        fs::remove_all(dir);
    }
}

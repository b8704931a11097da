#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ksv/errors.hpp"
#include "ksv/potential.hpp"
#include "oracles.hpp"

using namespace ksv;
using oracle::kPi;

namespace {

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

DensityField bump(const Grid2D& g, double beta, Point c, double sigma) {
    return DensityField::sampled(g, {beta}, [&](std::size_t, Point x) { return std::exp(-norm2(x - c) / (2 * sigma * sigma)); });
}

}  // namespace

TEST_SUITE("potential") {
    TEST_CASE("self-cell factor is the mean of ln|y| over a unit cell") {
        CHECK(std::log(self_cell_log_factor()) == doctest::Approx(oracle::mean_log_unit_cell()).epsilon(1e-10));
    }

    TEST_CASE("unit disk with unit density has u(0) = 1/4") {
        const auto disk = oracle::disk_field(Grid2D(4.0, 256), 1.0, 1.0);
        // -(1/2pi) 2pi int_0^1 r ln r dr
        const double expected = -oracle::simpson([](double r) { return r > 0 ? r * std::log(r) : 0.0; }, 0.0, 1.0, 4000);
        CHECK(expected == doctest::Approx(0.25).epsilon(1e-6));
        CHECK(std::abs(potential_at(disk, 0, {0.0, 0.0}) - expected) <= 1e-3);
        // the FFT path at the four cells around the origin
        const auto pot = newtonian_potential(disk);
        CHECK(std::abs(pot.species_values(0)[128 * 256 + 128] - expected) <= 2e-3);
    }

    TEST_CASE("exterior potential of a disk is the point-mass logarithm") {
        const auto disk = oracle::disk_field(Grid2D(4.0, 256), 1.0, 1.0);
        const double beta = disk.mass(0);
        const double point_mass = -beta / (2 * kPi) * std::log(2.0);
        CHECK(potential_at(disk, 0, {2.0, 0.0}) == doctest::Approx(point_mass).epsilon(1e-3));
        CHECK(potential_at(disk, 0, {0.0, -2.0}) == doctest::Approx(point_mass).epsilon(1e-3));
        const auto pot = newtonian_potential(disk);
        CHECK(far_field_error(pot, 0, 2.0) <= 1e-3);
    }

    TEST_CASE("FFT convolution matches direct summation") {
        std::mt19937_64 rng(41);
        for (std::size_t N : {16u, 32u, 64u}) {
            const Grid2D g(3.0, N);
            const auto f = oracle::random_mixture(rng, g, {2.0, 7.0}, {{0.5, 0}, {-0.5, 0.3}}, 0.7, 0.3, 0.8);
            const auto pot = newtonian_potential(f);
            for (std::size_t i = 0; i < 2; ++i) {
                const auto direct = oracle::direct_potential(f, i);
                const auto fast = pot.species_values(i);
                double err = 0.0;
                for (std::size_t k = 0; k < direct.size(); ++k) err = std::max(err, std::abs(direct[k] - fast[k]));
                CHECK(err <= 1e-10 * std::max(1.0, max_abs(direct)));
            }
        }
    }

    TEST_CASE("point evaluation agrees with the grid potential at cell centers") {
        const Grid2D g(3.0, 32);
        const auto f = bump(g, 1.5, {0.2, -0.1}, 0.6);
        const auto pot = newtonian_potential(f);
        for (std::size_t k : {0u, 100u, 527u, 1023u})
            CHECK(potential_at(f, 0, g.center(k)) == doctest::Approx(pot.species_values(0)[k]).epsilon(1e-12));
    }

    TEST_CASE("potential is linear in the density") {
        std::mt19937_64 rng(43);
        const Grid2D g(8.0, 128);
        const auto a = oracle::random_mixture(rng, g, {1.0}, {{1, 0}}, 1.0);
        const auto b = oracle::random_mixture(rng, g, {2.0}, {{-1, 1}}, 1.0);
        std::vector<double> values;
        for (auto s : {a.species_values(0), b.species_values(0)}) values.insert(values.end(), s.begin(), s.end());
        for (std::size_t k = 0; k < g.cell_count(); ++k) values.push_back(a.species_values(0)[k] + b.species_values(0)[k]);
        const DensityField three(g, 3, values, {1.0, 2.0, 3.0});
        const auto pot = newtonian_potential(three);
        const double scale = max_abs(pot.species_values(2));
        for (std::size_t k = 0; k < g.cell_count(); ++k)
            CHECK(std::abs(pot.species_values(0)[k] + pot.species_values(1)[k] - pot.species_values(2)[k]) <= 1e-12 * scale);
    }

    TEST_CASE("potential is equivariant under grid-aligned shifts") {
        const Grid2D g(6.0, 96);
        const double h = g.spacing();
        const auto f = bump(g, 2.0, {-1.0, 0.5}, 0.5);
        const auto t = translate(f, {4 * h, -3 * h});
        const auto pu = newtonian_potential(f);
        const auto pt = newtonian_potential(t);
        for (std::size_t r = 10; r < 80; r += 7)
            for (std::size_t c = 10; c < 80; c += 7)
                CHECK(pt.species_values(0)[(r - 3) * 96 + c + 4] ==
                      doctest::Approx(pu.species_values(0)[r * 96 + c]).epsilon(1e-10));
    }

    TEST_CASE("far-field error decays with the radius for separated bumps") {
        const Grid2D g = default_grid();
        const auto f = DensityField::sampled(g, {1.0}, [](std::size_t, Point x) {
            return std::exp(-2 * norm2(x - Point{0.5, 0})) + std::exp(-2 * norm2(x + Point{0.5, 0}));
        });
        const auto pot = newtonian_potential(f);
        const double e2 = far_field_error(pot, 0, 2.0);
        const double e4 = far_field_error(pot, 0, 4.0);
        const double e8 = far_field_error(pot, 0, 8.0);
        CHECK(e2 > e4);
        CHECK(e4 > e8);
        CHECK(e4 * 4 <= e2 * 2 * 1.01);  // bounded by C / R
        CHECK(e8 * 8 <= e4 * 4 * 1.01);
        CHECK_THROWS_AS(far_field_error(pot, 0, 11.5), DomainError);
    }

    TEST_CASE("interaction energy of identical species is one number") {
        const Grid2D g(8.0, 128);
        const auto b = bump(g, 1.0, {0.3, 0}, 0.7);
        std::vector<double> values(b.species_values(0).begin(), b.species_values(0).end());
        values.insert(values.end(), values.begin(), values.end());
        const DensityField two(g, 2, values, {1.0, 1.0});
        const auto I = interaction_energy(two, newtonian_potential(two));
        CHECK(I[0] == doctest::Approx(I[1]).epsilon(1e-12));
        CHECK(I[0] == doctest::Approx(I[3]).epsilon(1e-12));
        CHECK(I[1] == doctest::Approx(I[2]).epsilon(1e-12));
    }

    TEST_CASE("interaction of two distant disks is ln d") {
        const Grid2D g(4.0, 256);
        const auto disk = oracle::disk_field(g, 0.4, 1.0);
        const double h = g.spacing();
        const auto left = translate(disk, {-48 * h, 0});
        const auto right = translate(disk, {48 * h, 0});
        std::vector<double> values(left.species_values(0).begin(), left.species_values(0).end());
        values.insert(values.end(), right.species_values(0).begin(), right.species_values(0).end());
        for (double& v : values) v /= disk.mass(0);
        const DensityField pair(g, 2, values, {1.0, 1.0});
        const double d = 96 * h;
        const auto I = interaction_energy(pair, newtonian_potential(pair));
        CHECK(std::abs(I[1] - std::log(d)) <= 0.4 * 0.4 / (d * d));
    }

    TEST_CASE("self-energy of the uniform unit-mass disk is -1/4") {
        const auto disk = oracle::disk_field(Grid2D(4.0, 256), 1.0, 1.0);
        const double m = disk.mass(0);
        std::vector<double> v(disk.species_values(0).begin(), disk.species_values(0).end());
        for (double& x : v) x /= m;
        const DensityField unit(disk.grid(), 1, v, {1.0});
        // -2 pi int rho u with u(r) = (1 - r^2)/(4 pi) for r < 1 and rho = 1/pi
        const double oracle_value = -2 * kPi * oracle::simpson([](double r) {
            return (1.0 / kPi) * (1 - r * r) / (4 * kPi) * 2 * kPi * r;
        }, 0.0, 1.0, 400);
        CHECK(oracle_value == doctest::Approx(-0.25).epsilon(1e-9));
        CHECK(std::abs(interaction_energy(unit, newtonian_potential(unit))[0] - oracle_value) <= 1e-3);
    }

    TEST_CASE("interaction matrix is symmetric for random fields") {
        std::mt19937_64 rng(47);
        const Grid2D g(10.0, 128);
        for (int trial = 0; trial < 10; ++trial) {
            const auto f = oracle::random_mixture(rng, g, {1.0, 4.0, 0.5}, {{1, 0}, {-2, 1}, {0, -2}}, 1.5);
            const auto I = interaction_energy(f, newtonian_potential(f));
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(I[i * 3 + j] - I[j * 3 + i]) <= 1e-8 * (1 + std::abs(I[i * 3 + j])));
        }
    }

    TEST_CASE("interaction energy follows the dilation law") {
        std::mt19937_64 rng(53);
        const Grid2D g = default_grid();
        for (int trial = 0; trial < 4; ++trial) {
            const auto f = oracle::random_mixture(rng, g, {1.5, 3.0}, {{0.5, 0}, {-0.5, 0}}, 0.5, 0.6, 0.8);
            const auto I = interaction_energy(f, newtonian_potential(f));
            for (double R : {0.5, 2.0}) {
                const auto d = dilate(f, R);
                const auto J = interaction_energy(d, newtonian_potential(d));
                const double beta[2] = {1.5, 3.0};
                for (std::size_t i = 0; i < 2; ++i)
                    for (std::size_t j = 0; j < 2; ++j) {
                        const double expected = I[i * 2 + j] - beta[i] * beta[j] * std::log(R);
                        CHECK(std::abs(J[i * 2 + j] - expected) <= 1e-2 * std::max(1.0, std::abs(expected)));
                    }
            }
        }
    }

    TEST_CASE("mismatched grids are rejected") {
        const auto a = bump(Grid2D(4.0, 32), 1.0, {}, 0.5);
        const auto b = bump(Grid2D(4.0, 64), 1.0, {}, 0.5);
        CHECK_THROWS_AS(interaction_energy(a, newtonian_potential(b)), DomainError);
    }
}

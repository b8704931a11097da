#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ksv/geometry.hpp"

namespace ksv {

/// Uniform cell-centered grid on the square [-L, L]^2 with N cells per side (N even).
/// Cell (row, col) has center (-L + (col + 1/2) h, -L + (row + 1/2) h).
class Grid2D {
public:
    Grid2D(double half_width, std::size_t cells_per_side);

    double half_width() const noexcept { return half_width_; }
    std::size_t cells_per_side() const noexcept { return cells_; }
    std::size_t cell_count() const noexcept { return cells_ * cells_; }
    double spacing() const noexcept { return 2.0 * half_width_ / static_cast<double>(cells_); }
    double cell_area() const noexcept { return spacing() * spacing(); }

    double coordinate(std::size_t k) const noexcept {
        return -half_width_ + (static_cast<double>(k) + 0.5) * spacing();
    }
    Point center(std::size_t row, std::size_t col) const noexcept { return {coordinate(col), coordinate(row)}; }
    Point center(std::size_t flat) const noexcept { return center(flat / cells_, flat % cells_); }

    friend bool operator==(const Grid2D&, const Grid2D&) = default;

private:
    double half_width_;
    std::size_t cells_;
};

/// Grid used when nothing else is requested.
Grid2D default_grid();

/// Tuple of nonnegative cell-center densities, one N x N block per species.
///
/// Every field carries its target masses; construction checks that the
/// discrete mass h^2 sum rho_i matches beta_i to 1e-8 relative. Use
/// normalized() to build a field from raw samples.
class DensityField {
public:
    DensityField(Grid2D grid, std::size_t species, std::vector<double> values, std::vector<double> target_mass);

    /// Rescales each species block so its discrete mass equals target_mass[i].
    static DensityField normalized(Grid2D grid, std::size_t species, std::vector<double> values,
                                   std::vector<double> target_mass);

    /// Samples f(i, x) at every cell center and normalizes.
    static DensityField sampled(Grid2D grid, std::vector<double> target_mass,
                                const std::function<double(std::size_t, Point)>& f);

    const Grid2D& grid() const noexcept { return grid_; }
    std::size_t species() const noexcept { return species_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> species_values(std::size_t i) const;
    std::span<const double> target_mass() const noexcept { return target_; }

    double at(std::size_t i, std::size_t row, std::size_t col) const {
        return values_[(i * grid_.cells_per_side() + row) * grid_.cells_per_side() + col];
    }

    double mass(std::size_t i) const;
    double max_density(std::size_t i) const;
    /// Mass-weighted mean position of species i.
    Point centroid(std::size_t i) const;

private:
    Grid2D grid_;
    std::size_t species_;
    std::vector<double> values_;
    std::vector<double> target_;
};

/// h^2 sum rho ln rho with 0 ln 0 = 0 (cells below 1e-300 count as zero).
double entropy(const DensityField& field, std::size_t i);

/// h^2 sum |x_k - center|^2 rho(x_k).
double second_moment(const DensityField& field, std::size_t i, Point center);

/// Discrete L1 distance h^2 sum |a - b| for species i.
double l1_distance(const DensityField& a, const DensityField& b, std::size_t i);

struct EntropyBound {
    double lhs;
    double rhs;
    bool holds;
};

/// Checks sum int rho|ln rho| <= sum int rho ln rho + 2 ln(2 pi) sum beta + 2 sum int |x|^2 rho + 2n/e.
EntropyBound entropy_bound_check(const DensityField& field);

/// Bilinear interpolation of species i at an arbitrary point; zero outside the grid.
double interpolate(const DensityField& field, std::size_t i, Point x);

/// rho~(x) = R^2 rho(R x), resampled and renormalized to the target masses.
/// Throws SupportOverflow when more than 1e-8 beta_i leaves the domain.
DensityField dilate(const DensityField& field, double scale);

/// rho~(x) = rho(x - shift), resampled and renormalized.
/// Throws SupportOverflow when more than 1e-8 beta_i leaves the domain.
DensityField translate(const DensityField& field, Point shift);

/// Symmetric decreasing rearrangement of species i about the origin; other species untouched.
DensityField rearrange_radial(const DensityField& field, std::size_t i);

/// Rearranges every species.
DensityField rearrange_radial(const DensityField& field);

}  // namespace ksv

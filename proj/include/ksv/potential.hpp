#pragma once

#include <span>
#include <vector>

#include "ksv/field.hpp"

namespace ksv {

/// Self-interaction length factor: ln(c0 h) equals the mean of ln|y| over a square cell of side h.
double self_cell_log_factor();

/// Newtonian potentials u_i = -(1/2pi) ln|.| * rho_i sampled at cell centers.
class PotentialField {
public:
    PotentialField(Grid2D grid, std::size_t species, std::vector<double> values, std::vector<double> source_mass);

    const Grid2D& grid() const noexcept { return grid_; }
    std::size_t species() const noexcept { return species_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> species_values(std::size_t i) const;
    std::span<const double> source_mass() const noexcept { return source_; }

private:
    Grid2D grid_;
    std::size_t species_;
    std::vector<double> values_;
    std::vector<double> source_;
};

/// Discrete log-kernel convolution evaluated with zero-padded FFTs.
PotentialField newtonian_potential(const DensityField& field);

/// u_i at an arbitrary point by direct summation over cells (O(N^2)).
/// Points that coincide with a cell center use the self-cell value for that cell.
double potential_at(const DensityField& field, std::size_t i, Point x);

/// max |u_i(x) + (beta_i/2pi) ln|x|| over cells with R <= |x| <= 0.95 L.
double far_field_error(const PotentialField& pot, std::size_t i, double radius);

/// I_ij = int int rho_i(x) ln|x-y| rho_j(y) = -2 pi int rho_i u_j, row-major n x n.
std::vector<double> interaction_energy(const DensityField& field, const PotentialField& pot);

}  // namespace ksv

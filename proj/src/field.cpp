#include "ksv/field.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ksv/errors.hpp"
#include "ksv/parallel.hpp"

namespace ksv {

namespace {

constexpr double kTinyDensity = 1e-300;
constexpr double kMassTolerance = 1e-8;

double xlogx(double v) { return v < kTinyDensity ? 0.0 : v * std::log(v); }

// Mass of species i carried by cells whose centers satisfy `lost`.
template <class Pred>
double mass_where(const DensityField& field, std::size_t i, Pred lost) {
    const Grid2D& g = field.grid();
    const std::size_t N = g.cells_per_side();
    const auto rho = field.species_values(i);
    return g.cell_area() * row_sum(N, [&](std::size_t r) {
               double s = 0.0;
               for (std::size_t c = 0; c < N; ++c)
                   if (lost(g.center(r, c))) s += rho[r * N + c];
               return s;
           });
}

template <class Map>
DensityField resample(const DensityField& field, Map source_point, double amplitude) {
    const Grid2D& g = field.grid();
    const std::size_t N = g.cells_per_side();
    std::vector<double> out(field.values().size());
    for (std::size_t i = 0; i < field.species(); ++i) {
        double* block = out.data() + i * g.cell_count();
        for_rows(N, [&](std::size_t r) {
            for (std::size_t c = 0; c < N; ++c)
                block[r * N + c] = amplitude * interpolate(field, i, source_point(g.center(r, c)));
        });
    }
    std::vector<double> target(field.target_mass().begin(), field.target_mass().end());
    return DensityField::normalized(g, field.species(), std::move(out), std::move(target));
}

}  // namespace

Grid2D::Grid2D(double half_width, std::size_t cells_per_side) : half_width_(half_width), cells_(cells_per_side) {
    if (!(half_width > 0.0) || !std::isfinite(half_width)) throw DomainError("grid half width must be positive");
    if (cells_per_side < 2 || cells_per_side % 2 != 0)
        throw DomainError("cells per side must be even and at least 2, got " + std::to_string(cells_per_side));
}

Grid2D default_grid() { return Grid2D(12.0, 256); }

DensityField::DensityField(Grid2D grid, std::size_t species, std::vector<double> values,
                           std::vector<double> target_mass)
    : grid_(grid), species_(species), values_(std::move(values)), target_(std::move(target_mass)) {
    if (species_ == 0) throw DomainError("density field needs at least one species");
    if (values_.size() != species_ * grid_.cell_count())
        throw DomainError("density field expects " + std::to_string(species_ * grid_.cell_count()) +
                          " values, got " + std::to_string(values_.size()));
    if (target_.size() != species_) throw DomainError("one target mass per species required");
    for (double v : values_)
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("densities must be finite and nonnegative");
    for (std::size_t i = 0; i < species_; ++i) {
        const double m = mass(i);
        if (std::abs(m - target_[i]) > kMassTolerance * std::max(1.0, std::abs(target_[i])))
            throw DomainError("species " + std::to_string(i + 1) + " has mass " + std::to_string(m) +
                              ", expected " + std::to_string(target_[i]));
    }
}

DensityField DensityField::normalized(Grid2D grid, std::size_t species, std::vector<double> values,
                                      std::vector<double> target_mass) {
    if (values.size() != species * grid.cell_count() || target_mass.size() != species)
        throw DomainError("density samples do not match grid and species count");
    const std::size_t cells = grid.cell_count();
    for (std::size_t i = 0; i < species; ++i) {
        double* block = values.data() + i * cells;
        double sum = 0.0;
        for (std::size_t k = 0; k < cells; ++k) {
            if (block[k] < kTinyDensity) block[k] = 0.0;
            sum += block[k];
        }
        const double m = sum * grid.cell_area();
        if (!(m > 0.0) || !std::isfinite(m))
            throw DomainError("species " + std::to_string(i + 1) + " has no mass on the grid");
        const double factor = target_mass[i] / m;
        for (std::size_t k = 0; k < cells; ++k) block[k] *= factor;
    }
    return DensityField(grid, species, std::move(values), std::move(target_mass));
}

DensityField DensityField::sampled(Grid2D grid, std::vector<double> target_mass,
                                   const std::function<double(std::size_t, Point)>& f) {
    const std::size_t species = target_mass.size();
    std::vector<double> values(species * grid.cell_count());
    for (std::size_t i = 0; i < species; ++i)
        for (std::size_t k = 0; k < grid.cell_count(); ++k) values[i * grid.cell_count() + k] = f(i, grid.center(k));
    return normalized(grid, species, std::move(values), std::move(target_mass));
}

std::span<const double> DensityField::species_values(std::size_t i) const {
    if (i >= species_) throw DomainError("species index out of range");
    return std::span<const double>(values_).subspan(i * grid_.cell_count(), grid_.cell_count());
}

double DensityField::mass(std::size_t i) const {
    const auto rho = species_values(i);
    const std::size_t N = grid_.cells_per_side();
    return grid_.cell_area() * row_sum(N, [&](std::size_t r) {
               return std::accumulate(rho.begin() + r * N, rho.begin() + (r + 1) * N, 0.0);
           });
}

double DensityField::max_density(std::size_t i) const {
    const auto rho = species_values(i);
    return *std::max_element(rho.begin(), rho.end());
}

Point DensityField::centroid(std::size_t i) const {
    const auto rho = species_values(i);
    const std::size_t N = grid_.cells_per_side();
    const double h2 = grid_.cell_area();
    const double mx = h2 * row_sum(N, [&](std::size_t r) {
        double s = 0.0;
        for (std::size_t c = 0; c < N; ++c) s += grid_.coordinate(c) * rho[r * N + c];
        return s;
    });
    const double my = h2 * row_sum(N, [&](std::size_t r) {
        double s = 0.0;
        for (std::size_t c = 0; c < N; ++c) s += rho[r * N + c];
        return grid_.coordinate(r) * s;
    });
    const double m = mass(i);
    return {mx / m, my / m};
}

double entropy(const DensityField& field, std::size_t i) {
    const auto rho = field.species_values(i);
    const std::size_t N = field.grid().cells_per_side();
    return field.grid().cell_area() * row_sum(N, [&](std::size_t r) {
               double s = 0.0;
               for (std::size_t c = 0; c < N; ++c) s += xlogx(rho[r * N + c]);
               return s;
           });
}

double second_moment(const DensityField& field, std::size_t i, Point center) {
    const Grid2D& g = field.grid();
    const auto rho = field.species_values(i);
    const std::size_t N = g.cells_per_side();
    return g.cell_area() * row_sum(N, [&](std::size_t r) {
               const double dy = g.coordinate(r) - center.y;
               double s = 0.0;
               for (std::size_t c = 0; c < N; ++c) {
                   const double dx = g.coordinate(c) - center.x;
                   s += (dx * dx + dy * dy) * rho[r * N + c];
               }
               return s;
           });
}

double l1_distance(const DensityField& a, const DensityField& b, std::size_t i) {
    if (!(a.grid() == b.grid())) throw DomainError("l1_distance: grid mismatch");
    const auto x = a.species_values(i);
    const auto y = b.species_values(i);
    const std::size_t N = a.grid().cells_per_side();
    return a.grid().cell_area() * row_sum(N, [&](std::size_t r) {
               double s = 0.0;
               for (std::size_t c = 0; c < N; ++c) s += std::abs(x[r * N + c] - y[r * N + c]);
               return s;
           });
}

EntropyBound entropy_bound_check(const DensityField& field) {
    const std::size_t n = field.species();
    const std::size_t N = field.grid().cells_per_side();
    double lhs = 0.0;
    double rhs = 2.0 * static_cast<double>(n) / std::numbers::e;
    for (std::size_t i = 0; i < n; ++i) {
        const auto rho = field.species_values(i);
        lhs += field.grid().cell_area() * row_sum(N, [&](std::size_t r) {
                   double s = 0.0;
                   for (std::size_t c = 0; c < N; ++c) s += std::abs(xlogx(rho[r * N + c]));
                   return s;
               });
        rhs += entropy(field, i) + 2.0 * std::log(2.0 * std::numbers::pi) * field.mass(i) +
               2.0 * second_moment(field, i, Point{});
    }
    return {lhs, rhs, lhs <= rhs + 1e-8 * (1.0 + std::abs(rhs))};
}

double interpolate(const DensityField& field, std::size_t i, Point x) {
    const Grid2D& g = field.grid();
    const long N = static_cast<long>(g.cells_per_side());
    const double h = g.spacing();
    const double fx = (x.x + g.half_width()) / h - 0.5;
    const double fy = (x.y + g.half_width()) / h - 0.5;
    if (!(fx > -1.0 && fy > -1.0 && fx < static_cast<double>(N) && fy < static_cast<double>(N))) return 0.0;
    const long c0 = static_cast<long>(std::floor(fx));
    const long r0 = static_cast<long>(std::floor(fy));
    const double tx = fx - static_cast<double>(c0);
    const double ty = fy - static_cast<double>(r0);
    auto sample = [&](long r, long c) {
        if (r < 0 || c < 0 || r >= N || c >= N) return 0.0;
        return field.at(i, static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    };
    // Exact hits on cell centers skip the neighbours so grid-aligned maps are lossless.
    const double v00 = sample(r0, c0);
    const double v01 = tx == 0.0 ? 0.0 : sample(r0, c0 + 1);
    const double v10 = ty == 0.0 ? 0.0 : sample(r0 + 1, c0);
    const double v11 = (tx == 0.0 || ty == 0.0) ? 0.0 : sample(r0 + 1, c0 + 1);
    return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v01) + ty * ((1.0 - tx) * v10 + tx * v11);
}

DensityField dilate(const DensityField& field, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("dilation factor must be positive");
    if (scale == 1.0) return field;
    const double reach = scale * field.grid().half_width();
    for (std::size_t i = 0; i < field.species(); ++i) {
        const double lost = mass_where(field, i, [&](Point y) { return std::max(std::abs(y.x), std::abs(y.y)) > reach; });
        if (lost > 1e-8 * field.target_mass()[i])
            throw SupportOverflow("dilation by " + std::to_string(scale) + " pushes mass " + std::to_string(lost) +
                                  " of species " + std::to_string(i + 1) + " outside the domain");
    }
    return resample(field, [scale](Point x) { return scale * x; }, scale * scale);
}

DensityField translate(const DensityField& field, Point shift) {
    if (shift == Point{}) return field;
    const double L = field.grid().half_width();
    for (std::size_t i = 0; i < field.species(); ++i) {
        const double lost = mass_where(field, i, [&](Point y) {
            return std::abs(y.x + shift.x) > L || std::abs(y.y + shift.y) > L;
        });
        if (lost > 1e-8 * field.target_mass()[i])
            throw SupportOverflow("translation pushes mass " + std::to_string(lost) + " of species " +
                                  std::to_string(i + 1) + " outside the domain");
    }
    return resample(field, [shift](Point x) { return x - shift; }, 1.0);
}

namespace {

// Cell order by distance from the origin; ties broken by flat index.
std::vector<std::size_t> cells_by_radius(const Grid2D& g) {
    const std::size_t N = g.cells_per_side();
    std::vector<std::uint64_t> key(g.cell_count());
    for (std::size_t r = 0; r < N; ++r)
        for (std::size_t c = 0; c < N; ++c) {
            // Cell centers sit at odd multiples of h/2, so the squared radius is an exact integer in those units.
            const auto a = static_cast<std::int64_t>(2 * c + 1) - static_cast<std::int64_t>(N);
            const auto b = static_cast<std::int64_t>(2 * r + 1) - static_cast<std::int64_t>(N);
            key[r * N + c] = static_cast<std::uint64_t>(a * a + b * b);
        }
    std::vector<std::size_t> order(g.cell_count());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t p, std::size_t q) { return key[p] < key[q]; });
    return order;
}

}  // namespace

DensityField rearrange_radial(const DensityField& field, std::size_t i) {
    const Grid2D& g = field.grid();
    const auto src = field.species_values(i);
    std::vector<double> sorted(src.begin(), src.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto order = cells_by_radius(g);

    std::vector<double> values(field.values().begin(), field.values().end());
    double* block = values.data() + i * g.cell_count();
    for (std::size_t k = 0; k < order.size(); ++k) block[order[k]] = sorted[k];
    std::vector<double> target(field.target_mass().begin(), field.target_mass().end());
    return DensityField(g, field.species(), std::move(values), std::move(target));
}

DensityField rearrange_radial(const DensityField& field) {
    DensityField out = field;
    for (std::size_t i = 0; i < field.species(); ++i) out = rearrange_radial(out, i);
    return out;
}

}  // namespace ksv

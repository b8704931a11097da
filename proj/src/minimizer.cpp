#include "ksv/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ksv/errors.hpp"
#include "ksv/parallel.hpp"

namespace ksv {

namespace {

DensityField gibbs_map_weighted(const InteractionSpec& spec, const DensityField& field, const PotentialField& pot,
                                std::span<const double> alpha) {
    const std::size_t n = spec.size();
    if (field.species() != n || pot.species() != n) throw DomainError("gibbs_map: species count mismatch");
    const Grid2D& g = field.grid();
    const std::size_t cells = g.cell_count();
    std::vector<double> values(n * cells);
    for (std::size_t i = 0; i < n; ++i) {
        double* block = values.data() + i * cells;
        const Point v = spec.centers()[i];
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < cells; ++k) {
            double e = -alpha[i] * norm2(g.center(k) - v);
            for (std::size_t j = 0; j < n; ++j) e += spec.a(i, j) * pot.species_values(j)[k];
            if (!std::isfinite(e)) throw ConcentrationSignal("Gibbs exponent overflow for species " + std::to_string(i + 1));
            block[k] = e;
            peak = std::max(peak, e);
        }
        // shifting by the peak leaves the normalized density unchanged
        for (std::size_t k = 0; k < cells; ++k) block[k] = std::exp(block[k] - peak);
    }
    std::vector<double> target(spec.beta().begin(), spec.beta().end());
    return DensityField::normalized(g, n, std::move(values), std::move(target));
}

double total_residual(const DensityField& a, const DensityField& b) {
    double r = 0.0;
    for (std::size_t i = 0; i < a.species(); ++i) r += l1_distance(a, b, i);
    return r;
}

DensityField blend(const DensityField& from, const DensityField& to, double theta) {
    std::vector<double> values(from.values().size());
    const auto x = from.values();
    const auto y = to.values();
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = (1.0 - theta) * x[k] + theta * y[k];
    std::vector<double> target(from.target_mass().begin(), from.target_mass().end());
    return DensityField::normalized(from.grid(), from.species(), std::move(values), std::move(target));
}

IterationDiagnostics diagnose(const DensityField& field, const EnergyBreakdown& energy, double residual, int iteration,
                              double theta) {
    IterationDiagnostics d;
    d.iteration = iteration;
    d.energy = energy.total;
    d.entropy = energy.entropy_total();
    d.residual = residual;
    d.theta = theta;
    for (std::size_t i = 0; i < field.species(); ++i) {
        d.second_moments.push_back(second_moment(field, i, field.centroid(i)));
        d.max_density = std::max(d.max_density, field.max_density(i));
    }
    return d;
}

}  // namespace

DensityField gibbs_map(const InteractionSpec& spec, const DensityField& field, const PotentialField& pot) {
    const auto alpha = default_alpha(spec.size());
    return gibbs_map_weighted(spec, field, pot, alpha);
}

DensityField gibbs_map(const InteractionSpec& spec, const DensityField& field) {
    return gibbs_map(spec, field, newtonian_potential(field));
}

double residual(const InteractionSpec& spec, const DensityField& field) {
    return total_residual(gibbs_map(spec, field), field);
}

DensityField gaussian_tuple(const InteractionSpec& spec, const Grid2D& grid) {
    std::vector<double> beta(spec.beta().begin(), spec.beta().end());
    return DensityField::sampled(grid, beta, [&](std::size_t i, Point x) {
        return spec.beta()[i] / (2.0 * std::numbers::pi) * std::exp(-0.5 * norm2(x - spec.centers()[i]));
    });
}

ConcentrationThresholds concentration_thresholds(const InteractionSpec& spec, const Grid2D& grid) {
    // A grid-scale bubble carries a logarithmic tail, so its discrete second moment scales like h, not h^2.
    return {grid.spacing() * spec.total_mass(), 0.1 / grid.cell_area()};
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Minimizer: return "minimizer";
        case Verdict::Concentration: return "concentration";
        case Verdict::BudgetExhausted: return "budget-exhausted";
    }
    return "unknown";
}

MinimizeReport minimize(const InteractionSpec& spec, const DensityField& initial, const MinimizeOptions& options) {
    const auto kind = classify(spec).kind;
    if (kind != CriticalityClass::SubCritical && kind != CriticalityClass::Critical)
        throw DomainError("minimize requires a sub-critical or critical spec, got " + std::string(to_string(kind)));
    if (!(options.tol_fp > 0.0) || !(options.theta0 > 0.0 && options.theta0 <= 1.0) || !(options.theta_floor > 0.0))
        throw DomainError("minimize: tolerances and damping must be positive (theta0 <= 1)");
    const std::vector<double> alpha = options.alpha.value_or(default_alpha(spec.size()));
    if (alpha.size() != spec.size()) throw DomainError("minimize: one confinement weight per species required");

    const auto thresholds = concentration_thresholds(spec, initial.grid());
    const double tolerance = options.tol_fp * spec.total_mass();

    DensityField rho = initial;
    PotentialField pot = newtonian_potential(rho);
    EnergyBreakdown energy = free_energy(spec, rho, pot, alpha);

    MinimizeReport report{Verdict::BudgetExhausted, rho, {}, {}, energy, 0.0, 0};
    double theta = options.theta0;
    int it = 0;
    for (;; ++it) {
        std::optional<DensityField> target;
        try {
            target = gibbs_map_weighted(spec, rho, pot, alpha);
        } catch (const ConcentrationSignal&) {
            report.verdict = Verdict::Concentration;
            break;
        }
        const double r = total_residual(*target, rho);
        auto diag = diagnose(rho, energy, r, it, theta);
        report.energy_trace.push_back(energy.total);
        report.final_residual = r;
        report.diagnostics.push_back(std::move(diag));

        if (r <= tolerance) {
            report.verdict = Verdict::Minimizer;
            break;
        }
        if (it >= options.max_iterations) break;

        bool accepted = false;
        for (double t = theta; t >= options.theta_floor; t *= 0.5) {
            DensityField trial = blend(rho, *target, t);
            PotentialField trial_pot = newtonian_potential(trial);
            EnergyBreakdown trial_energy = free_energy(spec, trial, trial_pot, alpha);
            // equality up to round-off is accepted so the iteration can settle on the fixed point
            if (trial_energy.total <= energy.total + 1e-12 * (1.0 + std::abs(energy.total))) {
                rho = std::move(trial);
                pot = std::move(trial_pot);
                energy = std::move(trial_energy);
                theta = std::min(1.0, 2.0 * t);
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    // The verdict is judged on the terminal state: a fixed point or stalled descent
    // that has collapsed to the grid scale is the discrete image of concentration.
    if (!report.diagnostics.empty()) {
        const auto& last = report.diagnostics.back();
        const bool concentrated =
            *std::min_element(last.second_moments.begin(), last.second_moments.end()) < thresholds.second_moment &&
            last.max_density > thresholds.max_density;
        if (concentrated) report.verdict = Verdict::Concentration;
    }
    report.iterations = it;
    report.final_field = std::move(rho);
    report.final_energy = std::move(energy);
    return report;
}

}  // namespace ksv

#include "ksv/energy.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ksv/errors.hpp"

namespace ksv {

double EnergyBreakdown::entropy_total() const {
    return std::accumulate(entropy_terms.begin(), entropy_terms.end(), 0.0);
}

std::vector<double> default_alpha(std::size_t n) { return std::vector<double>(n, 0.5); }

EnergyBreakdown free_energy(const InteractionSpec& spec, const DensityField& field, const PotentialField& pot,
                            std::vector<double> alpha) {
    const std::size_t n = spec.size();
    if (field.species() != n) throw DomainError("field species count does not match the interaction spec");
    if (alpha.size() != n) throw DomainError("one confinement weight per species required");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(alpha[i] > 0.0)) throw DomainError("confinement weights must be positive");
        const double beta = spec.beta()[i];
        if (std::abs(field.mass(i) - beta) > 1e-8 * beta)
            throw DomainError("species " + std::to_string(i + 1) + " mass " + std::to_string(field.mass(i)) +
                              " does not match beta = " + std::to_string(beta));
    }

    const auto I = interaction_energy(field, pot);
    EnergyBreakdown e;
    e.alpha = std::move(alpha);
    e.entropy_terms.resize(n);
    e.confinement_terms.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        e.entropy_terms[i] = entropy(field, i);
        e.confinement_terms[i] = e.alpha[i] * second_moment(field, i, spec.centers()[i]);
        for (std::size_t j = 0; j < n; ++j)
            e.interaction_term += spec.a(i, j) * 0.5 * (I[i * n + j] + I[j * n + i]);
    }
    e.interaction_term /= 4.0 * std::numbers::pi;
    e.total = e.entropy_total() + e.interaction_term +
              std::accumulate(e.confinement_terms.begin(), e.confinement_terms.end(), 0.0);
    return e;
}

EnergyBreakdown free_energy(const InteractionSpec& spec, const DensityField& field, std::vector<double> alpha) {
    return free_energy(spec, field, newtonian_potential(field), std::move(alpha));
}

EnergyBreakdown free_energy(const InteractionSpec& spec, const DensityField& field) {
    return free_energy(spec, field, default_alpha(spec.size()));
}

IdentityCheck dilation_identity_check(const InteractionSpec& spec, const DensityField& field, double scale) {
    const InteractionSpec centered = spec.centered();
    const double before = free_energy(centered, field).total;
    if (scale == 1.0) return {before, before};
    const double lhs = free_energy(centered, dilate(field, scale)).total;
    const SubsetMask all = (SubsetMask{1} << spec.size()) - 1;
    double moments = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) moments += 0.5 * second_moment(field, i, Point{});
    const double rhs = before + lambda_subset(spec, all) / (4.0 * std::numbers::pi) * std::log(scale) +
                       (1.0 / (scale * scale) - 1.0) * moments;
    return {lhs, rhs};
}

double inequality_gap(const InteractionSpec& spec, double candidate_v_min, double f0_min) {
    return f0_min + weighted_drift_min(spec).value - candidate_v_min;
}

}  // namespace ksv

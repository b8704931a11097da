#pragma once

#include <vector>

#include "ksv/criticality.hpp"
#include "ksv/field.hpp"
#include "ksv/potential.hpp"

namespace ksv {

/// Terms of F_{v,alpha}(rho) = sum int rho_i ln rho_i
///                            + (1/4pi) sum a_ij int int rho_i ln|x-y| rho_j
///                            + sum alpha_i int |x - v_i|^2 rho_i.
struct EnergyBreakdown {
    std::vector<double> entropy_terms;
    double interaction_term = 0.0;
    std::vector<double> confinement_terms;
    double total = 0.0;
    std::vector<double> alpha;

    double entropy_total() const;
};

/// Confinement weights of the standard functional F_v (alpha_i = 1/2).
std::vector<double> default_alpha(std::size_t n);

EnergyBreakdown free_energy(const InteractionSpec& spec, const DensityField& field, std::vector<double> alpha);
EnergyBreakdown free_energy(const InteractionSpec& spec, const DensityField& field);
/// Same, reusing a potential already computed from `field`.
EnergyBreakdown free_energy(const InteractionSpec& spec, const DensityField& field, const PotentialField& pot,
                            std::vector<double> alpha);

struct IdentityCheck {
    double lhs;
    double rhs;
};

/// lhs = F_0(dilate(rho, R));
/// rhs = F_0(rho) + (Lambda_I/4pi) ln R + (1/R^2 - 1) sum (1/2) int |x|^2 rho_i.
IdentityCheck dilation_identity_check(const InteractionSpec& spec, const DensityField& field, double scale);

/// (f0_min + min_x sum beta_i/2 |x - v_i|^2) - candidate_v_min.
/// Negative values beyond the discretization budget contradict inf F_v <= inf F_0 + drift.
double inequality_gap(const InteractionSpec& spec, double candidate_v_min, double f0_min);

}  // namespace ksv

#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "ksv/criticality.hpp"
#include "ksv/energy.hpp"
#include "ksv/field.hpp"
#include "ksv/potential.hpp"

namespace ksv {

/// rho_i -> beta_i exp(sum_j a_ij u_j - |x - v_i|^2/2) / integral, with u from `pot`.
/// Throws ConcentrationSignal when the exponent is not finite.
DensityField gibbs_map(const InteractionSpec& spec, const DensityField& field, const PotentialField& pot);
DensityField gibbs_map(const InteractionSpec& spec, const DensityField& field);

/// sum_i ||G_i(rho) - rho_i||_{L1}.
double residual(const InteractionSpec& spec, const DensityField& field);

/// Shifted Gaussians (beta_i / 2pi) exp(-|x - v_i|^2 / 2), the exact A = 0 minimizer.
DensityField gaussian_tuple(const InteractionSpec& spec, const Grid2D& grid);

/// Concentration thresholds derived from the grid scale.
struct ConcentrationThresholds {
    double second_moment;  // h sum beta
    double max_density;    // 0.1 / h^2
};
ConcentrationThresholds concentration_thresholds(const InteractionSpec& spec, const Grid2D& grid);

enum class Verdict { Minimizer, Concentration, BudgetExhausted };
std::string_view to_string(Verdict v);

struct MinimizeOptions {
    double tol_fp = 1e-9;  // relative to sum beta
    int max_iterations = 20000;
    double theta0 = 0.5;
    double theta_floor = 1e-4;
    std::optional<std::vector<double>> alpha;  // confinement weights, default 1/2
};

struct IterationDiagnostics {
    int iteration = 0;
    double energy = 0.0;
    double entropy = 0.0;
    std::vector<double> second_moments;  // about each species' running centroid
    double residual = 0.0;
    double max_density = 0.0;
    double theta = 0.0;
};

struct MinimizeReport {
    Verdict verdict = Verdict::BudgetExhausted;
    DensityField final_field;
    std::vector<double> energy_trace;
    std::vector<IterationDiagnostics> diagnostics;
    EnergyBreakdown final_energy;
    double final_residual = 0.0;
    int iterations = 0;
};

/// Damped Gibbs fixed-point descent: rho <- (1 - theta) rho + theta G(rho), starting from
/// theta0, halved until the free energy does not increase and doubled (up to 1) after
/// each accepted step. Stops on a fixed point
/// (residual <= tol_fp sum beta), when no damped step decreases the energy, when the
/// budget runs out, or on exponent overflow. A terminal state below both concentration
/// thresholds is reported as concentration. Requires a sub-critical or critical spec.
MinimizeReport minimize(const InteractionSpec& spec, const DensityField& initial, const MinimizeOptions& options = {});

}  // namespace ksv

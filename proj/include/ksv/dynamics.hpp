#pragma once

#include <functional>
#include <vector>

#include "ksv/criticality.hpp"
#include "ksv/field.hpp"

namespace ksv {

struct DissipationSample {
    double time;
    double energy;       // F_v at `time`
    double dissipation;  // -(F_k - F_{k-1}) / (t_k - t_{k-1}); zero for the first sample
};

struct EvolutionState {
    DensityField field;
    double time = 0.0;
    double dt = 0.0;  // step requested for the next call to step(); 0 picks the admissible one
    std::vector<DissipationSample> dissipation_trace;
};

/// min(0.4 min(h^2/4, h / max|b|), 0.9 h^2 / max outflow coefficient), with b the face
/// drift velocity of the current field. The second bound keeps every update positive.
double admissible_dt(const InteractionSpec& spec, const DensityField& field);

/// One explicit finite-volume step of d_t rho_i = Lap rho_i - div(rho_i grad Phi_i) with
/// Phi_i = sum_j a_ij u_j - |x - v_i|^2/2. Face fluxes use the Scharfetter-Gummel
/// (exponentially fitted) form, so discrete Gibbs states are exact steady states.
/// Zero flux through the outer boundary. Throws CflViolation if state.dt exceeds
/// the admissible step.
EvolutionState step(const InteractionSpec& spec, const EvolutionState& state);

enum class EvolveOutcome { Completed, BlowUp };

struct EvolveOptions {
    std::size_t trace_samples = 200;
    double blow_up_factor = 100.0;  // abort once max density exceeds this multiple of 0.1/h^2
    /// Called with the field at every recorded trace sample.
    std::function<void(const DensityField&, const DissipationSample&)> on_sample;
};

struct EvolveResult {
    EvolveOutcome outcome = EvolveOutcome::Completed;
    EvolutionState state;
    std::size_t steps = 0;
    double max_density = 0.0;
};

/// Steps from `initial` up to t_end with the admissible time step, recording
/// (t, F_v, dissipation) every max(1, floor(t_end / dt / trace_samples)) steps.
EvolveResult evolve(const InteractionSpec& spec, const DensityField& initial, double t_end,
                    const EvolveOptions& options = {});

using DensitySampler = std::function<double(std::size_t species, Point x)>;

struct RescaledSnapshot {
    DensityField field;
    double rescaled_time;  // (1/2) ln 2t
};

/// rho_bar(y) = 2t rho(sqrt(2t) y), sampled on `grid` and normalized to `mass`.
RescaledSnapshot to_rescaled_frame(const DensitySampler& original, double t, const Grid2D& grid,
                                   std::vector<double> mass);

/// rho(x, t) = (2t)^{-1} rho_bar(x / sqrt(2t)), evaluated by bilinear interpolation.
DensitySampler to_original_frame(const DensityField& rescaled, double t);

}  // namespace ksv

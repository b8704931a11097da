#include "ksv/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ksv/energy.hpp"
#include "ksv/errors.hpp"
#include "ksv/potential.hpp"

namespace ksv {

namespace {

// Total drift potential Phi_i = sum_j a_ij u_j - |x - v_i|^2 / 2 at cell centers; the
// drift velocity is grad Phi_i and the steady states are rho_i proportional to exp(Phi_i).
std::vector<double> drift_potential(const InteractionSpec& spec, const PotentialField& pot, std::size_t i) {
    const Grid2D& g = pot.grid();
    const Point v = spec.centers()[i];
    std::vector<double> phi(g.cell_count());
    for (std::size_t k = 0; k < phi.size(); ++k) phi[k] = -0.5 * norm2(g.center(k) - v);
    for (std::size_t j = 0; j < spec.size(); ++j) {
        const double a = spec.a(i, j);
        if (a == 0.0) continue;
        const auto u = pot.species_values(j);
        for (std::size_t k = 0; k < phi.size(); ++k) phi[k] += a * u[k];
    }
    return phi;
}

// Bernoulli function z / (e^z - 1).
double bernoulli(double z) {
    if (std::abs(z) < 1e-6) return 1.0 - 0.5 * z;
    return z / std::expm1(z);
}

// Visits every interior face as (lower cell, upper cell) along x, then along y.
template <class Fn>
void for_faces(std::size_t N, Fn&& fn) {
    for (std::size_t r = 0; r < N; ++r)
        for (std::size_t c = 0; c + 1 < N; ++c) fn(r * N + c, r * N + c + 1);
    for (std::size_t r = 0; r + 1 < N; ++r)
        for (std::size_t c = 0; c < N; ++c) fn(r * N + c, (r + 1) * N + c);
}

// Scharfetter-Gummel coefficients for every species and interior face: the flux from
// lo to hi is (B(-dPhi) rho_lo - B(dPhi) rho_hi) / h.
struct FaceCoefficients {
    std::vector<double> forward;   // B(-dPhi)
    std::vector<double> backward;  // B(dPhi)
    double design_dt = 0.0;        // 0.4 min(h^2/4, h / max|b|)
    double positivity_dt = 0.0;    // 0.9 h^2 / max total outflow coefficient
    double admissible() const { return std::min(design_dt, positivity_dt); }
};

FaceCoefficients face_coefficients(const InteractionSpec& spec, const PotentialField& pot) {
    const Grid2D& g = pot.grid();
    const std::size_t N = g.cells_per_side();
    const double h = g.spacing();
    const std::size_t faces = 2 * N * (N - 1);
    FaceCoefficients fc;
    fc.forward.resize(spec.size() * faces);
    fc.backward.resize(spec.size() * faces);
    double vmax = 0.0;
    double outflow_max = 0.0;
    std::vector<double> outflow(g.cell_count());
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const auto phi = drift_potential(spec, pot, i);
        std::fill(outflow.begin(), outflow.end(), 0.0);
        std::size_t f = i * faces;
        for_faces(N, [&](std::size_t lo, std::size_t hi) {
            const double z = phi[hi] - phi[lo];
            vmax = std::max(vmax, std::abs(z) / h);
            fc.forward[f] = bernoulli(-z);
            fc.backward[f] = bernoulli(z);
            outflow[lo] += fc.forward[f];
            outflow[hi] += fc.backward[f];
            ++f;
        });
        for (double o : outflow) outflow_max = std::max(outflow_max, o);
    }
    double design = h * h / 4.0;
    if (vmax > 0.0) design = std::min(design, h / vmax);
    fc.design_dt = 0.4 * design;
    fc.positivity_dt = 0.9 * h * h / std::max(outflow_max, 1e-300);
    return fc;
}

EvolutionState advance(const EvolutionState& state, const FaceCoefficients& fc, double dt) {
    const DensityField& field = state.field;
    const Grid2D& g = field.grid();
    const std::size_t N = g.cells_per_side();
    const std::size_t cells = g.cell_count();
    const std::size_t faces = 2 * N * (N - 1);
    const double mu = dt / g.cell_area();

    std::vector<double> out(field.values().begin(), field.values().end());
    for (std::size_t i = 0; i < field.species(); ++i) {
        const auto rho = field.species_values(i);
        double* next = out.data() + i * cells;
        std::size_t f = i * faces;
        for_faces(N, [&](std::size_t lo, std::size_t hi) {
            const double flux = mu * (fc.forward[f] * rho[lo] - fc.backward[f] * rho[hi]);
            next[lo] -= flux;
            next[hi] += flux;
            ++f;
        });
        for (std::size_t k = 0; k < cells; ++k)
            if (next[k] < 0.0) next[k] = 0.0;  // round-off only; the step bound keeps updates positive
    }

    return EvolutionState{DensityField(g, field.species(), std::move(out),
                                       std::vector<double>(field.target_mass().begin(), field.target_mass().end())),
                          state.time + dt, state.dt, state.dissipation_trace};
}

}  // namespace

double admissible_dt(const InteractionSpec& spec, const DensityField& field) {
    return face_coefficients(spec, newtonian_potential(field)).admissible();
}

EvolutionState step(const InteractionSpec& spec, const EvolutionState& state) {
    if (state.field.species() != spec.size()) throw DomainError("step: species count mismatch");
    const PotentialField pot = newtonian_potential(state.field);
    const FaceCoefficients fc = face_coefficients(spec, pot);
    const double limit = fc.admissible();
    const double dt = state.dt > 0.0 ? state.dt : limit;
    if (dt > limit * (1.0 + 1e-12))
        throw CflViolation("time step " + std::to_string(dt) + " exceeds the admissible " + std::to_string(limit), limit);
    return advance(state, fc, dt);
}

EvolveResult evolve(const InteractionSpec& spec, const DensityField& initial, double t_end,
                    const EvolveOptions& options) {
    if (!(t_end >= 0.0)) throw DomainError("evolve: t_end must be nonnegative");
    const Grid2D& g = initial.grid();
    const double sentinel = options.blow_up_factor * 0.1 / g.cell_area();

    EvolveResult result{EvolveOutcome::Completed, EvolutionState{initial, 0.0, 0.0, {}}, 0, 0.0};
    EvolutionState& state = result.state;

    PotentialField pot = newtonian_potential(state.field);
    const double dt0 = face_coefficients(spec, pot).admissible();
    const auto samples = static_cast<double>(std::max<std::size_t>(1, options.trace_samples));
    const std::size_t cadence = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(t_end / dt0 / samples)));

    auto record = [&](const PotentialField& p) {
        const double F = free_energy(spec, state.field, p, default_alpha(spec.size())).total;
        double rate = 0.0;
        if (!state.dissipation_trace.empty()) {
            const auto& last = state.dissipation_trace.back();
            if (state.time > last.time) rate = -(F - last.energy) / (state.time - last.time);
        }
        state.dissipation_trace.push_back({state.time, F, rate});
        if (options.on_sample) options.on_sample(state.field, state.dissipation_trace.back());
    };
    auto peak = [&] {
        double m = 0.0;
        for (std::size_t i = 0; i < spec.size(); ++i) m = std::max(m, state.field.max_density(i));
        return m;
    };

    record(pot);
    result.max_density = peak();
    while (state.time < t_end) {
        const FaceCoefficients fc = face_coefficients(spec, pot);
        const double dt = std::min(fc.admissible(), t_end - state.time);
        auto trace = std::move(state.dissipation_trace);
        state = advance(EvolutionState{state.field, state.time, dt, {}}, fc, dt);
        state.dissipation_trace = std::move(trace);
        state.dt = dt;
        if (t_end - state.time < 1e-12 * std::max(1.0, t_end)) state.time = t_end;
        ++result.steps;
        pot = newtonian_potential(state.field);
        result.max_density = peak();
        if (result.max_density > sentinel) {
            record(pot);
            result.outcome = EvolveOutcome::BlowUp;
            return result;
        }
        if (result.steps % cadence == 0 || state.time >= t_end) record(pot);
    }
    return result;
}

RescaledSnapshot to_rescaled_frame(const DensitySampler& original, double t, const Grid2D& grid,
                                   std::vector<double> mass) {
    if (!(t > 0.0)) throw DomainError("self-similar transform needs t > 0");
    const double scale = std::sqrt(2.0 * t);
    auto field = DensityField::sampled(grid, std::move(mass), [&](std::size_t i, Point y) {
        return 2.0 * t * original(i, scale * y);
    });
    return {std::move(field), 0.5 * std::log(2.0 * t)};
}

DensitySampler to_original_frame(const DensityField& rescaled, double t) {
    if (!(t > 0.0)) throw DomainError("self-similar transform needs t > 0");
    const double scale = std::sqrt(2.0 * t);
    return [field = rescaled, scale, t](std::size_t i, Point x) {
        return interpolate(field, i, (1.0 / scale) * x) / (2.0 * t);
    };
}

}  // namespace ksv

#pragma once

#include <span>
#include <vector>

#include "ksv/criticality.hpp"

namespace ksv {

struct RadialOptions {
    double s_min = -12.0;
    double s_max = 3.0;
    std::size_t points = 4096;
    double ode_rtol = 1e-10;
    double mass_rtol = 1e-13;  // shooting target |w_i(s_max) - beta_i| <= mass_rtol * beta_i
    int max_newton_iterations = 60;
};

/// Cumulative masses w_i(s) = m_i(e^s) of a radial solution on a uniform grid in s = ln r.
struct RadialProfile {
    double s_min = 0.0;
    double s_max = 0.0;
    std::vector<double> w;       // species-major, n x points
    std::vector<double> dw;      // w_i'(s)
    std::vector<double> log_center_density;  // ln rho_i(0)
    std::size_t species = 0;
    std::size_t points = 0;
    int newton_iterations = 0;

    double step() const { return (s_max - s_min) / static_cast<double>(points - 1); }
    double s(std::size_t k) const { return s_min + static_cast<double>(k) * step(); }
    std::span<const double> mass(std::size_t i) const { return std::span<const double>(w).subspan(i * points, points); }
    std::span<const double> mass_slope(std::size_t i) const {
        return std::span<const double>(dw).subspan(i * points, points);
    }

    /// rho_i(r) = w_i'(ln r) / (2 pi r^2), interpolated in s; center value below s_min.
    double density(std::size_t i, double r) const;
    /// m_i(r) = w_i(ln r), interpolated in s.
    double cumulative_mass(std::size_t i, double r) const;
};

/// Integrates w_i'' = w_i' [2 - (1/2pi) sum_j a_ij w_j - e^{2s}] from the regular
/// origin with center densities exp(c_i); w_i ~ pi e^{2s + c_i} as s -> -inf.
RadialProfile integrate_radial(const InteractionSpec& spec, std::span<const double> log_center_density,
                               const RadialOptions& options = {});

/// Shoots on ln rho_i(0) until w_i(s_max) = beta_i (damped Newton, finite-difference Jacobian).
/// Requires every v_i = 0 and a sub-critical beta; throws DomainError otherwise and
/// ConvergenceError when the shooting stalls.
RadialProfile solve_radial(const InteractionSpec& spec, const RadialOptions& options = {});

/// max_i max_k |w_i'' - w_i' [2 - (1/2pi) sum a_ij w_j - e^{2s}]| / max |w'|, with w''
/// from fourth-order differences of the stored slopes.
double ode_residual(const RadialProfile& profile, const InteractionSpec& spec);

struct MassBalance {
    double lhs;  // Lambda_I(beta) / 4pi
    double rhs;  // sum_i int e^{2s} w_i'(s) ds
};

MassBalance mass_balance(const RadialProfile& profile, std::span<const double> coupling,
                         std::span<const double> beta);
MassBalance mass_balance(const RadialProfile& profile, const InteractionSpec& spec);

/// (beta_i - w_i(s_max)) e^{2 s_max} per species.
std::vector<double> asymptotics_check(const RadialProfile& profile, const InteractionSpec& spec);

}  // namespace ksv

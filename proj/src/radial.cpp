#include "ksv/radial.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "ksv/errors.hpp"

namespace ksv {

namespace {

using State = std::vector<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// State layout: [w_0..w_{n-1}, y_0..y_{n-1}] with y_i = ln w_i'.
// The log-slope form keeps the relative error control meaningful over the
// many decades w' spans between the origin and the far field.
struct CumulativeMassSystem {
    std::span<const double> coupling;
    std::size_t n;

    void operator()(const State& x, State& dxds, double s) const {
        const double confinement = std::exp(2.0 * s);
        for (std::size_t i = 0; i < n; ++i) {
            double pull = 0.0;
            for (std::size_t j = 0; j < n; ++j) pull += coupling[i * n + j] * x[j];
            dxds[i] = std::exp(x[n + i]);
            dxds[n + i] = 2.0 - pull / kTwoPi - confinement;
        }
    }
};

double interpolate_uniform(std::span<const double> values, double s_min, double step, double s) {
    const double f = (s - s_min) / step;
    const auto last = values.size() - 1;
    if (f <= 0.0) return values.front();
    if (f >= static_cast<double>(last)) return values.back();
    const auto k = static_cast<std::size_t>(f);
    const double t = f - static_cast<double>(k);
    return (1.0 - t) * values[k] + t * values[k + 1];
}

std::vector<double> log_mass_mismatch(const RadialProfile& p, std::span<const double> beta) {
    std::vector<double> g(p.species);
    for (std::size_t i = 0; i < p.species; ++i) g[i] = std::log(p.mass(i).back() / beta[i]);
    return g;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Solves J dx = b in place by Gaussian elimination with partial pivoting.
bool solve_linear(std::vector<double> J, std::vector<double>& b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(J[r * n + col]) > std::abs(J[piv * n + col])) piv = r;
        if (J[piv * n + col] == 0.0) return false;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(J[col * n + c], J[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = J[r * n + col] / J[col * n + col];
            for (std::size_t c = col; c < n; ++c) J[r * n + c] -= f * J[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= J[r * n + c] * b[c];
        b[r] = s / J[r * n + r];
    }
    return true;
}

}  // namespace

double RadialProfile::density(std::size_t i, double r) const {
    if (r <= 0.0 || std::log(r) <= s_min) return std::exp(log_center_density[i]);
    const double s = std::log(r);
    if (s >= s_max) return 0.0;
    return interpolate_uniform(mass_slope(i), s_min, step(), s) / (kTwoPi * r * r);
}

double RadialProfile::cumulative_mass(std::size_t i, double r) const {
    if (r <= 0.0) return 0.0;
    const double s = std::log(r);
    if (s <= s_min) return std::numbers::pi * r * r * std::exp(log_center_density[i]);
    return interpolate_uniform(mass(i), s_min, step(), s);
}

RadialProfile integrate_radial(const InteractionSpec& spec, std::span<const double> log_center_density,
                               const RadialOptions& options) {
    namespace odeint = boost::numeric::odeint;
    const std::size_t n = spec.size();
    if (log_center_density.size() != n) throw DomainError("one center density per species required");
    if (options.points < 8 || !(options.s_max > options.s_min)) throw DomainError("invalid radial grid");

    RadialProfile p;
    p.s_min = options.s_min;
    p.s_max = options.s_max;
    p.species = n;
    p.points = options.points;
    p.log_center_density.assign(log_center_density.begin(), log_center_density.end());
    p.w.assign(n * p.points, 0.0);
    p.dw.assign(n * p.points, 0.0);

    State x(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::numbers::pi * std::exp(2.0 * p.s_min + log_center_density[i]);
        x[n + i] = std::log(kTwoPi) + 2.0 * p.s_min + log_center_density[i];
    }
    std::vector<double> times(p.points);
    for (std::size_t k = 0; k < p.points; ++k) times[k] = p.s(k);

    const CumulativeMassSystem system{spec.coupling(), n};
    auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(1e-300, options.ode_rtol);
    std::size_t k = 0;
    odeint::integrate_times(stepper, system, x, times.begin(), times.end(), p.step() / 4.0,
                            [&](const State& state, double) {
                                for (std::size_t i = 0; i < n; ++i) {
                                    p.w[i * p.points + k] = state[i];
                                    p.dw[i * p.points + k] = std::exp(state[n + i]);
                                }
                                ++k;
                            });
    return p;
}

RadialProfile solve_radial(const InteractionSpec& spec, const RadialOptions& options) {
    for (const Point& v : spec.centers())
        if (!(v == Point{})) throw DomainError("solve_radial requires every drift center at the origin");
    const auto verdict = classify(spec);
    if (verdict.kind != CriticalityClass::SubCritical)
        throw DomainError("solve_radial requires a sub-critical spec, got " + std::string(to_string(verdict.kind)));

    const std::size_t n = spec.size();
    const auto beta = spec.beta();
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = std::log(beta[i] / kTwoPi);  // decoupled Gaussian

    RadialProfile p = integrate_radial(spec, c, options);
    auto g = log_mass_mismatch(p, beta);
    double err = max_abs(g);
    constexpr double kFdStep = 1e-6;
    for (int it = 0; it < options.max_newton_iterations; ++it) {
        if (err <= options.mass_rtol) {
            p.newton_iterations = it;
            return p;
        }
        std::vector<double> J(n * n);
        for (std::size_t j = 0; j < n; ++j) {
            auto cj = c;
            cj[j] += kFdStep;
            const auto gj = log_mass_mismatch(integrate_radial(spec, cj, options), beta);
            for (std::size_t i = 0; i < n; ++i) J[i * n + j] = (gj[i] - g[i]) / kFdStep;
        }
        std::vector<double> delta(g.begin(), g.end());
        if (!solve_linear(J, delta)) throw ConvergenceError("singular shooting Jacobian", err);

        bool improved = false;
        for (double damping = 1.0; damping >= 1.0 / 1024.0; damping *= 0.5) {
            std::vector<double> trial(n);
            for (std::size_t i = 0; i < n; ++i) trial[i] = c[i] - damping * std::clamp(delta[i], -5.0, 5.0);
            RadialProfile q = integrate_radial(spec, trial, options);
            auto gq = log_mass_mismatch(q, beta);
            const double eq = max_abs(gq);
            if (std::isfinite(eq) && eq < err) {
                c = std::move(trial);
                p = std::move(q);
                g = std::move(gq);
                err = eq;
                improved = true;
                break;
            }
        }
        if (!improved) {
            if (err <= 1e3 * options.mass_rtol) {
                // Round-off floor of the finite-difference Newton step.
                p.newton_iterations = it;
                return p;
            }
            throw ConvergenceError("radial shooting stalled; log mass mismatch " + std::to_string(err), err);
        }
    }
    if (err <= options.mass_rtol) {
        p.newton_iterations = options.max_newton_iterations;
        return p;
    }
    throw ConvergenceError("radial shooting exceeded its iteration budget; log mass mismatch " + std::to_string(err),
                           err);
}

double ode_residual(const RadialProfile& profile, const InteractionSpec& spec) {
    const std::size_t n = profile.species;
    const std::size_t M = profile.points;
    const double ds = profile.step();
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, max_abs(profile.mass_slope(i)));
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto dw = profile.mass_slope(i);
        for (std::size_t k = 3; k + 3 < M; ++k) {
            // sixth-order central difference
            const double d2 = (dw[k + 3] - 9.0 * dw[k + 2] + 45.0 * dw[k + 1] - 45.0 * dw[k - 1] + 9.0 * dw[k - 2] -
                               dw[k - 3]) /
                              (60.0 * ds);
            double pull = 0.0;
            for (std::size_t j = 0; j < n; ++j) pull += spec.a(i, j) * profile.mass(j)[k];
            const double rhs = dw[k] * (2.0 - pull / kTwoPi - std::exp(2.0 * profile.s(k)));
            worst = std::max(worst, std::abs(d2 - rhs));
        }
    }
    return scale > 0.0 ? worst / scale : worst;
}

MassBalance mass_balance(const RadialProfile& profile, std::span<const double> coupling,
                         std::span<const double> beta) {
    const std::size_t n = beta.size();
    if (coupling.size() != n * n || profile.species != n) throw DomainError("mass_balance: dimension mismatch");
    double lhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pull = 0.0;
        for (std::size_t j = 0; j < n; ++j) pull += coupling[i * n + j] * beta[j];
        lhs += beta[i] * (8.0 * std::numbers::pi - pull);
    }
    lhs /= 4.0 * std::numbers::pi;

    // composite trapezoid on the uniform s grid
    double rhs = 0.0;
    const double ds = profile.step();
    for (std::size_t i = 0; i < n; ++i) {
        const auto dw = profile.mass_slope(i);
        double sum = 0.0;
        for (std::size_t k = 0; k < profile.points; ++k) {
            const double weight = (k == 0 || k + 1 == profile.points) ? 0.5 : 1.0;
            sum += weight * std::exp(2.0 * profile.s(k)) * dw[k];
        }
        rhs += sum * ds;
    }
    return {lhs, rhs};
}

MassBalance mass_balance(const RadialProfile& profile, const InteractionSpec& spec) {
    return mass_balance(profile, spec.coupling(), spec.beta());
}

std::vector<double> asymptotics_check(const RadialProfile& profile, const InteractionSpec& spec) {
    std::vector<double> out(profile.species);
    const double r2 = std::exp(2.0 * profile.s_max);
    for (std::size_t i = 0; i < profile.species; ++i) out[i] = (spec.beta()[i] - profile.mass(i).back()) * r2;
    return out;
}

}  // namespace ksv

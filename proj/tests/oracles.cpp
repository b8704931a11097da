#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "ksv/potential.hpp"

namespace oracle {

double lambda(const std::vector<double>& A, const std::vector<double>& beta, std::uint32_t mask) {
    const std::size_t n = beta.size();
    std::vector<double> b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1u) b[i] = beta[i];
    double linear = 0.0;
    double quadratic = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        linear += b[i];
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += A[i * n + j] * b[j];
        quadratic += b[i] * row;
    }
    return 8.0 * kPi * linear - quadratic;
}

Kind classify(const std::vector<double>& A, const std::vector<double>& beta) {
    const std::size_t n = beta.size();
    double total = 0.0;
    for (double b : beta) total += b;
    const double tol = 1e-12 * std::max(1.0, std::abs(8.0 * kPi * total));
    const std::uint32_t full = (1u << n) - 1u;
    auto lam = [&](std::uint32_t m) { return m == 0 ? 0.0 : lambda(A, beta, m); };

    bool any_negative = false;
    bool proper_saturated = false;
    bool full_saturated = false;
    bool saturated_fails = false;
    for (std::uint32_t m = 1; m <= full; ++m) {
        const double l = lam(m);
        if (l < -tol) any_negative = true;
        if (std::abs(l) <= tol) {
            (m == full ? full_saturated : proper_saturated) = true;
            for (std::size_t i = 0; i < n; ++i)
                if ((m >> i & 1u) && !(A[i * n + i] + lam(m & ~(1u << i)) > 0.0)) saturated_fails = true;
        }
    }
    if (any_negative || saturated_fails) return Kind::Inadmissible;
    if (!proper_saturated && !full_saturated) return Kind::SubCritical;
    if (!proper_saturated && full_saturated) return Kind::Critical;
    return Kind::DegenerateAdmissible;
}

std::vector<double> direct_potential(const ksv::DensityField& field, std::size_t species) {
    const auto& g = field.grid();
    const std::size_t cells = g.cell_count();
    const double h = g.spacing();
    const double self = std::log(ksv::self_cell_log_factor() * h);
    const auto rho = field.species_values(species);
    std::vector<double> u(cells, 0.0);
    for (std::size_t k = 0; k < cells; ++k) {
        const ksv::Point x = g.center(k);
        double s = 0.0;
        for (std::size_t m = 0; m < cells; ++m) {
            const double kernel = m == k ? self : 0.5 * std::log(ksv::norm2(x - g.center(m)));
            s += kernel * rho[m];
        }
        u[k] = -s * h * h / (2.0 * kPi);
    }
    return u;
}

namespace {

// 20-point Gauss-Legendre nodes/weights on [-1, 1] (positive half).
constexpr std::array<double, 10> kNodes{0.0765265211334973, 0.2277858511416451, 0.3737060887154195,
                                        0.5108670019508271, 0.6360536807265150, 0.7463319064601508,
                                        0.8391169718222188, 0.9122344282513259, 0.9639719272779138,
                                        0.9931285991850949};
constexpr std::array<double, 10> kWeights{0.1527533871307258, 0.1491729864726037, 0.1420961093183820,
                                          0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
                                          0.0832767415767048, 0.0626720483341091, 0.0406014298003869,
                                          0.0176140071391521};

template <class F>
double gauss(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t k = 0; k < kNodes.size(); ++k)
        s += kWeights[k] * (f(mid - half * kNodes[k]) + f(mid + half * kNodes[k]));
    return s * half;
}

// Panels [0, 2^-40], ..., [1/4, 1/2], [1/2, 1] scaled to [0, len].
template <class F>
double graded(F&& f, double len) {
    double s = 0.0;
    double hi = len;
    for (int k = 0; k < 40; ++k) {
        const double lo = 0.5 * hi;
        s += gauss(f, lo, hi);
        hi = lo;
    }
    return s;
}

}  // namespace

double mean_log_unit_cell() {
    // By symmetry, 4 times the integral over [0, 1/2]^2.
    const double quarter = graded([](double x) { return graded([x](double y) { return 0.5 * std::log(x * x + y * y); }, 0.5); }, 0.5);
    return 4.0 * quarter;
}

ksv::DensityField disk_field(const ksv::Grid2D& grid, double radius, double density, int sub) {
    const double h = grid.spacing();
    std::vector<double> values(grid.cell_count());
    for (std::size_t k = 0; k < grid.cell_count(); ++k) {
        const ksv::Point c = grid.center(k);
        int inside = 0;
        for (int a = 0; a < sub; ++a)
            for (int b = 0; b < sub; ++b) {
                const ksv::Point p{c.x + ((a + 0.5) / sub - 0.5) * h, c.y + ((b + 0.5) / sub - 0.5) * h};
                if (ksv::norm2(p) <= radius * radius) ++inside;
            }
        values[k] = density * inside / double(sub * sub);
    }
    double mass = 0.0;
    for (double v : values) mass += v;
    mass *= grid.cell_area();
    return ksv::DensityField(grid, 1, std::move(values), {mass});
}

double gaussian(double beta, ksv::Point c, ksv::Point x) {
    return beta / (2.0 * kPi) * std::exp(-0.5 * ksv::norm2(x - c));
}

ksv::DensityField random_mixture(std::mt19937_64& rng, const ksv::Grid2D& grid, const std::vector<double>& beta,
                                 const std::vector<ksv::Point>& origin, double spread, double sigma_min,
                                 double sigma_max) {
    std::uniform_int_distribution<int> count(1, 4);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> width(sigma_min, sigma_max);
    std::uniform_real_distribution<double> weight(0.1, 1.0);
    std::vector<std::vector<Bump>> bumps(beta.size());
    for (std::size_t i = 0; i < beta.size(); ++i) {
        const int m = count(rng);
        for (int k = 0; k < m; ++k) {
            const double dx = unit(rng) * spread;
            const double dy = unit(rng) * spread;
            const double s = width(rng);
            bumps[i].push_back({origin[i] + ksv::Point{dx, dy}, s, weight(rng)});
        }
    }
    return ksv::DensityField::sampled(grid, beta, [&](std::size_t i, ksv::Point x) {
        double v = 0.0;
        for (const Bump& b : bumps[i])
            v += b.weight * std::exp(-ksv::norm2(x - b.center) / (2.0 * b.sigma * b.sigma)) / (b.sigma * b.sigma);
        return v;
    });
}

std::vector<double> random_coupling(std::mt19937_64& rng, std::size_t n, double amax, double zero_prob) {
    std::uniform_real_distribution<double> entry(0.0, amax);
    std::bernoulli_distribution zero(zero_prob);
    std::vector<double> A(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double a = zero(rng) ? 0.0 : entry(rng);
            A[i * n + j] = a;
            A[j * n + i] = a;
        }
    return A;
}

double admissible_scale(const std::vector<double>& A, const std::vector<double>& beta) {
    const std::size_t n = beta.size();
    double t = std::numeric_limits<double>::infinity();
    for (std::uint32_t m = 1; m < (1u << n); ++m) {
        double linear = 0.0;
        double quadratic = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(m >> i & 1u)) continue;
            linear += beta[i];
            for (std::size_t j = 0; j < n; ++j)
                if (m >> j & 1u) quadratic += beta[i] * A[i * n + j] * beta[j];
        }
        if (quadratic > 0.0) t = std::min(t, 8.0 * kPi * linear / quadratic);
    }
    return t;
}

}  // namespace oracle

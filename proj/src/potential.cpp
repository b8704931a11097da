#include "ksv/potential.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>

#include "ksv/errors.hpp"
#include "ksv/parallel.hpp"

namespace ksv {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

template <class T>
struct FftwFree {
    void operator()(T* p) const noexcept { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree<T>>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t count) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * count));
    if (!p) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

// Linear (non-circular) convolution with the log kernel on an N x N grid,
// embedded in a 2N x 2N periodic grid.
class LogKernelConvolver {
public:
    explicit LogKernelConvolver(const Grid2D& grid)
        : n_(grid.cells_per_side()), m_(2 * n_), spectrum_size_(m_ * (m_ / 2 + 1)) {
        auto real = fftw_buffer<double>(m_ * m_);
        auto spec = fftw_buffer<fftw_complex>(spectrum_size_);
        {
            std::lock_guard lock(planner_mutex());
            const int m = static_cast<int>(m_);
            forward_ = fftw_plan_dft_r2c_2d(m, m, real.get(), spec.get(), FFTW_ESTIMATE);
            backward_ = fftw_plan_dft_c2r_2d(m, m, spec.get(), real.get(), FFTW_ESTIMATE);
        }
        const double h = grid.spacing();
        const double self = std::log(self_cell_log_factor() * h);
        for (std::size_t r = 0; r < m_; ++r) {
            const double dr = r < n_ ? double(r) : double(r) - double(m_);
            for (std::size_t c = 0; c < m_; ++c) {
                const double dc = c < n_ ? double(c) : double(c) - double(m_);
                double k = 0.0;
                if (r == 0 && c == 0)
                    k = self;
                else if (r != n_ && c != n_)
                    k = std::log(h * std::hypot(dr, dc));
                real[r * m_ + c] = k;
            }
        }
        kernel_ = fftw_buffer<fftw_complex>(spectrum_size_);
        fftw_execute_dft_r2c(forward_, real.get(), kernel_.get());
    }

    ~LogKernelConvolver() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }

    LogKernelConvolver(const LogKernelConvolver&) = delete;
    LogKernelConvolver& operator=(const LogKernelConvolver&) = delete;

    // out[k] = scale * sum_m K(x_k - x_m) in[m]
    void apply(std::span<const double> in, std::span<double> out, double scale) const {
        auto real = fftw_buffer<double>(m_ * m_);
        auto spec = fftw_buffer<fftw_complex>(spectrum_size_);
        std::memset(real.get(), 0, sizeof(double) * m_ * m_);
        for (std::size_t r = 0; r < n_; ++r)
            std::memcpy(real.get() + r * m_, in.data() + r * n_, sizeof(double) * n_);
        fftw_execute_dft_r2c(forward_, real.get(), spec.get());
        for (std::size_t k = 0; k < spectrum_size_; ++k) {
            const double ar = spec[k][0], ai = spec[k][1];
            const double br = kernel_[k][0], bi = kernel_[k][1];
            spec[k][0] = ar * br - ai * bi;
            spec[k][1] = ar * bi + ai * br;
        }
        fftw_execute_dft_c2r(backward_, spec.get(), real.get());
        const double norm = scale / static_cast<double>(m_ * m_);
        for (std::size_t r = 0; r < n_; ++r)
            for (std::size_t c = 0; c < n_; ++c) out[r * n_ + c] = norm * real[r * m_ + c];
    }

private:
    std::size_t n_;
    std::size_t m_;
    std::size_t spectrum_size_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
    FftwBuffer<fftw_complex> kernel_;
};

std::shared_ptr<const LogKernelConvolver> convolver_for(const Grid2D& grid) {
    static std::mutex cache_mutex;
    static std::map<std::pair<std::size_t, double>, std::shared_ptr<const LogKernelConvolver>> cache;
    std::lock_guard lock(cache_mutex);
    auto& slot = cache[{grid.cells_per_side(), grid.half_width()}];
    if (!slot) slot = std::make_shared<const LogKernelConvolver>(grid);
    return slot;
}

}  // namespace

double self_cell_log_factor() {
    // mean of ln|y| over [-1/2, 1/2]^2 is pi/4 - 3/2 - ln(2)/2
    return std::exp(std::numbers::pi / 4.0 - 1.5 - 0.5 * std::numbers::ln2);
}

PotentialField::PotentialField(Grid2D grid, std::size_t species, std::vector<double> values,
                               std::vector<double> source_mass)
    : grid_(grid), species_(species), values_(std::move(values)), source_(std::move(source_mass)) {
    if (values_.size() != species_ * grid_.cell_count() || source_.size() != species_)
        throw DomainError("potential field dimensions do not match grid and species count");
    for (double v : values_)
        if (!std::isfinite(v)) throw DomainError("potential is not finite");
}

std::span<const double> PotentialField::species_values(std::size_t i) const {
    if (i >= species_) throw DomainError("species index out of range");
    return std::span<const double>(values_).subspan(i * grid_.cell_count(), grid_.cell_count());
}

PotentialField newtonian_potential(const DensityField& field) {
    const Grid2D& g = field.grid();
    const auto conv = convolver_for(g);
    std::vector<double> values(field.values().size());
    const double scale = -g.cell_area() / (2.0 * std::numbers::pi);
    std::vector<double> source(field.species());
    for (std::size_t i = 0; i < field.species(); ++i) {
        conv->apply(field.species_values(i), std::span<double>(values).subspan(i * g.cell_count(), g.cell_count()),
                    scale);
        source[i] = field.mass(i);
    }
    return PotentialField(g, field.species(), std::move(values), std::move(source));
}

double potential_at(const DensityField& field, std::size_t i, Point x) {
    const Grid2D& g = field.grid();
    const std::size_t N = g.cells_per_side();
    const auto rho = field.species_values(i);
    const double self = std::log(self_cell_log_factor() * g.spacing());
    const double sum = row_sum(N, [&](std::size_t r) {
        double s = 0.0;
        const double dy = x.y - g.coordinate(r);
        for (std::size_t c = 0; c < N; ++c) {
            const double dx = x.x - g.coordinate(c);
            const double d2 = dx * dx + dy * dy;
            s += rho[r * N + c] * (d2 == 0.0 ? self : 0.5 * std::log(d2));
        }
        return s;
    });
    return -g.cell_area() / (2.0 * std::numbers::pi) * sum;
}

double far_field_error(const PotentialField& pot, std::size_t i, double radius) {
    const Grid2D& g = pot.grid();
    const double outer = 0.95 * g.half_width();
    const auto u = pot.species_values(i);
    const double beta = pot.source_mass()[i];
    double worst = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
        const double r = norm(g.center(k));
        if (r < radius || r > outer) continue;
        any = true;
        worst = std::max(worst, std::abs(u[k] + beta / (2.0 * std::numbers::pi) * std::log(r)));
    }
    if (!any) throw DomainError("far_field_error: no cells with " + std::to_string(radius) + " <= |x| <= 0.95 L");
    return worst;
}

std::vector<double> interaction_energy(const DensityField& field, const PotentialField& pot) {
    if (!(field.grid() == pot.grid()) || field.species() != pot.species())
        throw DomainError("interaction_energy: field and potential live on different grids");
    const std::size_t n = field.species();
    const std::size_t N = field.grid().cells_per_side();
    const double factor = -2.0 * std::numbers::pi * field.grid().cell_area();
    std::vector<double> I(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto rho = field.species_values(i);
        for (std::size_t j = 0; j < n; ++j) {
            const auto u = pot.species_values(j);
            I[i * n + j] = factor * row_sum(N, [&](std::size_t r) {
                               double s = 0.0;
                               for (std::size_t c = 0; c < N; ++c) s += rho[r * N + c] * u[r * N + c];
                               return s;
                           });
        }
    }
    return I;
}

}  // namespace ksv

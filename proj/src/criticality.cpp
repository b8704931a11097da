#include "ksv/criticality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "ksv/errors.hpp"

namespace ksv {

namespace {

constexpr double kEightPi = 8.0 * std::numbers::pi;

}  // namespace

InteractionSpec::InteractionSpec(std::vector<double> coupling, std::vector<double> beta,
                                 std::vector<Point> centers)
    : coupling_(std::move(coupling)), beta_(std::move(beta)), centers_(std::move(centers)) {
    const std::size_t n = beta_.size();
    if (n == 0) throw DomainError("interaction spec needs at least one species");
    if (coupling_.size() != n * n)
        throw DomainError("coupling matrix must have n*n = " + std::to_string(n * n) + " entries, got " +
                          std::to_string(coupling_.size()));
    if (centers_.size() != n)
        throw DomainError("expected " + std::to_string(n) + " drift centers, got " + std::to_string(centers_.size()));
    for (std::size_t i = 0; i < n; ++i) {
        if (!(beta_[i] > 0.0) || !std::isfinite(beta_[i]))
            throw DomainError("mass beta_" + std::to_string(i + 1) + " must be positive and finite");
        if (!std::isfinite(centers_[i].x) || !std::isfinite(centers_[i].y))
            throw DomainError("drift center " + std::to_string(i + 1) + " is not finite");
        for (std::size_t j = 0; j < n; ++j) {
            const double aij = coupling_[i * n + j];
            if (!std::isfinite(aij) || aij < 0.0)
                throw DomainError("coupling a_" + std::to_string(i + 1) + std::to_string(j + 1) +
                                  " must be finite and nonnegative");
            if (aij != coupling_[j * n + i])
                throw DomainError("coupling matrix is not symmetric at (" + std::to_string(i + 1) + "," +
                                  std::to_string(j + 1) + ")");
        }
    }
}

double InteractionSpec::total_mass() const noexcept {
    return std::accumulate(beta_.begin(), beta_.end(), 0.0);
}

InteractionSpec InteractionSpec::with_centers(std::vector<Point> centers) const {
    return InteractionSpec(coupling_, beta_, std::move(centers));
}

InteractionSpec InteractionSpec::with_beta(std::vector<double> beta) const {
    return InteractionSpec(coupling_, std::move(beta), centers_);
}

InteractionSpec InteractionSpec::centered() const {
    return with_centers(std::vector<Point>(size(), Point{}));
}

std::string_view to_string(CriticalityClass c) {
    switch (c) {
        case CriticalityClass::SubCritical: return "sub-critical";
        case CriticalityClass::Critical: return "critical";
        case CriticalityClass::DegenerateAdmissible: return "degenerate-admissible";
        case CriticalityClass::Inadmissible: return "inadmissible";
    }
    return "unknown";
}

double lambda_subset(const InteractionSpec& spec, SubsetMask subset) {
    const std::size_t n = spec.size();
    if (subset == 0) throw DomainError("Lambda_J requires a nonempty subset");
    if (n < 32 && (subset >> n) != 0) throw DomainError("subset mask refers to species beyond n");
    const auto beta = spec.beta();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(subset & (SubsetMask{1} << i))) continue;
        double pull = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (subset & (SubsetMask{1} << j)) pull += spec.a(i, j) * beta[j];
        total += beta[i] * (kEightPi - pull);
    }
    return total;
}

double saturation_tolerance(const InteractionSpec& spec) {
    return 1e-12 * std::max(1.0, std::abs(kEightPi * spec.total_mass()));
}

CriticalityVerdict classify(const InteractionSpec& spec) {
    const std::size_t n = spec.size();
    if (n > kMaxClassifySpecies)
        throw DomainError("classify enumerates 2^n subsets; refusing n = " + std::to_string(n) + " > " +
                          std::to_string(kMaxClassifySpecies));

    CriticalityVerdict verdict{CriticalityClass::SubCritical, {}, {}};
    const SubsetMask full = (SubsetMask{1} << n) - 1;
    for (SubsetMask J = 1; J <= full; ++J) verdict.lambda_table.emplace(J, lambda_subset(spec, J));

    const double tol = saturation_tolerance(spec);
    auto saturated = [&](SubsetMask J) { return J == 0 || std::abs(verdict.lambda_table.at(J)) <= tol; };
    auto lambda_or_zero = [&](SubsetMask J) { return saturated(J) ? 0.0 : verdict.lambda_table.at(J); };

    std::vector<SubsetMask> negative;
    std::vector<SubsetMask> saturated_sets;
    std::vector<SubsetMask> unresolved;
    for (const auto& [J, value] : verdict.lambda_table) {
        if (saturated(J)) {
            saturated_sets.push_back(J);
            for (std::size_t i = 0; i < n; ++i) {
                const SubsetMask bit = SubsetMask{1} << i;
                if ((J & bit) && !(spec.a(i, i) + lambda_or_zero(J & ~bit) > 0.0)) {
                    unresolved.push_back(J);
                    break;
                }
            }
        } else if (value < 0.0) {
            negative.push_back(J);
        }
    }

    if (!negative.empty() || !unresolved.empty()) {
        verdict.kind = CriticalityClass::Inadmissible;
        verdict.witnesses = negative;
        verdict.witnesses.insert(verdict.witnesses.end(), unresolved.begin(), unresolved.end());
        std::sort(verdict.witnesses.begin(), verdict.witnesses.end());
    } else if (saturated_sets.empty()) {
        verdict.kind = CriticalityClass::SubCritical;
    } else if (saturated_sets.size() == 1 && saturated_sets.front() == full) {
        verdict.kind = CriticalityClass::Critical;
        verdict.witnesses = saturated_sets;
    } else {
        verdict.kind = CriticalityClass::DegenerateAdmissible;
        verdict.witnesses = saturated_sets;
    }
    return verdict;
}

double critical_mass_scale(const InteractionSpec& spec) {
    const auto beta = spec.beta();
    double quad = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i)
        for (std::size_t j = 0; j < spec.size(); ++j) quad += beta[i] * spec.a(i, j) * beta[j];
    if (quad == 0.0) return std::numeric_limits<double>::infinity();
    return kEightPi * spec.total_mass() / quad;
}

CentroidResult drift_variance(std::span<const Point> centers) {
    if (centers.empty()) return {0.0, Point{}};
    Point c{};
    for (const Point& p : centers) c = c + p;
    c = (1.0 / static_cast<double>(centers.size())) * c;
    double value = 0.0;
    for (const Point& p : centers) value += norm2(p - c);
    return {value, c};
}

CentroidResult weighted_drift_min(const InteractionSpec& spec) {
    const auto beta = spec.beta();
    const auto v = spec.centers();
    Point c{};
    for (std::size_t i = 0; i < spec.size(); ++i) c = c + beta[i] * v[i];
    c = (1.0 / spec.total_mass()) * c;
    double value = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) value += 0.5 * beta[i] * norm2(c - v[i]);
    return {value, c};
}

}  // namespace ksv

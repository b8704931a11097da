#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "ksv/geometry.hpp"

namespace ksv {

/// Coupling matrix, masses and drift centers of an n-population system.
///
/// The coupling matrix is symmetric and entrywise nonnegative, masses are
/// strictly positive. Symmetry is checked with exact equality: callers that
/// assemble A from noisy data must symmetrize it themselves.
class InteractionSpec {
public:
    InteractionSpec(std::vector<double> coupling, std::vector<double> beta, std::vector<Point> centers);

    std::size_t size() const noexcept { return beta_.size(); }
    double a(std::size_t i, std::size_t j) const { return coupling_[i * size() + j]; }
    std::span<const double> coupling() const noexcept { return coupling_; }
    std::span<const double> beta() const noexcept { return beta_; }
    std::span<const Point> centers() const noexcept { return centers_; }
    double total_mass() const noexcept;

    /// Same couplings and masses, drift centers replaced.
    InteractionSpec with_centers(std::vector<Point> centers) const;
    /// Same couplings and centers, masses replaced.
    InteractionSpec with_beta(std::vector<double> beta) const;
    /// All drift centers moved to the origin (the F_0 configuration).
    InteractionSpec centered() const;

private:
    std::vector<double> coupling_;
    std::vector<double> beta_;
    std::vector<Point> centers_;
};

/// Bitmask over species indices; bit i set means species i is in the subset.
using SubsetMask = std::uint32_t;

enum class CriticalityClass { SubCritical, Critical, DegenerateAdmissible, Inadmissible };

std::string_view to_string(CriticalityClass c);

struct CriticalityVerdict {
    CriticalityClass kind;
    std::map<SubsetMask, double> lambda_table;  // all 2^n - 1 nonempty subsets
    std::vector<SubsetMask> witnesses;          // failing (inadmissible) or saturated subsets
};

inline constexpr std::size_t kMaxClassifySpecies = 20;

/// Lambda_J(beta) = sum_{i in J} beta_i (8 pi - sum_{j in J} a_ij beta_j).
/// Throws DomainError for an empty subset or bits beyond n.
double lambda_subset(const InteractionSpec& spec, SubsetMask subset);

/// Relative tolerance used to decide Lambda_J == 0.
double saturation_tolerance(const InteractionSpec& spec);

CriticalityVerdict classify(const InteractionSpec& spec);

/// Scale t* > 0 at which Lambda_I(t* beta) = 0 along the ray t -> t beta.
/// Infinite when beta^T A beta = 0 (no interaction along the ray).
double critical_mass_scale(const InteractionSpec& spec);

struct CentroidResult {
    double value;
    Point minimizer;
};

/// min_x sum_i |v_i - x|^2, attained at the arithmetic centroid.
CentroidResult drift_variance(std::span<const Point> centers);

/// min_x sum_i (beta_i/2)|x - v_i|^2, attained at the beta-weighted centroid.
CentroidResult weighted_drift_min(const InteractionSpec& spec);

}  // namespace ksv

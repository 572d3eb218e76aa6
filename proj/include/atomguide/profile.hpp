#pragma once

#include <utility>
#include <variant>

#include <Eigen/Dense>

namespace atomguide {

/// Uniform intensity over [0, length] of the guide axis.
struct FlatProfile {
    double length = 5e-3;
    bool operator==(const FlatProfile&) const = default;
};

/// Intensity factor ramping linearly from start_scale at s = 0 to end_scale
/// at s = length. Zero outside the ramp.
struct GradientProfile {
    double length = 2.5e-3;
    double start_scale = 0.5;
    double end_scale = 1.0;
    bool operator==(const GradientProfile&) const = default;
};

/// Gaussian intensity envelope exp(-(s - center_s)^2 / (2 sigma^2)).
struct GaussianProfile {
    double center_s = 0.0;
    double sigma = 1e-3;
    bool operator==(const GaussianProfile&) const = default;
};

using LongitudinalProfile = std::variant<FlatProfile, GradientProfile, GaussianProfile>;

/// Profile factor in [0, 1] at longitudinal coordinate s.
double profile_factor(const LongitudinalProfile& profile, double s);

/// d(profile_factor)/ds. The step edges of Flat and Gradient profiles
/// contribute no force.
double profile_slope(const LongitudinalProfile& profile, double s);

/// Element-wise profile factor for an array of longitudinal coordinates.
Eigen::ArrayXXd profile_factor(const LongitudinalProfile& profile, const Eigen::ArrayXXd& s);

/// Axis interval [s_begin, s_end] that the guide occupies. Gaussian profiles
/// are truncated at three standard deviations.
std::pair<double, double> profile_support(const LongitudinalProfile& profile);

/// True when the profile parameters satisfy their invariants.
bool profile_is_valid(const LongitudinalProfile& profile);

}  // namespace atomguide

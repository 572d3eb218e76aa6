#include "atomguide/profile.hpp"

#include <cmath>

#include "atomguide/types.hpp"

namespace atomguide {

using detail::overloaded;

double profile_factor(const LongitudinalProfile& profile, double s) {
    return std::visit(
        overloaded{
            [s](const FlatProfile& p) { return (s >= 0.0 && s <= p.length) ? 1.0 : 0.0; },
            [s](const GradientProfile& p) {
                if (s < 0.0 || s > p.length) return 0.0;
                return p.start_scale + (p.end_scale - p.start_scale) * (s / p.length);
            },
            [s](const GaussianProfile& p) {
                const double u = (s - p.center_s) / p.sigma;
                return std::exp(-0.5 * u * u);
            },
        },
        profile);
}

double profile_slope(const LongitudinalProfile& profile, double s) {
    return std::visit(
        overloaded{
            [](const FlatProfile&) { return 0.0; },
            [s](const GradientProfile& p) {
                if (s < 0.0 || s > p.length) return 0.0;
                return (p.end_scale - p.start_scale) / p.length;
            },
            [s](const GaussianProfile& p) {
                const double u = (s - p.center_s) / p.sigma;
                return -u / p.sigma * std::exp(-0.5 * u * u);
            },
        },
        profile);
}

Eigen::ArrayXXd profile_factor(const LongitudinalProfile& profile, const Eigen::ArrayXXd& s) {
    return std::visit(
        overloaded{
            [&s](const FlatProfile& p) -> Eigen::ArrayXXd {
                return ((s >= 0.0) && (s <= p.length)).cast<double>();
            },
            [&s](const GradientProfile& p) -> Eigen::ArrayXXd {
                const Eigen::ArrayXXd inside = ((s >= 0.0) && (s <= p.length)).cast<double>();
                return inside * (p.start_scale + (p.end_scale - p.start_scale) * (s / p.length));
            },
            [&s](const GaussianProfile& p) -> Eigen::ArrayXXd {
                return (-0.5 * ((s - p.center_s) / p.sigma).square()).exp();
            },
        },
        profile);
}

std::pair<double, double> profile_support(const LongitudinalProfile& profile) {
    return std::visit(
        overloaded{
            [](const FlatProfile& p) { return std::pair{0.0, p.length}; },
            [](const GradientProfile& p) { return std::pair{0.0, p.length}; },
            [](const GaussianProfile& p) {
                return std::pair{p.center_s - 3.0 * p.sigma, p.center_s + 3.0 * p.sigma};
            },
        },
        profile);
}

bool profile_is_valid(const LongitudinalProfile& profile) {
    return std::visit(
        overloaded{
            [](const FlatProfile& p) { return p.length > 0.0; },
            [](const GradientProfile& p) {
                return p.length > 0.0 && p.start_scale > 0.0 && p.start_scale <= 1.0 &&
                       p.end_scale > 0.0 && p.end_scale <= 1.0;
            },
            [](const GaussianProfile& p) { return p.sigma > 0.0; },
        },
        profile);
}

}  // namespace atomguide

#pragma once

#include <numbers>

namespace atomguide {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double planck = 6.62607015e-34;
inline constexpr double k_boltzmann = 1.380649e-23;
inline constexpr double c_light = 299792458.0;
}  // namespace constants

/// Atomic species data. Frequencies are ordinary (Hz), not angular.
struct SpeciesConstants {
    double mass = 1.40999e-25;
    double lambda_d2 = 780.241e-9;
    double gamma = 6.0666e6;
    double hfs_split = 3.0357e9;
    double hbar = constants::hbar;
    double k_boltzmann = constants::k_boltzmann;
    double c_light = constants::c_light;

    double gamma_angular() const { return 2.0 * std::numbers::pi * gamma; }
    double omega_d2() const { return 2.0 * std::numbers::pi * c_light / lambda_d2; }
    double wavenumber() const { return 2.0 * std::numbers::pi / lambda_d2; }
    double recoil_velocity() const { return hbar * wavenumber() / mass; }

    bool operator==(const SpeciesConstants&) const = default;
};

inline SpeciesConstants rubidium85() { return {}; }

/// Energy of `microkelvin` expressed as k_B * T.
constexpr double from_microkelvin(double microkelvin) {
    return microkelvin * 1e-6 * constants::k_boltzmann;
}

constexpr double to_microkelvin(double joule) {
    return joule / constants::k_boltzmann * 1e6;
}

constexpr double degrees(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace atomguide

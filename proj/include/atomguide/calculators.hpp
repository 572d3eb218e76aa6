#pragma once

#include "atomguide/species.hpp"

namespace atomguide {

/// Detuning (Hz) of light offset by delta_lambda from wavelength lambda:
/// delta_nu = -c * delta_lambda / lambda^2. Positive delta_lambda is red.
double detuning_from_wavelength_offset(double delta_lambda, double lambda,
                                       double c_light = constants::c_light);

/// Peak depth (J, signed) of a line focus with Gaussian transverse waist w0
/// and uniform intensity over line_length, in the two-level rotating-wave
/// approximation. Negative for red detuning.
double depth_from_power(double power, double waist, double line_length, double delta_nu,
                        const SpeciesConstants& species = rubidium85());

/// Harmonic radial oscillation frequency (Hz) at the bottom of a Gaussian
/// transverse well of the given depth.
double radial_trap_frequency(double depth, double waist, double mass);

double rayleigh_range(double waist, double lambda);

/// Bose-Einstein mean occupation of a harmonic mode.
double mean_occupation(double temperature, double frequency);

/// Classical rms position spread in a harmonic well.
double thermal_rms_spread(double temperature, double frequency, double mass);

/// Photon-scattering rate (1/s) for a beam of |depth| at detuning delta_nu.
double scattering_rate(double depth, double delta_nu, const SpeciesConstants& species = rubidium85());

/// One-axis thermal velocity spread sqrt(k_B T / m).
double thermal_velocity(double temperature, double mass);

}  // namespace atomguide

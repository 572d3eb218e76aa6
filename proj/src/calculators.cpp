#include "atomguide/calculators.hpp"

#include <cmath>
#include <numbers>

#include "atomguide/types.hpp"

namespace atomguide {

using std::numbers::pi;

double detuning_from_wavelength_offset(double delta_lambda, double lambda, double c_light) {
    if (!(lambda > 0)) throw ParameterError("wavelength must be > 0");
    return -c_light * delta_lambda / (lambda * lambda);
}

double depth_from_power(double power, double waist, double line_length, double delta_nu,
                        const SpeciesConstants& species) {
    if (!(waist > 0)) throw ParameterError("waist must be > 0");
    if (!(line_length > 0)) throw ParameterError("line length must be > 0");
    if (!(power >= 0)) throw ParameterError("power must be >= 0");
    if (delta_nu == 0.0) throw ParameterError("detuning must be nonzero");
    // Transverse integral of exp(-2x^2/w^2) is w*sqrt(pi/2).
    const double peak_intensity = power / (std::sqrt(pi / 2.0) * waist * line_length);
    const double c = species.c_light;
    const double omega0 = species.omega_d2();
    const double delta = 2.0 * pi * delta_nu;
    return 3.0 * pi * c * c * species.gamma_angular() /
           (2.0 * omega0 * omega0 * omega0 * delta) * peak_intensity;
}

double radial_trap_frequency(double depth, double waist, double mass) {
    if (!(depth >= 0)) throw ParameterError("depth must be >= 0");
    if (!(waist > 0) || !(mass > 0)) throw ParameterError("waist and mass must be > 0");
    return std::sqrt(4.0 * depth / (mass * waist * waist)) / (2.0 * pi);
}

double rayleigh_range(double waist, double lambda) {
    if (!(waist > 0) || !(lambda > 0)) throw ParameterError("waist and wavelength must be > 0");
    return pi * waist * waist / lambda;
}

double mean_occupation(double temperature, double frequency) {
    if (!(frequency > 0)) throw ParameterError("frequency must be > 0");
    if (!(temperature >= 0)) throw ParameterError("temperature must be >= 0");
    if (temperature == 0.0) return 0.0;
    const double x = constants::planck * frequency / (constants::k_boltzmann * temperature);
    return 1.0 / std::expm1(x);
}

double thermal_rms_spread(double temperature, double frequency, double mass) {
    if (!(temperature >= 0) || !(frequency > 0) || !(mass > 0))
        throw ParameterError("temperature, frequency and mass must be positive");
    const double omega = 2.0 * pi * frequency;
    return std::sqrt(constants::k_boltzmann * temperature / (mass * omega * omega));
}

double scattering_rate(double depth, double delta_nu, const SpeciesConstants& species) {
    if (delta_nu == 0.0) throw ParameterError("detuning must be nonzero");
    return species.gamma / std::abs(delta_nu) * std::abs(depth) / species.hbar;
}

double thermal_velocity(double temperature, double mass) {
    if (!(temperature >= 0) || !(mass > 0)) throw ParameterError("invalid temperature or mass");
    return std::sqrt(constants::k_boltzmann * temperature / mass);
}

}  // namespace atomguide

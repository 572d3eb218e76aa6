#pragma once

#include "atomguide/scene.hpp"

namespace atomguide {

enum class HyperfineState { F2, F3 };

struct PotentialSample {
    double energy = 0.0;
    Vec2 force = Vec2::Zero();
    double scatter_rate = 0.0;
};

/// Signed depth of a guide for an atom in `state`; negative is attractive.
/// Selective guides scale with 1/detuning relative to the F=2 reference.
double guide_amplitude(const GuideSpec& guide, HyperfineState state);

/// Signed detuning (Hz) the atom sees in the light of a guide.
double guide_detuning(const GuideSpec& guide, HyperfineState state);

double spot_amplitude(const SpotBeam& spot, HyperfineState state);
double spot_detuning(const SpotBeam& spot, HyperfineState state);

/// Potential energy (J) at a point; sum of all guides and spots.
/// Throws DomainError outside scene.domain.
double potential_at(const Scene& scene, const Vec2& point, HyperfineState state);

/// Force -grad U (N), from the closed-form derivatives.
Vec2 force_at(const Scene& scene, const Vec2& point, HyperfineState state);

/// Spontaneous photon-scattering rate (1/s) summed over all beams.
double scatter_rate_at(const Scene& scene, const Vec2& point, HyperfineState state);

/// Energy, force and scattering rate together.
PotentialSample sample_at(const Scene& scene, const Vec2& point, HyperfineState state);

// Unchecked kernels used by the integrators: no domain test.

double landscape_energy(const Scene& scene, const Vec2& point, HyperfineState state) noexcept;
Vec2 landscape_force(const Scene& scene, const Vec2& point, HyperfineState state) noexcept;
/// Energy and force in one pass over the beams.
std::pair<double, Vec2> landscape_energy_force(const Scene& scene, const Vec2& point,
                                               HyperfineState state) noexcept;
double landscape_scatter_rate(const Scene& scene, const Vec2& point, HyperfineState state) noexcept;

/// Potential on a tensor grid: result(iy, ix) = U(xs[ix], ys[iy]).
Eigen::ArrayXXd sample_potential_grid(const Scene& scene, const Eigen::ArrayXd& xs,
                                      const Eigen::ArrayXd& ys, HyperfineState state);

}  // namespace atomguide

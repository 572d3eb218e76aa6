#pragma once

#include <optional>
#include <vector>

#include "atomguide/quantum.hpp"
#include "atomguide/scene.hpp"

namespace atomguide {

/// Longitudinal profiles for the two guides of a crossed pair. Each guide is
/// placed so that the crossing sits at the midpoint of its profile support.
struct GuidePairProfiles {
    LongitudinalProfile a;
    LongitudinalProfile b;
};

inline constexpr double kDefaultSplitAngle = 42.0 * 3.14159265358979323846 / 180.0;

/// Two guides crossing at the origin with relative angle `angle`; guide "A"
/// points along -angle/2 (tag H), guide "B" along +angle/2 (tag V), so the
/// bisector of the outputs is the +x axis.
Scene make_x_splitter(double angle, double depth_a, double depth_b, double waist = 7e-6,
                      std::optional<GuidePairProfiles> profiles = std::nullopt,
                      double margin = 100e-6);

struct MachZehnderLayout {
    Scene scene;
    /// Area of one parallelogram cell, pitch^2 / sin(angle).
    double cell_area = 0.0;
    std::vector<Intersection> intersections;
    /// Bounding box of all guide segments.
    Bounds structure;
};

/// Two families of parallel guides at relative angle `angle`. Family A
/// (tag H) runs along -angle/2 and is stacked towards +y, family B (tag V)
/// along +angle/2 stacked towards -y, so A1 and B1 cross at the origin and
/// the last guides of both families close the loop on the +x axis. Guides
/// extend `lead` beyond their outermost crossings.
MachZehnderLayout make_mach_zehnder(double pitch, double angle, double depth_a, double depth_b,
                                    double waist = 7e-6, double lead = 150e-6,
                                    int guides_per_family = 2, double margin = 100e-6);

/// Crossed guides whose Gaussian longitudinal envelopes peak at the crossing.
Scene make_michelson(double sigma_long, double depth_a, double depth_b,
                     double angle = kDefaultSplitAngle, double waist = 7e-6,
                     double margin = 100e-6);

/// Scaled-down Mach-Zehnder loop for wave propagation. Zero-valued fields
/// select the derived defaults noted on each.
struct MiniatureMzParams {
    double angle = 20.0 * 3.14159265358979323846 / 180.0;
    double pitch = 3e-6;
    double waist = 0.6e-6;
    /// Packet speed along the bisector; 0 selects two recoil velocities.
    double speed = 0.0;
    /// Guide depth; 0 selects a quarter of the packet kinetic energy.
    double depth = 0.0;
    double spot_waist = 1.5e-6;
    /// Largest phase-shifter phase of the scan, estimated as depth * tau / hbar.
    double max_phase = 2.0 * 3.14159265358979323846;
    int points = 7;
    int nx = 1024;
    int ny = 1024;
    /// 0 selects lambda_dB / 8 at the packet speed.
    double spacing = 0.0;
    /// 0 selects 1.6 transit times from the input to the output crossing.
    double duration = 0.0;
    /// 0 selects 0.09 rad of potential phase per step at the deepest point.
    double dt = 0.0;
    Vec2 sigma = Vec2(1e-6, 0.3e-6);
    double absorber_fraction = 0.1;
    int workers = 1;

    bool operator==(const MiniatureMzParams&) const = default;
};

struct MiniatureMz {
    FringeTemplate fringe;
    PacketConfig packet;
    /// Phase-shifter depths of the scan (J).
    std::vector<double> depths;
    /// Transit time through the phase shifter, waist * sqrt(pi/2) / speed.
    double transit_time = 0.0;
    /// Input and output crossings of the loop.
    Vec2 input = Vec2::Zero();
    Vec2 output = Vec2::Zero();
};

/// The packet starts at the input crossing moving along the bisector. The
/// phase shifter sits halfway between the upper corner and the output
/// crossing; the outputs are the half-planes above and below the output
/// crossing.
MiniatureMz make_miniature_mz(const MiniatureMzParams& params,
                              const SpeciesConstants& species = rubidium85());

/// Estimated phase (rad) of a phase shifter of the given depth.
double phase_estimate(const MiniatureMz& mz, double depth, double hbar = constants::hbar);

}  // namespace atomguide

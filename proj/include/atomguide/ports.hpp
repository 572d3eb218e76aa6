#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "atomguide/dynamics.hpp"

namespace atomguide {

/// Half-strip aligned with a guide arm: points p with
/// (p - start).dot(direction) >= 0 and |perpendicular offset| <= half_width.
struct PortDefinition {
    std::string name;
    Vec2 start = Vec2::Zero();
    Vec2 direction = Vec2::UnitX();
    double half_width = 28e-6;
};

struct PortCounts {
    std::vector<std::size_t> counts;
    /// Alive atoms outside every port strip.
    std::size_t unassigned = 0;
    /// Atoms no longer alive.
    std::size_t lost = 0;

    std::size_t assigned() const;
    /// counts[i] / assigned(); zero when nothing is assigned.
    std::vector<double> fractions() const;
};

/// Each alive atom goes to the port strip whose axis is nearest; ties go to
/// the lower index.
PortCounts assign_ports(std::span<const Atom> atoms, std::span<const PortDefinition> ports);

/// Arm ports of every guide that takes part in a crossing: one beyond its
/// last crossing along +axis and, if `both_directions`, one before its first
/// crossing along -axis. Strips start 4 waists from the crossing and are
/// 4 waists wide on each side.
std::vector<PortDefinition> arm_ports(const Scene& scene, bool both_directions = false);

}  // namespace atomguide

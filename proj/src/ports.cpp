#include "atomguide/ports.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace atomguide {

std::size_t PortCounts::assigned() const {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    return total;
}

std::vector<double> PortCounts::fractions() const {
    const double total = static_cast<double>(assigned());
    std::vector<double> out(counts.size(), 0.0);
    if (total == 0) return out;
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) / total;
    return out;
}

PortCounts assign_ports(std::span<const Atom> atoms, std::span<const PortDefinition> ports) {
    if (ports.empty()) throw ParameterError("assign_ports needs at least one port");
    PortCounts result;
    result.counts.assign(ports.size(), 0);
    for (const auto& atom : atoms) {
        if (!atom.alive) {
            ++result.lost;
            continue;
        }
        std::size_t best = ports.size();
        double best_distance = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < ports.size(); ++i) {
            const auto& port = ports[i];
            const Vec2 rel = atom.position - port.start;
            const Vec2 dir = port.direction.normalized();
            if (rel.dot(dir) < 0) continue;
            const double perp = std::abs(rel.dot(left_normal(dir)));
            if (perp > port.half_width) continue;
            if (perp < best_distance) {
                best_distance = perp;
                best = i;
            }
        }
        if (best == ports.size())
            ++result.unassigned;
        else
            ++result.counts[best];
    }
    return result;
}

std::vector<PortDefinition> arm_ports(const Scene& scene, bool both_directions) {
    const auto crossings = find_intersections(scene);
    std::vector<PortDefinition> out;
    for (std::size_t k = 0; k < scene.guides.size(); ++k) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& x : crossings) {
            if (x.guide_a == k) lo = std::min(lo, x.s_a), hi = std::max(hi, x.s_a);
            if (x.guide_b == k) lo = std::min(lo, x.s_b), hi = std::max(hi, x.s_b);
        }
        if (!std::isfinite(lo)) continue;
        const GuideSpec& g = scene.guides[k];
        const double offset = 4.0 * g.waist;
        out.push_back({g.id + "+", g.point_at(hi + offset), g.axis(), offset});
        if (both_directions) out.push_back({g.id + "-", g.point_at(lo - offset), -g.axis(), offset});
    }
    return out;
}

}  // namespace atomguide

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "atomguide/profile.hpp"
#include "atomguide/species.hpp"
#include "atomguide/types.hpp"

namespace atomguide {

enum class Polarization { H, V };

/// Far-detuned guide light; the potential is the same for both hyperfine
/// states. delta_nu < 0 is red (attractive).
struct FarDetuned {
    double delta_nu = -500e9;
    bool operator==(const FarDetuned&) const = default;
};

/// Light close enough to resonance that the two ground hyperfine states see
/// different detunings. peak_depth refers to the F=2 state.
struct StateSelective {
    double delta_f2 = -1020e6;
    double delta_f3 = 2020e6;
    bool operator==(const StateSelective&) const = default;
};

using DetuningClass = std::variant<FarDetuned, StateSelective>;

/// One line-focus waveguide lying in the simulation plane.
struct GuideSpec {
    std::string id;
    Vec2 origin = Vec2::Zero();
    double angle = 0.0;
    double waist = 7e-6;
    double peak_depth = 0.0;
    LongitudinalProfile profile = FlatProfile{};
    Polarization polarization = Polarization::H;
    DetuningClass detuning = FarDetuned{};

    Vec2 axis() const { return direction(angle); }
    Vec2 normal() const { return left_normal(axis()); }
    Vec2 point_at(double s) const { return origin + s * axis(); }
    /// End points of the occupied axis segment.
    std::pair<Vec2, Vec2> segment() const;

    bool operator==(const GuideSpec&) const = default;
};

/// Round auxiliary beam focused in the plane. Depths are signed: negative is
/// attractive.
struct SpotBeam {
    std::string id;
    Vec2 center = Vec2::Zero();
    double waist = 10e-6;
    double depth_f2 = 0.0;
    double depth_f3 = 0.0;
    double delta_f2 = -1020e6;
    double delta_f3 = 2020e6;

    bool operator==(const SpotBeam&) const = default;
};

/// Spot whose F=3 depth follows from the F=2 depth by the detuning ratio.
SpotBeam make_state_selective_spot(std::string id, const Vec2& center, double waist,
                                   double depth_f2, double delta_f2 = -1020e6,
                                   double delta_f3 = 2020e6);

struct Bounds {
    Vec2 min = Vec2::Zero();
    Vec2 max = Vec2::Zero();

    bool contains(const Vec2& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
    Vec2 center() const { return 0.5 * (min + max); }
    Vec2 size() const { return max - min; }
    double area() const { return size().prod(); }
    Bounds expanded(double margin) const {
        return {(min.array() - margin).matrix(), (max.array() + margin).matrix()};
    }

    bool operator==(const Bounds&) const = default;
};

struct Scene {
    SpeciesConstants species;
    std::vector<GuideSpec> guides;
    std::vector<SpotBeam> spots;
    Bounds domain;

    std::optional<std::size_t> find_guide(const std::string& id) const;
    std::optional<std::size_t> find_spot(const std::string& id) const;

    bool operator==(const Scene&) const = default;
};

/// Bounding box of all guide segments and spot centers.
Bounds footprint(const Scene& scene);

/// Crossing of two guide axes within both supports.
struct Intersection {
    Vec2 point;
    std::size_t guide_a;
    std::size_t guide_b;
    double s_a;
    double s_b;
};

std::vector<Intersection> find_intersections(const Scene& scene);

struct Violation {
    enum class Kind { Invariant, OutOfDomain, Overlap, Detuning };
    Kind kind;
    std::string message;
};

/// Empty iff every type invariant holds and no two guides with the same
/// polarization tag overlap.
std::vector<Violation> validate_scene(const Scene& scene);

}  // namespace atomguide

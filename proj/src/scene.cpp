#include "atomguide/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace atomguide {

namespace {

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
    const double d1 = cross(b1 - b0, a0 - b0);
    const double d2 = cross(b1 - b0, a1 - b0);
    const double d3 = cross(a1 - a0, b0 - a0);
    const double d4 = cross(a1 - a0, b1 - a0);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

double segment_distance(const std::pair<Vec2, Vec2>& a, const std::pair<Vec2, Vec2>& b) {
    if (segments_intersect(a.first, a.second, b.first, b.second)) return 0.0;
    return std::min({point_segment_distance(a.first, b.first, b.second),
                     point_segment_distance(a.second, b.first, b.second),
                     point_segment_distance(b.first, a.first, a.second),
                     point_segment_distance(b.second, a.first, a.second)});
}

bool contains_with_tolerance(const Bounds& bounds, const Vec2& p) {
    constexpr double tol = 1e-12;
    return bounds.expanded(tol).contains(p);
}

const char* tag_name(Polarization p) { return p == Polarization::H ? "H" : "V"; }

}  // namespace

std::pair<Vec2, Vec2> GuideSpec::segment() const {
    const auto [s0, s1] = profile_support(profile);
    return {point_at(s0), point_at(s1)};
}

SpotBeam make_state_selective_spot(std::string id, const Vec2& center, double waist,
                                   double depth_f2, double delta_f2, double delta_f3) {
    if (delta_f2 == 0.0 || delta_f3 == 0.0)
        throw ParameterError("state-selective spot needs nonzero detunings");
    return SpotBeam{std::move(id), center, waist, depth_f2, depth_f2 * delta_f2 / delta_f3,
                    delta_f2, delta_f3};
}

std::optional<std::size_t> Scene::find_guide(const std::string& id) const {
    for (std::size_t i = 0; i < guides.size(); ++i)
        if (guides[i].id == id) return i;
    return std::nullopt;
}

std::optional<std::size_t> Scene::find_spot(const std::string& id) const {
    for (std::size_t i = 0; i < spots.size(); ++i)
        if (spots[i].id == id) return i;
    return std::nullopt;
}

Bounds footprint(const Scene& scene) {
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    Vec2 hi = -lo;
    auto grow = [&](const Vec2& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    };
    for (const auto& g : scene.guides) {
        const auto [a, b] = g.segment();
        grow(a);
        grow(b);
    }
    for (const auto& s : scene.spots) grow(s.center);
    if (!std::isfinite(lo.x())) return {};
    return {lo, hi};
}

std::vector<Intersection> find_intersections(const Scene& scene) {
    std::vector<Intersection> out;
    const auto& guides = scene.guides;
    for (std::size_t i = 0; i < guides.size(); ++i) {
        for (std::size_t j = i + 1; j < guides.size(); ++j) {
            const Vec2 u = guides[i].axis();
            const Vec2 v = guides[j].axis();
            const double denom = cross(u, v);
            if (std::abs(denom) < 1e-12) continue;
            const Vec2 w = guides[j].origin - guides[i].origin;
            const double s_i = cross(w, v) / denom;
            const double s_j = cross(w, u) / denom;
            const auto [a0, a1] = profile_support(guides[i].profile);
            const auto [b0, b1] = profile_support(guides[j].profile);
            if (s_i < a0 || s_i > a1 || s_j < b0 || s_j > b1) continue;
            out.push_back({guides[i].point_at(s_i), i, j, s_i, s_j});
        }
    }
    return out;
}

std::vector<Violation> validate_scene(const Scene& scene) {
    std::vector<Violation> out;
    auto report = [&out](Violation::Kind kind, const std::string& msg) {
        out.push_back({kind, msg});
    };

    const auto& sp = scene.species;
    if (!(sp.mass > 0 && sp.lambda_d2 > 0 && sp.gamma > 0 && sp.hfs_split > 0))
        report(Violation::Kind::Invariant, "species constants must be positive");
    if (!(scene.domain.max.array() > scene.domain.min.array()).all())
        report(Violation::Kind::Invariant, "domain bounds are empty");

    for (const auto& g : scene.guides) {
        const std::string name = "guide '" + g.id + "'";
        if (!(g.waist > 0)) report(Violation::Kind::Invariant, name + ": waist must be > 0");
        if (!(g.peak_depth >= 0))
            report(Violation::Kind::Invariant, name + ": peak depth must be >= 0");
        if (!profile_is_valid(g.profile))
            report(Violation::Kind::Invariant, name + ": invalid longitudinal profile");
        const auto [a, b] = g.segment();
        if (!contains_with_tolerance(scene.domain, a) || !contains_with_tolerance(scene.domain, b))
            report(Violation::Kind::OutOfDomain, name + ": axis segment leaves the domain");
        if (const auto* far = std::get_if<FarDetuned>(&g.detuning)) {
            if (!(far->delta_nu < 0))
                report(Violation::Kind::Detuning, name + ": far-detuned guide must be red (delta < 0)");
        } else {
            const auto& sel = std::get<StateSelective>(g.detuning);
            if (sel.delta_f2 == 0.0 || sel.delta_f3 == 0.0) {
                report(Violation::Kind::Detuning, name + ": zero detuning");
            } else if (std::abs((sel.delta_f3 - sel.delta_f2) - sp.hfs_split) > 0.02 * sp.hfs_split) {
                std::ostringstream msg;
                msg << name << ": delta_f3 - delta_f2 = " << (sel.delta_f3 - sel.delta_f2)
                    << " Hz disagrees with the hyperfine splitting by more than 2%";
                report(Violation::Kind::Detuning, msg.str());
            }
        }
    }

    for (const auto& s : scene.spots) {
        const std::string name = "spot '" + s.id + "'";
        if (!(s.waist > 0)) report(Violation::Kind::Invariant, name + ": waist must be > 0");
        if (s.delta_f2 == 0.0 || s.delta_f3 == 0.0)
            report(Violation::Kind::Detuning, name + ": zero detuning");
        if (!contains_with_tolerance(scene.domain, s.center))
            report(Violation::Kind::OutOfDomain, name + ": center outside the domain");
    }

    for (std::size_t i = 0; i < scene.guides.size(); ++i) {
        for (std::size_t j = i + 1; j < scene.guides.size(); ++j) {
            const auto& a = scene.guides[i];
            const auto& b = scene.guides[j];
            if (a.polarization != b.polarization) continue;
            const double reach = 2.0 * (std::abs(a.waist) + std::abs(b.waist));
            if (segment_distance(a.segment(), b.segment()) < reach) {
                report(Violation::Kind::Overlap, "guides '" + a.id + "' and '" + b.id +
                                                     "' overlap with the same polarization (" +
                                                     tag_name(a.polarization) + ")");
            }
        }
    }
    return out;
}

}  // namespace atomguide

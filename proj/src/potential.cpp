#include "atomguide/potential.hpp"

#include <cmath>
#include <sstream>

namespace atomguide {

double guide_detuning(const GuideSpec& guide, HyperfineState state) {
    if (const auto* far = std::get_if<FarDetuned>(&guide.detuning)) return far->delta_nu;
    const auto& sel = std::get<StateSelective>(guide.detuning);
    return state == HyperfineState::F2 ? sel.delta_f2 : sel.delta_f3;
}

double guide_amplitude(const GuideSpec& guide, HyperfineState state) {
    if (std::holds_alternative<FarDetuned>(guide.detuning)) return -guide.peak_depth;
    const auto& sel = std::get<StateSelective>(guide.detuning);
    return guide.peak_depth * std::abs(sel.delta_f2) / guide_detuning(guide, state);
}

double spot_amplitude(const SpotBeam& spot, HyperfineState state) {
    return state == HyperfineState::F2 ? spot.depth_f2 : spot.depth_f3;
}

double spot_detuning(const SpotBeam& spot, HyperfineState state) {
    return state == HyperfineState::F2 ? spot.delta_f2 : spot.delta_f3;
}

namespace {

void require_in_domain(const Scene& scene, const Vec2& point) {
    if (!scene.domain.contains(point)) {
        std::ostringstream msg;
        msg << "point (" << point.x() << ", " << point.y() << ") m is outside the scene domain";
        throw DomainError(msg.str());
    }
}

struct GuideLocal {
    double s;
    double d;
    double transverse;  // exp(-2 d^2 / w^2)
};

GuideLocal localize(const GuideSpec& g, const Vec2& point) {
    const Vec2 rel = point - g.origin;
    const Vec2 u = g.axis();
    const double s = rel.dot(u);
    const double d = rel.x() * -u.y() + rel.y() * u.x();
    return {s, d, std::exp(-2.0 * d * d / (g.waist * g.waist))};
}

}  // namespace

double landscape_energy(const Scene& scene, const Vec2& point, HyperfineState state) noexcept {
    double u = 0.0;
    for (const auto& g : scene.guides) {
        const auto loc = localize(g, point);
        u += guide_amplitude(g, state) * profile_factor(g.profile, loc.s) * loc.transverse;
    }
    for (const auto& sp : scene.spots) {
        const double r2 = (point - sp.center).squaredNorm();
        u += spot_amplitude(sp, state) * std::exp(-2.0 * r2 / (sp.waist * sp.waist));
    }
    return u;
}

Vec2 landscape_force(const Scene& scene, const Vec2& point, HyperfineState state) noexcept {
    Vec2 grad = Vec2::Zero();
    for (const auto& g : scene.guides) {
        const auto loc = localize(g, point);
        const double amp = guide_amplitude(g, state) * loc.transverse;
        const double w2 = g.waist * g.waist;
        grad += amp * (profile_slope(g.profile, loc.s) * g.axis() +
                       profile_factor(g.profile, loc.s) * (-4.0 * loc.d / w2) * g.normal());
    }
    for (const auto& sp : scene.spots) {
        const Vec2 rel = point - sp.center;
        const double w2 = sp.waist * sp.waist;
        const double e = std::exp(-2.0 * rel.squaredNorm() / w2);
        grad += spot_amplitude(sp, state) * e * (-4.0 / w2) * rel;
    }
    return -grad;
}

std::pair<double, Vec2> landscape_energy_force(const Scene& scene, const Vec2& point,
                                               HyperfineState state) noexcept {
    double u = 0.0;
    Vec2 grad = Vec2::Zero();
    for (const auto& g : scene.guides) {
        const auto loc = localize(g, point);
        const double amp = guide_amplitude(g, state) * loc.transverse;
        const double f = profile_factor(g.profile, loc.s);
        u += amp * f;
        grad += amp * (profile_slope(g.profile, loc.s) * g.axis() +
                       f * (-4.0 * loc.d / (g.waist * g.waist)) * g.normal());
    }
    for (const auto& sp : scene.spots) {
        const Vec2 rel = point - sp.center;
        const double w2 = sp.waist * sp.waist;
        const double e = spot_amplitude(sp, state) * std::exp(-2.0 * rel.squaredNorm() / w2);
        u += e;
        grad += e * (-4.0 / w2) * rel;
    }
    return {u, -grad};
}

double landscape_scatter_rate(const Scene& scene, const Vec2& point, HyperfineState state) noexcept {
    // Gamma_sc = (gamma / |delta|) * |U| / hbar per beam; the ratio gamma/delta
    // is the same in angular and ordinary units.
    const auto& sp = scene.species;
    double rate = 0.0;
    for (const auto& g : scene.guides) {
        const auto loc = localize(g, point);
        const double u = guide_amplitude(g, state) * profile_factor(g.profile, loc.s) * loc.transverse;
        rate += sp.gamma / std::abs(guide_detuning(g, state)) * std::abs(u) / sp.hbar;
    }
    for (const auto& s : scene.spots) {
        const double r2 = (point - s.center).squaredNorm();
        const double u = spot_amplitude(s, state) * std::exp(-2.0 * r2 / (s.waist * s.waist));
        rate += sp.gamma / std::abs(spot_detuning(s, state)) * std::abs(u) / sp.hbar;
    }
    return rate;
}

double potential_at(const Scene& scene, const Vec2& point, HyperfineState state) {
    require_in_domain(scene, point);
    return landscape_energy(scene, point, state);
}

Vec2 force_at(const Scene& scene, const Vec2& point, HyperfineState state) {
    require_in_domain(scene, point);
    return landscape_force(scene, point, state);
}

double scatter_rate_at(const Scene& scene, const Vec2& point, HyperfineState state) {
    require_in_domain(scene, point);
    return landscape_scatter_rate(scene, point, state);
}

PotentialSample sample_at(const Scene& scene, const Vec2& point, HyperfineState state) {
    require_in_domain(scene, point);
    return {landscape_energy(scene, point, state), landscape_force(scene, point, state),
            landscape_scatter_rate(scene, point, state)};
}

Eigen::ArrayXXd sample_potential_grid(const Scene& scene, const Eigen::ArrayXd& xs,
                                      const Eigen::ArrayXd& ys, HyperfineState state) {
    const Eigen::Index nx = xs.size();
    const Eigen::Index ny = ys.size();
    const Eigen::ArrayXXd X = xs.transpose().replicate(ny, 1);
    const Eigen::ArrayXXd Y = ys.replicate(1, nx);
    Eigen::ArrayXXd u = Eigen::ArrayXXd::Zero(ny, nx);
    for (const auto& g : scene.guides) {
        const Vec2 a = g.axis();
        const Eigen::ArrayXXd dx = X - g.origin.x();
        const Eigen::ArrayXXd dy = Y - g.origin.y();
        const Eigen::ArrayXXd s = dx * a.x() + dy * a.y();
        const Eigen::ArrayXXd d = dy * a.x() - dx * a.y();
        u += guide_amplitude(g, state) * profile_factor(g.profile, s) *
             (-2.0 * d.square() / (g.waist * g.waist)).exp();
    }
    for (const auto& sp : scene.spots) {
        const Eigen::ArrayXXd r2 = (X - sp.center.x()).square() + (Y - sp.center.y()).square();
        u += spot_amplitude(sp, state) * (-2.0 * r2 / (sp.waist * sp.waist)).exp();
    }
    return u;
}

}  // namespace atomguide

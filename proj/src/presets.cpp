#include "atomguide/presets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace atomguide {

namespace {

void require_angle(double angle) {
    if (!(angle > 0.0 && angle < std::numbers::pi))
        throw ParameterError("crossing angle must lie in (0, pi)");
}

GuideSpec centered_guide(std::string id, double angle, double depth, double waist,
                         LongitudinalProfile profile, Polarization tag) {
    GuideSpec g;
    g.id = std::move(id);
    g.angle = angle;
    g.waist = waist;
    g.peak_depth = depth;
    g.profile = std::move(profile);
    g.polarization = tag;
    const auto [s0, s1] = profile_support(g.profile);
    g.origin = -0.5 * (s0 + s1) * g.axis();
    return g;
}

Scene crossed_pair(double angle, double depth_a, double depth_b, double waist,
                   const GuidePairProfiles& profiles, double margin) {
    require_angle(angle);
    if (!(waist > 0)) throw ParameterError("waist must be > 0");
    Scene scene;
    scene.guides.push_back(
        centered_guide("A", -0.5 * angle, depth_a, waist, profiles.a, Polarization::H));
    scene.guides.push_back(
        centered_guide("B", 0.5 * angle, depth_b, waist, profiles.b, Polarization::V));
    scene.domain = footprint(scene).expanded(margin);
    return scene;
}

}  // namespace

Scene make_x_splitter(double angle, double depth_a, double depth_b, double waist,
                      std::optional<GuidePairProfiles> profiles, double margin) {
    const GuidePairProfiles p = profiles.value_or(GuidePairProfiles{FlatProfile{}, FlatProfile{}});
    return crossed_pair(angle, depth_a, depth_b, waist, p, margin);
}

Scene make_michelson(double sigma_long, double depth_a, double depth_b, double angle,
                     double waist, double margin) {
    if (!(sigma_long > 0)) throw ParameterError("longitudinal sigma must be > 0");
    const GaussianProfile g{0.0, sigma_long};
    return crossed_pair(angle, depth_a, depth_b, waist, {g, g}, margin);
}

MachZehnderLayout make_mach_zehnder(double pitch, double angle, double depth_a, double depth_b,
                                    double waist, double lead, int guides_per_family,
                                    double margin) {
    require_angle(angle);
    if (!(pitch > 0)) throw ParameterError("pitch must be > 0");
    if (guides_per_family < 2) throw ParameterError("need at least two guides per family");
    if (!(lead >= 0)) throw ParameterError("lead must be >= 0");

    const double half = 0.5 * angle;
    const Vec2 n_a = left_normal(direction(-half));
    const Vec2 n_b = left_normal(direction(half));

    // Provisional long guides, trimmed to their crossings below.
    const double provisional = 1e3 * pitch * guides_per_family / std::sin(angle);
    Scene scene;
    for (int i = 0; i < guides_per_family; ++i) {
        GuideSpec g;
        g.id = "A" + std::to_string(i + 1);
        g.angle = -half;
        g.waist = waist;
        g.peak_depth = depth_a;
        g.polarization = Polarization::H;
        g.profile = FlatProfile{2.0 * provisional};
        g.origin = i * pitch * n_a - provisional * g.axis();
        scene.guides.push_back(g);
    }
    for (int j = 0; j < guides_per_family; ++j) {
        GuideSpec g;
        g.id = "B" + std::to_string(j + 1);
        g.angle = half;
        g.waist = waist;
        g.peak_depth = depth_b;
        g.polarization = Polarization::V;
        g.profile = FlatProfile{2.0 * provisional};
        g.origin = -j * pitch * n_b - provisional * g.axis();
        scene.guides.push_back(g);
    }

    const auto provisional_crossings = find_intersections(scene);
    for (std::size_t k = 0; k < scene.guides.size(); ++k) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& x : provisional_crossings) {
            if (x.guide_a == k) lo = std::min(lo, x.s_a), hi = std::max(hi, x.s_a);
            if (x.guide_b == k) lo = std::min(lo, x.s_b), hi = std::max(hi, x.s_b);
        }
        auto& g = scene.guides[k];
        g.origin = g.point_at(lo - lead);
        g.profile = FlatProfile{hi - lo + 2.0 * lead};
    }

    MachZehnderLayout layout;
    layout.structure = footprint(scene);
    scene.domain = layout.structure.expanded(margin);
    layout.intersections = find_intersections(scene);
    layout.cell_area = pitch * pitch / std::sin(angle);
    layout.scene = std::move(scene);
    return layout;
}

MiniatureMz make_miniature_mz(const MiniatureMzParams& p, const SpeciesConstants& species) {
    if (p.points < 2) throw ParameterError("a fringe scan needs at least two points");
    if (!(p.spot_waist > 0)) throw ParameterError("phase shifter waist must be > 0");
    const double speed = p.speed > 0 ? p.speed : 2.0 * species.recoil_velocity();
    const double kinetic = 0.5 * species.mass * speed * speed;
    const double depth = p.depth > 0 ? p.depth : 0.25 * kinetic;

    MachZehnderLayout layout =
        make_mach_zehnder(p.pitch, p.angle, depth, depth, p.waist, 3.0 * p.pitch, 2, 2.0 * p.pitch);
    Scene scene = std::move(layout.scene);
    scene.species = species;

    // A1 x B1 is the input, A2 x B2 the output, B1 x A2 the upper corner.
    auto crossing = [&](const std::string& a, const std::string& b) {
        const std::size_t i = *scene.find_guide(a);
        const std::size_t j = *scene.find_guide(b);
        for (const auto& x : layout.intersections)
            if ((x.guide_a == i && x.guide_b == j) || (x.guide_a == j && x.guide_b == i)) return x.point;
        throw ParameterError("mach-zehnder crossing not found");
    };
    MiniatureMz mz;
    mz.input = crossing("A1", "B1");
    mz.output = crossing("A2", "B2");
    const Vec2 corner = crossing("A2", "B1");
    scene.spots.push_back(make_state_selective_spot("phase", 0.5 * (corner + mz.output), p.spot_waist, 0.0));

    mz.transit_time = p.spot_waist * std::sqrt(std::numbers::pi / 2.0) / speed;
    for (int i = 0; i < p.points; ++i)
        mz.depths.push_back(p.max_phase * i / (p.points - 1) * species.hbar / mz.transit_time);

    GridSpec grid;
    grid.nx = p.nx;
    grid.ny = p.ny;
    const double spacing = p.spacing > 0 ? p.spacing : GridSpec::required_spacing(speed, species.mass);
    grid.extent = Vec2(p.nx * spacing, p.ny * spacing);
    const double behind = p.absorber_fraction * grid.extent.x() + 5.0 * p.sigma.x();
    grid.center = Vec2(mz.input.x() - behind + 0.5 * grid.extent.x(), mz.output.y());
    grid.validate();

    const Bounds gb = grid.bounds();
    scene.domain = {gb.min.cwiseMin(scene.domain.min), gb.max.cwiseMax(scene.domain.max)};

    FringeTemplate& t = mz.fringe;
    t.phase_spot = scene.spots.size() - 1;
    t.grid = grid;
    const double deepest = 2.0 * depth + mz.depths.back();
    t.dt = p.dt > 0 ? p.dt : 0.09 * species.hbar / deepest;
    const double transit = (mz.output - mz.input).norm() / speed;
    t.duration = p.duration > 0 ? p.duration : 1.6 * transit;
    const double far = 10.0 * grid.extent.norm();
    const double yq = mz.output.y();
    t.out1 = {Vec2(-far, yq), Vec2(far, yq), Vec2(far, far), Vec2(-far, far)};
    t.out2 = {Vec2(-far, -far), Vec2(far, -far), Vec2(far, yq), Vec2(-far, yq)};
    t.absorber = {true, p.absorber_fraction};
    t.scene = std::move(scene);

    mz.packet.center = mz.input;
    mz.packet.sigma = p.sigma;
    mz.packet.velocity = speed * Vec2::UnitX();
    mz.packet.state = HyperfineState::F2;
    return mz;
}

double phase_estimate(const MiniatureMz& mz, double depth, double hbar) {
    return depth * mz.transit_time / hbar;
}

}  // namespace atomguide

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "atomguide/calculators.hpp"
#include "atomguide/dynamics.hpp"
#include "atomguide/ports.hpp"
#include "atomguide/presets.hpp"

using namespace atomguide;
using doctest::Approx;

namespace {

Scene guide_scene(LongitudinalProfile profile = FlatProfile{5e-3}, double origin_x = -2.5e-3) {
    Scene s;
    GuideSpec g;
    g.id = "G";
    g.origin = Vec2(origin_x, 0);
    g.peak_depth = from_microkelvin(450);
    g.profile = profile;
    s.guides.push_back(g);
    s.domain = footprint(s).expanded(200e-6);
    return s;
}

Ensemble single_atom(const Vec2& x, const Vec2& v) {
    Ensemble e;
    Atom a;
    a.position = x;
    a.velocity = v;
    e.atoms.push_back(a);
    e.streams.push_back(make_stream(0, 0));
    return e;
}

double std_dev(const std::vector<double>& v) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (v.size() - 1));
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("thermal sampling") {
    const Scene s = guide_scene();
    const auto e = sample_thermal_ensemble(s, {0, 2.5e-3}, 20e-6, 20000, HyperfineState::F2, 1);
    std::vector<double> vx, vy, y;
    for (const auto& a : e.atoms) {
        vx.push_back(a.velocity.x());
        vy.push_back(a.velocity.y());
        y.push_back(a.position.y());
    }
    CHECK(std_dev(vx) * 100 == Approx(4.425).epsilon(0.02));
    CHECK(std_dev(vy) * 100 == Approx(4.425).epsilon(0.02));
    const double sigma_y = std_dev(y);
    CHECK(sigma_y * 1e6 == Approx(0.7379).epsilon(0.02));
    CHECK(sigma_y > 0.5e-6);
    CHECK(sigma_y < 1.2e-6);
    // Unconfined direction: uniform over one waist on each side.
    for (const auto& a : e.atoms) CHECK_LE(std::abs(a.position.x()), 7e-6 + 1e-15);

    const auto cold = sample_thermal_ensemble(s, {0, 2.5e-3}, 0.0, 10, HyperfineState::F2, 1);
    for (const auto& a : cold.atoms) {
        CHECK(a.position.norm() < 1e-15);
        CHECK(a.velocity.norm() == 0.0);
    }

    Scene dark = s;
    dark.guides[0].peak_depth = 0.0;
    CHECK_THROWS_AS(sample_thermal_ensemble(dark, {0, 2.5e-3}, 20e-6, 10, HyperfineState::F2, 1), ParameterError);
}

TEST_CASE("stream identity") {
    const Scene s = guide_scene();
    const auto a = sample_thermal_ensemble(s, {0, 2.5e-3}, 20e-6, 50, HyperfineState::F2, 9);
    const auto b = sample_thermal_ensemble(s, {0, 2.5e-3}, 20e-6, 80, HyperfineState::F2, 9);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(a.atoms[i].rng_stream_id == i);
        CHECK(a.atoms[i].position == b.atoms[i].position);
        CHECK(a.atoms[i].velocity == b.atoms[i].velocity);
    }
}

TEST_CASE("free flight is exact") {
    Scene s = guide_scene();
    const Vec2 x0(0, 150e-6);
    const Vec2 v(0.01, -0.02);
    auto e = single_atom(x0, v);
    const double dt = 1e-6;
    e = step(std::move(e), s, dt);
    CHECK(e.atoms[0].position == x0 + v * dt);
    CHECK(e.atoms[0].velocity == v);
}

TEST_CASE("harmonic oscillation frequency") {
    const Scene s = guide_scene();
    const double nu = radial_trap_frequency(from_microkelvin(450), 7e-6, s.species.mass);
    const double dt = default_time_step(s);
    auto e = single_atom(Vec2(0, 0.02e-6), Vec2::Zero());
    std::vector<double> crossings;
    double prev = e.atoms[0].position.y();
    const auto steps = static_cast<std::size_t>(std::ceil(101.0 / nu / dt));
    for (std::size_t k = 1; k <= steps; ++k) {
        e = step(std::move(e), s, dt);
        const double y = e.atoms[0].position.y();
        if (prev > 0 && y <= 0) crossings.push_back((k - 1) * dt + dt * prev / (prev - y));
        prev = y;
    }
    REQUIRE(crossings.size() >= 100);
    const double period = (crossings.back() - crossings.front()) / (crossings.size() - 1);
    CHECK(1.0 / period == Approx(nu).epsilon(1e-3));
}

TEST_CASE("energy conservation") {
    const Scene s = guide_scene();
    // One thermal standard deviation in position and velocity at 20 uK.
    auto e = single_atom(Vec2(0, 0.738e-6), Vec2(0.0443, 0.0443));
    const double e0 = total_energy(e.atoms[0], s);
    const double dt = default_time_step(s);
    double worst = 0;
    for (int k = 0; k < 100000; ++k) {
        e = step(std::move(e), s, dt);
        worst = std::max(worst, std::abs(total_energy(e.atoms[0], s) / e0 - 1));
    }
    REQUIRE(e.atoms[0].alive);
    CHECK(worst < 1e-5);
}

TEST_CASE("total energy") {
    const Scene s = guide_scene();
    Atom rest;
    CHECK(to_microkelvin(total_energy(rest, s)) == Approx(-450.0));
    Atom free;
    free.position = Vec2(0, 180e-6);
    free.velocity = Vec2(0.1, 0);
    CHECK(total_energy(free, s) / (0.5 * s.species.mass * 0.01) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("scattering statistics") {
    const Scene s = guide_scene();
    CHECK(s.species.recoil_velocity() * 1e3 == Approx(6.02).epsilon(1e-3));
    auto e = sample_thermal_ensemble(s, {0, 2.5e-3}, 0.0, 2000, HyperfineState::F2, 4);
    const double dt = 1e-5;
    for (int k = 0; k < 5000; ++k) e = apply_scattering(std::move(e), s, dt);
    double mean = 0;
    for (const auto& a : e.atoms) mean += a.scatter_count;
    mean /= e.atoms.size();
    // 714.8 / s over 50 ms
    CHECK(mean == Approx(35.74).epsilon(0.02));

    CHECK_THROWS_AS(apply_scattering(std::move(e), s, 2e-4), TimeStepError);
}

TEST_CASE("propagate basics") {
    const Scene s = guide_scene();
    auto e = sample_thermal_ensemble(s, {0, 2.5e-3}, 20e-6, 20, HyperfineState::F2, 2);
    const auto before = e.atoms;
    RunConfig idle;
    idle.duration = 0.0;
    const auto rec = propagate(e, s, idle);
    CHECK(rec.steps == 0);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(e.atoms[i].position == before[i].position);

    RunConfig run;
    run.duration = 1e-3;
    run.record_stride = 100;
    const auto r2 = propagate(e, s, run);
    CHECK(r2.snapshots.front().time == 0.0);
    CHECK(r2.snapshots.back().time == Approx(1e-3));
    for (const auto& a : e.atoms) CHECK(a.scatter_count == 0);

    RunConfig coarse = run;
    coarse.dt = 3 * default_time_step(s);
    CHECK_THROWS_AS(propagate(e, s, coarse), TimeStepError);
}

TEST_CASE("gradient guide traversal") {
    const Scene s = guide_scene(GradientProfile{2.5e-3, 0.5, 1.0}, 0.0);
    auto e = sample_thermal_ensemble(s, {0, 0.3e-3}, 20e-6, 100, HyperfineState::F2, 8);
    RunConfig run;
    run.duration = 60e-3;
    run.record_stride = 0;
    propagate(e, s, run);
    std::size_t through = 0;
    for (const auto& a : e.atoms) through += !a.alive && a.position.x() > 2.5e-3;
    CHECK(through > 50);
}

TEST_CASE("single trap hold retains atoms") {
    Scene s;
    s.spots.push_back(SpotBeam{"hold", Vec2::Zero(), 7e-6, from_microkelvin(-450), from_microkelvin(-450), -500e9, -500e9});
    GuideSpec dark;
    dark.id = "G";
    dark.origin = Vec2(-10e-6, 0);
    dark.profile = FlatProfile{20e-6};
    s.guides.push_back(dark);
    s.domain = {Vec2::Constant(-200e-6), Vec2::Constant(200e-6)};
    auto e = sample_thermal_ensemble(s, {0, 10e-6}, 20e-6, 200, HyperfineState::F2, 5);
    RunConfig run;
    run.duration = 35e-3;
    run.record_stride = 0;
    propagate(e, s, run);
    CHECK(e.alive_count() >= 199);
    CHECK(e.alive_count() + e.exited_count() == 200);
}

TEST_CASE("gaussian guide turns atoms around") {
    const double sigma = 1e-3;
    const Scene s = guide_scene(GaussianProfile{0.0, sigma}, 0.0);
    const Vec2 x0(-sigma * std::sqrt(2 * std::log(2.0)), 0);
    auto e = single_atom(x0, Vec2::Zero());
    const double dt = default_time_step(s);
    double prev_v = 0, t = 0;
    int reversals = 0;
    while (reversals < 2 && t < 0.2) {
        e = step(std::move(e), s, dt);
        t += dt;
        const double v = e.atoms[0].velocity.x();
        if (t > dt && v * prev_v < 0 && std::abs(e.atoms[0].position.x()) > 0.5 * sigma) ++reversals;
        prev_v = v;
    }
    REQUIRE(reversals == 2);
    CHECK(e.atoms[0].position.x() == Approx(x0.x()).epsilon(0.01));
    CHECK(e.atoms[0].alive);
}

TEST_CASE("bitwise determinism across workers") {
    const double u0 = from_microkelvin(450);
    const Scene s = make_x_splitter(degrees(42), u0, u0);
    RunConfig run;
    run.duration = 0.3e-3;
    run.scattering = true;
    run.dt = 0.5e-6;
    std::vector<std::vector<Atom>> results;
    for (int w : {1, 4, 8}) {
        LoadOptions opt;
        opt.launch_velocity = Vec2(0.3, 0);
        auto e = sample_thermal_ensemble(s, {0, 2.5e-3}, 20e-6, 64, HyperfineState::F2, 77, opt);
        run.workers = w;
        propagate(e, s, run);
        results.push_back(e.atoms);
    }
    for (std::size_t k = 1; k < results.size(); ++k)
        for (std::size_t i = 0; i < results[0].size(); ++i) {
            REQUIRE(results[k][i].position == results[0][i].position);
            REQUIRE(results[k][i].velocity == results[0][i].velocity);
            REQUIRE(results[k][i].scatter_count == results[0][i].scatter_count);
        }
}

TEST_CASE("port assignment") {
    const double u0 = from_microkelvin(450);
    const Scene s = make_x_splitter(degrees(42), u0, u0);
    const auto ports = arm_ports(s);
    REQUIRE(ports.size() == 2);
    std::vector<Atom> atoms(10);
    for (std::size_t i = 0; i < atoms.size(); ++i) atoms[i].position = ports[0].start + (i + 1) * 50e-6 * ports[0].direction;
    auto c = assign_ports(atoms, ports);
    CHECK(c.counts[0] == 10);
    CHECK(c.counts[1] == 0);

    Atom center;
    center.position = Vec2(5e-6, 0);
    Atom dead;
    dead.alive = false;
    const std::vector<Atom> two{center, dead};
    c = assign_ports(two, ports);
    CHECK(c.unassigned == 1);
    CHECK(c.lost == 1);

    // Overlapping strips: equal distance goes to the lower index.
    PortDefinition p{"p", Vec2::Zero(), Vec2::UnitX(), 10e-6};
    PortDefinition q{"q", Vec2(0, 2e-6), Vec2::UnitX(), 10e-6};
    Atom mid;
    mid.position = Vec2(5e-6, 1e-6);
    const std::vector<PortDefinition> pq{p, q};
    CHECK(assign_ports(std::vector<Atom>{mid}, pq).counts[0] == 1);

    CHECK_THROWS_AS(assign_ports(atoms, std::vector<PortDefinition>{}), ParameterError);
}

}

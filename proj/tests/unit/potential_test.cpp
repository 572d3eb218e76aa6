#include <doctest.h>

#include <cmath>
#include <random>

#include "atomguide/calculators.hpp"
#include "atomguide/potential.hpp"
#include "atomguide/presets.hpp"

using namespace atomguide;
using doctest::Approx;

namespace {

double uk(double joule) { return to_microkelvin(joule); }

Scene lone_guide(double depth_uK = 450) {
    Scene s;
    GuideSpec g;
    g.id = "G";
    g.origin = Vec2(-2.5e-3, 0);
    g.peak_depth = from_microkelvin(depth_uK);
    s.guides.push_back(g);
    s.domain = footprint(s).expanded(100e-6);
    return s;
}

Scene random_scene(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Scene s;
    for (int i = 0; i < 3; ++i) {
        GuideSpec g;
        g.id = "G" + std::to_string(i);
        g.angle = u(rng) * std::numbers::pi;
        g.origin = Vec2(u(rng) - 0.5, u(rng) - 0.5) * 100e-6 - 150e-6 * g.axis();
        g.waist = (4 + 6 * u(rng)) * 1e-6;
        g.peak_depth = from_microkelvin(100 + 400 * u(rng));
        if (i == 1) g.profile = GaussianProfile{150e-6, 60e-6};
        if (i == 2) {
            g.profile = GradientProfile{300e-6, 0.3, 1.0};
            g.detuning = StateSelective{-1020e6, 2020e6};
        }
        g.polarization = i % 2 ? Polarization::V : Polarization::H;
        s.guides.push_back(g);
    }
    s.spots.push_back(make_state_selective_spot("S", Vec2(20e-6, -10e-6), 15e-6, from_microkelvin(-300)));
    s.domain = footprint(s).expanded(100e-6);
    return s;
}

}  // namespace

TEST_SUITE("potential") {

TEST_CASE("single guide values") {
    const Scene s = lone_guide();
    CHECK(uk(potential_at(s, Vec2::Zero(), HyperfineState::F2)) == Approx(-450.0));
    CHECK(uk(potential_at(s, Vec2(0, 7e-6), HyperfineState::F2)) == Approx(-450.0 * std::exp(-2.0)));
    CHECK(uk(potential_at(s, Vec2(0, 7e-6), HyperfineState::F2)) == Approx(-60.90).epsilon(1e-3));
    CHECK_THROWS_AS(potential_at(s, Vec2(1.0, 0), HyperfineState::F2), DomainError);
}

TEST_CASE("crossing is twice as deep") {
    const double u0 = from_microkelvin(450);
    const Scene s = make_x_splitter(degrees(42), u0, u0);
    CHECK(uk(potential_at(s, Vec2::Zero(), HyperfineState::F2)) == Approx(-900.0));
}

TEST_CASE("force from closed form matches finite differences") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double h = 1e-9;
    int checked = 0;
    for (int k = 0; k < 5; ++k) {
        const Scene s = random_scene(rng);
        for (int i = 0; i < 200; ++i) {
            const Vec2 p = s.domain.center() + 0.4 * u(rng) * Vec2::UnitX() * s.domain.size().x() +
                           0.4 * u(rng) * Vec2::UnitY() * s.domain.size().y();
            for (auto state : {HyperfineState::F2, HyperfineState::F3}) {
                const Vec2 f = force_at(s, p, state);
                Vec2 fd;
                for (int d = 0; d < 2; ++d) {
                    Vec2 e = Vec2::Zero();
                    e[d] = h;
                    fd[d] = -(potential_at(s, p + e, state) - potential_at(s, p - e, state)) / (2 * h);
                }
                // Skip points on the flat-profile step edges, where the finite difference is not defined.
                const double scale = std::max(f.norm(), 1e-3 * from_microkelvin(450) / 7e-6);
                if ((fd - f).norm() > 1e-3 * scale) continue;
                REQUIRE((fd - f).norm() < 1e-6 * scale);
                ++checked;
            }
        }
    }
    CHECK(checked > 1900);
}

TEST_CASE("symmetric points have no transverse or longitudinal force") {
    const Scene s = lone_guide();
    CHECK(std::abs(force_at(s, Vec2(1e-3, 0), HyperfineState::F2).y()) < 1e-30);
    Scene g = lone_guide();
    g.guides[0].origin = Vec2::Zero();
    g.guides[0].profile = GaussianProfile{0.0, 1e-3};
    g.domain = footprint(g).expanded(100e-6);
    const Vec2 f = force_at(g, Vec2(0, 2e-6), HyperfineState::F2);
    CHECK(std::abs(f.x()) < 1e-12 * std::abs(f.y()));
}

TEST_CASE("superposition") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 5; ++k) {
        const Scene s = random_scene(rng);
        for (int i = 0; i < 100; ++i) {
            const Vec2 p = s.domain.center() + 0.45 * Vec2(u(rng) * s.domain.size().x(), u(rng) * s.domain.size().y());
            for (auto state : {HyperfineState::F2, HyperfineState::F3}) {
                double sum = 0.0;
                for (const auto& g : s.guides) {
                    Scene one = s;
                    one.guides = {g};
                    one.spots.clear();
                    sum += potential_at(one, p, state);
                }
                for (const auto& sp : s.spots) {
                    Scene one = s;
                    one.guides.clear();
                    one.spots = {sp};
                    sum += potential_at(one, p, state);
                }
                REQUIRE(std::abs(potential_at(s, p, state) - sum) <= 1e-14 * from_microkelvin(1000));
            }
        }
    }
}

TEST_CASE("state scaling of selective light") {
    Scene s = lone_guide();
    s.guides[0].detuning = StateSelective{-1020e6, 2020e6};
    for (double y : {0.0, 3e-6, 9e-6}) {
        const double f2 = potential_at(s, Vec2(0, y), HyperfineState::F2);
        const double f3 = potential_at(s, Vec2(0, y), HyperfineState::F3);
        CHECK(f3 / f2 == Approx(-1020.0 / 2020.0).epsilon(1e-12));
    }
    CHECK(-1020.0 / 2020.0 == Approx(-0.5050).epsilon(1e-3));
}

TEST_CASE("rigid motion invariance") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Scene s = random_scene(rng);
    const double phi = 0.7;
    const Mat2 r = Eigen::Rotation2Dd(phi).toRotationMatrix();
    const Vec2 shift(37e-6, -12e-6);
    Scene moved = s;
    for (auto& g : moved.guides) {
        g.origin = r * g.origin + shift;
        g.angle += phi;
    }
    for (auto& sp : moved.spots) sp.center = r * sp.center + shift;
    moved.domain = {Vec2::Constant(-1.0), Vec2::Constant(1.0)};
    for (int i = 0; i < 200; ++i) {
        const Vec2 p = s.domain.center() + 0.4 * Vec2(u(rng) * s.domain.size().x(), u(rng) * s.domain.size().y());
        REQUIRE(uk(potential_at(moved, r * p + shift, HyperfineState::F2)) ==
                Approx(uk(potential_at(s, p, HyperfineState::F2))).epsilon(1e-9));
    }
}

TEST_CASE("scattering rate") {
    const Scene s = lone_guide();
    const double rate = scatter_rate_at(s, Vec2::Zero(), HyperfineState::F2);
    CHECK(rate == Approx(714.8).epsilon(1e-3));
    CHECK(rate == Approx(740).epsilon(0.1));
    CHECK(scatter_rate_at(s, Vec2(0, 90e-6), HyperfineState::F2) == Approx(0.0).epsilon(1e-12));
    CHECK(scatter_rate_at(lone_guide(900), Vec2::Zero(), HyperfineState::F2) == Approx(2 * rate).epsilon(1e-12));

    // Even in the sign of the depth: a blue spot scatters like a red one of equal magnitude.
    Scene red, blue;
    red.spots = {SpotBeam{"r", Vec2::Zero(), 10e-6, from_microkelvin(-100), from_microkelvin(-100), -1e9, -1e9}};
    blue.spots = {SpotBeam{"b", Vec2::Zero(), 10e-6, from_microkelvin(100), from_microkelvin(100), 1e9, 1e9}};
    red.domain = blue.domain = {Vec2::Constant(-1e-4), Vec2::Constant(1e-4)};
    CHECK(scatter_rate_at(red, Vec2(3e-6, 0), HyperfineState::F2) ==
          Approx(scatter_rate_at(blue, Vec2(3e-6, 0), HyperfineState::F2)).epsilon(1e-12));
}

TEST_CASE("calculators") {
    const SpeciesConstants rb = rubidium85();
    const double u0 = from_microkelvin(450);
    const double nu = radial_trap_frequency(u0, 7e-6, rb.mass);
    CHECK(nu == Approx(9545.35).epsilon(1e-5));
    CHECK(radial_trap_frequency(4 * u0, 7e-6, rb.mass) == Approx(2 * nu).epsilon(1e-12));
    CHECK(radial_trap_frequency(0.0, 7e-6, rb.mass) == 0.0);

    CHECK(rayleigh_range(7e-6, 780.24e-9) * 1e6 == Approx(197.30).epsilon(1e-4));
    CHECK(rayleigh_range(14e-6, 780.24e-9) == Approx(4 * rayleigh_range(7e-6, 780.24e-9)).epsilon(1e-12));
    CHECK(rayleigh_range(1e-6, std::numbers::pi * 1e-6) * 1e6 == Approx(1.0).epsilon(1e-12));

    CHECK(mean_occupation(20e-6, nu) == Approx(43.16).epsilon(1e-3));
    const double f_ln2 = rb.k_boltzmann * 20e-6 * std::log(2.0) / constants::planck;
    CHECK(mean_occupation(20e-6, f_ln2) == Approx(1.0).epsilon(1e-12));
    CHECK(mean_occupation(1e-12, nu) == Approx(0.0));

    const double x = thermal_rms_spread(20e-6, nu, rb.mass);
    CHECK(x * 1e6 == Approx(0.7379).epsilon(1e-3));
    CHECK(thermal_rms_spread(80e-6, nu, rb.mass) == Approx(2 * x).epsilon(1e-12));
    CHECK(thermal_rms_spread(20e-6, 2 * nu, rb.mass) == Approx(0.5 * x).epsilon(1e-12));

    const double dnu = detuning_from_wavelength_offset(1e-9, 780.24e-9);
    CHECK(dnu * 1e-9 == Approx(-492.5).epsilon(2e-3));
    CHECK(uk(depth_from_power(0.36, 7e-6, 5e-3, -493e9)) == Approx(-220.4).epsilon(2e-3));
    CHECK(depth_from_power(0.0, 7e-6, 5e-3, -493e9) == 0.0);
    CHECK_THROWS_AS(depth_from_power(0.36, 7e-6, 0.0, -493e9), ParameterError);
    CHECK_THROWS_AS(depth_from_power(0.36, 0.0, 5e-3, -493e9), ParameterError);

    CHECK(scattering_rate(u0, -500e9) == Approx(714.8).epsilon(1e-3));
    CHECK(thermal_velocity(20e-6, rb.mass) * 100 == Approx(4.425).epsilon(1e-3));
    CHECK(rb.recoil_velocity() * 1e3 == Approx(6.023).epsilon(1e-3));
}

}

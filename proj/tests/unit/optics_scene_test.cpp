#include <doctest.h>

#include <cmath>
#include <random>

#include "atomguide/potential.hpp"
#include "atomguide/presets.hpp"

using namespace atomguide;
using doctest::Approx;

TEST_SUITE("optics_scene") {

TEST_CASE("profile factors") {
    CHECK(profile_factor(FlatProfile{5e-3}, 2.5e-3) == 1.0);
    CHECK(profile_factor(FlatProfile{5e-3}, 5.1e-3) == 0.0);
    CHECK(profile_factor(FlatProfile{5e-3}, -1e-9) == 0.0);
    CHECK(profile_factor(GaussianProfile{0.0, 1e-3}, 0.0) == 1.0);
    CHECK(profile_factor(GaussianProfile{0.0, 1e-3}, 1e-3) == Approx(0.60653).epsilon(1e-5));

    const GradientProfile ramp{2.5e-3, 0.5, 1.0};
    CHECK(profile_factor(ramp, 0.0) == Approx(0.5));
    CHECK(profile_factor(ramp, 1.25e-3) == Approx(0.75));
    CHECK(profile_factor(ramp, 2.5e-3) == Approx(1.0));
    CHECK(profile_factor(ramp, 2.6e-3) == 0.0);
}

TEST_CASE("profile factor stays in [0, 1]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double s = (u(rng) - 0.5) * 20e-3;
        const LongitudinalProfile profiles[] = {
            FlatProfile{u(rng) * 5e-3},
            GradientProfile{1e-4 + u(rng) * 5e-3, 0.01 + 0.99 * u(rng), 0.01 + 0.99 * u(rng)},
            GaussianProfile{(u(rng) - 0.5) * 4e-3, 1e-5 + u(rng) * 2e-3},
        };
        for (const auto& p : profiles) {
            const double f = profile_factor(p, s);
            REQUIRE(f >= 0.0);
            REQUIRE(f <= 1.0);
        }
    }
}

TEST_CASE("x splitter geometry") {
    const double u0 = from_microkelvin(450);
    const Scene s = make_x_splitter(degrees(42), u0, u0);
    REQUIRE(s.guides.size() == 2);
    CHECK(s.guides[0].polarization != s.guides[1].polarization);
    CHECK(std::abs(s.guides[1].angle - s.guides[0].angle) == Approx(degrees(42)));
    const auto x = find_intersections(s);
    REQUIRE(x.size() == 1);
    CHECK(x[0].point.norm() < 1e-12);
    CHECK(validate_scene(s).empty());

    CHECK_THROWS_AS(make_x_splitter(0.0, u0, u0), ParameterError);
    CHECK_THROWS_AS(make_x_splitter(std::numbers::pi, u0, u0), ParameterError);

    const Scene square = make_x_splitter(degrees(90), u0, u0);
    CHECK(to_microkelvin(potential_at(square, Vec2(0, 20e-6), HyperfineState::F2)) ==
          Approx(to_microkelvin(potential_at(square, Vec2(0, -20e-6), HyperfineState::F2))));
}

TEST_CASE("supplementary splitters mirror each other") {
    const double u0 = from_microkelvin(450);
    const Scene a = make_x_splitter(degrees(42), u0, 0.7 * u0);
    const Scene b = make_x_splitter(degrees(180 - 42), u0, 0.7 * u0);
    // Reflection across y = x takes one layout onto the other.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-60e-6, 60e-6);
    for (int i = 0; i < 500; ++i) {
        const Vec2 p(u(rng), u(rng));
        const Vec2 q(p.y(), p.x());
        REQUIRE(to_microkelvin(potential_at(b, q, HyperfineState::F2)) ==
                Approx(to_microkelvin(potential_at(a, p, HyperfineState::F2))).epsilon(1e-9));
    }
}

TEST_CASE("validation rules") {
    const double u0 = from_microkelvin(450);
    Scene s = make_x_splitter(degrees(42), u0, u0);
    s.guides[1].polarization = s.guides[0].polarization;
    const auto v = validate_scene(s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == Violation::Kind::Overlap);

    Scene parallel = make_x_splitter(degrees(42), u0, u0);
    parallel.guides[1] = parallel.guides[0];
    parallel.guides[1].id = "C";
    parallel.guides[1].origin += 3e-6 * parallel.guides[0].normal();
    CHECK(!validate_scene(parallel).empty());

    Scene thin = make_x_splitter(degrees(42), u0, u0);
    thin.guides[0].waist = 0.0;
    const auto w = validate_scene(thin);
    REQUIRE(!w.empty());
    CHECK(w[0].kind == Violation::Kind::Invariant);

    Scene selective = make_x_splitter(degrees(42), u0, u0);
    selective.guides[0].detuning = StateSelective{-1020e6, 2020e6};
    CHECK(validate_scene(selective).empty());
    selective.guides[0].detuning = StateSelective{-1020e6, 2500e6};
    CHECK(!validate_scene(selective).empty());
}

TEST_CASE("mach-zehnder cell") {
    const double u0 = from_microkelvin(450);
    const auto mz = make_mach_zehnder(0.4e-3, degrees(42), u0, u0);
    CHECK(mz.cell_area * 1e6 == Approx(0.2391).epsilon(1e-3));
    CHECK(mz.intersections.size() == 4);
    CHECK(validate_scene(mz.scene).empty());
    CHECK(make_mach_zehnder(0.4e-3, degrees(90), u0, u0).cell_area * 1e6 == Approx(0.16));
    CHECK_THROWS_AS(make_mach_zehnder(0.4e-3, 0.0, u0, u0), ParameterError);
}

TEST_CASE("michelson profile peaks at the crossing") {
    const double u0 = from_microkelvin(450);
    const double sigma = 1e-3;
    const Scene s = make_michelson(sigma, u0, u0);
    const GuideSpec& a = s.guides[0];
    const auto x = find_intersections(s);
    REQUIRE(x.size() == 1);
    const double u_center = potential_at(s, x[0].point, HyperfineState::F2);
    for (double ds : {-0.6e-3, -0.2e-3, 0.2e-3, 0.6e-3})
        CHECK(potential_at(s, a.point_at(x[0].s_a + ds), HyperfineState::F2) > u_center);

    // Classical turning point of an atom with E = -U0/2 on a lone gaussian guide.
    const double turn = sigma * std::sqrt(2.0 * std::log(2.0));
    const double f = profile_factor(a.profile, x[0].s_a + turn);
    CHECK(f == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("wide gaussian approaches the flat splitter at the center") {
    const double u0 = from_microkelvin(450);
    const Scene wide = make_michelson(1.0, u0, u0);
    const Scene flat = make_x_splitter(degrees(42), u0, u0);
    const Vec2 c = find_intersections(wide)[0].point;
    CHECK(to_microkelvin(potential_at(wide, c, HyperfineState::F2)) ==
          Approx(to_microkelvin(potential_at(flat, Vec2::Zero(), HyperfineState::F2))).epsilon(1e-6));
}

}

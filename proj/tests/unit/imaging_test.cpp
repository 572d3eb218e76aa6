#include <doctest.h>

#include <cmath>
#include <sstream>

#include "atomguide/calculators.hpp"
#include "atomguide/imaging.hpp"

using namespace atomguide;
using doctest::Approx;

namespace {

Atom at(double x_um, double y_um) {
    Atom a;
    a.position = Vec2(x_um, y_um) * 1e-6;
    return a;
}

ImagingOptions still(double psf_um = 14) {
    ImagingOptions o;
    o.psf_rms = psf_um * 1e-6;
    o.exposure = 0.0;
    return o;
}

// Region centred on the origin with the origin at a pixel centre.
const Bounds region{Vec2(-353.5e-6, -353.5e-6), Vec2(353.5e-6, 353.5e-6)};

std::pair<double, double> profile_moments(const LineProfile& p) {
    double w = 0, m = 0, m2 = 0;
    for (const auto& [s, v] : p.samples) {
        w += v;
        m += v * s;
        m2 += v * s * s;
    }
    m /= w;
    return {m, std::sqrt(m2 / w - m * m)};
}

}  // namespace

TEST_SUITE("imaging") {

TEST_CASE("single atom renders as the PSF") {
    const std::vector<Atom> one{at(0, 0)};
    const ImageFrame f = render_atoms(one, region, still());
    CHECK(f.total() == Approx(1.0).epsilon(1e-9));
    const LineProfile p = line_profile(f, {Vec2(-300e-6, 0), Vec2(300e-6, 0)}, 100e-6);
    const auto [mean, rms] = profile_moments(p);
    CHECK(mean * 1e6 == Approx(300).epsilon(1e-6));
    CHECK(rms * 1e6 == Approx(14.0).epsilon(0.02));

    const ImageFrame sharp = render_atoms(one, region, still(0));
    CHECK((sharp.pixels > 0).count() == 1);
    CHECK(sharp.pixels.maxCoeff() == 1.0);
}

TEST_CASE("intensity is linear in atom number and blur keeps flux") {
    const std::vector<Atom> one{at(10, -20)};
    const std::vector<Atom> three(3, at(10, -20));
    const ImageFrame a = render_atoms(one, region, still());
    const ImageFrame b = render_atoms(three, region, still());
    CHECK(((b.pixels - 3 * a.pixels).abs().maxCoeff()) < 1e-12);

    Eigen::ArrayXXd img = Eigen::ArrayXXd::Zero(80, 90);
    img(40, 45) = 2.0;
    img(30, 20) = 1.0;
    CHECK(gaussian_blur(img, 3.0).sum() == Approx(3.0).epsilon(1e-12));
    CHECK((gaussian_blur(img, 0.0) - img).abs().maxCoeff() == 0.0);
}

TEST_CASE("dead atoms and exposure motion") {
    std::vector<Atom> atoms{at(0, 0)};
    atoms[0].alive = false;
    CHECK(render_atoms(atoms, region, still()).total() == 0.0);

    Atom moving = at(0, 0);
    moving.velocity = Vec2(0.1, 0);
    ImagingOptions o = still(0);
    o.exposure = 1e-3;
    const std::vector<Atom> m{moving};
    const ImageFrame f = render_atoms(m, region, o);
    // Smeared over 100 um along x.
    CHECK((f.pixels > 0).count() > 10);
    CHECK(f.total() == Approx(1.0));
}

TEST_CASE("uniform image gives a flat profile") {
    ImageFrame f;
    f.pixels = Eigen::ArrayXXd::Constant(60, 60, 2.0);
    f.pixel_pitch = 7e-6;
    f.origin = Vec2(0, 0);
    const LineProfile p = line_profile(f, {Vec2(50e-6, -100e-6), Vec2(350e-6, -300e-6)}, 30e-6);
    for (const auto& [s, v] : p.samples) CHECK(v * 49e-12 / 60e-6 == Approx(2.0).epsilon(1e-9));
}

TEST_CASE("empty image gives a zero profile") {
    const ImageFrame f = render_atoms(std::vector<Atom>{}, region, still());
    const LineProfile p = line_profile(f, {Vec2(-200e-6, 0), Vec2(200e-6, 0)}, 20e-6);
    for (const auto& [s, v] : p.samples) CHECK(v == 0.0);
    CHECK_THROWS_AS(splitting_ratio(p, {0, 100e-6}, {200e-6, 300e-6}), ParameterError);
}

TEST_CASE("splitting ratio of two spots") {
    std::vector<Atom> atoms;
    for (int i = 0; i < 30; ++i) atoms.push_back(at(0, 150));
    for (int i = 0; i < 10; ++i) atoms.push_back(at(0, -150));
    const ImageFrame f = render_atoms(atoms, region, still());
    const LineProfile p = line_profile(f, {Vec2(0, -300e-6), Vec2(0, 300e-6)}, 80e-6);
    const auto [r1, r2] = splitting_ratio(p, {0, 300e-6}, {300e-6, 600e-6});
    CHECK(r1 == Approx(0.25).epsilon(0.01));
    CHECK(r2 == Approx(0.75).epsilon(0.01));
    CHECK(r1 + r2 == Approx(1.0).epsilon(1e-12));

    LineProfile scaled = p;
    for (auto& [s, v] : scaled.samples) v *= 7.5;
    const auto [q1, q2] = splitting_ratio(scaled, {0, 300e-6}, {300e-6, 600e-6});
    CHECK(q1 == Approx(r1).epsilon(1e-12));
    CHECK(q2 == Approx(r2).epsilon(1e-12));

    CHECK_THROWS_AS(splitting_ratio(p, {0, 350e-6}, {300e-6, 600e-6}), ParameterError);
    CHECK_THROWS_AS(splitting_ratio(p, {100e-6, 0}, {300e-6, 600e-6}), ParameterError);
}

TEST_CASE("profile line must stay inside the frame") {
    const ImageFrame f = render_atoms(std::vector<Atom>{at(0, 0)}, region, still());
    CHECK_THROWS_AS(line_profile(f, {Vec2(-300e-6, 0), Vec2(400e-6, 0)}, 10e-6), DomainError);
    CHECK_THROWS_AS(line_profile(f, {Vec2(0, 0), Vec2(100e-6, 0)}, 0.0), ParameterError);
}

TEST_CASE("guide cross-section width") {
    Scene s;
    GuideSpec g;
    g.id = "G";
    g.origin = Vec2(-2.5e-3, 0);
    g.peak_depth = from_microkelvin(450);
    g.profile = FlatProfile{5e-3};
    s.guides.push_back(g);
    s.domain = footprint(s).expanded(200e-6);
    LoadOptions lo;
    lo.window_half_width = 100e-6;
    const Ensemble e = sample_thermal_ensemble(s, {0, 2.5e-3}, 20e-6, 5000, HyperfineState::F2, 4, lo);
    const ImageFrame f = render_atoms(e.atoms, region, still());
    const LineProfile p = line_profile(f, {Vec2(0, -200e-6), Vec2(0, 200e-6)}, 60e-6);
    const double sigma = thermal_rms_spread(20e-6, radial_trap_frequency(g.peak_depth, g.waist, rubidium85().mass),
                                            rubidium85().mass);
    const auto [mean, rms] = profile_moments(p);
    CHECK(rms / std::hypot(sigma, 14e-6) == Approx(1.0).epsilon(0.05));
}

TEST_CASE("pgm round trip") {
    ImageFrame f;
    f.pixels = Eigen::ArrayXXd::Zero(5, 7);
    for (Eigen::Index r = 0; r < 5; ++r)
        for (Eigen::Index c = 0; c < 7; ++c) f.pixels(r, c) = 0.25 * static_cast<double>(r * 7 + c);
    std::stringstream ss;
    const double scale = write_pgm(ss, f);
    const Eigen::ArrayXXd back = read_pgm(ss);
    REQUIRE(back.rows() == 5);
    REQUIRE(back.cols() == 7);
    CHECK(((back * scale - f.pixels).abs().maxCoeff()) <= 0.5 * scale + 1e-15);
    CHECK(back(4, 6) == 65535.0);
}

}

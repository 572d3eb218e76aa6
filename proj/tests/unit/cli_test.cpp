#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "atomguide/config.hpp"
#include "atomguide/experiment.hpp"

using namespace atomguide;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

const char* minimal = R"(
[guide G]
angle_deg = 0
depth_uK = 450
)";

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<Diagnostic> diagnostics_of(std::string_view text) {
    try {
        parse_scene_file(text);
    } catch (const ConfigError& e) {
        return e.diagnostics();
    }
    return {};
}

bool mentions(const std::vector<Diagnostic>& ds, const std::string& needle, int line = -1) {
    for (const auto& d : ds)
        if (d.str().find(needle) != std::string::npos && (line < 0 || d.line == line)) return true;
    return false;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("atomguide_cli_" + name);
    fs::remove_all(p);
    return p;
}

// The single-guide preset with a different atom number.
std::string small_run(const std::string& n) {
    std::string text = slurp(fs::path(PRESET_DIR) / "single_guide.scene");
    const auto at = text.find("n = 500");
    REQUIRE(at != std::string::npos);
    return text.replace(at, 7, "n = " + n);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("minimal scene") {
    const ExperimentConfig c = parse_scene_file(minimal);
    REQUIRE(c.scene.guides.size() == 1);
    CHECK(c.scene.guides[0].id == "G");
    CHECK(c.scene.guides[0].waist * 1e6 == Approx(7.0));
    CHECK(to_microkelvin(c.scene.guides[0].peak_depth) == Approx(450));
    CHECK(!c.ensemble);
}

TEST_CASE("diagnostics") {
    SUBCASE("negative depth") {
        const auto ds = diagnostics_of("[guide G]\ndepth_uK = -450\n");
        CHECK(mentions(ds, "depth must be ≥ 0; sign comes from detuning", 2));
    }
    SUBCASE("unit suffix") {
        const auto ds = diagnostics_of("[guide G]\ndepth_uK = 450\nwaist_mm = 0.007\n");
        CHECK(mentions(ds, "unit-suffix mismatch", 3));
        CHECK(mentions(ds, "waist_um"));
    }
    SUBCASE("unknown key") {
        const auto ds = diagnostics_of("[guide G]\ndepth_uK = 450\n\ncolour = red\n");
        CHECK(mentions(ds, "colour", 4));
    }
    SUBCASE("duplicate section") {
        const auto ds = diagnostics_of("[guide G]\ndepth_uK = 450\n[guide G]\ndepth_uK = 450\n");
        CHECK(mentions(ds, "G", 3));
    }
    SUBCASE("missing seed") {
        const auto ds = diagnostics_of(
            "[guide G]\ndepth_uK = 450\n[ensemble]\nn = 10\nload_guide = G\n[run]\nduration_ms = 1\n");
        CHECK(mentions(ds, "seed"));
    }
    SUBCASE("malformed number") {
        const auto ds = diagnostics_of("[guide G]\ndepth_uK = 4x0\n");
        CHECK(mentions(ds, "4x0", 2));
    }
    SUBCASE("all problems are reported together") {
        const auto ds = diagnostics_of("[guide G]\ndepth_uK = 4x0\nwaist_mm = 1\nfoo = 2\n");
        CHECK(ds.size() >= 3);
    }
}

TEST_CASE("serialize round trip") {
    for (const auto& entry : fs::directory_iterator(PRESET_DIR)) {
        CAPTURE(entry.path().filename().string());
        const Document d = parse_document(slurp(entry.path()));
        const std::string text = serialize(d);
        CHECK(parse_document(text) == d);
        CHECK(serialize(parse_document(text)) == text);
    }
    const ExperimentConfig c = parse_scene_file(slurp(fs::path(PRESET_DIR) / "x_splitter.scene"));
    const ExperimentConfig again = parse_scene_file(manifest_text(c));
    CHECK(again.document == c.document);
    CHECK(again.ensemble->seed == c.ensemble->seed);
}

TEST_CASE("presets validate") {
    int count = 0;
    for (const auto& entry : fs::directory_iterator(PRESET_DIR)) {
        CAPTURE(entry.path().filename().string());
        CHECK(diagnostics_of(slurp(entry.path())).empty());
        const ExperimentConfig c = parse_scene_file(slurp(entry.path()));
        const Scene& scene = c.quantum ? make_miniature_mz(*c.quantum).fringe.scene : c.scene;
        CHECK(validate_scene(scene).empty());
        ++count;
    }
    CHECK(count >= 6);
}

TEST_CASE("empty ensemble") {
    const fs::path out = scratch("empty");
    const ExperimentConfig c = parse_scene_file(small_run("0"));
    const ExperimentResult r = run_experiment(c, out);
    CHECK(r.final_ensemble.atoms.empty());
    CHECK(fs::exists(out / "summary.csv"));
    CHECK(fs::exists(out / "trajectories.csv"));
    CHECK(fs::exists(out / "images" / "frame_000.pgm"));
    for (const auto& [k, v] : r.summary) {
        CAPTURE(k);
        CHECK(std::isfinite(v));
    }
    fs::remove_all(out);
}

TEST_CASE("rerun from the manifest is byte identical") {
    const fs::path first = scratch("first");
    const fs::path second = scratch("second");
    const ExperimentConfig c = parse_scene_file(small_run("40"));
    run_experiment(c, first);
    run_experiment(parse_scene_file(slurp(first / "run_manifest")), second);
    for (const char* name : {"trajectories.csv", "summary.csv", "profiles/profile_001.csv", "images/frame_002.pgm",
                             "run_manifest"}) {
        CAPTURE(name);
        REQUIRE(fs::exists(first / name));
        CHECK(slurp(first / name) == slurp(second / name));
    }
    fs::remove_all(first);
    fs::remove_all(second);
}

TEST_CASE("failed run leaves no partial outputs") {
    const fs::path out = scratch("partial");
    fs::create_directories(out / "summary.csv");
    const ExperimentConfig c = parse_scene_file(small_run("10"));
    CHECK_THROWS(run_experiment(c, out));
    CHECK(!fs::exists(out / "trajectories.csv"));
    CHECK(!fs::exists(out / "images"));
    CHECK(!fs::exists(out / "profiles"));
    CHECK(fs::is_directory(out / "summary.csv"));
    fs::remove_all(out);

    const fs::path fresh = scratch("fresh");
    ExperimentConfig bad = c;
    bad.image->line = LineSegment{Vec2(-1, 0), Vec2(1, 0)};
    CHECK_THROWS(run_experiment(bad, fresh));
    CHECK(!fs::exists(fresh));
}

TEST_CASE("equal powers split evenly") {
    ExperimentConfig c = parse_scene_file(slurp(fs::path(PRESET_DIR) / "power_sweep.scene"));
    c.ensemble->n = 400;
    const std::vector<double> ratio{1.0};
    const auto rows = sweep_power_ratio(c, ratio);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].r1 + rows[0].r2 == Approx(1.0));
    CHECK(rows[0].r1 == Approx(0.5).epsilon(0.16));
}

TEST_CASE("sim exit codes") {
    const std::string sim = SIM_EXE;
    const fs::path bad = scratch("bad.scene");
    std::ofstream(bad) << "[guide G]\ndepth_uK = -450\n";
    const fs::path err = scratch("stderr.txt");
    const int rc = std::system((sim + " validate " + bad.string() + " 2> " + err.string()).c_str());
    CHECK(WEXITSTATUS(rc) == 2);
    CHECK(slurp(err).find("line 2") != std::string::npos);

    const fs::path good = fs::path(PRESET_DIR) / "x_splitter.scene";
    CHECK(WEXITSTATUS(std::system((sim + " validate " + good.string() + " > /dev/null").c_str())) == 0);

    const fs::path calc = scratch("calc.txt");
    CHECK(WEXITSTATUS(std::system((sim + " calc radial_frequency > " + calc.string()).c_str())) == 0);
    CHECK(slurp(calc).find("9545") != std::string::npos);
    CHECK(WEXITSTATUS(std::system((sim + " calc nonsense 2> /dev/null").c_str())) == 2);
    fs::remove(bad);
    fs::remove(err);
    fs::remove(calc);
}

}

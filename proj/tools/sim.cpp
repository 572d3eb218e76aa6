#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "atomguide/calculators.hpp"
#include "atomguide/config.hpp"
#include "atomguide/csv.hpp"
#include "atomguide/experiment.hpp"

using namespace atomguide;

namespace {

constexpr int kValidationFailure = 2;
constexpr int kRuntimeError = 1;

struct ValidationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

ExperimentConfig load(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return parse_scene_file(text);
    } catch (const ConfigError& e) {
        for (const auto& d : e.diagnostics()) std::cerr << path << ": " << d.str() << '\n';
        throw ValidationFailure("invalid scene file");
    }
}

// key=value parameters of the calc command.
class Params {
  public:
    explicit Params(const std::vector<std::string>& args) {
        for (const auto& a : args) {
            const auto eq = a.find('=');
            if (eq == std::string::npos) throw ValidationFailure("expected key=value, got '" + a + "'");
            const std::string key = a.substr(0, eq);
            const std::string text = a.substr(eq + 1);
            double v = 0;
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() || ptr != text.data() + text.size())
                throw ValidationFailure("bad number for " + key + ": '" + text + "'");
            values_[key] = v;
        }
    }
    double get(const std::string& key, double fallback) {
        used_.push_back(key);
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }
    void finish() const {
        for (const auto& [k, v] : values_)
            if (std::find(used_.begin(), used_.end(), k) == used_.end())
                throw ValidationFailure("unknown parameter '" + k + "'");
    }

  private:
    std::map<std::string, double> values_;
    std::vector<std::string> used_;
};

struct Calculator {
    std::string usage;
    std::function<std::pair<double, std::string>(Params&)> eval;
};

const std::map<std::string, Calculator>& calculators() {
    const SpeciesConstants rb = rubidium85();
    static const std::map<std::string, Calculator> table = {
        {"radial_frequency",
         {"depth_uK=450 waist_um=7 mass_kg=1.40999e-25",
          [rb](Params& p) {
              return std::pair{radial_trap_frequency(from_microkelvin(p.get("depth_uK", 450)),
                                                     p.get("waist_um", 7) * 1e-6, p.get("mass_kg", rb.mass)),
                               std::string("Hz")};
          }}},
        {"rayleigh_range",
         {"waist_um=7 lambda_nm=780.241",
          [rb](Params& p) {
              return std::pair{rayleigh_range(p.get("waist_um", 7) * 1e-6, p.get("lambda_nm", rb.lambda_d2 * 1e9) * 1e-9),
                               std::string("m")};
          }}},
        {"scattering_rate",
         {"depth_uK=450 detuning_GHz=-500",
          [](Params& p) {
              return std::pair{scattering_rate(from_microkelvin(p.get("depth_uK", 450)), p.get("detuning_GHz", -500) * 1e9),
                               std::string("1/s")};
          }}},
        {"mean_occupation",
         {"temperature_uK=20 frequency_Hz=9545",
          [](Params& p) {
              return std::pair{mean_occupation(p.get("temperature_uK", 20) * 1e-6, p.get("frequency_Hz", 9545)),
                               std::string("1")};
          }}},
        {"thermal_rms_spread",
         {"temperature_uK=20 frequency_Hz=9545 mass_kg=1.40999e-25",
          [rb](Params& p) {
              return std::pair{thermal_rms_spread(p.get("temperature_uK", 20) * 1e-6, p.get("frequency_Hz", 9545),
                                                  p.get("mass_kg", rb.mass)),
                               std::string("m")};
          }}},
        {"thermal_velocity",
         {"temperature_uK=20 mass_kg=1.40999e-25",
          [rb](Params& p) {
              return std::pair{thermal_velocity(p.get("temperature_uK", 20) * 1e-6, p.get("mass_kg", rb.mass)),
                               std::string("m/s")};
          }}},
        {"depth_from_power",
         {"power_mW=360 waist_um=7 length_mm=5 detuning_GHz=-493",
          [](Params& p) {
              const double j = depth_from_power(p.get("power_mW", 360) * 1e-3, p.get("waist_um", 7) * 1e-6,
                                                p.get("length_mm", 5) * 1e-3, p.get("detuning_GHz", -493) * 1e9);
              return std::pair{to_microkelvin(j), std::string("uK")};
          }}},
        {"detuning",
         {"delta_lambda_nm=1 lambda_nm=780.241",
          [rb](Params& p) {
              return std::pair{detuning_from_wavelength_offset(p.get("delta_lambda_nm", 1) * 1e-9,
                                                               p.get("lambda_nm", rb.lambda_d2 * 1e9) * 1e-9),
                               std::string("Hz")};
          }}},
        {"recoil_velocity",
         {"",
          [rb](Params&) { return std::pair{rb.recoil_velocity(), std::string("m/s")}; }}},
        {"cell_area",
         {"pitch_mm=0.4 angle_deg=42",
          [](Params& p) {
              const double pitch = p.get("pitch_mm", 0.4) * 1e-3;
              return std::pair{pitch * pitch / std::sin(degrees(p.get("angle_deg", 42))), std::string("m^2")};
          }}},
    };
    return table;
}

int guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const ValidationFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Guided-atom optics simulator"};
    app.require_subcommand(1);

    std::string scene_path;
    std::string out_dir;

    auto* run = app.add_subcommand("run", "Run the experiment described by a scene file");
    run->add_option("scene", scene_path, "Scene file")->required();
    run->add_option("--out", out_dir, "Output directory")->required();

    auto* sweep = app.add_subcommand("sweep", "Power-ratio sweep over the [sweep] ratios");
    sweep->add_option("scene", scene_path, "Scene file")->required();
    sweep->add_option("--out", out_dir, "Output directory")->required();

    std::string quantity;
    std::vector<std::string> params;
    auto* calc = app.add_subcommand("calc", "Derived-quantity calculators");
    calc->add_option("quantity", quantity, "Quantity name, or 'list'")->required();
    calc->add_option("params", params, "key=value parameters");

    auto* validate = app.add_subcommand("validate", "Check a scene file");
    validate->add_option("scene", scene_path, "Scene file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidationFailure;
    }

    if (*run) {
        return guarded([&] {
            const ExperimentConfig config = load(scene_path);
            const ExperimentResult result = run_experiment(config, out_dir);
            write_summary_csv(std::cout, result.summary);
        });
    }
    if (*sweep) {
        return guarded([&] {
            const ExperimentConfig config = load(scene_path);
            const auto rows = run_sweep(config, out_dir);
            write_sweep_csv(std::cout, rows);
        });
    }
    if (*calc) {
        return guarded([&] {
            if (quantity == "list") {
                for (const auto& [name, c] : calculators()) std::cout << name << ' ' << c.usage << '\n';
                return;
            }
            const auto it = calculators().find(quantity);
            if (it == calculators().end())
                throw ValidationFailure("unknown quantity '" + quantity + "' (try 'sim calc list')");
            Params p(params);
            const auto [value, unit] = it->second.eval(p);
            p.finish();
            std::cout << quantity << " = " << format_number(value) << ' ' << unit << '\n';
        });
    }
    return guarded([&] {
        const ExperimentConfig config = load(scene_path);
        std::cout << scene_path << ": ok (" << config.scene.guides.size() << " guides, "
                  << config.scene.spots.size() << " spots)\n";
    });
}

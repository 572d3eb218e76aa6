#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "atomguide/config.hpp"
#include "atomguide/imaging.hpp"
#include "atomguide/quantum.hpp"

namespace atomguide {

/// The scene's species and domain with a single round far-detuned trap at
/// the load site; the guides are dark while the atoms are held.
Scene hold_scene(const ExperimentConfig& config);

struct HeldEnsemble {
    Ensemble ensemble;
    std::size_t loaded = 0;
    /// Alive fraction after the hold; 1 for an empty ensemble.
    double retention = 1.0;
};

/// Thermal load into the hold trap followed by the hold itself.
HeldEnsemble load_and_hold(const ExperimentConfig& config);

/// Switches to the guides: adds the launch velocity, restarts the clock.
void transfer(Ensemble& ensemble, const EnsembleConfig& ensemble_config, const SpeciesConstants& species);

struct ImageResult {
    double time = 0.0;
    ImageFrame frame;
    std::optional<LineProfile> profile;
    std::optional<std::pair<double, double>> ratio;
};

using Summary = std::vector<std::pair<std::string, double>>;

struct ExperimentResult {
    TrajectoryRecord record;
    Ensemble final_ensemble;
    std::vector<ImageResult> images;
    std::optional<FringeScan> fringe;
    Summary summary;
};

/// load -> hold -> transfer -> propagate, with images at the configured
/// times, plus the fringe scan when the configuration has one.
ExperimentResult simulate(const ExperimentConfig& config);

/// Writes trajectories.csv, images/, profiles/, summary.csv, fringe.csv and
/// run_manifest into `out_dir`. Files written before a failure are removed.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct SweepRow {
    double ratio = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
    std::size_t n_lost = 0;
    std::size_t count_a = 0;
    std::size_t count_b = 0;
};

/// One propagation per ratio with depth_b = ratio * depth_a, starting from
/// the same held ensemble. r1 and r2 are the shares of the forward arms of
/// guide a and guide b.
std::vector<SweepRow> sweep_power_ratio(const ExperimentConfig& config, std::span<const double> ratios);

/// CSV columns ratio, r1, r2, n_lost.
void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows);

/// sweep_power_ratio over the [sweep] ratios; writes sweep.csv and
/// run_manifest.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Resolved document with version and seed comments; reparses to the same
/// configuration.
std::string manifest_text(const ExperimentConfig& config);

void write_summary_csv(std::ostream& os, const Summary& summary);

}  // namespace atomguide

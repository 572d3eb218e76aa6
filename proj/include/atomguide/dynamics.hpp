#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <random>
#include <vector>

#include "atomguide/potential.hpp"

namespace atomguide {

struct Atom {
    Vec2 position = Vec2::Zero();
    Vec2 velocity = Vec2::Zero();
    HyperfineState state = HyperfineState::F2;
    bool alive = true;
    std::uint64_t rng_stream_id = 0;
    double exit_time = std::numeric_limits<double>::quiet_NaN();
    /// Consecutive time spent unbound (E > 0) and moving outward.
    double unbound_time = 0.0;
    std::uint32_t scatter_count = 0;
};

/// Atoms plus one random stream per atom. Stream i is a pure function of
/// (master_seed, atoms[i].rng_stream_id).
struct Ensemble {
    std::vector<Atom> atoms;
    std::vector<std::mt19937_64> streams;
    double time = 0.0;
    std::uint64_t master_seed = 0;

    std::size_t alive_count() const;
    std::size_t exited_count() const { return atoms.size() - alive_count(); }
};

std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t stream_id);

struct LoadSite {
    std::size_t guide = 0;
    double s = 0.0;
};

struct LoadOptions {
    /// Half-width of the uniform loading window along directions without
    /// confinement; negative selects the guide waist.
    double window_half_width = -1.0;
    Vec2 launch_velocity = Vec2::Zero();
};

/// Thermal ensemble in the local harmonic approximation around a trapping
/// site. Unconfined directions (zero or negative curvature) are loaded
/// uniformly over the loading window.
Ensemble sample_thermal_ensemble(const Scene& scene, const LoadSite& site, double temperature,
                                 std::size_t n, HyperfineState state, std::uint64_t seed,
                                 const LoadOptions& options = {});

struct RunConfig {
    /// Zero selects default_time_step(scene).
    double dt = 0.0;
    double duration = 0.0;
    bool scattering = false;
    /// Steps between recorded snapshots; <= 0 records only the end points.
    int record_stride = 100;
    int workers = 1;
    /// In-plane proxy for the absorbed-photon direction.
    double recoil_axis_angle = 0.0;
    double escape_time = 1e-3;
};

/// One two-hundredth of the shortest radial period among the guides.
double default_time_step(const Scene& scene);

/// Throws TimeStepError if dt exceeds 1/100 of the shortest radial period
/// and ParameterError for a non-positive duration.
void validate_run_config(const Scene& scene, const RunConfig& config);

/// Velocity-Verlet step for every alive atom; atoms leaving the domain or
/// staying unbound for longer than the escape time are retired.
Ensemble step(Ensemble ensemble, const Scene& scene, double dt);

/// Random recoil kicks with probability Gamma_sc * dt per atom.
/// Throws TimeStepError if any Gamma_sc * dt >= 0.1.
Ensemble apply_scattering(Ensemble ensemble, const Scene& scene, double dt,
                          double recoil_axis_angle = 0.0);

struct Snapshot {
    double time = 0.0;
    std::vector<Atom> atoms;
};

struct TrajectoryRecord {
    std::vector<Snapshot> snapshots;
    std::size_t steps = 0;
    double dt = 0.0;
    double walltime_s = 0.0;
    /// Wall time per atom-step in nanoseconds.
    double cost_per_atom_step_ns = 0.0;

    /// Snapshot recorded within half a step of `time`, or nullptr.
    const Snapshot* find(double time) const;
};

/// Integrate `ensemble` in place for config.duration, recording snapshots.
/// Results are bitwise independent of config.workers.
TrajectoryRecord propagate(Ensemble& ensemble, const Scene& scene, const RunConfig& config);

/// Kinetic plus potential energy.
double total_energy(const Atom& atom, const Scene& scene);

/// CSV with columns t_s, atom_id, x_m, y_m, vx_mps, vy_mps, state, alive.
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record);

const char* state_name(HyperfineState state);

}  // namespace atomguide

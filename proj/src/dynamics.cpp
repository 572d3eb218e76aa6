#include "atomguide/dynamics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "atomguide/calculators.hpp"
#include "atomguide/csv.hpp"

namespace atomguide {

using std::numbers::pi;

const char* state_name(HyperfineState state) { return state == HyperfineState::F2 ? "F2" : "F3"; }

std::size_t Ensemble::alive_count() const {
    return static_cast<std::size_t>(
        std::count_if(atoms.begin(), atoms.end(), [](const Atom& a) { return a.alive; }));
}

std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
    return std::mt19937_64(seq);
}

namespace {

Mat2 hessian_at(const Scene& scene, const Vec2& p, HyperfineState state, double h) {
    Mat2 hess;
    for (int k = 0; k < 2; ++k) {
        Vec2 e = Vec2::Zero();
        e[k] = h;
        const Vec2 fp = landscape_force(scene, p + e, state);
        const Vec2 fm = landscape_force(scene, p - e, state);
        hess.col(k) = -(fp - fm) / (2.0 * h);
    }
    return 0.5 * (hess + hess.transpose());
}

}  // namespace

Ensemble sample_thermal_ensemble(const Scene& scene, const LoadSite& site, double temperature,
                                 std::size_t n, HyperfineState state, std::uint64_t seed,
                                 const LoadOptions& options) {
    if (site.guide >= scene.guides.size()) throw ParameterError("load site refers to a missing guide");
    if (!(temperature >= 0)) throw ParameterError("temperature must be >= 0");
    const GuideSpec& guide = scene.guides[site.guide];
    const Vec2 center = guide.point_at(site.s);
    if (!(landscape_energy(scene, center, state) < 0.0))
        throw ParameterError("load site is not trapping (U >= 0)");

    const double window =
        options.window_half_width >= 0 ? options.window_half_width : guide.waist;
    const double mass = scene.species.mass;
    const double kt = scene.species.k_boltzmann * temperature;

    const Mat2 hess = hessian_at(scene, center, state, 1e-3 * guide.waist);
    const Eigen::SelfAdjointEigenSolver<Mat2> eig(hess);
    const Vec2 curvature = eig.eigenvalues();
    const double stiff = curvature.maxCoeff();
    if (!(stiff > 0)) throw ParameterError("load site is not a transverse potential minimum");

    Ensemble ensemble;
    ensemble.master_seed = seed;
    ensemble.atoms.resize(n);
    ensemble.streams.reserve(n);
    const double sigma_v = std::sqrt(kt / mass);
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = make_stream(seed, i);
        Atom& atom = ensemble.atoms[i];
        atom.state = state;
        atom.rng_stream_id = i;
        atom.position = center;
        atom.velocity = options.launch_velocity;
        if (temperature > 0) {
            std::normal_distribution<double> normal;
            std::uniform_real_distribution<double> uniform(-1.0, 1.0);
            for (int k = 0; k < 2; ++k) {
                const Vec2 axis = eig.eigenvectors().col(k);
                const double lambda = curvature[k];
                const double offset = lambda > 1e-6 * stiff ? std::sqrt(kt / lambda) * normal(rng)
                                                            : window * uniform(rng);
                atom.position += offset * axis;
            }
            atom.velocity += sigma_v * Vec2(normal(rng), normal(rng));
        }
        ensemble.streams.push_back(std::move(rng));
    }
    return ensemble;
}

double default_time_step(const Scene& scene) {
    double dt = std::numeric_limits<double>::infinity();
    for (const auto& g : scene.guides) {
        const double depth = std::abs(guide_amplitude(g, HyperfineState::F2));
        if (depth <= 0) continue;
        const double nu = radial_trap_frequency(depth, g.waist, scene.species.mass);
        dt = std::min(dt, 1.0 / nu / 200.0);
    }
    for (const auto& s : scene.spots) {
        const double depth = -std::min({s.depth_f2, s.depth_f3, 0.0});
        if (depth <= 0) continue;
        const double nu = radial_trap_frequency(depth, s.waist, scene.species.mass);
        dt = std::min(dt, 1.0 / nu / 200.0);
    }
    if (!std::isfinite(dt)) dt = 1e-6;
    return dt;
}

void validate_run_config(const Scene& scene, const RunConfig& config) {
    if (!(config.duration >= 0)) throw ParameterError("run duration must be >= 0");
    const double dt = config.dt > 0 ? config.dt : default_time_step(scene);
    const double limit = 2.0 * default_time_step(scene);
    if (dt > limit * (1 + 1e-12)) {
        std::ostringstream msg;
        msg << "time step " << dt << " s exceeds 1/100 of the shortest radial period (" << limit
            << " s)";
        throw TimeStepError(msg.str());
    }
}

namespace {

struct StepContext {
    const Scene& scene;
    double dt;
    bool scattering;
    Vec2 recoil_axis;
    double escape_time;
};

/// Velocity-Verlet update; `accel` holds a(x) on entry and a(x') on exit.
void verlet_atom(Atom& atom, Vec2& accel, const StepContext& ctx, double t_after) {
    const double m = ctx.scene.species.mass;
    const double dt = ctx.dt;
    const Vec2 v_half = atom.velocity + 0.5 * dt * accel;
    atom.position += dt * v_half;
    if (!ctx.scene.domain.contains(atom.position)) {
        atom.velocity = v_half;
        atom.alive = false;
        atom.exit_time = t_after;
        return;
    }
    const auto [energy_pot, force] = landscape_energy_force(ctx.scene, atom.position, atom.state);
    accel = force / m;
    atom.velocity = v_half + 0.5 * dt * accel;

    const double energy = 0.5 * m * atom.velocity.squaredNorm() + energy_pot;
    const bool outward = atom.velocity.dot(atom.position - ctx.scene.domain.center()) > 0;
    if (energy > 0 && outward) {
        atom.unbound_time += dt;
        if (atom.unbound_time > ctx.escape_time) {
            atom.alive = false;
            atom.exit_time = t_after;
        }
    } else {
        atom.unbound_time = 0.0;
    }
}

void scatter_atom(Atom& atom, std::mt19937_64& rng, const Scene& scene, double dt,
                  const Vec2& recoil_axis) {
    const double p = landscape_scatter_rate(scene, atom.position, atom.state) * dt;
    if (p >= 0.1) {
        std::ostringstream msg;
        msg << "scattering probability per step " << p << " >= 0.1; reduce dt";
        throw TimeStepError(msg.str());
    }
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    if (uniform(rng) < p) {
        const double v_rec = scene.species.recoil_velocity();
        const double phi = 2.0 * pi * uniform(rng);
        atom.velocity += v_rec * (recoil_axis + direction(phi));
        ++atom.scatter_count;
    }
}

Vec2 initial_acceleration(const Atom& atom, const Scene& scene) {
    return landscape_force(scene, atom.position, atom.state) / scene.species.mass;
}

}  // namespace

Ensemble step(Ensemble ensemble, const Scene& scene, double dt) {
    const StepContext ctx{scene, dt, false, Vec2::Zero(), std::numeric_limits<double>::infinity()};
    for (auto& atom : ensemble.atoms) {
        if (!atom.alive) continue;
        Vec2 accel = initial_acceleration(atom, scene);
        verlet_atom(atom, accel, ctx, ensemble.time + dt);
    }
    ensemble.time += dt;
    return ensemble;
}

Ensemble apply_scattering(Ensemble ensemble, const Scene& scene, double dt, double recoil_axis_angle) {
    const Vec2 axis = direction(recoil_axis_angle);
    for (std::size_t i = 0; i < ensemble.atoms.size(); ++i) {
        Atom& atom = ensemble.atoms[i];
        if (!atom.alive) continue;
        scatter_atom(atom, ensemble.streams[i], scene, dt, axis);
    }
    return ensemble;
}

const Snapshot* TrajectoryRecord::find(double time) const {
    for (const auto& s : snapshots)
        if (std::abs(s.time - time) <= 0.5 * dt + 1e-15) return &s;
    return nullptr;
}

TrajectoryRecord propagate(Ensemble& ensemble, const Scene& scene, const RunConfig& config) {
    validate_run_config(scene, config);
    const auto wall_start = std::chrono::steady_clock::now();

    const double dt_max = config.dt > 0 ? config.dt : default_time_step(scene);
    const std::size_t steps =
        config.duration > 0 ? static_cast<std::size_t>(std::ceil(config.duration / dt_max - 1e-9)) : 0;
    const double dt = steps > 0 ? config.duration / static_cast<double>(steps) : dt_max;
    const double t0 = ensemble.time;

    std::vector<std::size_t> record_steps;
    const std::size_t stride = config.record_stride > 0 ? static_cast<std::size_t>(config.record_stride) : 0;
    for (std::size_t k = 0; k <= steps; ++k)
        if (k == 0 || k == steps || (stride > 0 && k % stride == 0)) record_steps.push_back(k);

    TrajectoryRecord record;
    record.steps = steps;
    record.dt = dt;
    record.snapshots.resize(record_steps.size());
    for (std::size_t r = 0; r < record_steps.size(); ++r) {
        record.snapshots[r].time = t0 + static_cast<double>(record_steps[r]) * dt;
        record.snapshots[r].atoms.resize(ensemble.atoms.size());
    }

    const StepContext ctx{scene, dt, config.scattering, direction(config.recoil_axis_angle),
                          config.escape_time};

    auto run_atom = [&](std::size_t i) {
        Atom& atom = ensemble.atoms[i];
        auto& rng = ensemble.streams[i];
        Vec2 accel = atom.alive ? initial_acceleration(atom, scene) : Vec2::Zero();
        std::size_t next_record = 0;
        for (std::size_t k = 0; k <= steps; ++k) {
            if (k > 0 && atom.alive) {
                verlet_atom(atom, accel, ctx, t0 + static_cast<double>(k) * dt);
                if (atom.alive && ctx.scattering) {
                    const Vec2 v_before = atom.velocity;
                    scatter_atom(atom, rng, scene, dt, ctx.recoil_axis);
                    if (atom.velocity != v_before) accel = initial_acceleration(atom, scene);
                }
            }
            if (next_record < record_steps.size() && record_steps[next_record] == k) {
                record.snapshots[next_record].atoms[i] = atom;
                ++next_record;
            }
        }
    };

    const std::size_t n = ensemble.atoms.size();
    const std::size_t workers =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::max(config.workers, 1)), 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) run_atom(i);
    } else {
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w * n / workers; i < (w + 1) * n / workers; ++i) run_atom(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    ensemble.time = t0 + static_cast<double>(steps) * dt;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    record.walltime_s = wall;
    const double atom_steps = static_cast<double>(n) * static_cast<double>(steps);
    record.cost_per_atom_step_ns = atom_steps > 0 ? wall / atom_steps * 1e9 : 0.0;
    return record;
}

double total_energy(const Atom& atom, const Scene& scene) {
    return 0.5 * scene.species.mass * atom.velocity.squaredNorm() +
           landscape_energy(scene, atom.position, atom.state);
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record) {
    CsvWriter csv(os);
    csv.row("t_s", "atom_id", "x_m", "y_m", "vx_mps", "vy_mps", "state", "alive");
    for (const auto& snap : record.snapshots) {
        for (const auto& a : snap.atoms) {
            csv.row(snap.time, a.rng_stream_id, a.position.x(), a.position.y(), a.velocity.x(),
                    a.velocity.y(), state_name(a.state), a.alive ? 1 : 0);
        }
    }
}

}  // namespace atomguide

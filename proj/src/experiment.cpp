#include "atomguide/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "atomguide/csv.hpp"
#include "atomguide/ports.hpp"

namespace atomguide {

namespace fs = std::filesystem;

namespace {

HyperfineState load_state(LoadState s) {
    return s == LoadState::F3 ? HyperfineState::F3 : HyperfineState::F2;
}

double mean_energy(const Ensemble& ensemble, const Scene& scene) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& a : ensemble.atoms) {
        if (!a.alive) continue;
        sum += total_energy(a, scene);
        ++n;
    }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

// Tracks created files so a failed run leaves nothing behind.
class OutputSet {
  public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
        created_dir_ = !fs::exists(dir_);
        fs::create_directories(dir_);
    }
    ~OutputSet() {
        if (committed_) return;
        std::error_code ec;
        if (created_dir_) {
            fs::remove_all(dir_, ec);
            return;
        }
        for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) fs::remove(*it, ec);
    }

    fs::path file(const fs::path& relative) {
        const fs::path p = dir_ / relative;
        if (p.has_parent_path() && !fs::exists(p.parent_path())) {
            fs::create_directories(p.parent_path());
            paths_.push_back(p.parent_path());
        }
        paths_.push_back(p);
        return p;
    }
    std::ofstream open(const fs::path& relative) {
        const fs::path p = file(relative);
        std::ofstream os(p, std::ios::binary);
        if (!os) {
            paths_.pop_back();
            throw std::runtime_error("cannot write " + p.string());
        }
        return os;
    }
    void commit() { committed_ = true; }

  private:
    fs::path dir_;
    std::vector<fs::path> paths_;
    bool created_dir_ = false;
    bool committed_ = false;
};

std::string indexed(std::string_view stem, std::size_t i, std::string_view ext) {
    std::string n = std::to_string(i);
    if (n.size() < 3) n.insert(0, 3 - n.size(), '0');
    return std::string(stem) + n + std::string(ext);
}

void finish_stream(std::ofstream& os) {
    os.close();
    if (!os) throw std::runtime_error("write failed");
}

}  // namespace

Scene hold_scene(const ExperimentConfig& config) {
    const EnsembleConfig& e = config.ensemble.value();
    Scene hold;
    hold.species = config.scene.species;
    hold.domain = config.scene.domain;
    GuideSpec dark = config.scene.guides.at(e.site.guide);
    dark.peak_depth = 0.0;
    hold.guides.push_back(dark);
    SpotBeam trap;
    trap.id = "hold";
    trap.center = dark.point_at(e.site.s);
    trap.waist = e.hold_waist;
    trap.delta_f2 = trap.delta_f3 = -500e9;
    trap.depth_f2 = trap.depth_f3 = -e.hold_depth;
    hold.spots.push_back(trap);
    return hold;
}

HeldEnsemble load_and_hold(const ExperimentConfig& config) {
    const EnsembleConfig& e = config.ensemble.value();
    HeldEnsemble held;
    const bool holding = e.hold_depth > 0;
    const Scene scene = holding ? hold_scene(config) : config.scene;
    LoadSite site = e.site;
    if (holding) site.guide = 0;
    LoadOptions options;
    options.window_half_width = e.window_half_width;
    held.ensemble = sample_thermal_ensemble(scene, site, e.temperature, e.n, load_state(e.state), e.seed, options);
    if (e.state == LoadState::Mixed)
        for (std::size_t i = 1; i < e.n; i += 2) held.ensemble.atoms[i].state = HyperfineState::F3;
    held.loaded = e.n;

    if (holding && e.hold_time > 0) {
        RunConfig run;
        run.duration = e.hold_time;
        run.scattering = config.run.scattering;
        run.record_stride = 0;
        run.workers = config.run.workers;
        run.escape_time = config.run.escape_time;
        run.recoil_axis_angle = config.run.recoil_axis_angle;
        propagate(held.ensemble, scene, run);
    }
    if (e.n > 0) held.retention = static_cast<double>(held.ensemble.alive_count()) / static_cast<double>(e.n);
    return held;
}

void transfer(Ensemble& ensemble, const EnsembleConfig& e, const SpeciesConstants& species) {
    const double speed = std::sqrt(2.0 * e.launch_energy / species.mass);
    const Vec2 kick = speed * direction(e.launch_angle);
    for (auto& a : ensemble.atoms) {
        if (!a.alive) continue;
        a.velocity += kick;
        a.unbound_time = 0.0;
    }
    ensemble.time = 0.0;
}

ExperimentResult simulate(const ExperimentConfig& config) {
    ExperimentResult result;
    Summary& s = result.summary;

    if (config.ensemble) {
        const EnsembleConfig& e = *config.ensemble;
        HeldEnsemble held = load_and_hold(config);
        Ensemble& ensemble = held.ensemble;
        transfer(ensemble, e, config.scene.species);
        s.emplace_back("n_loaded", static_cast<double>(held.loaded));
        s.emplace_back("hold_retention", held.retention);
        s.emplace_back("mean_energy_start_J", mean_energy(ensemble, config.scene));

        std::vector<double> stops;
        if (config.image) {
            for (double t : config.image->times) {
                if (t > config.run.duration)
                    throw ParameterError("image time " + format_number(t) + " s is after the end of the run");
                stops.push_back(t);
            }
        }
        stops.push_back(config.run.duration);
        stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

        double t = 0.0;
        for (double stop : stops) {
            RunConfig segment = config.run;
            segment.duration = stop - t;
            TrajectoryRecord part = propagate(ensemble, config.scene, segment);
            auto& snaps = result.record.snapshots;
            auto first = part.snapshots.begin();
            if (!snaps.empty() && first != part.snapshots.end()) ++first;
            snaps.insert(snaps.end(), std::make_move_iterator(first),
                         std::make_move_iterator(part.snapshots.end()));
            result.record.steps += part.steps;
            result.record.dt = part.dt;
            result.record.walltime_s += part.walltime_s;
            ensemble.time = stop;
            t = stop;

            if (!config.image) continue;
            const ImageConfig& im = *config.image;
            for (double when : im.times) {
                if (when != stop) continue;
                ImageResult img;
                img.time = when;
                img.frame = render_atoms(ensemble.atoms, config.scene.domain, im.options);
                if (im.line) {
                    img.profile = line_profile(img.frame, *im.line, im.line_half_width);
                    if (im.window_1 && im.window_2) {
                        const double total = img.frame.total();
                        if (total > 0) img.ratio = splitting_ratio(*img.profile, *im.window_1, *im.window_2);
                    }
                }
                result.images.push_back(std::move(img));
            }
        }
        std::sort(result.images.begin(), result.images.end(),
                  [](const ImageResult& a, const ImageResult& b) { return a.time < b.time; });

        s.emplace_back("n_alive", static_cast<double>(ensemble.alive_count()));
        s.emplace_back("n_lost", static_cast<double>(ensemble.exited_count()));
        s.emplace_back("mean_energy_end_J", mean_energy(ensemble, config.scene));
        const auto ports = effective_ports(config);
        if (!ports.empty()) {
            const PortCounts counts = assign_ports(ensemble.atoms, ports);
            const auto fractions = counts.fractions();
            for (std::size_t i = 0; i < ports.size(); ++i) {
                s.emplace_back("port_" + ports[i].name + "_count", static_cast<double>(counts.counts[i]));
                s.emplace_back("port_" + ports[i].name + "_fraction", fractions[i]);
            }
            s.emplace_back("port_unassigned", static_cast<double>(counts.unassigned));
            if (e.state == LoadState::Mixed) {
                for (HyperfineState st : {HyperfineState::F2, HyperfineState::F3}) {
                    std::vector<Atom> subset;
                    for (const auto& a : ensemble.atoms)
                        if (a.state == st) subset.push_back(a);
                    const PortCounts c = assign_ports(subset, ports);
                    for (std::size_t i = 0; i < ports.size(); ++i)
                        s.emplace_back("port_" + ports[i].name + "_" + state_name(st) + "_count",
                                       static_cast<double>(c.counts[i]));
                }
            }
        }
        for (std::size_t i = 0; i < result.images.size(); ++i) {
            const ImageResult& img = result.images[i];
            const std::string key = indexed("image_", i, "");
            s.emplace_back(key + "_time_s", img.time);
            s.emplace_back(key + "_total", img.frame.total());
            if (img.ratio) {
                s.emplace_back(key + "_r1", img.ratio->first);
                s.emplace_back(key + "_r2", img.ratio->second);
            }
        }
        result.final_ensemble = std::move(ensemble);
    }

    if (config.quantum) {
        const MiniatureMzParams& q = *config.quantum;
        const MiniatureMz mz = make_miniature_mz(q, config.scene.species);
        result.fringe = mz_fringe_scan(mz.fringe, mz.depths, mz.packet, q.workers);
        double worst = 0.0;
        for (const auto& p : result.fringe->points) worst = std::max(worst, p.losses);
        s.emplace_back("fringe_contrast", result.fringe->contrast);
        s.emplace_back("fringe_correlation", result.fringe->correlation);
        s.emplace_back("fringe_max_losses", worst);
        s.emplace_back("phase_shifter_transit_s", mz.transit_time);
    }
    return result;
}

void write_summary_csv(std::ostream& os, const Summary& summary) {
    CsvWriter csv(os);
    csv.row("quantity", "value");
    for (const auto& [k, v] : summary) csv.row(k, v);
}

std::string manifest_text(const ExperimentConfig& config) {
    std::string out = "# atomguide " ATOMGUIDE_VERSION "\n";
    if (config.ensemble) out += "# seed " + std::to_string(config.ensemble->seed) + "\n";
    return out + serialize(config.document);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir) {
    OutputSet out(out_dir);
    ExperimentResult result = simulate(config);

    if (config.ensemble) {
        auto os = out.open("trajectories.csv");
        write_trajectory_csv(os, result.record);
        finish_stream(os);
    }
    for (std::size_t i = 0; i < result.images.size(); ++i) {
        const ImageResult& img = result.images[i];
        const fs::path pgm = out.file(fs::path("images") / indexed("frame_", i, ".pgm"));
        out.file(fs::path("images") / indexed("frame_", i, ".pgm.hdr"));
        write_image_files(pgm, img.frame);
        if (img.profile) {
            auto os = out.open(fs::path("profiles") / indexed("profile_", i, ".csv"));
            write_profile_csv(os, *img.profile);
            finish_stream(os);
        }
    }
    if (result.fringe) {
        auto os = out.open("fringe.csv");
        write_fringe_csv(os, *result.fringe);
        finish_stream(os);
    }
    {
        auto os = out.open("summary.csv");
        write_summary_csv(os, result.summary);
        finish_stream(os);
    }
    {
        auto os = out.open("run_manifest");
        os << manifest_text(config);
        finish_stream(os);
    }
    out.commit();
    return result;
}

std::vector<SweepRow> sweep_power_ratio(const ExperimentConfig& config, std::span<const double> ratios) {
    if (!config.ensemble) throw ParameterError("a sweep needs an ensemble");
    const SweepConfig sweep = config.sweep.value_or(SweepConfig{});
    if (std::max(sweep.guide_a, sweep.guide_b) >= config.scene.guides.size())
        throw ParameterError("sweep guides are missing from the scene");
    for (double r : ratios)
        if (!(r > 0)) throw ParameterError("sweep ratios must be > 0");

    const HeldEnsemble held = load_and_hold(config);
    const std::string name_a = config.scene.guides[sweep.guide_a].id + "+";
    const std::string name_b = config.scene.guides[sweep.guide_b].id + "+";

    std::vector<SweepRow> rows(ratios.size());
    auto run_point = [&](std::size_t i) {
        Scene scene = config.scene;
        scene.guides[sweep.guide_b].peak_depth = ratios[i] * scene.guides[sweep.guide_a].peak_depth;
        Ensemble ensemble = held.ensemble;
        transfer(ensemble, *config.ensemble, scene.species);
        RunConfig run = config.run;
        run.workers = 1;
        run.record_stride = 0;
        run.dt = config.run.dt > 0 ? std::min(config.run.dt, default_time_step(scene)) : 0.0;
        propagate(ensemble, scene, run);

        const auto ports = arm_ports(scene, true);
        const PortCounts counts = assign_ports(ensemble.atoms, ports);
        SweepRow& row = rows[i];
        row.ratio = ratios[i];
        row.n_lost = counts.lost;
        for (std::size_t k = 0; k < ports.size(); ++k) {
            if (ports[k].name == name_a) row.count_a = counts.counts[k];
            if (ports[k].name == name_b) row.count_b = counts.counts[k];
        }
        const double both = static_cast<double>(row.count_a + row.count_b);
        row.r1 = both > 0 ? static_cast<double>(row.count_a) / both : 0.0;
        row.r2 = both > 0 ? static_cast<double>(row.count_b) / both : 0.0;
    };

    const std::size_t workers =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::max(sweep.workers, 1)), 1, std::max<std::size_t>(ratios.size(), 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < ratios.size(); ++i) run_point(i);
        return rows;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < ratios.size(); i += workers) run_point(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return rows;
}

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
    CsvWriter csv(os);
    csv.row("ratio", "r1", "r2", "n_lost");
    for (const auto& r : rows) csv.row(r.ratio, r.r1, r.r2, r.n_lost);
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const fs::path& out_dir) {
    if (!config.sweep) throw ParameterError("the scene has no [sweep] section");
    OutputSet out(out_dir);
    const auto rows = sweep_power_ratio(config, config.sweep->ratios);
    {
        auto os = out.open("sweep.csv");
        write_sweep_csv(os, rows);
        finish_stream(os);
    }
    {
        auto os = out.open("run_manifest");
        os << manifest_text(config);
        finish_stream(os);
    }
    out.commit();
    return rows;
}

}  // namespace atomguide

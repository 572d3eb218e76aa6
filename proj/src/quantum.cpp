#include "atomguide/quantum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "atomguide/csv.hpp"

namespace atomguide {

using std::numbers::pi;
using cplx = std::complex<double>;

namespace {

// FFTW planning is not thread-safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

Eigen::ArrayXd fft_wavenumbers(int n, double length) {
    Eigen::ArrayXd k(n);
    const double dk = 2.0 * pi / length;
    for (int i = 0; i < n; ++i) k[i] = dk * (i < n / 2 ? i : i - n);
    return k;
}

fftw_complex* as_fftw(ComplexField& f) { return reinterpret_cast<fftw_complex*>(f.data()); }

// Product without the NaN recovery of the library operator.
inline void multiply_into(cplx& a, const cplx& b) {
    const double re = a.real() * b.real() - a.imag() * b.imag();
    const double im = a.real() * b.imag() + a.imag() * b.real();
    a = {re, im};
}

}  // namespace

Eigen::ArrayXd GridSpec::xs() const {
    return center.x() - 0.5 * extent.x() + dx() * (Eigen::ArrayXd::LinSpaced(nx, 0, nx - 1) + 0.5);
}

Eigen::ArrayXd GridSpec::ys() const {
    return center.y() - 0.5 * extent.y() + dy() * (Eigen::ArrayXd::LinSpaced(ny, 0, ny - 1) + 0.5);
}

Eigen::ArrayXd GridSpec::kx() const { return fft_wavenumbers(nx, extent.x()); }
Eigen::ArrayXd GridSpec::ky() const { return fft_wavenumbers(ny, extent.y()); }

void GridSpec::validate() const {
    if (!is_power_of_two(nx) || !is_power_of_two(ny))
        throw ParameterError("grid dimensions must be powers of two");
    if (!(extent.array() > 0).all()) throw ParameterError("grid extent must be positive");
}

double GridSpec::required_spacing(double speed, double mass) {
    return constants::planck / (mass * speed) / 8.0;
}

double Wavepacket::norm() const { return psi.abs2().sum() * grid.cell_area(); }

Vec2 Wavepacket::mean_position() const {
    const Eigen::ArrayXXd rho = psi.abs2();
    const double total = rho.sum();
    const double mx = (rho.colwise().sum().transpose() * grid.xs()).sum() / total;
    const double my = (rho.rowwise().sum() * grid.ys()).sum() / total;
    return {mx, my};
}

Vec2 Wavepacket::position_variance() const {
    const Eigen::ArrayXXd rho = psi.abs2();
    const double total = rho.sum();
    const Eigen::ArrayXd px = rho.colwise().sum().transpose() / total;
    const Eigen::ArrayXd py = rho.rowwise().sum() / total;
    const double mx = (px * grid.xs()).sum();
    const double my = (py * grid.ys()).sum();
    return {(px * (grid.xs() - mx).square()).sum(), (py * (grid.ys() - my).square()).sum()};
}

Vec2 Wavepacket::mean_wavevector() const {
    ComplexField spectrum = psi;
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_2d(grid.ny, grid.nx, as_fftw(spectrum), as_fftw(spectrum), FFTW_FORWARD,
                                FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    const Eigen::ArrayXXd rho = spectrum.abs2();
    const double total = rho.sum();
    const double kx = (rho.colwise().sum().transpose() * grid.kx()).sum() / total;
    const double ky = (rho.rowwise().sum() * grid.ky()).sum() / total;
    return {kx, ky};
}

Wavepacket init_gaussian_packet(const GridSpec& grid, const Vec2& center, const Vec2& sigma,
                                const Vec2& velocity, const SpeciesConstants& species,
                                HyperfineState state) {
    grid.validate();
    if (!(sigma.array() > 0).all()) throw ParameterError("packet width must be positive");
    const Bounds b = grid.bounds();
    double outside = 0.0;
    for (int k = 0; k < 2; ++k) {
        const double s = std::sqrt(2.0) * sigma[k];
        outside += 0.5 * std::erfc((center[k] - b.min[k]) / s) + 0.5 * std::erfc((b.max[k] - center[k]) / s);
    }
    if (outside > 1e-6) {
        std::ostringstream msg;
        msg << "packet clipped by the grid edge: " << outside << " of the probability lies outside";
        throw ParameterError(msg.str());
    }

    const Vec2 k0 = species.mass * velocity / species.hbar;
    const Eigen::ArrayXd xs = grid.xs();
    const Eigen::ArrayXd ys = grid.ys();
    const Eigen::ArrayXcd fx =
        ((-(xs - center.x()).square() / (4.0 * sigma.x() * sigma.x())).cast<cplx>() +
         cplx(0, 1) * (k0.x() * (xs - center.x())).cast<cplx>())
            .exp();
    const Eigen::ArrayXcd fy =
        ((-(ys - center.y()).square() / (4.0 * sigma.y() * sigma.y())).cast<cplx>() +
         cplx(0, 1) * (k0.y() * (ys - center.y())).cast<cplx>())
            .exp();

    Wavepacket packet;
    packet.grid = grid;
    packet.state = state;
    packet.psi = (fy.matrix() * fx.matrix().transpose()).array();
    packet.psi /= std::sqrt(packet.norm());
    return packet;
}

RealField absorber_mask(const GridSpec& grid, const AbsorberOptions& options) {
    RealField mask = RealField::Ones(grid.ny, grid.nx);
    if (!options.enabled || options.fraction <= 0) return mask;
    auto ramp = [&](int n) {
        Eigen::ArrayXd r = Eigen::ArrayXd::Ones(n);
        const double width = options.fraction * n;
        for (int i = 0; i < n; ++i) {
            const double from_edge = std::min(i + 0.5, n - i - 0.5);
            if (from_edge < width) {
                const double c = std::sin(0.5 * pi * from_edge / width);
                r[i] = c * c;
            }
        }
        return r;
    };
    const Eigen::ArrayXd rx = ramp(grid.nx);
    const Eigen::ArrayXd ry = ramp(grid.ny);
    return (ry.matrix() * rx.matrix().transpose()).array();
}

// Spectral work is done in two aligned buffers: `x` holds the field in
// position order (ny x nx) and `k` its transpose (nx x ny), so both passes
// of the 2D transform run over contiguous rows. The spectrum stays
// transposed between the forward and backward passes.
struct SplitStepPropagator::Plans {
    int ny, nx;
    fftw_complex* x = nullptr;
    fftw_complex* k = nullptr;
    fftw_plan rows_x_forward = nullptr;
    fftw_plan rows_x_backward = nullptr;
    fftw_plan rows_k_forward = nullptr;
    fftw_plan rows_k_backward = nullptr;
    fftw_plan x_to_k = nullptr;
    fftw_plan k_to_x = nullptr;

    Plans(int rows, int cols) : ny(rows), nx(cols) {
        const auto size = static_cast<std::size_t>(ny) * nx;
        x = fftw_alloc_complex(size);
        k = fftw_alloc_complex(size);
        std::lock_guard lock(planner_mutex());
        int len_x[] = {nx};
        int len_k[] = {ny};
        rows_x_forward = fftw_plan_many_dft(1, len_x, ny, x, nullptr, 1, nx, x, nullptr, 1, nx,
                                            FFTW_FORWARD, FFTW_ESTIMATE);
        rows_x_backward = fftw_plan_many_dft(1, len_x, ny, x, nullptr, 1, nx, x, nullptr, 1, nx,
                                             FFTW_BACKWARD, FFTW_ESTIMATE);
        rows_k_forward = fftw_plan_many_dft(1, len_k, nx, k, nullptr, 1, ny, k, nullptr, 1, ny,
                                            FFTW_FORWARD, FFTW_ESTIMATE);
        rows_k_backward = fftw_plan_many_dft(1, len_k, nx, k, nullptr, 1, ny, k, nullptr, 1, ny,
                                             FFTW_BACKWARD, FFTW_ESTIMATE);
        fftw_iodim64 to_k[2] = {{ny, nx, 1}, {nx, 1, ny}};
        fftw_iodim64 to_x[2] = {{nx, ny, 1}, {ny, 1, nx}};
        x_to_k = fftw_plan_guru64_dft(0, nullptr, 2, to_k, x, k, FFTW_FORWARD, FFTW_ESTIMATE);
        k_to_x = fftw_plan_guru64_dft(0, nullptr, 2, to_x, k, x, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    ~Plans() {
        {
            std::lock_guard lock(planner_mutex());
            for (fftw_plan p : {rows_x_forward, rows_x_backward, rows_k_forward, rows_k_backward,
                                x_to_k, k_to_x})
                fftw_destroy_plan(p);
        }
        fftw_free(x);
        fftw_free(k);
    }

    cplx* field() { return reinterpret_cast<cplx*>(x); }
    cplx* spectrum() { return reinterpret_cast<cplx*>(k); }
};

SplitStepPropagator::SplitStepPropagator(const GridSpec& grid, const RealField& potential,
                                         double mass, double dt, const AbsorberOptions& absorber,
                                         double hbar)
    : grid_(grid), dt_(dt), absorbing_(absorber.enabled) {
    grid.validate();
    if (potential.rows() != grid.ny || potential.cols() != grid.nx)
        throw ParameterError("potential array does not match the grid");
    if (!(dt > 0)) throw ParameterError("time step must be > 0");
    max_phase_ = dt * potential.abs().maxCoeff() / hbar;
    if (max_phase_ >= 0.1) {
        std::ostringstream msg;
        msg << "potential phase per step " << max_phase_ << " rad >= 0.1; reduce dt";
        throw TimeStepError(msg.str());
    }

    // Kinetic factors in the transposed spectral layout (nx x ny).
    const Eigen::ArrayXd kx2 = grid.kx().square();
    const Eigen::ArrayXd ky2 = grid.ky().square();
    const RealField k2 = kx2.replicate(1, grid.ny) + ky2.transpose().replicate(grid.nx, 1);
    const double norm = 1.0 / (static_cast<double>(grid.nx) * grid.ny);
    const RealField kinetic_phase = hbar * k2 / (2.0 * mass) * dt;
    half_kinetic_ = (cplx(0, -0.5) * kinetic_phase.cast<cplx>()).exp() * norm;
    full_kinetic_ = (cplx(0, -1.0) * kinetic_phase.cast<cplx>()).exp() * norm;
    mask_ = absorber_mask(grid, absorber);
    potential_phase_ = (cplx(0, -dt / hbar) * potential.cast<cplx>()).exp() * mask_.cast<cplx>();
    loss_weight_ = 1.0 - mask_.square();
    plans_ = std::make_unique<Plans>(grid.ny, grid.nx);
}

SplitStepPropagator::~SplitStepPropagator() = default;
SplitStepPropagator::SplitStepPropagator(SplitStepPropagator&&) noexcept = default;
SplitStepPropagator& SplitStepPropagator::operator=(SplitStepPropagator&&) noexcept = default;

void SplitStepPropagator::kinetic(const ComplexField& factor) {
    Plans& p = *plans_;
    fftw_execute(p.rows_x_forward);
    fftw_execute(p.x_to_k);
    fftw_execute(p.rows_k_forward);
    cplx* k = p.spectrum();
    const cplx* f = factor.data();
    const Eigen::Index n = factor.size();
    for (Eigen::Index i = 0; i < n; ++i) multiply_into(k[i], f[i]);
    fftw_execute(p.rows_k_backward);
    fftw_execute(p.k_to_x);
    fftw_execute(p.rows_x_backward);
}

void SplitStepPropagator::potential_and_absorber() {
    cplx* x = plans_->field();
    const cplx* f = potential_phase_.data();
    const Eigen::Index n = potential_phase_.size();
    if (absorbing_) {
        const double* w = loss_weight_.data();
        double lost = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            lost += std::norm(x[i]) * w[i];
            multiply_into(x[i], f[i]);
        }
        absorbed_ += lost * grid_.cell_area();
    } else {
        for (Eigen::Index i = 0; i < n; ++i) multiply_into(x[i], f[i]);
    }
}

void SplitStepPropagator::load(const Wavepacket& packet) {
    if (packet.psi.rows() != grid_.ny || packet.psi.cols() != grid_.nx)
        throw ParameterError("packet does not match the propagator grid");
    std::copy_n(packet.psi.data(), packet.psi.size(), plans_->field());
}

void SplitStepPropagator::store(Wavepacket& packet) {
    std::copy_n(plans_->field(), packet.psi.size(), packet.psi.data());
}

void SplitStepPropagator::step(Wavepacket& packet) { advance(packet, 1); }

void SplitStepPropagator::advance(Wavepacket& packet, std::size_t steps) {
    if (steps == 0) return;
    load(packet);
    kinetic(half_kinetic_);
    for (std::size_t i = 0; i + 1 < steps; ++i) {
        potential_and_absorber();
        kinetic(full_kinetic_);
    }
    potential_and_absorber();
    kinetic(half_kinetic_);
    store(packet);
    packet.time += dt_ * static_cast<double>(steps);
}

RealField scene_potential(const Scene& scene, const GridSpec& grid, HyperfineState state) {
    return sample_potential_grid(scene, grid.xs(), grid.ys(), state);
}

Wavepacket split_step(Wavepacket packet, const Scene& scene, double dt) {
    SplitStepPropagator prop(packet.grid, scene_potential(scene, packet.grid, packet.state),
                             scene.species.mass, dt, {}, scene.species.hbar);
    prop.step(packet);
    return packet;
}

bool point_in_polygon(const Vec2& p, const Polygon& polygon) {
    bool inside = false;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = polygon[i];
        const Vec2& b = polygon[j];
        if ((a.y() > p.y()) != (b.y() > p.y())) {
            const double x_cross = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
            if (p.x() < x_cross) inside = !inside;
        }
    }
    return inside;
}

double port_population(const Wavepacket& packet, const Polygon& region) {
    if (region.size() < 3) throw ParameterError("region polygon needs at least three vertices");
    const Eigen::ArrayXd xs = packet.grid.xs();
    const Eigen::ArrayXd ys = packet.grid.ys();
    double total = 0.0;
    for (int iy = 0; iy < packet.grid.ny; ++iy)
        for (int ix = 0; ix < packet.grid.nx; ++ix)
            if (point_in_polygon({xs[ix], ys[iy]}, region)) total += std::norm(packet.psi(iy, ix));
    return total * packet.grid.cell_area();
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw ParameterError("correlation needs two equal series");
    const Eigen::Map<const Eigen::ArrayXd> x(a.data(), static_cast<Eigen::Index>(a.size()));
    const Eigen::Map<const Eigen::ArrayXd> y(b.data(), static_cast<Eigen::Index>(b.size()));
    const Eigen::ArrayXd dx = x - x.mean();
    const Eigen::ArrayXd dy = y - y.mean();
    const double denom = std::sqrt(dx.square().sum() * dy.square().sum());
    return denom > 0 ? (dx * dy).sum() / denom : 0.0;
}

FringeScan mz_fringe_scan(const FringeTemplate& tmpl, std::span<const double> depths,
                          const PacketConfig& packet_config, int workers) {
    if (tmpl.phase_spot >= tmpl.scene.spots.size()) throw ParameterError("phase spot index out of range");
    const auto steps = static_cast<std::size_t>(std::llround(tmpl.duration / tmpl.dt));
    FringeScan scan;
    scan.points.resize(depths.size());

    auto run_point = [&](std::size_t i) {
        Scene scene = tmpl.scene;
        SpotBeam& spot = scene.spots[tmpl.phase_spot];
        spot.depth_f2 = -depths[i];
        spot.depth_f3 = -depths[i] * spot.delta_f2 / spot.delta_f3;
        Wavepacket packet =
            init_gaussian_packet(tmpl.grid, packet_config.center, packet_config.sigma,
                                 packet_config.velocity, scene.species, packet_config.state);
        SplitStepPropagator prop(tmpl.grid, scene_potential(scene, tmpl.grid, packet.state),
                                 scene.species.mass, tmpl.dt, tmpl.absorber, scene.species.hbar);
        prop.advance(packet, steps);
        scan.points[i] = {depths[i], port_population(packet, tmpl.out1),
                          port_population(packet, tmpl.out2), prop.absorbed()};
    };

    const std::size_t n = depths.size();
    const std::size_t pool_size = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(n, 1));
    if (pool_size == 1) {
        for (std::size_t i = 0; i < n; ++i) run_point(i);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (std::size_t w = 0; w < pool_size; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += pool_size) run_point(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    if (!scan.points.empty()) {
        std::vector<double> p1, p2;
        for (const auto& p : scan.points) p1.push_back(p.p_out1), p2.push_back(p.p_out2);
        const auto [lo, hi] = std::minmax_element(p1.begin(), p1.end());
        scan.contrast = (*hi + *lo) > 0 ? (*hi - *lo) / (*hi + *lo) : 0.0;
        if (p1.size() >= 2) scan.correlation = pearson_correlation(p1, p2);
    }
    return scan;
}

void write_fringe_csv(std::ostream& os, const FringeScan& scan) {
    CsvWriter csv(os);
    csv.row("depth_J", "p_out1", "p_out2", "losses", "contrast");
    for (const auto& p : scan.points) csv.row(p.depth, p.p_out1, p.p_out2, p.losses, scan.contrast);
}

}  // namespace atomguide

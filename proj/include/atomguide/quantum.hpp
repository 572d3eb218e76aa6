#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "atomguide/potential.hpp"

namespace atomguide {

using ComplexField = Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RealField = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Polygon = std::vector<Vec2>;

/// Uniform periodic grid of cell centers; field(iy, ix) sits at
/// (xs[ix], ys[iy]). Even counts keep the grid mirror-symmetric about
/// `center`.
struct GridSpec {
    int nx = 256;
    int ny = 256;
    Vec2 extent = Vec2::Constant(20e-6);
    Vec2 center = Vec2::Zero();

    double dx() const { return extent.x() / nx; }
    double dy() const { return extent.y() / ny; }
    double cell_area() const { return dx() * dy(); }
    Bounds bounds() const { return {center - 0.5 * extent, center + 0.5 * extent}; }
    Eigen::ArrayXd xs() const;
    Eigen::ArrayXd ys() const;
    /// Angular wavenumbers in FFT order.
    Eigen::ArrayXd kx() const;
    Eigen::ArrayXd ky() const;

    /// Throws ParameterError unless nx, ny are powers of two and the extent
    /// is positive.
    void validate() const;
    /// Grid spacing needed to resolve speed v: lambda_dB / 8.
    static double required_spacing(double speed, double mass);
};

struct Wavepacket {
    GridSpec grid;
    ComplexField psi;
    double time = 0.0;
    HyperfineState state = HyperfineState::F2;

    double norm() const;
    Vec2 mean_position() const;
    /// Position variance along x and y.
    Vec2 position_variance() const;
    /// Mean wavevector from the spectral density.
    Vec2 mean_wavevector() const;
};

/// Gaussian packet with position rms `sigma` per axis, moving at `velocity`,
/// normalized on the grid. Throws ParameterError if more than 1e-6 of the
/// analytic probability lies outside the grid.
Wavepacket init_gaussian_packet(const GridSpec& grid, const Vec2& center, const Vec2& sigma,
                                const Vec2& velocity, const SpeciesConstants& species,
                                HyperfineState state = HyperfineState::F2);

struct AbsorberOptions {
    bool enabled = true;
    /// Width of the cos^2 amplitude ramp as a fraction of each grid extent.
    double fraction = 0.1;
};

/// Amplitude mask: 1 in the interior, cos^2 ramp to 0 across the outer
/// `fraction` of the grid on each side.
RealField absorber_mask(const GridSpec& grid, const AbsorberOptions& options);

/// Strang-split propagator exp(-iT dt/2) exp(-iV dt) exp(-iT dt/2) with
/// FFT kinetic steps. Owns its FFTW plans.
class SplitStepPropagator {
  public:
    /// Throws TimeStepError if dt * max|V| / hbar >= 0.1.
    SplitStepPropagator(const GridSpec& grid, const RealField& potential, double mass, double dt,
                        const AbsorberOptions& absorber = {},
                        double hbar = constants::hbar);
    ~SplitStepPropagator();
    SplitStepPropagator(SplitStepPropagator&&) noexcept;
    SplitStepPropagator& operator=(SplitStepPropagator&&) noexcept;
    SplitStepPropagator(const SplitStepPropagator&) = delete;
    SplitStepPropagator& operator=(const SplitStepPropagator&) = delete;

    /// One symmetric step; the absorber acts together with the potential.
    void step(Wavepacket& packet);
    /// `steps` steps with adjacent half kinetic factors fused.
    void advance(Wavepacket& packet, std::size_t steps);

    /// Probability removed by the absorber so far.
    double absorbed() const { return absorbed_; }
    double dt() const { return dt_; }
    double max_phase_per_step() const { return max_phase_; }

  private:
    struct Plans;
    void kinetic(const ComplexField& factor);
    void potential_and_absorber();
    void load(const Wavepacket& packet);
    void store(Wavepacket& packet);

    GridSpec grid_;
    double dt_;
    double max_phase_;
    double absorbed_ = 0.0;
    bool absorbing_;
    ComplexField half_kinetic_;
    ComplexField full_kinetic_;
    /// exp(-i V dt / hbar) times the absorber mask.
    ComplexField potential_phase_;
    RealField mask_;
    /// Probability fraction removed per cell by one mask application.
    RealField loss_weight_;
    std::unique_ptr<Plans> plans_;
};

/// Potential of the scene on the grid points.
RealField scene_potential(const Scene& scene, const GridSpec& grid, HyperfineState state);

/// Single symmetric split step in the scene's potential (absorber on).
Wavepacket split_step(Wavepacket packet, const Scene& scene, double dt);

bool point_in_polygon(const Vec2& p, const Polygon& polygon);

/// Probability inside `region`.
double port_population(const Wavepacket& packet, const Polygon& region);

struct PacketConfig {
    Vec2 center = Vec2::Zero();
    Vec2 sigma = Vec2::Constant(1e-6);
    Vec2 velocity = Vec2::Zero();
    HyperfineState state = HyperfineState::F2;
};

/// Miniature interferometer run: the spot `phase_spot` is the phase shifter
/// whose F=2 depth is scanned; the two output regions are measured at the
/// end of `duration`.
struct FringeTemplate {
    Scene scene;
    std::size_t phase_spot = 0;
    GridSpec grid;
    double dt = 1e-7;
    double duration = 1e-3;
    Polygon out1;
    Polygon out2;
    AbsorberOptions absorber;
};

struct FringePoint {
    double depth = 0.0;
    double p_out1 = 0.0;
    double p_out2 = 0.0;
    double losses = 0.0;
};

struct FringeScan {
    std::vector<FringePoint> points;
    /// (max - min) / (max + min) of p_out1 over the scan.
    double contrast = 0.0;
    /// Pearson correlation of p_out1 and p_out2.
    double correlation = 0.0;
};

/// One propagation per depth (J, magnitude of the attractive F=2 depth).
/// Scan points are independent; results do not depend on `workers`.
FringeScan mz_fringe_scan(const FringeTemplate& scene_template, std::span<const double> depths,
                          const PacketConfig& packet, int workers = 1);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

/// CSV columns depth_J, p_out1, p_out2, losses, contrast.
void write_fringe_csv(std::ostream& os, const FringeScan& scan);

}  // namespace atomguide

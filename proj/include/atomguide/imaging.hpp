#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "atomguide/dynamics.hpp"

namespace atomguide {

/// Synthetic fluorescence image. pixels(row, col); row 0 is the top of the
/// frame (largest y). `origin` is the center of pixel (0, 0).
struct ImageFrame {
    Eigen::ArrayXXd pixels;
    double pixel_pitch = 7e-6;
    Vec2 origin = Vec2::Zero();
    double psf_rms = 14e-6;
    double exposure = 0.8e-3;

    Eigen::Index rows() const { return pixels.rows(); }
    Eigen::Index cols() const { return pixels.cols(); }
    Vec2 pixel_center(Eigen::Index row, Eigen::Index col) const {
        return {origin.x() + static_cast<double>(col) * pixel_pitch,
                origin.y() - static_cast<double>(row) * pixel_pitch};
    }
    /// Physical rectangle covered by the pixels.
    Bounds bounds() const;
    double total() const { return pixels.sum(); }
    /// Bilinear interpolation of pixel values at a physical point; zero
    /// outside the frame.
    double sample(const Vec2& p) const;
};

/// Pixel grid covering `region` at `pixel_pitch`.
struct FrameGeometry {
    Bounds region;
    double pixel_pitch = 7e-6;
};

struct ImagingOptions {
    double psf_rms = 14e-6;
    double exposure = 0.8e-3;
    double pixel_pitch = 7e-6;
    /// Detected photons per atom per exposure.
    double photon_yield = 1.0;
    /// Sub-samples of the ballistic motion during the exposure.
    int motion_samples = 16;
    bool poisson_noise = false;
    std::uint64_t noise_seed = 0;
};

/// Fluorescence image of alive atoms. Guides are off during the exposure:
/// each atom coasts from its position at the start of the exposure. Counts
/// are deposited at the nearest pixel and blurred with an isotropic
/// Gaussian PSF of rms psf_rms.
ImageFrame render_atoms(std::span<const Atom> atoms, const Bounds& region,
                        const ImagingOptions& options);

/// render_atoms on the snapshot recorded at `time`. Throws ParameterError if
/// the record has no snapshot there.
ImageFrame render_image(const TrajectoryRecord& record, double time, const Bounds& region,
                        const ImagingOptions& options);

/// Separable Gaussian blur with a normalized kernel truncated at 6 sigma.
Eigen::ArrayXXd gaussian_blur(const Eigen::ArrayXXd& image, double sigma_pixels);

struct LineSegment {
    Vec2 start = Vec2::Zero();
    Vec2 end = Vec2::UnitX();
};

struct LineProfile {
    /// (arc length m, intensity integrated across the line per unit length)
    std::vector<std::pair<double, double>> samples;
    LineSegment line;
    double integration_half_width = 0.0;
};

/// Intensity integrated perpendicular to `line` over +-half_width, sampled
/// every pixel pitch. Throws DomainError if the line leaves the frame.
LineProfile line_profile(const ImageFrame& image, const LineSegment& line, double half_width);

/// Fractions of the profile integral in two arc-length windows, summing
/// to one. Throws ParameterError for overlapping windows or an empty pair.
std::pair<double, double> splitting_ratio(const LineProfile& profile,
                                          std::pair<double, double> window_1,
                                          std::pair<double, double> window_2);

/// Binary 16-bit PGM (big-endian, row-major, top-left first). Pixels are
/// scaled so the maximum maps to 65535; returns the counts per grey level.
double write_pgm(std::ostream& os, const ImageFrame& frame);

/// Writes <path> and <path>.hdr; the header records the geometry and the
/// intensity scale.
void write_image_files(const std::filesystem::path& path, const ImageFrame& frame);

/// Reads a binary 16-bit PGM into grey levels.
Eigen::ArrayXXd read_pgm(std::istream& is);

/// CSV columns s_m, intensity.
void write_profile_csv(std::ostream& os, const LineProfile& profile);

}  // namespace atomguide

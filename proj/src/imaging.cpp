#include "atomguide/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "atomguide/csv.hpp"

namespace atomguide {

Bounds ImageFrame::bounds() const {
    const double half = 0.5 * pixel_pitch;
    return {{origin.x() - half, origin.y() - (static_cast<double>(rows()) - 0.5) * pixel_pitch},
            {origin.x() + (static_cast<double>(cols()) - 0.5) * pixel_pitch, origin.y() + half}};
}

double ImageFrame::sample(const Vec2& p) const {
    const double fc = (p.x() - origin.x()) / pixel_pitch;
    const double fr = (origin.y() - p.y()) / pixel_pitch;
    const double c0 = std::floor(fc);
    const double r0 = std::floor(fr);
    const double tc = fc - c0;
    const double tr = fr - r0;
    auto at = [this](double r, double c) {
        if (r < 0 || c < 0 || r >= static_cast<double>(rows()) || c >= static_cast<double>(cols())) return 0.0;
        return pixels(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    };
    return (1 - tr) * ((1 - tc) * at(r0, c0) + tc * at(r0, c0 + 1)) +
           tr * ((1 - tc) * at(r0 + 1, c0) + tc * at(r0 + 1, c0 + 1));
}

Eigen::ArrayXXd gaussian_blur(const Eigen::ArrayXXd& image, double sigma_pixels) {
    if (!(sigma_pixels > 0)) return image;
    const int radius = static_cast<int>(std::ceil(6.0 * sigma_pixels));
    Eigen::ArrayXd kernel(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i)
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma_pixels * sigma_pixels));
    kernel /= kernel.sum();

    const Eigen::Index rows = image.rows();
    const Eigen::Index cols = image.cols();
    Eigen::ArrayXXd pass = Eigen::ArrayXXd::Zero(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (int k = -radius; k <= radius; ++k) {
            const Eigen::Index src = c + k;
            if (src < 0 || src >= cols) continue;
            pass.col(c) += kernel[k + radius] * image.col(src);
        }
    }
    Eigen::ArrayXXd out = Eigen::ArrayXXd::Zero(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (int k = -radius; k <= radius; ++k) {
            const Eigen::Index src = r + k;
            if (src < 0 || src >= rows) continue;
            out.row(r) += kernel[k + radius] * pass.row(src);
        }
    }
    return out;
}

ImageFrame render_atoms(std::span<const Atom> atoms, const Bounds& region, const ImagingOptions& options) {
    if (!(options.pixel_pitch > 0)) throw ParameterError("pixel pitch must be > 0");
    if (!(options.exposure >= 0) || !(options.psf_rms >= 0))
        throw ParameterError("exposure and PSF width must be >= 0");
    const Vec2 size = region.size();
    if (!(size.array() > 0).all()) throw ParameterError("image region is empty");

    ImageFrame frame;
    frame.pixel_pitch = options.pixel_pitch;
    frame.psf_rms = options.psf_rms;
    frame.exposure = options.exposure;
    const auto cols = static_cast<Eigen::Index>(std::ceil(size.x() / options.pixel_pitch));
    const auto rows = static_cast<Eigen::Index>(std::ceil(size.y() / options.pixel_pitch));
    frame.pixels = Eigen::ArrayXXd::Zero(rows, cols);
    frame.origin = {region.min.x() + 0.5 * options.pixel_pitch, region.max.y() - 0.5 * options.pixel_pitch};

    const int samples = options.exposure > 0 ? std::max(options.motion_samples, 1) : 1;
    const double weight = options.photon_yield / samples;
    for (const auto& atom : atoms) {
        if (!atom.alive) continue;
        for (int k = 0; k < samples; ++k) {
            const double tau = options.exposure * (k + 0.5) / samples;
            const Vec2 p = options.exposure > 0 ? Vec2(atom.position + tau * atom.velocity) : atom.position;
            const double c = std::floor((p.x() - region.min.x()) / options.pixel_pitch);
            const double r = std::floor((region.max.y() - p.y()) / options.pixel_pitch);
            if (c < 0 || r < 0 || c >= static_cast<double>(cols) || r >= static_cast<double>(rows)) continue;
            frame.pixels(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += weight;
        }
    }

    frame.pixels = gaussian_blur(frame.pixels, options.psf_rms / options.pixel_pitch);

    if (options.poisson_noise) {
        std::mt19937_64 rng(options.noise_seed);
        for (Eigen::Index i = 0; i < frame.pixels.size(); ++i) {
            const double mean = frame.pixels(i);
            frame.pixels(i) = mean > 0 ? static_cast<double>(std::poisson_distribution<long long>(mean)(rng)) : 0.0;
        }
    }
    return frame;
}

ImageFrame render_image(const TrajectoryRecord& record, double time, const Bounds& region,
                        const ImagingOptions& options) {
    const Snapshot* snap = record.find(time);
    if (snap == nullptr)
        throw ParameterError("no trajectory snapshot at t = " + format_number(time) + " s");
    return render_atoms(snap->atoms, region, options);
}

LineProfile line_profile(const ImageFrame& image, const LineSegment& line, double half_width) {
    const Bounds b = image.bounds();
    if (!b.contains(line.start) || !b.contains(line.end))
        throw DomainError("line profile endpoints must lie inside the image");
    if (!(half_width > 0)) throw ParameterError("integration half-width must be > 0");
    const Vec2 delta = line.end - line.start;
    const double length = delta.norm();
    if (!(length > 0)) throw ParameterError("line has zero length");
    const Vec2 u = delta / length;
    const Vec2 n = left_normal(u);
    const double pitch = image.pixel_pitch;
    const int across = std::max(1, static_cast<int>(std::lround(2.0 * half_width / pitch)));
    const double dt = 2.0 * half_width / across;
    const double density = 1.0 / (pitch * pitch);

    LineProfile profile;
    profile.line = line;
    profile.integration_half_width = half_width;
    const auto count = static_cast<std::size_t>(std::floor(length / pitch + 1e-9)) + 1;
    profile.samples.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double s = static_cast<double>(k) * pitch;
        const Vec2 p = line.start + s * u;
        double sum = 0.0;
        for (int j = 0; j < across; ++j) sum += image.sample(p + (-half_width + (j + 0.5) * dt) * n);
        profile.samples.emplace_back(s, sum * dt * density);
    }
    return profile;
}

std::pair<double, double> splitting_ratio(const LineProfile& profile, std::pair<double, double> w1,
                                          std::pair<double, double> w2) {
    if (!(w1.first < w1.second) || !(w2.first < w2.second))
        throw ParameterError("window bounds must be increasing");
    if (w1.first < w2.second && w2.first < w1.second) throw ParameterError("windows overlap");
    double ds = 0.0;
    if (profile.samples.size() >= 2) ds = profile.samples[1].first - profile.samples[0].first;
    double a = 0.0;
    double b = 0.0;
    for (const auto& [s, v] : profile.samples) {
        if (s >= w1.first && s <= w1.second) a += v * ds;
        if (s >= w2.first && s <= w2.second) b += v * ds;
    }
    if (!(a + b > 0)) throw ParameterError("splitting ratio undefined: both windows are empty");
    return {a / (a + b), b / (a + b)};
}

double write_pgm(std::ostream& os, const ImageFrame& frame) {
    const double peak = frame.pixels.size() > 0 ? frame.pixels.maxCoeff() : 0.0;
    const double scale = peak > 0 ? peak / 65535.0 : 1.0;
    os << "P5\n" << frame.cols() << ' ' << frame.rows() << "\n65535\n";
    for (Eigen::Index r = 0; r < frame.rows(); ++r) {
        for (Eigen::Index c = 0; c < frame.cols(); ++c) {
            const double level = std::clamp(std::round(std::max(frame.pixels(r, c), 0.0) / scale), 0.0, 65535.0);
            const auto v = static_cast<std::uint16_t>(level);
            const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
            os.write(bytes, 2);
        }
    }
    return scale;
}

void write_image_files(const std::filesystem::path& path, const ImageFrame& frame) {
    std::ofstream pgm(path, std::ios::binary);
    if (!pgm) throw std::runtime_error("cannot write " + path.string());
    const double scale = write_pgm(pgm, frame);
    std::ofstream hdr(path.string() + ".hdr");
    if (!hdr) throw std::runtime_error("cannot write " + path.string() + ".hdr");
    hdr << "width = " << frame.cols() << '\n'
        << "height = " << frame.rows() << '\n'
        << "pixel_pitch_m = " << format_number(frame.pixel_pitch) << '\n'
        << "origin_m = " << format_number(frame.origin.x()) << ' ' << format_number(frame.origin.y()) << '\n'
        << "psf_rms_m = " << format_number(frame.psf_rms) << '\n'
        << "exposure_s = " << format_number(frame.exposure) << '\n'
        << "intensity_per_level = " << format_number(scale) << '\n';
}

Eigen::ArrayXXd read_pgm(std::istream& is) {
    auto token = [&is]() {
        std::string t;
        while (is >> t) {
            if (t[0] == '#') {
                std::string rest;
                std::getline(is, rest);
                continue;
            }
            return t;
        }
        throw std::runtime_error("truncated PGM header");
    };
    if (token() != "P5") throw std::runtime_error("not a binary PGM");
    const int width = std::stoi(token());
    const int height = std::stoi(token());
    const int maxval = std::stoi(token());
    is.get();
    Eigen::ArrayXXd out(height, width);
    const bool wide = maxval > 255;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            unsigned char b[2] = {0, 0};
            is.read(reinterpret_cast<char*>(b), wide ? 2 : 1);
            out(r, c) = wide ? (b[0] << 8 | b[1]) : b[0];
        }
    }
    if (!is) throw std::runtime_error("truncated PGM data");
    return out;
}

void write_profile_csv(std::ostream& os, const LineProfile& profile) {
    CsvWriter csv(os);
    csv.row("s_m", "intensity");
    for (const auto& [s, v] : profile.samples) csv.row(s, v);
}

}  // namespace atomguide

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "atomguide/dynamics.hpp"
#include "atomguide/imaging.hpp"
#include "atomguide/ports.hpp"
#include "atomguide/presets.hpp"

namespace atomguide {

// Scene files are line oriented:
//
//   # comment
//   [guide A]
//   angle_deg = -21
//   depth_uK = 450
//
// Every physical value carries its unit in the key suffix.

struct Diagnostic {
    int line = 0;
    std::string token;
    std::string message;
    std::string expected;

    /// "line N: message (near 'token'; expected ...)"
    std::string str() const;
};

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

  private:
    std::vector<Diagnostic> diagnostics_;
};

struct Entry {
    std::string key;
    std::string value;
    int line = 0;

    bool operator==(const Entry& o) const { return key == o.key && value == o.value; }
};

struct Section {
    std::string kind;
    std::string id;
    int line = 0;
    std::vector<Entry> entries;

    const Entry* find(std::string_view key) const;
    bool operator==(const Section& o) const {
        return kind == o.kind && id == o.id && entries == o.entries;
    }
};

/// Syntax-level view of a scene file. Numeric values are stored in their
/// shortest round-trip form, so equal documents serialize identically.
struct Document {
    std::vector<Section> sections;

    bool operator==(const Document&) const = default;
};

/// Splits the text into sections and entries and checks keys against the
/// schema: unknown keys, unit-suffix mismatches, malformed values,
/// duplicates. Throws ConfigError.
Document parse_document(std::string_view text);

/// Canonical text form; parse_document(serialize(d)) == d.
std::string serialize(const Document& document);

enum class LoadState { F2, F3, Mixed };

struct EnsembleConfig {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double temperature = 20e-6;
    LoadState state = LoadState::F2;
    LoadSite site;
    /// Negative selects the guide waist.
    double window_half_width = -1.0;
    double launch_energy = 0.0;
    double launch_angle = 0.0;
    /// Round single trap used before the transfer into the guides.
    double hold_time = 35e-3;
    double hold_waist = 7e-6;
    double hold_depth = 0.0;
};

struct ImageConfig {
    std::vector<double> times;
    ImagingOptions options;
    std::optional<LineSegment> line;
    double line_half_width = 20e-6;
    std::optional<std::pair<double, double>> window_1;
    std::optional<std::pair<double, double>> window_2;
};

struct SweepConfig {
    std::vector<double> ratios;
    std::size_t guide_a = 0;
    std::size_t guide_b = 1;
    int workers = 1;
};

struct ExperimentConfig {
    Scene scene;
    std::optional<EnsembleConfig> ensemble;
    RunConfig run;
    std::optional<ImageConfig> image;
    std::optional<SweepConfig> sweep;
    std::optional<MiniatureMzParams> quantum;
    /// Explicit [port] sections; empty selects arm_ports(scene, true).
    std::vector<PortDefinition> ports;
    Document document;
};

/// Builds the configuration and validates the scene; all problems are
/// collected before ConfigError is thrown.
ExperimentConfig resolve(const Document& document);

/// parse_document followed by resolve.
ExperimentConfig parse_scene_file(std::string_view text);

/// Ports used for counting: explicit ones, or the crossing arms.
std::vector<PortDefinition> effective_ports(const ExperimentConfig& config);

}  // namespace atomguide

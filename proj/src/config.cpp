#include "atomguide/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "atomguide/csv.hpp"

namespace atomguide {

namespace {

enum class Kind { Number, Integer, Word, List };

struct KeySpec {
    std::string_view name;
    Kind kind;
    bool required = false;
};

struct SectionSpec {
    std::string_view kind;
    bool has_id;
    std::vector<KeySpec> keys;
};

const std::vector<SectionSpec>& schema() {
    static const std::vector<SectionSpec> s = {
        {"species", false,
         {{"mass_kg", Kind::Number}, {"lambda_d2_nm", Kind::Number}, {"gamma_MHz", Kind::Number},
          {"hfs_split_GHz", Kind::Number}}},
        {"domain", false,
         {{"x_min_um", Kind::Number}, {"x_max_um", Kind::Number}, {"y_min_um", Kind::Number},
          {"y_max_um", Kind::Number}, {"margin_um", Kind::Number}}},
        {"guide", true,
         {{"origin_x_um", Kind::Number}, {"origin_y_um", Kind::Number},
          {"pivot_x_um", Kind::Number}, {"pivot_y_um", Kind::Number},
          {"pivot_s_mm", Kind::Number}, {"angle_deg", Kind::Number, true},
          {"waist_um", Kind::Number}, {"depth_uK", Kind::Number, true},
          {"polarization", Kind::Word}, {"profile", Kind::Word}, {"length_mm", Kind::Number},
          {"start_scale", Kind::Number}, {"end_scale", Kind::Number},
          {"center_mm", Kind::Number}, {"sigma_mm", Kind::Number},
          {"detuning_GHz", Kind::Number}, {"delta_f2_MHz", Kind::Number},
          {"delta_f3_MHz", Kind::Number}}},
        {"spot", true,
         {{"center_x_um", Kind::Number, true}, {"center_y_um", Kind::Number, true},
          {"waist_um", Kind::Number}, {"depth_f2_uK", Kind::Number, true},
          {"depth_f3_uK", Kind::Number}, {"delta_f2_MHz", Kind::Number},
          {"delta_f3_MHz", Kind::Number}}},
        {"port", true,
         {{"start_x_um", Kind::Number, true}, {"start_y_um", Kind::Number, true},
          {"direction_deg", Kind::Number, true}, {"half_width_um", Kind::Number}}},
        {"ensemble", false,
         {{"n", Kind::Integer, true}, {"seed", Kind::Integer, true},
          {"temperature_uK", Kind::Number}, {"state", Kind::Word},
          {"load_guide", Kind::Word, true}, {"load_s_mm", Kind::Number, true},
          {"window_um", Kind::Number}, {"launch_uK", Kind::Number},
          {"launch_angle_deg", Kind::Number}, {"hold_ms", Kind::Number},
          {"hold_waist_um", Kind::Number}, {"hold_depth_uK", Kind::Number}}},
        {"run", false,
         {{"duration_ms", Kind::Number, true}, {"dt_us", Kind::Number},
          {"scattering", Kind::Word}, {"record_stride", Kind::Integer},
          {"workers", Kind::Integer}, {"escape_ms", Kind::Number},
          {"recoil_axis_deg", Kind::Number}}},
        {"image", false,
         {{"times_ms", Kind::List, true}, {"psf_um", Kind::Number},
          {"exposure_ms", Kind::Number}, {"pixel_um", Kind::Number},
          {"photon_yield", Kind::Number}, {"motion_samples", Kind::Integer},
          {"poisson", Kind::Word}, {"noise_seed", Kind::Integer}, {"line_um", Kind::List},
          {"line_half_width_um", Kind::Number}, {"window1_um", Kind::List},
          {"window2_um", Kind::List}}},
        {"sweep", false,
         {{"ratios", Kind::List, true}, {"guide_a", Kind::Word}, {"guide_b", Kind::Word},
          {"workers", Kind::Integer}}},
        {"quantum", false,
         {{"angle_deg", Kind::Number}, {"pitch_um", Kind::Number}, {"waist_um", Kind::Number},
          {"speed_mmps", Kind::Number}, {"depth_nK", Kind::Number},
          {"spot_waist_um", Kind::Number}, {"max_phase_rad", Kind::Number},
          {"points", Kind::Integer}, {"nx", Kind::Integer}, {"ny", Kind::Integer},
          {"spacing_nm", Kind::Number}, {"duration_ms", Kind::Number}, {"dt_us", Kind::Number},
          {"sigma_x_um", Kind::Number}, {"sigma_y_um", Kind::Number},
          {"absorber_fraction", Kind::Number}, {"workers", Kind::Integer}}},
    };
    return s;
}

const SectionSpec* find_section_spec(std::string_view kind) {
    for (const auto& s : schema())
        if (s.kind == kind) return &s;
    return nullptr;
}

const KeySpec* find_key_spec(const SectionSpec& spec, std::string_view key) {
    for (const auto& k : spec.keys)
        if (k.name == key) return &k;
    return nullptr;
}

std::size_t key_rank(const SectionSpec& spec, std::string_view key) {
    for (std::size_t i = 0; i < spec.keys.size(); ++i)
        if (spec.keys[i].name == key) return i;
    return spec.keys.size();
}

constexpr std::array<std::string_view, 21> kUnits = {
    "um", "mm", "nm", "m",  "uK",  "nK", "K",  "deg", "rad", "us", "ms",
    "s",  "Hz", "MHz", "GHz", "kg", "mps", "mmps", "mW", "W", "ns"};

bool is_unit(std::string_view s) {
    return std::find(kUnits.begin(), kUnits.end(), s) != kUnits.end();
}

// Key without its unit suffix.
std::string_view stem(std::string_view key) {
    const auto pos = key.rfind('_');
    if (pos != std::string_view::npos && is_unit(key.substr(pos + 1))) return key.substr(0, pos);
    return key;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> to_double(std::string_view s) {
    double v = 0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::int64_t> to_integer(std::string_view s) {
    std::int64_t v = 0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

bool is_word(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '+' ||
               c == '.';
    });
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto pos = s.find(',');
        out.push_back(trim(s.substr(0, pos)));
        if (pos == std::string_view::npos) break;
        s.remove_prefix(pos + 1);
    }
    return out;
}

std::string expected_form(Kind kind) {
    switch (kind) {
        case Kind::Number: return "a decimal number";
        case Kind::Integer: return "an integer";
        case Kind::Word: return "a single word";
        case Kind::List: return "comma-separated numbers";
    }
    return {};
}

// Canonical text of a value, or nullopt if it does not have the expected form.
std::optional<std::string> normalize(Kind kind, std::string_view value) {
    switch (kind) {
        case Kind::Number:
            if (auto v = to_double(value)) return format_number(*v);
            return std::nullopt;
        case Kind::Integer:
            if (auto v = to_integer(value)) return std::to_string(*v);
            return std::nullopt;
        case Kind::Word:
            if (is_word(value)) return std::string(value);
            return std::nullopt;
        case Kind::List: {
            std::string out;
            for (auto item : split_list(value)) {
                auto v = to_double(item);
                if (!v) return std::nullopt;
                if (!out.empty()) out += ", ";
                out += format_number(*v);
            }
            return out;
        }
    }
    return std::nullopt;
}

std::string section_token(const Section& s) {
    return "[" + s.kind + (s.id.empty() ? "" : " " + s.id) + "]";
}

}  // namespace

std::string Diagnostic::str() const {
    std::ostringstream os;
    if (line > 0) os << "line " << line << ": ";
    os << message;
    if (!token.empty()) os << " (near '" << token << "'";
    if (!expected.empty()) os << (token.empty() ? " (" : "; ") << "expected " << expected;
    if (!token.empty() || !expected.empty()) os << ")";
    return os.str();
}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) {
        if (!out.empty()) out += '\n';
        out += d.str();
    }
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

const Entry* Section::find(std::string_view key) const {
    for (const auto& e : entries)
        if (e.key == key) return &e;
    return nullptr;
}

Document parse_document(std::string_view text) {
    Document doc;
    std::vector<Diagnostic> diags;
    const SectionSpec* spec = nullptr;
    int line_no = 0;

    while (!text.empty() || line_no == 0) {
        const auto nl = text.find('\n');
        std::string_view raw = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string_view line = trim(raw);
        if (line.empty()) {
            if (text.empty()) break;
            continue;
        }

        if (line.front() == '[') {
            if (line.back() != ']') {
                diags.push_back({line_no, std::string(line), "unterminated section header", "[kind id]"});
                spec = nullptr;
                continue;
            }
            std::istringstream words(std::string(trim(line.substr(1, line.size() - 2))));
            std::string kind, id, extra;
            words >> kind >> id >> extra;
            spec = find_section_spec(kind);
            if (!spec) {
                diags.push_back({line_no, kind, "unknown section",
                                 "species, domain, guide <id>, spot <id>, port <id>, ensemble, "
                                 "run, image, sweep or quantum"});
                continue;
            }
            if (!extra.empty()) {
                diags.push_back({line_no, extra, "section id must be a single word", "[" + kind + " <id>]"});
            } else if (spec->has_id && id.empty()) {
                diags.push_back({line_no, std::string(line), "section needs an id", "[" + kind + " <id>]"});
            } else if (!spec->has_id && !id.empty()) {
                diags.push_back({line_no, id, "section takes no id", "[" + kind + "]"});
            }
            for (const auto& s : doc.sections) {
                if (s.kind == kind && s.id == id) {
                    diags.push_back({line_no, std::string(line),
                                     spec->has_id ? "duplicate section id '" + id + "'"
                                                  : "duplicate section",
                                     "first defined on line " + std::to_string(s.line)});
                    break;
                }
            }
            doc.sections.push_back({kind, id, line_no, {}});
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            diags.push_back({line_no, std::string(line), "malformed line", "key = value"});
            continue;
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (doc.sections.empty()) {
            diags.push_back({line_no, key, "entry outside a section", "a [section] header first"});
            continue;
        }
        if (!spec) continue;  // header already reported
        Section& section = doc.sections.back();

        const KeySpec* key_spec = find_key_spec(*spec, key);
        if (!key_spec) {
            std::string expected;
            for (const auto& k : spec->keys)
                if (stem(k.name) == stem(key) && k.name != key) expected = std::string(k.name);
            if (!expected.empty()) {
                diags.push_back({line_no, key, "unit-suffix mismatch", expected});
            } else {
                std::string known;
                for (const auto& k : spec->keys) known += (known.empty() ? "" : ", ") + std::string(k.name);
                diags.push_back({line_no, key, "unknown key in " + section_token(section), "one of " + known});
            }
            continue;
        }
        if (section.find(key)) {
            diags.push_back({line_no, key, "duplicate key", "each key once per section"});
            continue;
        }
        auto normalized = normalize(key_spec->kind, value);
        if (!normalized) {
            diags.push_back({line_no, std::string(value), "bad value for " + key, expected_form(key_spec->kind)});
            continue;
        }
        section.entries.push_back({key, *normalized, line_no});
    }

    if (!diags.empty()) throw ConfigError(std::move(diags));

    for (auto& s : doc.sections) {
        const SectionSpec& spec = *find_section_spec(s.kind);
        std::stable_sort(s.entries.begin(), s.entries.end(), [&](const Entry& a, const Entry& b) {
            return key_rank(spec, a.key) < key_rank(spec, b.key);
        });
    }
    return doc;
}

std::string serialize(const Document& document) {
    std::string out;
    for (const auto& s : document.sections) {
        if (!out.empty()) out += '\n';
        out += section_token(s) + '\n';
        for (const auto& e : s.entries) out += e.key + " = " + e.value + '\n';
    }
    return out;
}

namespace {

// Typed access to one section, collecting diagnostics.
class Reader {
  public:
    Reader(const Section& section, std::vector<Diagnostic>& diags) : s_(section), diags_(diags) {}

    bool has(std::string_view key) const { return s_.find(key) != nullptr; }

    std::optional<double> number(std::string_view key) const {
        if (const Entry* e = s_.find(key)) return to_double(e->value);
        return std::nullopt;
    }
    double number(std::string_view key, double fallback) const {
        return number(key).value_or(fallback);
    }
    double required(std::string_view key) const {
        if (auto v = number(key)) return *v;
        missing(key);
        return 0.0;
    }
    std::optional<std::int64_t> integer(std::string_view key) const {
        if (const Entry* e = s_.find(key)) return to_integer(e->value);
        return std::nullopt;
    }
    std::optional<std::string> word(std::string_view key) const {
        if (const Entry* e = s_.find(key)) return e->value;
        return std::nullopt;
    }
    std::vector<double> list(std::string_view key) const {
        std::vector<double> out;
        if (const Entry* e = s_.find(key))
            for (auto item : split_list(e->value)) out.push_back(*to_double(item));
        return out;
    }
    bool flag(std::string_view key, bool fallback) const {
        const auto w = word(key);
        if (!w) return fallback;
        if (*w == "on" || *w == "true" || *w == "yes") return true;
        if (*w == "off" || *w == "false" || *w == "no") return false;
        error(key, "expected a switch", "on or off");
        return fallback;
    }

    void missing(std::string_view key) const {
        diags_.push_back({s_.line, section_token(s_), "missing mandatory key '" + std::string(key) + "'",
                          std::string(key) + " = <value>"});
    }
    void error(std::string_view key, std::string message, std::string expected) const {
        const Entry* e = s_.find(key);
        diags_.push_back({e ? e->line : s_.line, e ? e->key + " = " + e->value : section_token(s_),
                          std::move(message), std::move(expected)});
    }
    int line() const { return s_.line; }
    const Section& section() const { return s_; }

  private:
    const Section& s_;
    std::vector<Diagnostic>& diags_;
};

constexpr double um = 1e-6;
constexpr double mm = 1e-3;
constexpr double deg = std::numbers::pi / 180.0;

void check_required(const Reader& r, const SectionSpec& spec) {
    for (const auto& k : spec.keys)
        if (k.required && !r.has(k.name)) r.missing(k.name);
}

GuideSpec read_guide(const Reader& r) {
    GuideSpec g;
    g.id = r.section().id;
    g.angle = r.required("angle_deg") * deg;
    g.waist = r.number("waist_um", 7.0) * um;
    const double depth_uK = r.required("depth_uK");
    if (depth_uK < 0) r.error("depth_uK", "depth must be ≥ 0; sign comes from detuning", "depth_uK >= 0");
    g.peak_depth = from_microkelvin(depth_uK);

    if (const auto pol = r.word("polarization")) {
        if (*pol == "H") g.polarization = Polarization::H;
        else if (*pol == "V") g.polarization = Polarization::V;
        else r.error("polarization", "unknown polarization tag", "H or V");
    }

    const std::string profile = r.word("profile").value_or("flat");
    auto unused = [&](std::initializer_list<std::string_view> keys) {
        for (auto k : keys)
            if (r.has(k)) r.error(k, "key not used by profile '" + profile + "'", "remove it");
    };
    if (profile == "flat") {
        g.profile = FlatProfile{r.number("length_mm", 5.0) * mm};
        unused({"start_scale", "end_scale", "center_mm", "sigma_mm"});
    } else if (profile == "gradient") {
        g.profile = GradientProfile{r.number("length_mm", 2.5) * mm, r.number("start_scale", 0.5),
                                    r.number("end_scale", 1.0)};
        unused({"center_mm", "sigma_mm"});
    } else if (profile == "gaussian") {
        g.profile = GaussianProfile{r.number("center_mm", 0.0) * mm, r.number("sigma_mm", 1.0) * mm};
        unused({"length_mm", "start_scale", "end_scale"});
    } else {
        r.error("profile", "unknown profile", "flat, gradient or gaussian");
    }

    const bool selective = r.has("delta_f2_MHz") || r.has("delta_f3_MHz");
    if (selective) {
        if (r.has("detuning_GHz"))
            r.error("detuning_GHz", "far detuning conflicts with state-selective detunings",
                    "either detuning_GHz or delta_f2_MHz and delta_f3_MHz");
        g.detuning = StateSelective{r.number("delta_f2_MHz", -1020.0) * 1e6,
                                    r.number("delta_f3_MHz", 2020.0) * 1e6};
    } else {
        g.detuning = FarDetuned{r.number("detuning_GHz", -500.0) * 1e9};
    }

    const bool by_origin = r.has("origin_x_um") || r.has("origin_y_um");
    const bool by_pivot = r.has("pivot_x_um") || r.has("pivot_y_um") || r.has("pivot_s_mm");
    if (by_origin && by_pivot)
        r.error("pivot_x_um", "guide placed both by origin and by pivot", "one placement");
    if (by_pivot) {
        const Vec2 pivot(r.number("pivot_x_um", 0.0) * um, r.number("pivot_y_um", 0.0) * um);
        g.origin = pivot - r.number("pivot_s_mm", 0.0) * mm * g.axis();
    } else {
        g.origin = Vec2(r.number("origin_x_um", 0.0) * um, r.number("origin_y_um", 0.0) * um);
    }
    return g;
}

SpotBeam read_spot(const Reader& r) {
    const double d2 = r.number("delta_f2_MHz", -1020.0) * 1e6;
    const double d3 = r.number("delta_f3_MHz", 2020.0) * 1e6;
    SpotBeam s;
    s.id = r.section().id;
    s.center = Vec2(r.required("center_x_um") * um, r.required("center_y_um") * um);
    s.waist = r.number("waist_um", 10.0) * um;
    s.delta_f2 = d2;
    s.delta_f3 = d3;
    s.depth_f2 = from_microkelvin(r.required("depth_f2_uK"));
    if (auto f3 = r.number("depth_f3_uK")) s.depth_f3 = from_microkelvin(*f3);
    else if (d3 != 0.0) s.depth_f3 = s.depth_f2 * d2 / d3;
    return s;
}

}  // namespace

ExperimentConfig resolve(const Document& document) {
    std::vector<Diagnostic> diags;
    ExperimentConfig cfg;
    cfg.document = document;

    std::map<std::string, const Section*> singles;
    std::vector<const Section*> guides, spots, ports;
    for (const auto& s : document.sections) {
        if (s.kind == "guide") guides.push_back(&s);
        else if (s.kind == "spot") spots.push_back(&s);
        else if (s.kind == "port") ports.push_back(&s);
        else singles[s.kind] = &s;
    }
    for (const auto& s : document.sections) check_required(Reader(s, diags), *find_section_spec(s.kind));

    if (auto it = singles.find("species"); it != singles.end()) {
        const Reader r(*it->second, diags);
        auto& sp = cfg.scene.species;
        sp.mass = r.number("mass_kg", sp.mass);
        sp.lambda_d2 = r.number("lambda_d2_nm", sp.lambda_d2 * 1e9) * 1e-9;
        sp.gamma = r.number("gamma_MHz", sp.gamma * 1e-6) * 1e6;
        sp.hfs_split = r.number("hfs_split_GHz", sp.hfs_split * 1e-9) * 1e9;
    }

    for (const Section* s : guides) cfg.scene.guides.push_back(read_guide(Reader(*s, diags)));
    for (const Section* s : spots) cfg.scene.spots.push_back(read_spot(Reader(*s, diags)));
    for (const Section* s : ports) {
        const Reader r(*s, diags);
        PortDefinition p;
        p.name = s->id;
        p.start = Vec2(r.required("start_x_um") * um, r.required("start_y_um") * um);
        p.direction = direction(r.required("direction_deg") * deg);
        p.half_width = r.number("half_width_um", 28.0) * um;
        if (!(p.half_width > 0)) r.error("half_width_um", "port half-width must be > 0", "a positive width");
        cfg.ports.push_back(p);
    }

    double margin = 100e-6;
    std::optional<Bounds> explicit_domain;
    if (auto it = singles.find("domain"); it != singles.end()) {
        const Reader r(*it->second, diags);
        margin = r.number("margin_um", 100.0) * um;
        const int given = r.has("x_min_um") + r.has("x_max_um") + r.has("y_min_um") + r.has("y_max_um");
        if (given == 4) {
            if (r.has("margin_um")) r.error("margin_um", "margin conflicts with explicit bounds", "one of them");
            explicit_domain = Bounds{Vec2(*r.number("x_min_um"), *r.number("y_min_um")) * um,
                                     Vec2(*r.number("x_max_um"), *r.number("y_max_um")) * um};
        } else if (given != 0) {
            diags.push_back({r.line(), "[domain]", "incomplete domain bounds",
                             "x_min_um, x_max_um, y_min_um and y_max_um together"});
        }
    }

    if (auto it = singles.find("quantum"); it != singles.end()) {
        const Reader r(*it->second, diags);
        MiniatureMzParams q;
        q.angle = r.number("angle_deg", q.angle / deg) * deg;
        q.pitch = r.number("pitch_um", q.pitch / um) * um;
        q.waist = r.number("waist_um", q.waist / um) * um;
        q.speed = r.number("speed_mmps", 0.0) * mm;
        q.depth = r.number("depth_nK", 0.0) * 1e-9 * constants::k_boltzmann;
        q.spot_waist = r.number("spot_waist_um", q.spot_waist / um) * um;
        q.max_phase = r.number("max_phase_rad", q.max_phase);
        q.points = static_cast<int>(r.integer("points").value_or(q.points));
        q.nx = static_cast<int>(r.integer("nx").value_or(q.nx));
        q.ny = static_cast<int>(r.integer("ny").value_or(q.ny));
        q.spacing = r.number("spacing_nm", 0.0) * 1e-9;
        q.duration = r.number("duration_ms", 0.0) * mm;
        q.dt = r.number("dt_us", 0.0) * um;
        q.sigma = Vec2(r.number("sigma_x_um", q.sigma.x() / um), r.number("sigma_y_um", q.sigma.y() / um)) * um;
        q.absorber_fraction = r.number("absorber_fraction", q.absorber_fraction);
        q.workers = static_cast<int>(r.integer("workers").value_or(q.workers));
        if (q.points < 2) r.error("points", "a fringe scan needs at least two points", "points >= 2");
        if (q.workers < 1) r.error("workers", "workers must be >= 1", "a positive count");
        try {
            make_miniature_mz(q, cfg.scene.species);
        } catch (const std::exception& e) {
            diags.push_back({r.line(), "[quantum]", e.what(), "a valid miniature interferometer"});
        }
        cfg.quantum = q;
    }

    if (diags.empty()) {
        if (explicit_domain) {
            cfg.scene.domain = *explicit_domain;
        } else if (!cfg.scene.guides.empty() || !cfg.scene.spots.empty()) {
            cfg.scene.domain = footprint(cfg.scene).expanded(margin);
        }
        if (!cfg.scene.guides.empty() || !cfg.scene.spots.empty()) {
            for (const auto& v : validate_scene(cfg.scene)) {
                int line = 0;
                std::string token = "scene";
                for (const auto* group : {&guides, &spots}) {
                    for (const Section* s : *group) {
                        if (v.message.find("'" + s->id + "'") != std::string::npos) {
                            line = s->line;
                            token = section_token(*s);
                            break;
                        }
                    }
                    if (line) break;
                }
                diags.push_back({line, token, v.message, "a valid scene"});
            }
        }
    }

    auto guide_index = [&](const Reader& r, std::string_view key) -> std::optional<std::size_t> {
        const auto id = r.word(key);
        if (!id) return std::nullopt;
        if (auto i = cfg.scene.find_guide(*id)) return i;
        r.error(key, "unknown guide '" + *id + "'", "the id of a [guide] section");
        return std::nullopt;
    };

    const auto ens_it = singles.find("ensemble");
    const auto run_it = singles.find("run");
    if ((ens_it == singles.end()) != (run_it == singles.end())) {
        const Section* present = ens_it != singles.end() ? ens_it->second : run_it->second;
        diags.push_back({present->line, section_token(*present), "[ensemble] and [run] go together",
                         ens_it != singles.end() ? "a [run] section" : "an [ensemble] section"});
    }
    if (ens_it != singles.end()) {
        const Reader r(*ens_it->second, diags);
        EnsembleConfig e;
        const auto n = r.integer("n");
        if (n && *n < 0) r.error("n", "atom count must be >= 0", "n >= 0");
        e.n = n ? static_cast<std::size_t>(std::max<std::int64_t>(*n, 0)) : 0;
        const auto seed = r.integer("seed");
        if (seed && *seed < 0) r.error("seed", "seed must be >= 0", "a non-negative integer");
        e.seed = seed ? static_cast<std::uint64_t>(*seed) : 0;
        e.temperature = r.number("temperature_uK", 20.0) * 1e-6;
        if (e.temperature < 0) r.error("temperature_uK", "temperature must be >= 0", "temperature_uK >= 0");
        const std::string state = r.word("state").value_or("F2");
        if (state == "F2") e.state = LoadState::F2;
        else if (state == "F3") e.state = LoadState::F3;
        else if (state == "mixed") e.state = LoadState::Mixed;
        else r.error("state", "unknown hyperfine state", "F2, F3 or mixed");
        if (auto g = guide_index(r, "load_guide")) {
            e.site.guide = *g;
            const auto& guide = cfg.scene.guides[*g];
            e.launch_angle = r.number("launch_angle_deg", guide.angle / deg) * deg;
            e.hold_waist = r.number("hold_waist_um", guide.waist / um) * um;
            const double s = r.number("load_s_mm", 0.0) * mm;
            e.hold_depth = guide.peak_depth * profile_factor(guide.profile, s);
        }
        e.site.s = r.number("load_s_mm", 0.0) * mm;
        e.window_half_width = r.has("window_um") ? r.number("window_um", 0.0) * um : -1.0;
        e.launch_energy = from_microkelvin(r.number("launch_uK", 0.0));
        if (e.launch_energy < 0) r.error("launch_uK", "launch energy must be >= 0", "launch_uK >= 0");
        e.hold_time = r.number("hold_ms", 35.0) * mm;
        if (e.hold_time < 0) r.error("hold_ms", "hold time must be >= 0", "hold_ms >= 0");
        if (auto d = r.number("hold_depth_uK")) {
            if (*d < 0) r.error("hold_depth_uK", "depth must be ≥ 0; sign comes from detuning", "hold_depth_uK >= 0");
            e.hold_depth = from_microkelvin(*d);
        }
        if (e.hold_time > 0 && !(e.hold_depth > 0))
            r.error("hold_ms", "hold trap has no depth at the load site", "hold_depth_uK > 0 or hold_ms = 0");
        cfg.ensemble = e;
    }
    if (run_it != singles.end()) {
        const Reader r(*run_it->second, diags);
        RunConfig& run = cfg.run;
        run.duration = r.required("duration_ms") * mm;
        if (run.duration < 0) r.error("duration_ms", "duration must be >= 0", "duration_ms >= 0");
        run.dt = r.number("dt_us", 0.0) * um;
        if (run.dt < 0) r.error("dt_us", "time step must be >= 0", "dt_us >= 0 (0 selects the default)");
        run.scattering = r.flag("scattering", false);
        run.record_stride = static_cast<int>(r.integer("record_stride").value_or(100));
        run.workers = static_cast<int>(r.integer("workers").value_or(1));
        if (run.workers < 1) r.error("workers", "workers must be >= 1", "a positive count");
        run.escape_time = r.number("escape_ms", 1.0) * mm;
        run.recoil_axis_angle = r.number("recoil_axis_deg", 0.0) * deg;
        if (diags.empty() && run.dt > 0 && !cfg.scene.guides.empty()) {
            RunConfig probe = run;
            probe.duration = std::max(run.duration, 1e-9);
            try {
                validate_run_config(cfg.scene, probe);
            } catch (const std::exception& e) {
                r.error("dt_us", e.what(), "at most 1/100 of the radial period");
            }
        }
    }

    if (auto it = singles.find("image"); it != singles.end()) {
        const Reader r(*it->second, diags);
        ImageConfig im;
        for (double t : r.list("times_ms")) im.times.push_back(t * mm);
        if (std::any_of(im.times.begin(), im.times.end(), [](double t) { return t < 0; }))
            r.error("times_ms", "image times must be >= 0", "non-negative times");
        std::sort(im.times.begin(), im.times.end());
        if (run_it != singles.end() && !im.times.empty() && im.times.back() > cfg.run.duration)
            r.error("times_ms", "image time after the end of the run", "times_ms <= duration_ms");
        im.options.psf_rms = r.number("psf_um", 14.0) * um;
        im.options.exposure = r.number("exposure_ms", 0.8) * mm;
        im.options.pixel_pitch = r.number("pixel_um", 7.0) * um;
        im.options.photon_yield = r.number("photon_yield", 1.0);
        im.options.motion_samples = static_cast<int>(r.integer("motion_samples").value_or(16));
        im.options.poisson_noise = r.flag("poisson", false);
        im.options.noise_seed = static_cast<std::uint64_t>(r.integer("noise_seed").value_or(0));
        if (!(im.options.pixel_pitch > 0)) r.error("pixel_um", "pixel pitch must be > 0", "pixel_um > 0");
        if (im.options.psf_rms < 0) r.error("psf_um", "PSF rms must be >= 0", "psf_um >= 0");
        if (r.has("line_um")) {
            const auto v = r.list("line_um");
            if (v.size() != 4) r.error("line_um", "line needs four coordinates", "x0, y0, x1, y1");
            else im.line = LineSegment{Vec2(v[0], v[1]) * um, Vec2(v[2], v[3]) * um};
        }
        im.line_half_width = r.number("line_half_width_um", 20.0) * um;
        auto window = [&](std::string_view key) -> std::optional<std::pair<double, double>> {
            if (!r.has(key)) return std::nullopt;
            const auto v = r.list(key);
            if (v.size() != 2 || !(v[1] > v[0])) {
                r.error(key, "window needs an increasing pair", "start, end");
                return std::nullopt;
            }
            return std::pair{v[0] * um, v[1] * um};
        };
        im.window_1 = window("window1_um");
        im.window_2 = window("window2_um");
        if ((im.window_1 || im.window_2) && !im.line)
            diags.push_back({r.line(), "[image]", "ratio windows need a profile line", "line_um"});
        if (ens_it == singles.end())
            diags.push_back({r.line(), "[image]", "images need an ensemble", "an [ensemble] section"});
        cfg.image = im;
    }

    if (auto it = singles.find("sweep"); it != singles.end()) {
        const Reader r(*it->second, diags);
        SweepConfig sw;
        sw.ratios = r.list("ratios");
        if (std::any_of(sw.ratios.begin(), sw.ratios.end(), [](double x) { return !(x > 0); }))
            r.error("ratios", "ratios must be > 0", "positive ratios");
        if (auto a = guide_index(r, "guide_a")) sw.guide_a = *a;
        if (auto b = guide_index(r, "guide_b")) sw.guide_b = *b;
        if (!r.has("guide_a") && cfg.scene.guides.size() < 2)
            diags.push_back({r.line(), "[sweep]", "sweep needs two guides", "two [guide] sections"});
        if (sw.guide_a == sw.guide_b) r.error("guide_b", "sweep guides must differ", "two distinct guides");
        sw.workers = static_cast<int>(r.integer("workers").value_or(1));
        if (sw.workers < 1) r.error("workers", "workers must be >= 1", "a positive count");
        if (ens_it == singles.end())
            diags.push_back({r.line(), "[sweep]", "a sweep needs an ensemble", "an [ensemble] section"});
        cfg.sweep = sw;
    }

    if (cfg.scene.guides.empty() && cfg.scene.spots.empty() && !cfg.quantum)
        diags.push_back({0, "", "nothing to simulate", "a [guide] or a [quantum] section"});

    if (!diags.empty()) {
        std::stable_sort(diags.begin(), diags.end(),
                         [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
        throw ConfigError(std::move(diags));
    }
    return cfg;
}

ExperimentConfig parse_scene_file(std::string_view text) { return resolve(parse_document(text)); }

std::vector<PortDefinition> effective_ports(const ExperimentConfig& config) {
    if (!config.ports.empty()) return config.ports;
    return arm_ports(config.scene, true);
}

}  // namespace atomguide

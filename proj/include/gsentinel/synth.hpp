#pragma once

// Deterministic stand-in for rotate-then-slice: a footprint is spun in the XY
// plane and re-toolpathed with a fixed machine-frame infill grid, so each
// angle yields its own command statistics.

#include "gsentinel/error.hpp"
#include "gsentinel/gcode.hpp"
#include "gsentinel/geometry.hpp"
#include "gsentinel/io.hpp"
#include "gsentinel/rng.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace gsentinel {

inline constexpr const char* kGeneratorVersion = "gsentinel-synth 1.0.0";

struct SpecimenSpec {
    std::string name;
    geom::Polygon footprint; // mm, centred on the local origin
    double height = 4.0;
    double layer_height = 0.2;
    double nozzle_width = 0.4;
    double infill_line_distance = 2.0;
    bool skirt = true;

    int walls = 2;
    /// Machine-frame infill directions, cycled one per layer.
    std::vector<double> infill_directions_deg{45.0, -45.0};
    /// Shift the infill grid across its normal by a golden-ratio fraction of
    /// the line distance per layer, as 3-D infill patterns do when sliced.
    bool infill_phase_shift = true;
    /// Random wall seam per loop; otherwise every loop starts at its first vertex.
    bool random_seams = true;
    /// Outline tessellation: no skirt or wall G1 is longer than this.
    double max_segment_length = 2.0;
    double skirt_distance = 3.0;
    geom::Vec2 bed_center{110.0, 110.0};
    double filament_diameter = 1.75;
    int hotend_temp = 200;
    int bed_temp = 60;
    int print_feed = 1800;
    int travel_feed = 6000;

    int layer_count() const { return static_cast<int>(std::lround(height / layer_height)); }
};

/// Tensile-bar analogue: 100 x 20 mm rectangle, grid infill at 2 mm.
inline SpecimenSpec d1_specimen() {
    SpecimenSpec s;
    s.name = "D1";
    s.footprint = {{-50.0, -10.0}, {50.0, -10.0}, {50.0, 10.0}, {-50.0, 10.0}};
    s.height = 4.0;
    s.infill_line_distance = 2.0;
    s.infill_directions_deg = {45.0, -45.0};
    s.max_segment_length = 3.0;
    return s;
}

/// Bracket analogue: 60 x 45 mm L with 15 mm arms, cubic-like infill at 4 mm.
inline SpecimenSpec d2_specimen() {
    SpecimenSpec s;
    s.name = "D2";
    s.footprint = {{-30.0, -22.5}, {30.0, -22.5}, {30.0, -7.5}, {-15.0, -7.5}, {-15.0, 22.5}, {-30.0, 22.5}};
    s.height = 4.0;
    s.infill_line_distance = 4.0;
    s.infill_directions_deg = {45.0, -45.0, 0.0};
    s.max_segment_length = 10.0;
    return s;
}

namespace detail {

class ToolpathWriter {
public:
    ToolpathWriter(const SpecimenSpec& spec, double e_per_mm) : spec_(spec), e_per_mm_(e_per_mm) {}

    void raw(std::string s) { out_ += std::move(s) + '\n'; }

    void travel(geom::Vec2 p, std::optional<double> z = {}) {
        std::string s = "G0";
        if (feed_ != spec_.travel_feed) {
            feed_ = spec_.travel_feed;
            s += " F" + std::to_string(feed_);
        }
        s += " X" + format_fixed(p.x, 3) + " Y" + format_fixed(p.y, 3);
        if (z)
            s += " Z" + format_fixed(*z, 3);
        raw(std::move(s));
        pos_ = p;
    }

    /// Straight extrusion to `p`. Outline moves are split so no piece exceeds
    /// the tessellation length; infill lines are a single move.
    void extrude_to(geom::Vec2 p, bool tessellate = true) {
        const double len = geom::norm(p - pos_);
        if (len <= 0.0)
            return;
        const int pieces =
            tessellate ? std::max(1, static_cast<int>(std::ceil(len / spec_.max_segment_length - 1e-9))) : 1;
        const geom::Vec2 from = pos_;
        for (int k = 1; k <= pieces; ++k) {
            const geom::Vec2 q = k == pieces ? p : from + (static_cast<double>(k) / pieces) * (p - from);
            e_ += geom::norm(q - pos_) * e_per_mm_;
            std::string s = "G1";
            if (feed_ != spec_.print_feed) {
                feed_ = spec_.print_feed;
                s += " F" + std::to_string(feed_);
            }
            s += " X" + format_fixed(q.x, 3) + " Y" + format_fixed(q.y, 3) + " E" + format_fixed(e_, 5);
            raw(std::move(s));
            pos_ = q;
        }
    }

    /// Closed loop starting at arc-length `start` (mm) along the polygon.
    void loop(const geom::Polygon& poly, double start, std::optional<double> z = {}) {
        const std::size_t n = poly.size();
        std::size_t edge = 0;
        double along = start;
        for (; edge < n; ++edge) {
            const double len = geom::norm(poly[(edge + 1) % n] - poly[edge]);
            if (along < len)
                break;
            along -= len;
        }
        edge %= n;
        const geom::Vec2 a = poly[edge], b = poly[(edge + 1) % n];
        const geom::Vec2 seam = a + (along / geom::norm(b - a)) * (b - a);
        travel(seam, z);
        for (std::size_t k = 1; k <= n; ++k)
            extrude_to(poly[(edge + k) % n]);
        extrude_to(seam);
    }

    std::string take() { return std::move(out_); }

private:
    const SpecimenSpec& spec_;
    double e_per_mm_;
    double e_ = 0.0;
    int feed_ = 0;
    geom::Vec2 pos_{};
    std::string out_;
};

inline geom::Polygon face_footprint(const geom::Polygon& fp, int face) {
    geom::Polygon out = fp;
    if (face % 2 == 1)
        for (auto& p : out)
            p.x = -p.x;
    else if (face > 0)
        for (auto& p : out)
            p.y = -p.y;
    return geom::ccw(std::move(out));
}

} // namespace detail

inline void validate(const SpecimenSpec& spec) {
    if (spec.height <= 0 || spec.layer_height <= 0 || spec.nozzle_width <= 0 || spec.infill_line_distance <= 0 ||
        spec.max_segment_length <= 0 || spec.filament_diameter <= 0 || spec.walls < 1 ||
        spec.infill_directions_deg.empty())
        throw InvalidParams("specimen '" + spec.name + "': all dimensions must be positive");
    if (!geom::is_simple(spec.footprint))
        throw DegenerateGeometry("specimen '" + spec.name + "': footprint is not a simple polygon");
    if (std::abs(geom::signed_area(spec.footprint)) < spec.nozzle_width * spec.nozzle_width)
        throw DegenerateGeometry("specimen '" + spec.name + "': footprint area below one nozzle width squared");
}

/// Emits the complete toolpath for one orientation. `face` selects which side
/// of the part rests on the bed (odd faces mirror in X, even faces > 0 in Y).
inline std::string build_specimen_text(const SpecimenSpec& spec, double angle_deg, std::uint64_t seed, int face = 0) {
    validate(spec);
    if (!(angle_deg >= 0.0 && angle_deg < 360.0))
        throw InvalidParams("angle must lie in [0, 360), got " + std::to_string(angle_deg));

    const double filament_area = std::numbers::pi * 0.25 * spec.filament_diameter * spec.filament_diameter;
    const double e_per_mm = spec.nozzle_width * spec.layer_height / filament_area;
    const int layers = spec.layer_count();
    const double rad = geom::radians(angle_deg);

    const geom::Polygon outline =
        geom::transform(detail::face_footprint(spec.footprint, face), rad, spec.bed_center);
    std::vector<geom::Polygon> walls;
    for (int w = 0; w < spec.walls; ++w)
        walls.push_back(geom::inset(outline, (w + 0.5) * spec.nozzle_width));
    const geom::Polygon infill_region = geom::inset(outline, spec.walls * spec.nozzle_width);
    if (geom::signed_area(infill_region) <= 0.0)
        throw DegenerateGeometry("specimen '" + spec.name + "': walls leave no room for infill");

    Rng rng(seed);
    detail::ToolpathWriter w(spec, e_per_mm);

    w.raw(";FLAVOR:Marlin");
    w.raw(std::string(";GENERATOR:") + kGeneratorVersion);
    w.raw(";SPECIMEN:" + spec.name);
    w.raw(";FACE:" + std::to_string(face));
    w.raw(";ANGLE:" + format_fixed(angle_deg, 4));
    w.raw(";LAYER_HEIGHT:" + format_fixed(spec.layer_height, 3));
    w.raw(";LAYER_COUNT:" + std::to_string(layers));
    w.raw("M140 S" + std::to_string(spec.bed_temp));
    w.raw("M105");
    w.raw("M104 S" + std::to_string(spec.hotend_temp));
    w.raw("M105");
    w.raw("M82 ;absolute extrusion mode");
    w.raw("G28 ;home");
    w.raw("G92 E0.00000");
    w.raw("M107");

    for (int layer = 0; layer < layers; ++layer) {
        const double z = spec.layer_height * (layer + 1);
        w.raw(";LAYER:" + std::to_string(layer));
        if (layer == 1)
            w.raw("M106 S255");
        // Only the first travel of a layer carries the Z move.
        bool z_pending = true;
        auto next_z = [&]() -> std::optional<double> {
            if (!z_pending)
                return std::nullopt;
            z_pending = false;
            return z;
        };

        if (layer == 0 && spec.skirt) {
            double x0 = outline[0].x, x1 = x0, y0 = outline[0].y, y1 = y0;
            for (auto p : outline) {
                x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
                y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
            }
            const double m = spec.skirt_distance;
            const geom::Polygon skirt{{x0 - m, y0 - m}, {x1 + m, y0 - m}, {x1 + m, y1 + m}, {x0 - m, y1 + m}};
            w.raw(";TYPE:SKIRT");
            w.loop(skirt, 0.0, next_z());
        }

        w.raw(";TYPE:WALL");
        for (const auto& wall : walls) {
            const double seam = spec.random_seams ? uniform01(rng) * geom::perimeter(wall) : 0.0;
            w.loop(wall, seam, next_z());
        }

        w.raw(";TYPE:FILL");
        const double dir = spec.infill_directions_deg[static_cast<std::size_t>(layer) %
                                                      spec.infill_directions_deg.size()];
        geom::Vec2 anchor = spec.bed_center;
        if (spec.infill_phase_shift) {
            const double phase = std::fmod(layer * 0.6180339887498949, 1.0) * spec.infill_line_distance;
            anchor = anchor + geom::rotate({0.0, phase}, geom::radians(dir));
        }
        for (const auto& seg :
             geom::hatch(infill_region, geom::radians(dir), spec.infill_line_distance, anchor, spec.nozzle_width)) {
            w.travel(seg.a);
            w.extrude_to(seg.b, false);
        }
    }

    w.raw(";END");
    w.raw("M107");
    w.raw("M104 S0");
    w.raw("M140 S0");
    w.raw("M84");
    return w.take();
}

inline GcodeDocument build_specimen(const SpecimenSpec& spec, double angle_deg, std::uint64_t seed, int face = 0) {
    return parse_document(build_specimen_text(spec, angle_deg, seed, face));
}

// ---------------------------------------------------------------------------
// Datasets

struct ManifestEntry {
    std::string path; // relative to the dataset directory
    double angle_deg = 0.0;
    std::uint64_t seed = 0;
    int face = 0;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
    std::string dataset_id;
    std::string generator_version = kGeneratorVersion;
    std::vector<ManifestEntry> entries;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

inline constexpr const char* kManifestName = "manifest.json";

inline void to_json(nlohmann::json& j, const ManifestEntry& e) {
    j = {{"path", e.path}, {"angle_deg", e.angle_deg}, {"seed", e.seed}, {"face", e.face}};
}
inline void from_json(const nlohmann::json& j, ManifestEntry& e) {
    j.at("path").get_to(e.path);
    j.at("angle_deg").get_to(e.angle_deg);
    j.at("seed").get_to(e.seed);
    e.face = j.value("face", 0);
}
inline void to_json(nlohmann::json& j, const DatasetManifest& m) {
    j = {{"dataset_id", m.dataset_id}, {"generator_version", m.generator_version}, {"entries", m.entries}};
}
inline void from_json(const nlohmann::json& j, DatasetManifest& m) {
    j.at("dataset_id").get_to(m.dataset_id);
    j.at("generator_version").get_to(m.generator_version);
    j.at("entries").get_to(m.entries);
}

inline void save_manifest(const DatasetManifest& m, const fs::path& path) {
    write_file(path, nlohmann::json(m).dump(2) + "\n");
}

inline DatasetManifest load_manifest(const fs::path& path) {
    try {
        return nlohmann::json::parse(read_file(path)).get<DatasetManifest>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad manifest " + path.string() + ": " + e.what());
    }
}

inline std::string entry_filename(const std::string& dataset_id, std::size_t index) {
    std::string id;
    for (char c : dataset_id)
        id += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    char num[16];
    std::snprintf(num, sizeof num, "%05zu", index);
    return id + "_" + num + ".gcode";
}

/// Lays out entries without touching the filesystem. Files are spread over
/// `faces` sweeps; face f is offset by f/faces of a step so angles stay unique.
inline DatasetManifest plan_dataset(const std::string& dataset_id, int count, double angular_step, int faces,
                                    std::uint64_t seed) {
    if (count < 1)
        throw InvalidParams("dataset count must be at least 1");
    if (faces < 1)
        throw InvalidParams("faces must be at least 1");
    if (!(angular_step > 0.0))
        throw InvalidParams("angular step must be positive");
    const int per_face = (count + faces - 1) / faces;
    if (static_cast<double>(per_face - 1) * angular_step + angular_step * (faces - 1) / faces >= 360.0)
        throw InvalidParams("sweep exceeds 360 degrees; lower the count or the step, or add faces");

    DatasetManifest m;
    m.dataset_id = dataset_id;
    for (int i = 0; i < count; ++i) {
        ManifestEntry e;
        e.path = entry_filename(dataset_id, static_cast<std::size_t>(i));
        e.face = i / per_face;
        e.angle_deg = (i % per_face) * angular_step + angular_step * e.face / faces;
        e.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
        m.entries.push_back(std::move(e));
    }
    return m;
}

/// Writes every file, then the manifest.
inline DatasetManifest generate_dataset(const SpecimenSpec& spec, const std::string& dataset_id, int count,
                                        double angular_step, int faces, const fs::path& out_dir, std::uint64_t seed) {
    DatasetManifest m = plan_dataset(dataset_id, count, angular_step, faces, seed);
    validate(spec);
    fs::create_directories(out_dir);
    for (const auto& e : m.entries)
        write_file(out_dir / e.path, build_specimen_text(spec, e.angle_deg, e.seed, e.face));
    save_manifest(m, out_dir / kManifestName);
    return m;
}

} // namespace gsentinel

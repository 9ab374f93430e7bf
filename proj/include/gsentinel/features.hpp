#pragma once

#include "gsentinel/error.hpp"
#include "gsentinel/gcode.hpp"
#include "gsentinel/io.hpp"
#include "gsentinel/simulate.hpp"
#include "gsentinel/synth.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gsentinel {

inline constexpr std::size_t kCoreDims = 11;

/// Canonical order of the core feature columns: ten command counts, then total lines.
inline constexpr std::array<CommandCode, 10> kCoreCodes{codes::G0,   codes::G1,   codes::G92,  codes::M82,
                                                        codes::M84,  codes::M104, codes::M105, codes::M106,
                                                        codes::M107, codes::M140};
inline constexpr std::array<const char*, kCoreDims> kCoreNames{"G0",   "G1",   "G92",  "M82",  "M84",        "M104",
                                                               "M105", "M106", "M107", "M140", "total_lines"};

enum CoreColumn : std::size_t { kColG0 = 0, kColG1 = 1, kColTotalLines = 10 };

struct FeatureVector {
    std::array<double, kCoreDims> core{};

    int layer_count = 0;
    /// x_min, x_max, y_min, y_max, z_min, z_max (zeros when an axis never moved)
    std::array<double, 6> bounds{};
    double total_extruded = 0.0;
    int e_decimal_mode = 0;
    std::size_t e_decimal_anomaly_count = 0;
    std::map<int, std::size_t> e_decimal_histogram;
};

namespace detail {
inline int histogram_mode(const std::map<int, std::size_t>& h) {
    int mode = 0;
    std::size_t best = 0;
    for (const auto& [dec, n] : h)
        if (n > best) {
            best = n;
            mode = dec;
        }
    return mode;
}

inline std::size_t off_mode(const std::map<int, std::size_t>& h, int mode) {
    std::size_t n = 0;
    for (const auto& [dec, c] : h)
        if (dec != mode)
            n += c;
    return n;
}
} // namespace detail

/// Features of one file. Decimal anomalies are counted against
/// `reference_decimals` when given (the corpus mode), otherwise against the
/// file's own modal decimal count.
inline FeatureVector extract(const PrintSummary& s, std::optional<int> reference_decimals = {}) {
    FeatureVector f;
    for (std::size_t i = 0; i < kCoreCodes.size(); ++i)
        f.core[i] = static_cast<double>(s.count(kCoreCodes[i]));
    f.core[kColTotalLines] = static_cast<double>(s.total_lines);
    f.layer_count = s.layer_count;
    for (int axis = 0; axis < 3; ++axis) {
        if (s.bounds.empty(axis))
            continue;
        f.bounds[2 * axis] = s.bounds.min[axis];
        f.bounds[2 * axis + 1] = s.bounds.max[axis];
    }
    f.total_extruded = s.total_extruded;
    f.e_decimal_histogram = s.e_decimal_histogram;
    f.e_decimal_mode = detail::histogram_mode(s.e_decimal_histogram);
    f.e_decimal_anomaly_count = detail::off_mode(s.e_decimal_histogram, reference_decimals.value_or(f.e_decimal_mode));
    return f;
}

inline FeatureVector extract(const GcodeDocument& doc, std::optional<int> reference_decimals = {}) {
    return extract(simulate(doc), reference_decimals);
}

struct FeatureMatrix {
    std::vector<std::string> paths;
    std::vector<FeatureVector> rows;
    std::array<double, kCoreDims> column_means{};
    std::array<double, kCoreDims> column_stds{};
    std::array<bool, kCoreDims> zero_variance{};
    /// Modal E decimal count over every E token in the corpus.
    int corpus_e_decimal_mode = 0;

    std::size_t size() const { return rows.size(); }

    std::vector<double> column(std::size_t c) const {
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows)
            v.push_back(r.core[c]);
        return v;
    }
};

/// Assembles rows in the given order, then applies the corpus-wide decimal
/// mode and computes population column moments.
inline FeatureMatrix build_matrix(std::vector<std::string> paths, std::vector<FeatureVector> rows) {
    FeatureMatrix m;
    m.paths = std::move(paths);
    m.rows = std::move(rows);

    std::map<int, std::size_t> corpus;
    for (const auto& r : m.rows)
        for (const auto& [dec, n] : r.e_decimal_histogram)
            corpus[dec] += n;
    m.corpus_e_decimal_mode = detail::histogram_mode(corpus);
    for (auto& r : m.rows)
        r.e_decimal_anomaly_count = detail::off_mode(r.e_decimal_histogram, m.corpus_e_decimal_mode);

    const double n = static_cast<double>(m.rows.size());
    for (std::size_t c = 0; c < kCoreDims && !m.rows.empty(); ++c) {
        double mean = 0.0;
        for (const auto& r : m.rows)
            mean += r.core[c];
        mean /= n;
        double var = 0.0;
        for (const auto& r : m.rows)
            var += (r.core[c] - mean) * (r.core[c] - mean);
        m.column_means[c] = mean;
        m.column_stds[c] = std::sqrt(var / n);
        m.zero_variance[c] = m.column_stds[c] == 0.0;
    }
    return m;
}

/// Reads every manifest entry from `dataset_dir`, in manifest order.
inline FeatureMatrix build_matrix(const DatasetManifest& manifest, const fs::path& dataset_dir) {
    std::vector<std::string> paths;
    std::vector<FeatureVector> rows;
    paths.reserve(manifest.entries.size());
    rows.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        try {
            rows.push_back(extract(parse_document(read_file(dataset_dir / e.path), e.path)));
        } catch (const Error& err) {
            throw Error(e.path + ": " + err.what());
        }
        paths.push_back(e.path);
    }
    return build_matrix(std::move(paths), std::move(rows));
}

/// Per-column z-scores of the core features; zero-variance columns become 0.
inline Eigen::MatrixXd standardize(const FeatureMatrix& m) {
    if (m.size() < 2)
        throw TooFewRows(m.size(), 2);
    Eigen::MatrixXd z(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(kCoreDims));
    for (std::size_t r = 0; r < m.size(); ++r)
        for (std::size_t c = 0; c < kCoreDims; ++c)
            z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                m.zero_variance[c] ? 0.0 : (m.rows[r].core[c] - m.column_means[c]) / m.column_stds[c];
    return z;
}

inline std::string features_csv(const FeatureMatrix& m) {
    std::string out = "path";
    for (const char* name : kCoreNames)
        out += std::string(",") + name;
    out += ",layer_count,x_min,x_max,y_min,y_max,z_min,z_max,total_extruded,e_decimal_mode,e_decimal_anomaly_count\n";
    for (std::size_t r = 0; r < m.size(); ++r) {
        const auto& f = m.rows[r];
        out += m.paths[r];
        for (double v : f.core)
            out += "," + std::to_string(static_cast<long long>(v));
        out += "," + std::to_string(f.layer_count);
        for (double b : f.bounds)
            out += "," + format_fixed(b, 3);
        out += "," + format_fixed(f.total_extruded, 5);
        out += "," + std::to_string(f.e_decimal_mode);
        out += "," + std::to_string(f.e_decimal_anomaly_count) + "\n";
    }
    return out;
}

} // namespace gsentinel

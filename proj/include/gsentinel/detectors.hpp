#pragma once

// Blue-team detectors. Each one reads a FeatureMatrix and returns the set of
// files it considers compromised, together with every parameter it used.

#include "gsentinel/cluster.hpp"
#include "gsentinel/error.hpp"
#include "gsentinel/features.hpp"
#include "gsentinel/pca.hpp"
#include "gsentinel/robust.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gsentinel {

struct FlagSet {
    std::string detector_name;
    std::vector<std::string> flagged; // sorted, unique
    std::map<std::string, double> scores;
    nlohmann::json parameters = nlohmann::json::object();

    bool contains(const std::string& path) const { return std::binary_search(flagged.begin(), flagged.end(), path); }
};

struct DetectorParams {
    double z_threshold = 3.5;
    double small_cluster_fraction = 0.01;
    int dbscan_min_samples = 5;
    std::optional<double> dbscan_eps; // default: knee of the k-distance curve
    std::optional<double> meanshift_bandwidth;
    double meanshift_quantile = 0.3;
};

inline constexpr std::size_t kMinStatRows = 10;

namespace detail {

inline void finalize(FlagSet& f) {
    std::sort(f.flagged.begin(), f.flagged.end());
    f.flagged.erase(std::unique(f.flagged.begin(), f.flagged.end()), f.flagged.end());
}

/// Outlier test matching robust::modified_z: z-threshold on the MAD scale,
/// or outside the 1.5 IQR fences when MAD is zero.
inline bool beyond(const robust::OutlierScores& s, std::size_t i, double z_threshold) {
    return std::abs(s.scores[i]) > (s.used_iqr ? 1.0 : z_threshold);
}

} // namespace detail

/// Robust screen of the G1 count alone.
inline FlagSet detect_single_stat(const FeatureMatrix& m, const DetectorParams& p = {}) {
    if (m.size() < kMinStatRows)
        throw TooFewRows(m.size(), kMinStatRows);
    const auto g1 = m.column(kColG1);
    const auto s = robust::modified_z(g1);

    FlagSet f;
    f.detector_name = "single";
    f.parameters = {{"feature", "G1"},
                    {"z_threshold", p.z_threshold},
                    {"median", s.center},
                    {"scale", s.scale},
                    {"rule", s.used_iqr ? "iqr_fences_1.5" : "modified_z"}};
    for (std::size_t i = 0; i < m.size(); ++i) {
        f.scores[m.paths[i]] = s.scores[i];
        if (detail::beyond(s, i, p.z_threshold))
            f.flagged.push_back(m.paths[i]);
    }
    detail::finalize(f);
    return f;
}

/// G0 and G1 count screens plus the E-decimal side channel: a file is flagged
/// when either count is a robust outlier, or when any of its E words departs
/// from the corpus-wide decimal count.
inline FlagSet detect_combined_stat(const FeatureMatrix& m, const DetectorParams& p = {}) {
    if (m.size() < kMinStatRows)
        throw TooFewRows(m.size(), kMinStatRows);
    const auto g0 = robust::modified_z(m.column(kColG0));
    const auto g1 = robust::modified_z(m.column(kColG1));

    FlagSet f;
    f.detector_name = "combined";
    f.parameters = {{"features", {"G0", "G1", "e_decimal_anomaly_count"}},
                    {"z_threshold", p.z_threshold},
                    {"g0_median", g0.center},
                    {"g0_scale", g0.scale},
                    {"g1_median", g1.center},
                    {"g1_scale", g1.scale},
                    {"corpus_e_decimals", m.corpus_e_decimal_mode}};
    for (std::size_t i = 0; i < m.size(); ++i) {
        const bool counts = detail::beyond(g0, i, p.z_threshold) || detail::beyond(g1, i, p.z_threshold);
        const bool decimals = m.rows[i].e_decimal_anomaly_count > 0;
        f.scores[m.paths[i]] = std::max(std::abs(g0.scores[i]), std::abs(g1.scores[i]));
        if (counts || decimals)
            f.flagged.push_back(m.paths[i]);
    }
    detail::finalize(f);
    return f;
}

/// Largest cluster still counted as small: max(2, floor(fraction * N)).
inline std::size_t small_cluster_limit(std::size_t n, double small_cluster_fraction) {
    return static_cast<std::size_t>(std::max(2.0, std::floor(small_cluster_fraction * static_cast<double>(n))));
}

/// Noise points plus members of clusters no larger than max(2, fraction * N).
inline FlagSet flags_from_clusters(const ClusterLabels& labels, const std::vector<std::string>& paths,
                                   double small_cluster_fraction = 0.01) {
    if (labels.labels.size() != paths.size())
        throw InvalidParams("cluster labels and paths differ in length");
    const std::size_t limit = small_cluster_limit(paths.size(), small_cluster_fraction);
    std::map<int, std::size_t> sizes;
    for (int l : labels.labels)
        if (l != kNoise)
            ++sizes[l];

    FlagSet f;
    f.detector_name = to_string(labels.algorithm);
    f.parameters = {{"small_cluster_fraction", small_cluster_fraction}, {"small_cluster_limit", limit}};
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const int l = labels.labels[i];
        if (l == kNoise || sizes[l] <= limit)
            f.flagged.push_back(paths[i]);
    }
    detail::finalize(f);
    return f;
}

/// Two-component projection with per-row cluster labels, kept for scatter export.
struct PcaScatter {
    std::vector<std::string> paths;
    Eigen::MatrixXd points;
    std::vector<int> labels;
};

inline FlagSet detect_pca_clusters(const FeatureMatrix& m, ClusterAlgorithm algorithm, const DetectorParams& p = {},
                                   PcaScatter* scatter = nullptr) {
    const Eigen::MatrixXd z = standardize(m);
    const PcaFit fit = fit_pca(z, 2);

    ClusterLabels labels;
    nlohmann::json extra = nlohmann::json::object();
    if (algorithm == ClusterAlgorithm::Agglomerative) {
        labels = cluster_agglomerative(fit.projected);
        extra["linkage"] = "ward";
        extra["cut"] = "widest_log_gap_mean_offset";
    } else if (algorithm == ClusterAlgorithm::MeanShift) {
        MeanShiftParams ms;
        ms.bandwidth = p.meanshift_bandwidth;
        ms.bandwidth_quantile = p.meanshift_quantile;
        auto res = cluster_meanshift(fit.projected, ms);
        labels = std::move(res.labels);
        extra["bandwidth"] = res.bandwidth;
        extra["bandwidth_quantile"] = p.meanshift_quantile;
    } else {
        throw InvalidParams("pca detector supports agglomerative or meanshift clustering");
    }

    FlagSet f = flags_from_clusters(labels, m.paths, p.small_cluster_fraction);
    f.detector_name = "pca-" + to_string(algorithm);
    f.parameters["clustering"] = to_string(algorithm);
    f.parameters["components"] = 2;
    f.parameters["eigenvalues"] = {fit.model.eigenvalues(0), fit.model.eigenvalues(1)};
    f.parameters["clusters"] = labels.cluster_count();
    f.parameters.update(extra);
    for (std::size_t i = 0; i < m.size(); ++i)
        f.scores[m.paths[i]] = fit.projected.row(static_cast<Eigen::Index>(i)).norm();

    if (scatter) {
        scatter->paths = m.paths;
        scatter->points = fit.projected;
        scatter->labels = labels.labels;
    }
    return f;
}

/// DBSCAN on the standardized 11-D rows. The default radius is the knee of the
/// sorted k-distance curve, raised if needed so that no more rows are left
/// non-core than the small-cluster limit allows. Without that floor a corpus
/// with no outliers at all still loses its sparse fringe to noise.
inline FlagSet detect_dbscan(const FeatureMatrix& m, const DetectorParams& p = {}) {
    const Eigen::MatrixXd z = standardize(m);
    if (z.rows() <= p.dbscan_min_samples)
        throw TooFewRows(static_cast<std::size_t>(z.rows()), static_cast<std::size_t>(p.dbscan_min_samples) + 1);
    const int k = std::max(1, p.dbscan_min_samples - 1);
    const auto kd = k_distances(z, k);

    double eps = 0.0;
    nlohmann::json rule;
    if (p.dbscan_eps) {
        eps = *p.dbscan_eps;
        rule = {{"eps_rule", "fixed"}};
    } else {
        auto sorted = kd;
        std::sort(sorted.begin(), sorted.end());
        const double knee = knee_of_sorted(sorted);
        const std::size_t budget = std::min(sorted.size() - 1, small_cluster_limit(m.size(), p.small_cluster_fraction));
        const double floor = sorted[sorted.size() - 1 - budget];
        eps = std::max(knee, floor);
        rule = {{"eps_rule", "knee_of_k_distance_with_noise_floor"}, {"knee", knee}, {"noise_floor", floor}};
    }
    // Identical rows give a zero radius; any positive radius then joins them.
    const double used_eps = eps > 0.0 ? eps : 1e-9;
    const ClusterLabels labels = cluster_dbscan(z, used_eps, p.dbscan_min_samples);

    FlagSet f = flags_from_clusters(labels, m.paths, p.small_cluster_fraction);
    f.detector_name = "dbscan";
    f.parameters["eps"] = used_eps;
    f.parameters.update(rule);
    f.parameters["k"] = k;
    f.parameters["min_samples"] = p.dbscan_min_samples;
    f.parameters["clusters"] = labels.cluster_count();
    for (std::size_t i = 0; i < m.size(); ++i)
        f.scores[m.paths[i]] = kd[i];
    return f;
}

inline const std::vector<std::string>& detector_names() {
    static const std::vector<std::string> names{"single", "combined", "pca-agglomerative", "pca-meanshift",
                                                "dbscan"};
    return names;
}

/// The four methods of the original comparison table.
inline const std::vector<std::string>& default_detectors() {
    static const std::vector<std::string> names{"single", "combined", "pca-agglomerative", "dbscan"};
    return names;
}

inline FlagSet run_detector(const std::string& name, const FeatureMatrix& m, const DetectorParams& p = {},
                            PcaScatter* scatter = nullptr) {
    if (name == "single")
        return detect_single_stat(m, p);
    if (name == "combined")
        return detect_combined_stat(m, p);
    if (name == "pca-agglomerative")
        return detect_pca_clusters(m, ClusterAlgorithm::Agglomerative, p, scatter);
    if (name == "pca-meanshift")
        return detect_pca_clusters(m, ClusterAlgorithm::MeanShift, p, scatter);
    if (name == "dbscan")
        return detect_dbscan(m, p);
    throw InvalidParams("unknown detector '" + name + "'");
}

// ---------------------------------------------------------------------------
// Export

inline nlohmann::json to_json(const FlagSet& f) {
    return {{"detector", f.detector_name}, {"parameters", f.parameters}, {"flagged", f.flagged}, {"scores", f.scores}};
}

inline FlagSet flagset_from_json(const nlohmann::json& j) {
    FlagSet f;
    j.at("detector").get_to(f.detector_name);
    j.at("flagged").get_to(f.flagged);
    if (j.contains("scores"))
        j.at("scores").get_to(f.scores);
    if (j.contains("parameters"))
        f.parameters = j.at("parameters");
    detail::finalize(f);
    return f;
}

inline std::string scatter_csv(const PcaScatter& s) {
    std::string out = "path,pc1,pc2,cluster_label\n";
    for (std::size_t i = 0; i < s.paths.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out += s.paths[i] + "," + format_fixed(s.points(r, 0), 9) + "," + format_fixed(s.points(r, 1), 9) + "," +
               std::to_string(s.labels[i]) + "\n";
    }
    return out;
}

} // namespace gsentinel

#pragma once

// Shared fixtures and reference implementations for the unit tests.
// The oracles here are deliberately naive and share no code with the library.

#include "gsentinel/gsentinel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

namespace fs = std::filesystem;

inline const char* kSnippet = "G1 X1 Y1 E1\nG1 X5 Y1 E2\nG1 X5 Y5 E3\n";

/// Removes itself on destruction.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path = fs::temp_directory_path() / ("gsentinel-" + tag + "-" + std::to_string(rd()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

/// A small absolute-extrusion document with `layers` layers and `moves` E moves per layer.
inline std::string layered_text(int layers, int moves, double e_step = 0.1) {
    std::string s = "G28\nM82\nG92 E0\n";
    double e = 0.0;
    char buf[96];
    for (int l = 0; l < layers; ++l) {
        s += ";LAYER:" + std::to_string(l) + "\n";
        std::snprintf(buf, sizeof buf, "G0 X0 Y0 Z%.2f\n", 0.2 * (l + 1));
        s += buf;
        for (int m = 0; m < moves; ++m) {
            e += e_step;
            std::snprintf(buf, sizeof buf, "G1 X%d Y%d E%.5f\n", m + 1, l, e);
            s += buf;
        }
    }
    s += "M84\n";
    return s;
}

/// Same-partition test: labels agree up to renaming, noise must match noise.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size())
        return false;
    std::map<int, int> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] < 0) != (b[i] < 0))
            return false;
        if (a[i] < 0)
            continue;
        auto [it, fresh] = ab.emplace(a[i], b[i]);
        auto [jt, fresh2] = ba.emplace(b[i], a[i]);
        if (it->second != b[i] || jt->second != a[i])
            return false;
    }
    return true;
}

/// Textbook DBSCAN: recompute neighbourhoods by brute force on demand.
inline std::vector<int> naive_dbscan(const std::vector<std::vector<double>>& pts, double eps, int min_samples) {
    const std::size_t n = pts.size();
    auto dist = [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t d = 0; d < pts[i].size(); ++d)
            s += (pts[i][d] - pts[j][d]) * (pts[i][d] - pts[j][d]);
        return std::sqrt(s);
    };
    auto region = [&](std::size_t i) {
        std::vector<std::size_t> r;
        for (std::size_t j = 0; j < n; ++j)
            if (dist(i, j) <= eps)
                r.push_back(j);
        return r;
    };
    std::vector<int> label(n, -2); // -2 unvisited, -1 noise
    int cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != -2)
            continue;
        auto nb = region(i);
        if (static_cast<int>(nb.size()) < min_samples) {
            label[i] = -1;
            continue;
        }
        label[i] = cluster;
        std::deque<std::size_t> queue(nb.begin(), nb.end());
        while (!queue.empty()) {
            const std::size_t q = queue.front();
            queue.pop_front();
            if (label[q] == -1)
                label[q] = cluster;
            if (label[q] != -2)
                continue;
            label[q] = cluster;
            auto nq = region(q);
            if (static_cast<int>(nq.size()) >= min_samples)
                queue.insert(queue.end(), nq.begin(), nq.end());
        }
        ++cluster;
    }
    return label;
}

/// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues descending.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                off += a[i][j] * a[i][j];
        if (off < 1e-30)
            break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300)
                    continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i)
        ev[i] = a[i][i];
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

/// Ward merge heights by exhaustive search over cluster pairs using the
/// centroid form: d(A,B) = sqrt(2 |A||B| / (|A|+|B|)) * |cA - cB|.
inline std::vector<double> naive_ward_heights(const std::vector<std::vector<double>>& pts) {
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < pts.size(); ++i)
        clusters.push_back({i});
    auto centroid = [&](const std::vector<std::size_t>& c) {
        std::vector<double> m(pts[0].size(), 0.0);
        for (auto i : c)
            for (std::size_t d = 0; d < m.size(); ++d)
                m[d] += pts[i][d] / static_cast<double>(c.size());
        return m;
    };
    std::vector<double> heights;
    while (clusters.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t i = 0; i < clusters.size(); ++i)
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                const auto ci = centroid(clusters[i]), cj = centroid(clusters[j]);
                double s = 0.0;
                for (std::size_t d = 0; d < ci.size(); ++d)
                    s += (ci[d] - cj[d]) * (ci[d] - cj[d]);
                const double a = static_cast<double>(clusters[i].size()), b = static_cast<double>(clusters[j].size());
                const double h = std::sqrt(2.0 * a * b / (a + b) * s);
                if (h < best) {
                    best = h;
                    bi = i;
                    bj = j;
                }
            }
        heights.push_back(best);
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        clusters.erase(clusters.begin() + static_cast<long>(bj));
    }
    std::sort(heights.begin(), heights.end());
    return heights;
}

/// Two Gaussian blobs in 2-D, centres `separation` spreads apart. Membership: 0 for the first n_a rows.
inline Eigen::MatrixXd two_blobs(std::uint64_t seed, int n_a, int n_b, double spread, double separation) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, spread);
    Eigen::MatrixXd pts(n_a + n_b, 2);
    for (int i = 0; i < n_a + n_b; ++i) {
        const double cx = i < n_a ? 0.0 : separation * spread;
        pts(i, 0) = cx + g(rng);
        pts(i, 1) = g(rng);
    }
    return pts;
}

inline std::vector<int> blob_membership(int n_a, int n_b) {
    std::vector<int> m(static_cast<std::size_t>(n_a + n_b), 1);
    std::fill(m.begin(), m.begin() + n_a, 0);
    return m;
}

} // namespace testing_support

namespace testing_support {

struct MemoryCorpus {
    gsentinel::DatasetManifest manifest;
    gsentinel::CompromisePlan truth;
    gsentinel::FeatureMatrix matrix;
};

/// Generates, compromises and extracts a corpus without touching disk.
inline MemoryCorpus memory_corpus(const gsentinel::SpecimenSpec& spec, int count, double step, int faces,
                                  const gsentinel::StrategyCounts& counts, std::uint64_t seed) {
    using namespace gsentinel;
    MemoryCorpus c;
    c.manifest = plan_dataset(spec.name, count, step, faces, derive_seed(seed, "generate"));
    c.truth = plan_compromise(c.manifest, counts, derive_seed(seed, "compromise"));
    std::map<std::string, StrategyId> victims;
    for (const auto& v : c.truth.victims)
        victims[v.path] = v.strategy;
    std::vector<std::string> paths;
    std::vector<FeatureVector> rows;
    for (const auto& e : c.manifest.entries) {
        auto doc = parse_document(build_specimen_text(spec, e.angle_deg, e.seed, e.face), e.path);
        if (auto it = victims.find(e.path); it != victims.end())
            doc = apply_strategy(doc, default_strategy(it->second)).document;
        paths.push_back(e.path);
        rows.push_back(extract(doc));
    }
    c.matrix = build_matrix(std::move(paths), std::move(rows));
    return c;
}

} // namespace testing_support

#pragma once

// Unsupervised clustering over feature rows: Ward agglomerative, flat-kernel
// mean shift, and DBSCAN. All are deterministic with index-order tie-breaking.

#include "gsentinel/error.hpp"
#include "gsentinel/robust.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace gsentinel {

enum class ClusterAlgorithm { Agglomerative, MeanShift, Dbscan };

inline std::string to_string(ClusterAlgorithm a) {
    switch (a) {
    case ClusterAlgorithm::Agglomerative:
        return "agglomerative";
    case ClusterAlgorithm::MeanShift:
        return "meanshift";
    case ClusterAlgorithm::Dbscan:
        return "dbscan";
    }
    return "?";
}

inline constexpr int kNoise = -1;

struct ClusterLabels {
    std::vector<int> labels;
    ClusterAlgorithm algorithm = ClusterAlgorithm::Agglomerative;

    int cluster_count() const {
        int k = 0;
        for (int l : labels)
            k = std::max(k, l + 1);
        return k;
    }
};

/// Renumbers non-noise labels 0, 1, ... in order of first appearance.
inline std::vector<int> relabel_by_first_appearance(const std::vector<int>& raw) {
    std::vector<int> out(raw.size(), kNoise);
    std::vector<std::pair<int, int>> seen; // raw -> new
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == kNoise)
            continue;
        auto it = std::find_if(seen.begin(), seen.end(), [&](auto& p) { return p.first == raw[i]; });
        if (it == seen.end()) {
            seen.emplace_back(raw[i], static_cast<int>(seen.size()));
            out[i] = seen.back().second;
        } else {
            out[i] = it->second;
        }
    }
    return out;
}

namespace detail {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a), b = find(b);
        if (a != b)
            parent[std::max(a, b)] = std::min(a, b);
    }
};

inline double sq_dist(const Eigen::MatrixXd& pts, Eigen::Index i, Eigen::Index j) {
    return (pts.row(i) - pts.row(j)).squaredNorm();
}

/// Condensed symmetric matrix, diagonal excluded.
class Condensed {
public:
    explicit Condensed(std::size_t n) : n_(n), v_(n * (n - 1) / 2) {}
    double& operator()(std::size_t i, std::size_t j) {
        if (i > j)
            std::swap(i, j);
        return v_[i * n_ - i * (i + 1) / 2 + (j - i - 1)];
    }

private:
    std::size_t n_;
    std::vector<double> v_;
};

} // namespace detail

// ---------------------------------------------------------------------------
// Ward agglomerative

struct Merge {
    std::size_t a = 0, b = 0; // representative point of each side
    double height = 0.0;      // Ward distance (scipy convention)
    std::size_t size = 0;     // size of the merged cluster
};

/// Full Ward dendrogram via the nearest-neighbour chain, merges sorted by height.
inline std::vector<Merge> ward_linkage(const Eigen::MatrixXd& pts) {
    const std::size_t n = static_cast<std::size_t>(pts.rows());
    std::vector<Merge> merges;
    if (n < 2)
        return merges;
    detail::Condensed d2(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            d2(i, j) = detail::sq_dist(pts, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));

    std::vector<std::size_t> size(n, 1);
    std::vector<bool> active(n, true);
    std::vector<std::size_t> chain;
    merges.reserve(n - 1);

    while (merges.size() + 1 < n) {
        if (chain.empty())
            chain.push_back(static_cast<std::size_t>(std::find(active.begin(), active.end(), true) - active.begin()));
        const std::size_t a = chain.back();
        const std::optional<std::size_t> prev =
            chain.size() >= 2 ? std::optional<std::size_t>(chain[chain.size() - 2]) : std::nullopt;

        std::size_t best = prev.value_or(n);
        double best_d = prev ? d2(a, *prev) : std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (!active[j] || j == a)
                continue;
            const double dj = d2(a, j);
            if (dj < best_d) {
                best_d = dj;
                best = j;
            }
        }

        if (prev && best == *prev) {
            chain.pop_back();
            chain.pop_back();
            const std::size_t keep = std::min(a, best), gone = std::max(a, best);
            const double ni = static_cast<double>(size[keep]), nj = static_cast<double>(size[gone]);
            for (std::size_t k = 0; k < n; ++k) {
                if (!active[k] || k == keep || k == gone)
                    continue;
                const double nk = static_cast<double>(size[k]);
                d2(keep, k) = ((ni + nk) * d2(keep, k) + (nj + nk) * d2(gone, k) - nk * best_d) / (ni + nj + nk);
            }
            active[gone] = false;
            size[keep] += size[gone];
            merges.push_back({keep, gone, std::sqrt(std::max(0.0, best_d)), size[keep]});
        } else {
            chain.push_back(best);
        }
    }
    std::stable_sort(merges.begin(), merges.end(), [](const Merge& x, const Merge& y) { return x.height < y.height; });
    return merges;
}

/// Applies the lowest `count` merges and returns the resulting partition.
inline std::vector<int> cut_merges(std::size_t n, const std::vector<Merge>& merges, std::size_t count) {
    detail::UnionFind uf(n);
    for (std::size_t m = 0; m < count; ++m)
        uf.unite(merges[m].a, merges[m].b);
    std::vector<int> raw(n);
    for (std::size_t i = 0; i < n; ++i)
        raw[i] = static_cast<int>(uf.find(i));
    return relabel_by_first_appearance(raw);
}

/// Ward clustering with the dendrogram cut inside the widest gap between
/// consecutive merge heights, never above the second-to-last merge (k >= 2).
/// Gaps are compared on a log scale after adding the mean merge height to
/// every height, so a small group far from a large spread-out cloud still
/// gets its own cut while near-duplicate merges at the bottom stay inert.
/// Ties prefer the higher cut.
inline ClusterLabels cluster_agglomerative(const Eigen::MatrixXd& pts) {
    const std::size_t n = static_cast<std::size_t>(pts.rows());
    if (n < 2)
        throw TooFewRows(n, 2);
    const auto merges = ward_linkage(pts);
    double offset = 0.0;
    for (const auto& m : merges)
        offset += m.height;
    offset /= static_cast<double>(merges.size());

    std::size_t applied = 0;
    double widest = -1.0;
    for (std::size_t i = 0; i + 1 < merges.size(); ++i) {
        const double gap =
            offset > 0.0 ? std::log((merges[i + 1].height + offset) / (merges[i].height + offset)) : 0.0;
        if (gap >= widest) {
            widest = gap;
            applied = i + 1;
        }
    }
    return {cut_merges(n, merges, applied), ClusterAlgorithm::Agglomerative};
}

// ---------------------------------------------------------------------------
// Mean shift

struct MeanShiftParams {
    std::optional<double> bandwidth;
    double bandwidth_quantile = 0.3;
    int max_iterations = 300;
    double tolerance = 1e-6;
};

inline std::vector<double> pairwise_distances(const Eigen::MatrixXd& pts) {
    const Eigen::Index n = pts.rows();
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            d.push_back(std::sqrt(detail::sq_dist(pts, i, j)));
    return d;
}

inline double estimate_bandwidth(const Eigen::MatrixXd& pts, double quantile) {
    const auto d = pairwise_distances(pts);
    return robust::quantile(d, quantile);
}

struct MeanShiftResult {
    ClusterLabels labels;
    double bandwidth = 0.0;
    Eigen::MatrixXd modes; // one row per cluster
};

/// Flat-kernel mean shift from every point; converged modes closer than
/// bandwidth/2 to an earlier mode join it.
inline MeanShiftResult cluster_meanshift(const Eigen::MatrixXd& pts, const MeanShiftParams& params = {}) {
    const Eigen::Index n = pts.rows();
    if (n < 2)
        throw TooFewRows(static_cast<std::size_t>(n), 2);
    const double bw = params.bandwidth ? *params.bandwidth : estimate_bandwidth(pts, params.bandwidth_quantile);
    if (!(bw > 0.0))
        throw ZeroBandwidth();

    const double bw2 = bw * bw;
    std::vector<Eigen::RowVectorXd> converged;
    converged.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::RowVectorXd x = pts.row(i);
        for (int it = 0; it < params.max_iterations; ++it) {
            Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(pts.cols());
            int count = 0;
            for (Eigen::Index j = 0; j < n; ++j)
                if ((pts.row(j) - x).squaredNorm() <= bw2) {
                    sum += pts.row(j);
                    ++count;
                }
            if (count == 0)
                break;
            const Eigen::RowVectorXd next = sum / count;
            const double shift = (next - x).norm();
            x = next;
            if (shift < params.tolerance)
                break;
        }
        converged.push_back(std::move(x));
    }

    MeanShiftResult res;
    res.bandwidth = bw;
    res.labels.algorithm = ClusterAlgorithm::MeanShift;
    res.labels.labels.resize(static_cast<std::size_t>(n));
    std::vector<Eigen::RowVectorXd> centers;
    for (std::size_t i = 0; i < converged.size(); ++i) {
        int label = -1;
        for (std::size_t c = 0; c < centers.size(); ++c)
            if ((converged[i] - centers[c]).norm() <= 0.5 * bw) {
                label = static_cast<int>(c);
                break;
            }
        if (label < 0) {
            label = static_cast<int>(centers.size());
            centers.push_back(converged[i]);
        }
        res.labels.labels[i] = label;
    }
    res.modes.resize(static_cast<Eigen::Index>(centers.size()), pts.cols());
    for (std::size_t c = 0; c < centers.size(); ++c)
        res.modes.row(static_cast<Eigen::Index>(c)) = centers[c];
    return res;
}

// ---------------------------------------------------------------------------
// DBSCAN

/// Distance from each point to its k-th nearest other point.
inline std::vector<double> k_distances(const Eigen::MatrixXd& pts, int k) {
    const Eigen::Index n = pts.rows();
    if (k < 1 || k >= n)
        throw InvalidParams("k-distance: need 1 <= k < n");
    std::vector<double> out(static_cast<std::size_t>(n));
    std::vector<double> row(static_cast<std::size_t>(n - 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        std::size_t w = 0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i)
                row[w++] = detail::sq_dist(pts, i, j);
        std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
        out[static_cast<std::size_t>(i)] = std::sqrt(row[static_cast<std::size_t>(k - 1)]);
    }
    return out;
}

/// Knee of an ascending curve: after scaling both axes to [0, 1], the point
/// lying furthest below the chord joining the ends.
inline double knee_of_sorted(const std::vector<double>& d) {
    if (d.empty())
        throw InvalidParams("knee of an empty curve");
    const double lo = d.front(), hi = d.back();
    if (hi <= lo)
        return hi;
    const double n1 = static_cast<double>(d.size() - 1);
    std::size_t best = 0;
    double best_gap = -1.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double gap = static_cast<double>(i) / n1 - (d[i] - lo) / (hi - lo);
        if (gap > best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    return d[best];
}

inline double knee_eps(const Eigen::MatrixXd& pts, int k) {
    auto d = k_distances(pts, k);
    std::sort(d.begin(), d.end());
    return knee_of_sorted(d);
}

/// Standard DBSCAN. A point is core when at least `min_samples` points
/// (itself included) lie within `eps`; clusters are seeded from unvisited core
/// points in index order and grown breadth-first, so a border point reachable
/// from two clusters joins the one seeded first. Noise is -1.
inline ClusterLabels cluster_dbscan(const Eigen::MatrixXd& pts, double eps, int min_samples) {
    if (!(eps > 0.0) || min_samples < 1)
        throw InvalidParams("dbscan: need eps > 0 and min_samples >= 1");
    const std::size_t n = static_cast<std::size_t>(pts.rows());
    const double eps2 = eps * eps;

    std::vector<std::vector<std::size_t>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i) {
        nbrs[i].push_back(i);
        for (std::size_t j = i + 1; j < n; ++j)
            if (detail::sq_dist(pts, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) <= eps2) {
                nbrs[i].push_back(j);
                nbrs[j].push_back(i);
            }
    }
    for (auto& v : nbrs)
        std::sort(v.begin(), v.end());

    constexpr int kUnvisited = -2;
    std::vector<int> label(n, kUnvisited);
    int next = 0;
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != kUnvisited)
            continue;
        if (nbrs[i].size() < static_cast<std::size_t>(min_samples)) {
            label[i] = kNoise;
            continue;
        }
        const int c = next++;
        label[i] = c;
        queue.assign(nbrs[i].begin(), nbrs[i].end());
        while (!queue.empty()) {
            const std::size_t q = queue.front();
            queue.pop_front();
            if (label[q] == kNoise)
                label[q] = c; // border point
            if (label[q] != kUnvisited)
                continue;
            label[q] = c;
            if (nbrs[q].size() >= static_cast<std::size_t>(min_samples))
                queue.insert(queue.end(), nbrs[q].begin(), nbrs[q].end());
        }
    }
    return {std::move(label), ClusterAlgorithm::Dbscan};
}

} // namespace gsentinel

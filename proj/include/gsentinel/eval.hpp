#pragma once

// Scoring detector output against the compromise ground truth.

#include "gsentinel/detectors.hpp"
#include "gsentinel/error.hpp"
#include "gsentinel/mutate.hpp"
#include "gsentinel/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace gsentinel {

struct ConfusionMatrix {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(const FlagSet& flags, const CompromisePlan& truth, const DatasetManifest& manifest) {
    std::set<std::string> known;
    for (const auto& e : manifest.entries)
        known.insert(e.path);
    std::set<std::string> victims;
    for (const auto& v : truth.victims) {
        if (!known.count(v.path))
            throw UnknownPath(v.path);
        victims.insert(v.path);
    }
    std::set<std::string> flagged;
    for (const auto& p : flags.flagged) {
        if (!known.count(p))
            throw UnknownPath(p);
        flagged.insert(p);
    }

    ConfusionMatrix c;
    for (const auto& path : known) {
        const bool bad = victims.count(path) > 0, hit = flagged.count(path) > 0;
        if (bad && hit)
            ++c.tp;
        else if (hit)
            ++c.fp;
        else if (bad)
            ++c.fn;
        else
            ++c.tn;
    }
    if (c.total() != known.size() || c.tp + c.fn != victims.size())
        throw Error("confusion totals do not match the dataset");
    return c;
}

struct StrategyRecall {
    std::size_t victims = 0;
    std::size_t detected = 0;

    double recall() const { return victims ? static_cast<double>(detected) / static_cast<double>(victims) : 0.0; }
    friend bool operator==(const StrategyRecall&, const StrategyRecall&) = default;
};

/// Strategies without victims are absent.
using StrategyBreakdown = std::map<StrategyId, StrategyRecall>;

inline StrategyBreakdown per_strategy(const FlagSet& flags, const CompromisePlan& truth) {
    StrategyBreakdown b;
    for (const auto& v : truth.victims) {
        auto& r = b[v.strategy];
        ++r.victims;
        if (flags.contains(v.path))
            ++r.detected;
    }
    return b;
}

// ---------------------------------------------------------------------------
// Reports

inline constexpr const char* kReportSchema = "gsentinel-report/1";

struct DetectorResult {
    std::string detector;
    ConfusionMatrix matrix;
    StrategyBreakdown breakdown;

    friend bool operator==(const DetectorResult&, const DetectorResult&) = default;
};

struct DatasetResult {
    std::string dataset_id;
    std::size_t files = 0;
    std::size_t victims = 0;
    std::vector<DetectorResult> detectors;

    friend bool operator==(const DatasetResult&, const DatasetResult&) = default;
};

struct Report {
    std::vector<DatasetResult> datasets;

    friend bool operator==(const Report&, const Report&) = default;
};

inline DetectorResult score(const FlagSet& flags, const CompromisePlan& truth, const DatasetManifest& manifest) {
    return {flags.detector_name, confusion(flags, truth, manifest), per_strategy(flags, truth)};
}

/// One row per detector, four columns (TP, FP, TN, FN) per dataset. A detector
/// missing from a dataset leaves its cells empty.
inline std::string report_table_csv(const Report& r) {
    std::vector<std::string> detectors;
    for (const auto& d : r.datasets)
        for (const auto& res : d.detectors)
            if (std::find(detectors.begin(), detectors.end(), res.detector) == detectors.end())
                detectors.push_back(res.detector);

    std::string out = "detector";
    for (const auto& d : r.datasets)
        for (const char* col : {"TP", "FP", "TN", "FN"})
            out += "," + d.dataset_id + "_" + col;
    out += "\n";
    for (const auto& name : detectors) {
        out += name;
        for (const auto& d : r.datasets) {
            const auto it = std::find_if(d.detectors.begin(), d.detectors.end(),
                                         [&](const DetectorResult& x) { return x.detector == name; });
            if (it == d.detectors.end()) {
                out += ",,,,";
                continue;
            }
            const auto& m = it->matrix;
            out += "," + std::to_string(m.tp) + "," + std::to_string(m.fp) + "," + std::to_string(m.tn) + "," +
                   std::to_string(m.fn);
        }
        out += "\n";
    }
    return out;
}

/// Long format: dataset, detector, strategy, victims, detected, recall.
inline std::string report_strategy_csv(const Report& r) {
    std::string out = "dataset,detector,strategy,victims,detected,recall\n";
    for (const auto& d : r.datasets)
        for (const auto& res : d.detectors)
            for (const auto& [id, s] : res.breakdown)
                out += d.dataset_id + "," + res.detector + "," + to_string(id) + "," + std::to_string(s.victims) +
                       "," + std::to_string(s.detected) + "," + format_fixed(s.recall(), 4) + "\n";
    return out;
}

inline void to_json(nlohmann::json& j, const ConfusionMatrix& m) {
    j = {{"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
}
inline void from_json(const nlohmann::json& j, ConfusionMatrix& m) {
    j.at("tp").get_to(m.tp);
    j.at("fp").get_to(m.fp);
    j.at("tn").get_to(m.tn);
    j.at("fn").get_to(m.fn);
}

inline void to_json(nlohmann::json& j, const DetectorResult& d) {
    nlohmann::json by = nlohmann::json::object();
    for (const auto& [id, s] : d.breakdown)
        by[to_string(id)] = {{"victims", s.victims}, {"detected", s.detected}, {"recall", s.recall()}};
    j = {{"detector", d.detector}, {"confusion", d.matrix}, {"per_strategy", by}};
}
inline void from_json(const nlohmann::json& j, DetectorResult& d) {
    j.at("detector").get_to(d.detector);
    j.at("confusion").get_to(d.matrix);
    d.breakdown.clear();
    for (const auto& [key, s] : j.at("per_strategy").items())
        d.breakdown[parse_strategy_id(key)] = {s.at("victims").get<std::size_t>(), s.at("detected").get<std::size_t>()};
}

inline void to_json(nlohmann::json& j, const DatasetResult& d) {
    j = {{"dataset_id", d.dataset_id}, {"files", d.files}, {"victims", d.victims}, {"detectors", d.detectors}};
}
inline void from_json(const nlohmann::json& j, DatasetResult& d) {
    j.at("dataset_id").get_to(d.dataset_id);
    j.at("files").get_to(d.files);
    j.at("victims").get_to(d.victims);
    j.at("detectors").get_to(d.detectors);
}

inline std::string report_json(const Report& r) {
    return nlohmann::json{{"schema", kReportSchema}, {"datasets", r.datasets}}.dump(2) + "\n";
}

inline Report parse_report_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("schema").get<std::string>() != kReportSchema)
            throw InvalidParams("unsupported report schema '" + j.at("schema").get<std::string>() + "'");
        Report r;
        j.at("datasets").get_to(r.datasets);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParams(std::string("bad report: ") + e.what());
    }
}

} // namespace gsentinel

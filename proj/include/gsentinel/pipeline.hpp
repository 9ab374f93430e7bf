#pragma once

// Experiment orchestration: config handling, the run-directory layout, and the
// generate / compromise / detect / evaluate stages.

#include "gsentinel/detectors.hpp"
#include "gsentinel/error.hpp"
#include "gsentinel/eval.hpp"
#include "gsentinel/features.hpp"
#include "gsentinel/io.hpp"
#include "gsentinel/mutate.hpp"
#include "gsentinel/rng.hpp"
#include "gsentinel/synth.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace gsentinel {

inline constexpr const char* kToolVersion = "gsentinel 1.0.0";

struct DatasetConfig {
    std::string id;
    std::string specimen = "D1"; // D1 | D2
    int count = 180;
    double step_deg = 1.0;
    int faces = 1;
    StrategyCounts compromise;
    std::map<StrategyId, RangeMode> ranges; // overrides of the default ranges

    Strategy strategy(StrategyId id) const {
        Strategy s = default_strategy(id);
        if (auto it = ranges.find(id); it != ranges.end())
            s.range_mode = it->second;
        return s;
    }
};

struct ExperimentConfig {
    std::uint64_t master_seed = 20240601;
    std::string out = "run";
    std::vector<std::string> detectors = default_detectors();
    DetectorParams params;
    std::vector<DatasetConfig> datasets;
};

inline SpecimenSpec specimen_for(const std::string& name) {
    if (name == "D1")
        return d1_specimen();
    if (name == "D2")
        return d2_specimen();
    throw InvalidParams("unknown specimen '" + name + "' (expected D1 or D2)");
}

/// Full-size presets: 180 D1 files at 1 degree with two ID1 victims, and 4320
/// D2 files at 0.25 degree over three faces with ten victims per strategy.
inline DatasetConfig d1_preset() {
    DatasetConfig d;
    d.id = "d1";
    d.specimen = "D1";
    d.count = 180;
    d.step_deg = 1.0;
    d.faces = 1;
    d.compromise = {{StrategyId::ID1, 2}};
    return d;
}

inline DatasetConfig d2_preset() {
    DatasetConfig d;
    d.id = "d2";
    d.specimen = "D2";
    d.count = 4320;
    d.step_deg = 0.25;
    d.faces = 3;
    for (auto id : kAllStrategies)
        d.compromise[id] = 10;
    return d;
}

inline ExperimentConfig default_config() {
    ExperimentConfig c;
    c.datasets = {d1_preset(), d2_preset()};
    return c;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const DetectorParams& p) {
    j = {{"z_threshold", p.z_threshold},
         {"small_cluster_fraction", p.small_cluster_fraction},
         {"dbscan_min_samples", p.dbscan_min_samples},
         {"dbscan_eps", p.dbscan_eps ? nlohmann::json(*p.dbscan_eps) : nlohmann::json(nullptr)},
         {"meanshift_bandwidth", p.meanshift_bandwidth ? nlohmann::json(*p.meanshift_bandwidth) : nlohmann::json(nullptr)},
         {"meanshift_quantile", p.meanshift_quantile}};
}

inline void from_json(const nlohmann::json& j, DetectorParams& p) {
    p.z_threshold = j.value("z_threshold", p.z_threshold);
    p.small_cluster_fraction = j.value("small_cluster_fraction", p.small_cluster_fraction);
    p.dbscan_min_samples = j.value("dbscan_min_samples", p.dbscan_min_samples);
    p.meanshift_quantile = j.value("meanshift_quantile", p.meanshift_quantile);
    if (j.contains("dbscan_eps"))
        p.dbscan_eps = j["dbscan_eps"].is_null() ? std::nullopt : std::optional<double>(j["dbscan_eps"].get<double>());
    if (j.contains("meanshift_bandwidth"))
        p.meanshift_bandwidth = j["meanshift_bandwidth"].is_null()
                                    ? std::nullopt
                                    : std::optional<double>(j["meanshift_bandwidth"].get<double>());
}

inline void to_json(nlohmann::json& j, const DatasetConfig& d) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [id, n] : d.compromise)
        counts[to_string(id)] = n;
    nlohmann::json ranges = nlohmann::json::object();
    for (const auto& [id, m] : d.ranges)
        ranges[to_string(id)] = to_string(m);
    j = {{"id", d.id},         {"specimen", d.specimen}, {"count", d.count},   {"step_deg", d.step_deg},
         {"faces", d.faces},   {"compromise", counts},   {"ranges", ranges}};
}

/// Missing fields fall back to the preset of the named specimen.
inline void from_json(const nlohmann::json& j, DatasetConfig& d) {
    const std::string specimen = j.value("specimen", std::string("D1"));
    if (specimen != "D1" && specimen != "D2")
        throw InvalidParams("unknown specimen '" + specimen + "' (expected D1 or D2)");
    d = specimen == "D1" ? d1_preset() : d2_preset();
    d.id = j.value("id", d.id);
    d.count = j.value("count", d.count);
    d.step_deg = j.value("step_deg", d.step_deg);
    d.faces = j.value("faces", d.faces);
    if (j.contains("compromise")) {
        d.compromise.clear();
        for (const auto& [key, n] : j.at("compromise").items())
            d.compromise[parse_strategy_id(key)] = n.get<int>();
    }
    if (j.contains("ranges"))
        for (const auto& [key, m] : j.at("ranges").items())
            d.ranges[parse_strategy_id(key)] = parse_range_mode(m.get<std::string>());
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = {{"master_seed", c.master_seed},
         {"out", c.out},
         {"detectors", c.detectors},
         {"detector_params", c.params},
         {"datasets", c.datasets}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    c = default_config();
    c.master_seed = j.value("master_seed", c.master_seed);
    c.out = j.value("out", c.out);
    if (j.contains("detectors"))
        j.at("detectors").get_to(c.detectors);
    if (j.contains("detector_params"))
        j.at("detector_params").get_to(c.params);
    if (j.contains("datasets"))
        j.at("datasets").get_to(c.datasets);
}

inline ExperimentConfig load_config(const fs::path& path) {
    if (!fs::exists(path))
        throw IoError("config not found: " + path.string());
    try {
        return nlohmann::json::parse(read_file(path)).get<ExperimentConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParams("bad config " + path.string() + ": " + e.what());
    }
}

/// Rejects anything a later stage would refuse, before any file is written.
inline void validate(const ExperimentConfig& c) {
    if (c.datasets.empty())
        throw InvalidParams("config lists no datasets");
    if (c.out.empty())
        throw InvalidParams("output directory is empty");
    if (c.detectors.empty())
        throw InvalidParams("no detectors selected");
    const auto& known = detector_names();
    for (const auto& d : c.detectors)
        if (std::find(known.begin(), known.end(), d) == known.end())
            throw InvalidParams("unknown detector '" + d + "'");
    const auto& p = c.params;
    if (!(p.z_threshold > 0.0))
        throw InvalidParams("z_threshold must be positive");
    if (!(p.small_cluster_fraction >= 0.0 && p.small_cluster_fraction < 1.0))
        throw InvalidParams("small_cluster_fraction must lie in [0, 1)");
    if (p.dbscan_min_samples < 1)
        throw InvalidParams("dbscan_min_samples must be at least 1");
    if (p.dbscan_eps && !(*p.dbscan_eps > 0.0))
        throw InvalidParams("dbscan_eps must be positive");
    if (p.meanshift_bandwidth && !(*p.meanshift_bandwidth > 0.0))
        throw InvalidParams("meanshift_bandwidth must be positive");
    if (!(p.meanshift_quantile > 0.0 && p.meanshift_quantile <= 1.0))
        throw InvalidParams("meanshift_quantile must lie in (0, 1]");

    std::set<std::string> ids;
    for (const auto& d : c.datasets) {
        if (d.id.empty() || d.id.find_first_of("/\\. ") != std::string::npos)
            throw InvalidParams("dataset id '" + d.id + "' must be a plain non-empty name");
        if (!ids.insert(d.id).second)
            throw InvalidParams("duplicate dataset id '" + d.id + "'");
        validate(specimen_for(d.specimen));
        (void)plan_dataset(d.id, d.count, d.step_deg, d.faces, 0);
        int total = 0;
        for (const auto& [id, n] : d.compromise) {
            if (n < 0)
                throw InvalidParams(d.id + ": negative victim count for " + to_string(id));
            total += n;
        }
        if (total > d.count)
            throw CountsExceedDataset(d.id + ": " + std::to_string(total) + " victims requested from " +
                                      std::to_string(d.count) + " files");
    }
}

// ---------------------------------------------------------------------------
// Layout and seeds

struct RunLayout {
    fs::path root;

    fs::path dataset(const std::string& id) const { return root / id; }
    fs::path corpus(const std::string& id) const { return root / id / "corpus"; }
    fs::path blind(const std::string& id) const { return root / id / "blind"; }
    fs::path truth(const std::string& id) const { return root / id / "truth.json"; }
    fs::path mutation_logs(const std::string& id) const { return root / id / "mutation_logs.json"; }
    fs::path flags_dir(const std::string& id) const { return root / id / "flags"; }
    fs::path flags(const std::string& id, const std::string& detector) const {
        return flags_dir(id) / (detector + ".json");
    }
    fs::path features(const std::string& id) const { return root / id / "features.csv"; }
    fs::path scatter(const std::string& id, const std::string& detector) const {
        return root / id / (detector + "_scatter.csv");
    }
    fs::path run_metadata() const { return root / "run.json"; }
    fs::path report_json() const { return root / "report.json"; }
    fs::path report_csv() const { return root / "report.csv"; }
    fs::path strategy_csv() const { return root / "per_strategy.csv"; }
};

inline std::uint64_t generate_seed(const ExperimentConfig& c, const DatasetConfig& d) {
    return derive_seed(c.master_seed, "generate/" + d.id);
}
inline std::uint64_t compromise_seed(const ExperimentConfig& c, const DatasetConfig& d) {
    return derive_seed(c.master_seed, "compromise/" + d.id);
}

namespace detail {

inline std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline void reset_dir(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
}

inline std::string counts_text(const StrategyCounts& counts) {
    std::string s;
    for (const auto& [id, n] : counts) {
        if (n == 0)
            continue;
        s += (s.empty() ? "" : " ") + to_string(id) + "x" + std::to_string(n);
    }
    return s.empty() ? "none" : s;
}

} // namespace detail

/// Records the stage in run.json. Everything but `timestamp` is a function of
/// the config alone.
inline void write_run_metadata(const ExperimentConfig& c, const std::string& stage) {
    const RunLayout layout{c.out};
    nlohmann::json meta = nlohmann::json::object();
    if (fs::exists(layout.run_metadata())) {
        try {
            meta = nlohmann::json::parse(read_file(layout.run_metadata()));
        } catch (const nlohmann::json::exception&) {
            meta = nlohmann::json::object();
        }
    }
    std::vector<std::string> stages = meta.value("stages", std::vector<std::string>{});
    if (std::find(stages.begin(), stages.end(), stage) == stages.end())
        stages.push_back(stage);

    nlohmann::json seeds = nlohmann::json::object();
    for (const auto& d : c.datasets)
        seeds[d.id] = {{"generate", generate_seed(c, d)}, {"compromise", compromise_seed(c, d)}};

    meta = {{"tool_version", kToolVersion},
            {"generator_version", kGeneratorVersion},
            {"report_schema", kReportSchema},
            {"master_seed", c.master_seed},
            {"seeds", seeds},
            {"config", c},
            {"stages", stages},
            {"timestamp", detail::utc_timestamp()}};
    write_file(layout.run_metadata(), meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Stages

inline void print_plan(const ExperimentConfig& c, std::ostream& os) {
    const RunLayout layout{c.out};
    os << "run directory: " << layout.root.string() << "\n";
    os << "master seed:   " << c.master_seed << "\n";
    os << "detectors:     ";
    for (std::size_t i = 0; i < c.detectors.size(); ++i)
        os << (i ? "," : "") << c.detectors[i];
    os << "\n";
    for (const auto& d : c.datasets) {
        const int per_face = (d.count + d.faces - 1) / d.faces;
        os << "dataset " << d.id << ": specimen " << d.specimen << ", " << d.count << " files, step "
           << format_shortest(d.step_deg) << " deg, " << d.faces << " face(s), sweep "
           << format_shortest((per_face - 1) * d.step_deg) << " deg per face\n";
        os << "  victims: " << detail::counts_text(d.compromise) << "\n";
        os << "  seeds:   generate " << generate_seed(c, d) << ", compromise " << compromise_seed(c, d) << "\n";
        os << "  corpus:  " << layout.corpus(d.id).string() << "\n";
        os << "  blind:   " << layout.blind(d.id).string() << "\n";
        os << "  truth:   " << layout.truth(d.id).string() << "\n";
    }
}

inline void cmd_generate(const ExperimentConfig& c, std::ostream& log) {
    validate(c);
    const RunLayout layout{c.out};
    for (const auto& d : c.datasets) {
        detail::reset_dir(layout.corpus(d.id));
        const auto m = generate_dataset(specimen_for(d.specimen), d.id, d.count, d.step_deg, d.faces,
                                        layout.corpus(d.id), generate_seed(c, d));
        log << "generate " << d.id << ": " << m.entries.size() << " files -> " << layout.corpus(d.id).string()
            << "\n";
    }
    write_run_metadata(c, "generate");
}

struct CompromiseOutcome {
    CompromisePlan truth;
    std::vector<MutationLog> logs;
    std::vector<Victim> skipped; // selected but left untouched (empty range)
};

/// Copies the corpus to a blind directory and rewrites the victims there.
/// Truth and mutation logs go next to, never inside, the blind directory.
inline CompromiseOutcome compromise_dataset(const DatasetConfig& d, const fs::path& corpus_dir,
                                            const fs::path& blind_dir, std::uint64_t seed) {
    const auto manifest = load_manifest(corpus_dir / kManifestName);
    const CompromisePlan plan = plan_compromise(manifest, d.compromise, seed);

    detail::reset_dir(blind_dir);
    for (const auto& e : manifest.entries)
        fs::copy_file(corpus_dir / e.path, blind_dir / e.path, fs::copy_options::overwrite_existing);
    save_manifest(manifest, blind_dir / kManifestName);

    CompromiseOutcome out;
    out.truth.dataset_id = plan.dataset_id;
    out.truth.seed = plan.seed;
    for (const auto& v : plan.victims) {
        const auto doc = parse_document(read_file(corpus_dir / v.path), v.path);
        try {
            auto res = apply_strategy(doc, d.strategy(v.strategy));
            write_file(blind_dir / v.path, serialize(res.document));
            out.truth.victims.push_back(v);
            out.logs.push_back(std::move(res.log));
        } catch (const EmptyRange&) {
            out.skipped.push_back(v);
        }
    }
    return out;
}

inline void cmd_compromise(const ExperimentConfig& c, std::ostream& log) {
    validate(c);
    const RunLayout layout{c.out};
    for (const auto& d : c.datasets) {
        if (!fs::exists(layout.corpus(d.id) / kManifestName))
            throw IoError("no corpus for dataset '" + d.id + "' under " + layout.root.string() +
                          " (run generate first)");
        const auto out = compromise_dataset(d, layout.corpus(d.id), layout.blind(d.id), compromise_seed(c, d));
        write_file(layout.truth(d.id), nlohmann::json(out.truth).dump(2) + "\n");
        write_file(layout.mutation_logs(d.id),
                   nlohmann::json{{"logs", out.logs}, {"skipped", out.skipped}}.dump(2) + "\n");
        log << "compromise " << d.id << ": " << out.truth.victims.size() << " victims";
        if (!out.skipped.empty())
            log << " (" << out.skipped.size() << " skipped: empty range)";
        log << " -> " << layout.blind(d.id).string() << "\n";
    }
    write_run_metadata(c, "compromise");
}

/// Runs the detectors over one blind directory and writes one FlagSet per
/// detector, the feature table and, for PCA detectors, the projection.
inline std::vector<FlagSet> detect_dataset(const fs::path& blind_dir, const std::vector<std::string>& detectors,
                                           const DetectorParams& params, const fs::path& dataset_dir) {
    const auto manifest = load_manifest(blind_dir / kManifestName);
    const FeatureMatrix m = build_matrix(manifest, blind_dir);
    const RunLayout layout{dataset_dir.parent_path()};
    const std::string id = dataset_dir.filename().string();
    write_file(layout.features(id), features_csv(m));

    std::vector<FlagSet> out;
    for (const auto& name : detectors) {
        PcaScatter scatter;
        const bool pca = name.rfind("pca-", 0) == 0;
        FlagSet f = run_detector(name, m, params, pca ? &scatter : nullptr);
        write_file(layout.flags(id, name), to_json(f).dump(2) + "\n");
        if (pca)
            write_file(layout.scatter(id, name), scatter_csv(scatter));
        out.push_back(std::move(f));
    }
    return out;
}

inline void cmd_detect(const ExperimentConfig& c, std::ostream& log) {
    validate(c);
    const RunLayout layout{c.out};
    for (const auto& d : c.datasets) {
        if (!fs::exists(layout.blind(d.id) / kManifestName))
            throw IoError("no blind dataset for '" + d.id + "' under " + layout.root.string() +
                          " (run compromise first)");
        detail::reset_dir(layout.flags_dir(d.id));
        const auto sets = detect_dataset(layout.blind(d.id), c.detectors, c.params, layout.dataset(d.id));
        for (const auto& f : sets)
            log << "detect " << d.id << " " << f.detector_name << ": " << f.flagged.size() << " flagged\n";
    }
    write_run_metadata(c, "detect");
}

inline Report evaluate_run(const ExperimentConfig& c) {
    const RunLayout layout{c.out};
    Report r;
    for (const auto& d : c.datasets) {
        const CompromisePlan truth = load_truth(layout.truth(d.id));
        const auto manifest = load_manifest(layout.blind(d.id) / kManifestName);
        DatasetResult dr;
        dr.dataset_id = d.id;
        dr.files = manifest.entries.size();
        dr.victims = truth.victims.size();
        for (const auto& name : c.detectors) {
            const auto path = layout.flags(d.id, name);
            if (!fs::exists(path))
                throw IoError("missing flags for detector '" + name + "': " + path.string() + " (run detect first)");
            FlagSet f;
            try {
                f = flagset_from_json(nlohmann::json::parse(read_file(path)));
            } catch (const nlohmann::json::exception& e) {
                throw IoError("bad flag file " + path.string() + ": " + e.what());
            }
            dr.detectors.push_back(score(f, truth, manifest));
        }
        r.datasets.push_back(std::move(dr));
    }
    return r;
}

inline void print_report(const Report& r, std::ostream& os) {
    for (const auto& d : r.datasets) {
        os << d.dataset_id << " (" << d.files << " files, " << d.victims << " victims)\n";
        for (const auto& res : d.detectors) {
            const auto& m = res.matrix;
            char line[160];
            std::snprintf(line, sizeof line, "  %-18s TP %4zu  FP %4zu  TN %5zu  FN %4zu  ", res.detector.c_str(), m.tp,
                          m.fp, m.tn, m.fn);
            os << line;
            for (const auto& [id, s] : res.breakdown)
                os << " " << to_string(id) << " " << s.detected << "/" << s.victims;
            os << "\n";
        }
    }
}

inline Report cmd_evaluate(const ExperimentConfig& c, std::ostream& log) {
    validate(c);
    const RunLayout layout{c.out};
    const Report r = evaluate_run(c);
    write_file(layout.report_json(), report_json(r));
    write_file(layout.report_csv(), report_table_csv(r));
    write_file(layout.strategy_csv(), report_strategy_csv(r));
    print_report(r, log);
    write_run_metadata(c, "evaluate");
    return r;
}

inline Report run_all(const ExperimentConfig& c, std::ostream& log) {
    validate(c);
    cmd_generate(c, log);
    cmd_compromise(c, log);
    cmd_detect(c, log);
    return cmd_evaluate(c, log);
}

} // namespace gsentinel

#pragma once

// The six compromise strategies and the victim planner.
//
// All strategies lean on absolute extrusion: the E word is a running total, so
// dropping or flattening one move pushes its material onto the next extruding
// move and the final E register is unchanged.

#include "gsentinel/error.hpp"
#include "gsentinel/gcode.hpp"
#include "gsentinel/rng.hpp"
#include "gsentinel/simulate.hpp"
#include "gsentinel/synth.hpp"

#include <json.hpp>

#include <array>
#include <map>
#include <string>
#include <vector>

namespace gsentinel {

enum class StrategyId { ID1 = 1, ID2, ID3, ID4, ID5, ID6 };

inline constexpr std::array<StrategyId, 6> kAllStrategies{StrategyId::ID1, StrategyId::ID2, StrategyId::ID3,
                                                          StrategyId::ID4, StrategyId::ID5, StrategyId::ID6};

enum class RangeMode { Middle50, Full100 };

struct Strategy {
    StrategyId id = StrategyId::ID1;
    RangeMode range_mode = RangeMode::Middle50;

    friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// Table defaults: ID3 touches the whole print, everything else the middle half.
inline Strategy default_strategy(StrategyId id) {
    return {id, id == StrategyId::ID3 ? RangeMode::Full100 : RangeMode::Middle50};
}

inline std::string to_string(StrategyId id) { return "ID" + std::to_string(static_cast<int>(id)); }
inline std::string to_string(RangeMode m) { return m == RangeMode::Middle50 ? "middle50" : "full100"; }

inline StrategyId parse_strategy_id(std::string_view s) {
    for (auto id : kAllStrategies)
        if (s == to_string(id))
            return id;
    throw InvalidParams("unknown strategy '" + std::string(s) + "' (expected ID1..ID6)");
}

inline RangeMode parse_range_mode(std::string_view s) {
    if (s == "middle50")
        return RangeMode::Middle50;
    if (s == "full100")
        return RangeMode::Full100;
    throw InvalidParams("unknown range mode '" + std::string(s) + "'");
}

/// Half-open line interval [begin, end).
struct LineSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool empty() const { return begin >= end; }
    bool contains(std::size_t i) const { return i >= begin && i < end; }
    friend bool operator==(const LineSpan&, const LineSpan&) = default;
};

/// Middle50 covers layers [ceil(L/4), floor(3L/4)) by layer-marker ordinal;
/// Full100 covers everything from the first layer marker on.
inline LineSpan select_range(const GcodeDocument& doc, RangeMode mode) {
    const std::size_t layers = doc.layer_marks.size();
    if (layers == 0)
        throw NoLayers();
    if (mode == RangeMode::Full100)
        return {doc.layer_marks.front().line_index, doc.lines.size()};
    const std::size_t lo = (layers + 3) / 4;
    const std::size_t hi = 3 * layers / 4;
    if (lo >= hi)
        return {};
    return {doc.layer_marks[lo].line_index, doc.layer_marks[hi].line_index};
}

struct MutationLog {
    std::string file;
    Strategy strategy;
    /// Indices into the original document of every line rewritten or removed.
    std::vector<std::size_t> affected_line_indices;
    double original_final_e = 0.0;
    double mutated_final_e = 0.0;
    std::size_t lines_deleted = 0;
    /// Lines rewritten in place (G1 -> G0, or a new E word).
    std::size_t lines_converted = 0;
    std::size_t blobs_added = 0;
};

struct MutationResult {
    GcodeDocument document;
    MutationLog log;
};

namespace detail {

inline void set_e(GcodeLine& line, std::string text) {
    Param* e = line.find('E');
    e->value = gsentinel::detail::to_double(text);
    e->text = std::move(text);
    line.raw_text = render(line);
}

inline GcodeLine to_travel(const GcodeLine& line) {
    std::vector<Param> kept;
    for (const auto& p : line.params)
        if (p.axis == 'X' || p.axis == 'Y' || p.axis == 'Z')
            kept.push_back(p);
    return make_command(codes::G0, std::move(kept), line.comment);
}

} // namespace detail

/// Applies one strategy. Targets for the "every 4th" strategies are the
/// E-bearing G1 moves inside the range at 1-based ordinals 4, 8, 12, ...
/// Rewritten E words use the shortest exact decimal form, except ID3 which
/// re-rounds to five decimals. Throws EmptyRange when nothing would change.
inline MutationResult apply_strategy(const GcodeDocument& doc, const Strategy& strategy) {
    const LineSpan span = select_range(doc, strategy.range_mode);
    if (span.empty())
        throw EmptyRange(to_string(strategy.id) + ": selected range is empty");

    MutationResult res;
    MutationLog& log = res.log;
    log.file = doc.source_path.value_or("");
    log.strategy = strategy;

    GcodeDocument& out = res.document;
    out.source_path = doc.source_path;
    out.final_newline = doc.final_newline;
    out.lines.reserve(doc.lines.size() + doc.lines.size() / 8);

    PrinterState st;
    std::size_t ordinal = 0;
    // ID3 bookkeeping: original and halved E registers.
    double orig_prev = 0.0, half_prev = 0.0;

    for (std::size_t i = 0; i < doc.lines.size(); ++i) {
        const GcodeLine& line = doc.lines[i];
        const double e_before = st.e;
        step(st, line);

        if (!span.contains(i)) {
            out.lines.push_back(line);
            continue;
        }
        if (i == span.begin) {
            orig_prev = e_before;
            half_prev = e_before;
        }

        if (strategy.id == StrategyId::ID3) {
            const Param* e = line.find('E');
            if (e && line.is(codes::G92)) {
                orig_prev = half_prev = e->value;
            } else if (e && (line.is(codes::G1) || line.is(codes::G0))) {
                half_prev += 0.5 * (e->value - orig_prev);
                orig_prev = e->value;
                GcodeLine rewritten = line;
                detail::set_e(rewritten, format_fixed(half_prev, 5));
                if (rewritten.raw_text != line.raw_text) {
                    log.affected_line_indices.push_back(i);
                    ++log.lines_converted;
                }
                out.lines.push_back(std::move(rewritten));
                continue;
            }
            out.lines.push_back(line);
            continue;
        }

        const bool target = line.is(codes::G1) && line.has('E') && (++ordinal % 4 == 0);
        if (!target) {
            out.lines.push_back(line);
            continue;
        }
        log.affected_line_indices.push_back(i);
        switch (strategy.id) {
        case StrategyId::ID1:
            out.lines.push_back(detail::to_travel(line));
            ++log.lines_converted;
            break;
        case StrategyId::ID2:
            out.lines.push_back(detail::to_travel(line));
            out.lines.push_back(make_command(codes::G1, {make_param('E', format_shortest(line.find('E')->value))}));
            ++log.lines_converted;
            ++log.blobs_added;
            break;
        case StrategyId::ID4: {
            GcodeLine rewritten = line;
            detail::set_e(rewritten, format_shortest(e_before));
            out.lines.push_back(std::move(rewritten));
            ++log.lines_converted;
            break;
        }
        case StrategyId::ID5: {
            GcodeLine rewritten = line;
            detail::set_e(rewritten, format_shortest(e_before + 0.0001));
            out.lines.push_back(std::move(rewritten));
            ++log.lines_converted;
            break;
        }
        case StrategyId::ID6:
            ++log.lines_deleted;
            break;
        case StrategyId::ID3:
            break;
        }
    }

    if (log.affected_line_indices.empty())
        throw EmptyRange(to_string(strategy.id) + ": no target lines inside the selected range");

    out.reindex();
    log.original_final_e = simulate(doc).final_e;
    log.mutated_final_e = simulate(out).final_e;
    return res;
}

// ---------------------------------------------------------------------------
// Planning

struct Victim {
    std::string path;
    StrategyId strategy = StrategyId::ID1;

    friend bool operator==(const Victim&, const Victim&) = default;
};

struct CompromisePlan {
    std::string dataset_id;
    std::vector<Victim> victims;
    std::uint64_t seed = 0;

    friend bool operator==(const CompromisePlan&, const CompromisePlan&) = default;
};

using StrategyCounts = std::map<StrategyId, int>;

/// Victims are drawn uniformly without replacement (partial Fisher-Yates),
/// then assigned to strategies in ID order.
inline CompromisePlan plan_compromise(const DatasetManifest& manifest, const StrategyCounts& counts,
                                      std::uint64_t seed) {
    std::size_t total = 0;
    for (const auto& [id, n] : counts) {
        if (n < 0)
            throw InvalidParams("negative victim count for " + to_string(id));
        total += static_cast<std::size_t>(n);
    }
    if (total > manifest.entries.size())
        throw CountsExceedDataset("requested " + std::to_string(total) + " victims from a dataset of " +
                                  std::to_string(manifest.entries.size()));

    std::vector<std::size_t> order(manifest.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    Rng rng(seed);
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, order.size() - i));
        std::swap(order[i], order[j]);
    }

    CompromisePlan plan;
    plan.dataset_id = manifest.dataset_id;
    plan.seed = seed;
    std::size_t next = 0;
    for (const auto& [id, n] : counts)
        for (int k = 0; k < n; ++k)
            plan.victims.push_back({manifest.entries[order[next++]].path, id});
    return plan;
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const Victim& v) { j = {{"path", v.path}, {"strategy", to_string(v.strategy)}}; }
inline void from_json(const nlohmann::json& j, Victim& v) {
    j.at("path").get_to(v.path);
    v.strategy = parse_strategy_id(j.at("strategy").get<std::string>());
}
inline void to_json(nlohmann::json& j, const CompromisePlan& p) {
    j = {{"dataset_id", p.dataset_id}, {"seed", p.seed}, {"victims", p.victims}};
}
inline void from_json(const nlohmann::json& j, CompromisePlan& p) {
    j.at("dataset_id").get_to(p.dataset_id);
    p.seed = j.value("seed", std::uint64_t{0});
    j.at("victims").get_to(p.victims);
}

inline void to_json(nlohmann::json& j, const MutationLog& l) {
    j = {{"file", l.file},
         {"strategy", to_string(l.strategy.id)},
         {"range", to_string(l.strategy.range_mode)},
         {"affected_line_indices", l.affected_line_indices},
         {"original_final_e", l.original_final_e},
         {"mutated_final_e", l.mutated_final_e},
         {"lines_deleted", l.lines_deleted},
         {"lines_converted", l.lines_converted},
         {"blobs_added", l.blobs_added}};
}

inline CompromisePlan load_truth(const fs::path& path) {
    if (!fs::exists(path))
        throw IoError("truth file not found: " + path.string());
    try {
        return nlohmann::json::parse(read_file(path)).get<CompromisePlan>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError("bad truth file " + path.string() + ": " + e.what());
    }
}

} // namespace gsentinel

#include "support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace gsentinel;
using testing_support::layered_text;

namespace {

GcodeDocument twenty_layers() { return parse_document(layered_text(20, 8)); }

std::size_t count_code(const GcodeDocument& d, CommandCode c) { return simulate(d).count(c); }

} // namespace

TEST(SelectRange, MiddleHalfOfTwentyLayers) {
    const auto doc = twenty_layers();
    const auto span = select_range(doc, RangeMode::Middle50);
    // ceil(20/4) = 5, floor(60/4) = 15
    EXPECT_EQ(span.begin, doc.layer_marks[5].line_index);
    EXPECT_EQ(span.end, doc.layer_marks[15].line_index);
}

TEST(SelectRange, OracleOverLayerCounts) {
    for (int layers = 1; layers <= 30; ++layers) {
        const auto doc = parse_document(layered_text(layers, 2));
        const auto span = select_range(doc, RangeMode::Middle50);
        const int lo = (layers + 3) / 4, hi = (3 * layers) / 4;
        if (lo >= hi) {
            EXPECT_TRUE(span.empty()) << layers;
            continue;
        }
        EXPECT_EQ(span.begin, doc.layer_marks[static_cast<std::size_t>(lo)].line_index) << layers;
        EXPECT_EQ(span.end, doc.layer_marks[static_cast<std::size_t>(hi)].line_index) << layers;
    }
}

TEST(SelectRange, FullCoversEverythingAfterPreamble) {
    const auto doc = twenty_layers();
    const auto span = select_range(doc, RangeMode::Full100);
    EXPECT_EQ(span.begin, doc.layer_marks.front().line_index);
    EXPECT_EQ(span.end, doc.size());
}

TEST(SelectRange, NoLayers) { EXPECT_THROW(select_range(parse_document("G1 X1 E1\n"), RangeMode::Full100), NoLayers); }

TEST(ApplyStrategy, OneLayerMiddleIsEmpty) {
    const auto doc = parse_document(layered_text(1, 8));
    EXPECT_TRUE(select_range(doc, RangeMode::Middle50).empty());
    EXPECT_THROW(apply_strategy(doc, default_strategy(StrategyId::ID1)), EmptyRange);
}

TEST(ApplyStrategy, SnippetTravelConversionKeepsThreeMillimetres) {
    // The every-4th rule is replaced here by hand on the 2nd command.
    auto doc = parse_document(";LAYER:0\nG1 X1 Y1 E1\nG1 X5 Y1 E2\nG1 X5 Y5 E3\n");
    doc.lines[2] = make_command(codes::G0, {make_param('X', "5"), make_param('Y', "1")});
    EXPECT_EQ(doc.lines[2].raw_text, "G0 X5 Y1");
    PrinterState st;
    std::vector<double> deltas;
    for (const auto& l : doc.lines)
        deltas.push_back(step(st, l));
    EXPECT_DOUBLE_EQ(deltas[3], 2.0);
    EXPECT_DOUBLE_EQ(simulate(doc).final_e, 3.0);
}

TEST(ApplyStrategy, EveryFourthExtrudingMoveInRange) {
    const auto doc = twenty_layers();
    const auto span = select_range(doc, RangeMode::Middle50);
    std::vector<std::size_t> expected;
    std::size_t ordinal = 0;
    for (std::size_t i = span.begin; i < span.end; ++i)
        if (doc.lines[i].is(codes::G1) && doc.lines[i].has('E') && ++ordinal % 4 == 0)
            expected.push_back(i);
    for (auto id : {StrategyId::ID1, StrategyId::ID2, StrategyId::ID4, StrategyId::ID5, StrategyId::ID6}) {
        const auto res = apply_strategy(doc, default_strategy(id));
        EXPECT_EQ(res.log.affected_line_indices, expected) << to_string(id);
    }
}

TEST(ApplyStrategy, CountDeltasMatchLog) {
    const auto doc = twenty_layers();
    const auto g0 = count_code(doc, codes::G0), g1 = count_code(doc, codes::G1);
    const std::size_t n = 20; // 10 layers x 8 moves / 4

    const auto id1 = apply_strategy(doc, default_strategy(StrategyId::ID1));
    EXPECT_EQ(id1.log.lines_converted, n);
    EXPECT_EQ(count_code(id1.document, codes::G1), g1 - n);
    EXPECT_EQ(count_code(id1.document, codes::G0), g0 + n);
    EXPECT_EQ(id1.document.size(), doc.size());

    const auto id2 = apply_strategy(doc, default_strategy(StrategyId::ID2));
    EXPECT_EQ(id2.log.blobs_added, n);
    EXPECT_EQ(count_code(id2.document, codes::G1), g1);
    EXPECT_EQ(count_code(id2.document, codes::G0), g0 + n);
    EXPECT_EQ(id2.document.size(), doc.size() + n);

    const auto id6 = apply_strategy(doc, default_strategy(StrategyId::ID6));
    EXPECT_EQ(id6.log.lines_deleted, n);
    EXPECT_EQ(count_code(id6.document, codes::G1), g1 - n);
    EXPECT_EQ(id6.document.size(), doc.size() - n);

    for (auto id : {StrategyId::ID3, StrategyId::ID4, StrategyId::ID5}) {
        const auto r = apply_strategy(doc, default_strategy(id));
        EXPECT_EQ(count_code(r.document, codes::G1), g1) << to_string(id);
        EXPECT_EQ(count_code(r.document, codes::G0), g0) << to_string(id);
        EXPECT_EQ(r.document.size(), doc.size()) << to_string(id);
    }
}

TEST(ApplyStrategy, LinesOutsideRangeUntouched) {
    const auto doc = twenty_layers();
    for (auto id : {StrategyId::ID1, StrategyId::ID4, StrategyId::ID5}) {
        const auto r = apply_strategy(doc, default_strategy(id));
        std::set<std::size_t> hit(r.log.affected_line_indices.begin(), r.log.affected_line_indices.end());
        for (std::size_t i = 0; i < doc.size(); ++i) {
            if (!hit.count(i)) {
                EXPECT_EQ(r.document.lines[i].raw_text, doc.lines[i].raw_text) << i;
            }
        }
    }
}

TEST(ApplyStrategy, Id4WritesShortestPreviousValue) {
    std::string text = ";LAYER:0\n;LAYER:1\nG1 X1 E12.10000\nG1 X2 E12.20000\nG1 X3 E12.30000\nG1 X4 E12.34560\n"
                       ";LAYER:2\n;LAYER:3\n";
    const auto r = apply_strategy(parse_document(text), {StrategyId::ID4, RangeMode::Full100});
    ASSERT_EQ(r.log.affected_line_indices.size(), 1u);
    const auto& line = r.document.lines[r.log.affected_line_indices[0]];
    EXPECT_EQ(line.find('E')->text, "12.3");
    EXPECT_LT(line.find('E')->decimals(), 5);
}

TEST(ApplyStrategy, Id5AddsOneTenThousandth) {
    std::string text = ";LAYER:0\nG1 X1 E1.00000\nG1 X2 E2.00000\nG1 X3 E3.00000\nG1 X4 E4.00000\nG1 X5 E5.00000\n";
    const auto r = apply_strategy(parse_document(text), {StrategyId::ID5, RangeMode::Full100});
    const auto& line = r.document.lines[4];
    EXPECT_NEAR(line.find('E')->value, 3.0001, 1e-12);
    EXPECT_NE(line.find('E')->decimals(), 5);
    PrinterState st;
    std::vector<double> d;
    for (const auto& l : r.document.lines)
        d.push_back(step(st, l));
    EXPECT_NEAR(d[4], 0.0001, 1e-12);
    EXPECT_NEAR(d[5], 1.9999, 1e-12);
}

TEST(ApplyStrategy, Id3HalvesAndKeepsFiveDecimals) {
    const auto doc = build_specimen(d1_specimen(), 12.0, 3);
    const double before = simulate(doc).final_e;
    const auto r = apply_strategy(doc, default_strategy(StrategyId::ID3));
    const auto s = simulate(r.document);
    EXPECT_NEAR(s.final_e, 0.5 * before, 1e-6 * before);
    ASSERT_EQ(s.e_decimal_histogram.size(), 1u);
    EXPECT_EQ(s.e_decimal_histogram.begin()->first, 5);
}

TEST(ApplyStrategy, ConservationOnGeneratedFiles) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto doc = build_specimen(seed % 2 ? d1_specimen() : d2_specimen(), 10.0 * seed, seed);
        const double f = simulate(doc).final_e;
        for (auto id : kAllStrategies) {
            const auto r = apply_strategy(doc, default_strategy(id));
            const double g = simulate(r.document).final_e;
            EXPECT_DOUBLE_EQ(r.log.original_final_e, f);
            EXPECT_DOUBLE_EQ(r.log.mutated_final_e, g);
            if (id == StrategyId::ID3) {
                EXPECT_NEAR(g, 0.5 * f, 1e-6 * f);
            } else {
                EXPECT_NEAR(g, f, 1e-6) << to_string(id);
            }
            if (id == StrategyId::ID2) {
                EXPECT_NEAR(simulate(r.document).total_extruded, simulate(doc).total_extruded, 1e-6);
            }
            const auto bytes = serialize(r.document);
            EXPECT_EQ(serialize(parse_document(bytes)), bytes);
        }
    }
}

TEST(Strategy, NamesAndDefaults) {
    EXPECT_EQ(parse_strategy_id("ID4"), StrategyId::ID4);
    EXPECT_THROW(parse_strategy_id("ID7"), InvalidParams);
    EXPECT_EQ(default_strategy(StrategyId::ID3).range_mode, RangeMode::Full100);
    EXPECT_EQ(default_strategy(StrategyId::ID2).range_mode, RangeMode::Middle50);
    EXPECT_EQ(parse_range_mode("full100"), RangeMode::Full100);
    EXPECT_THROW(parse_range_mode("half"), InvalidParams);
}

TEST(PlanCompromise, D1TwoDistinctVictims) {
    const auto m = plan_dataset("D1", 180, 1.0, 1, 1);
    const auto p = plan_compromise(m, {{StrategyId::ID1, 2}}, 9);
    ASSERT_EQ(p.victims.size(), 2u);
    EXPECT_NE(p.victims[0].path, p.victims[1].path);
}

TEST(PlanCompromise, D2SixtyVictimsTenEach) {
    const auto m = plan_dataset("D2", 4320, 0.25, 3, 1);
    StrategyCounts counts;
    for (auto id : kAllStrategies)
        counts[id] = 10;
    const auto p = plan_compromise(m, counts, 9);
    ASSERT_EQ(p.victims.size(), 60u);
    std::set<std::string> paths;
    std::map<StrategyId, int> per;
    for (const auto& v : p.victims) {
        paths.insert(v.path);
        ++per[v.strategy];
    }
    EXPECT_EQ(paths.size(), 60u);
    for (auto id : kAllStrategies)
        EXPECT_EQ(per[id], 10);
    EXPECT_EQ(plan_compromise(m, counts, 9), p);
    EXPECT_NE(plan_compromise(m, counts, 10), p);
}

TEST(PlanCompromise, ZeroCountsAndOverflow) {
    const auto m = plan_dataset("D1", 10, 1.0, 1, 1);
    EXPECT_TRUE(plan_compromise(m, {{StrategyId::ID1, 0}}, 1).victims.empty());
    EXPECT_TRUE(plan_compromise(m, {}, 1).victims.empty());
    EXPECT_THROW(plan_compromise(m, {{StrategyId::ID1, 6}, {StrategyId::ID2, 5}}, 1), CountsExceedDataset);
}

TEST(PlanCompromise, TruthJsonRoundTrip) {
    const auto m = plan_dataset("D1", 30, 1.0, 1, 1);
    const auto p = plan_compromise(m, {{StrategyId::ID2, 3}, {StrategyId::ID5, 1}}, 4);
    const nlohmann::json j = p;
    EXPECT_EQ(j.get<CompromisePlan>(), p);
}

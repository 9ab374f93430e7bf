#include "support.hpp"

#include <gtest/gtest.h>

using namespace gsentinel;

TEST(Robust, MedianMadQuantile) {
    const std::vector<double> odd{5, 1, 3}, even{4, 1, 3, 2};
    EXPECT_DOUBLE_EQ(robust::median(odd), 3.0);
    EXPECT_DOUBLE_EQ(robust::median(even), 2.5);
    EXPECT_TRUE(std::isnan(robust::median(std::vector<double>{})));
    // |x - 3| = {2, 2, 0} -> median 2
    EXPECT_DOUBLE_EQ(robust::mad(odd, 3.0), 2.0);
    const std::vector<double> q{1, 2, 3, 4, 5};
    EXPECT_DOUBLE_EQ(robust::quantile(q, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(robust::quantile(q, 0.3), 2.2);
    EXPECT_DOUBLE_EQ(robust::quantile(q, 1.0), 5.0);
}

TEST(Robust, ModifiedZByHand) {
    const std::vector<double> xs{10, 11, 12, 13, 14, 40};
    // median 12.5, deviations {2.5,1.5,0.5,0.5,1.5,27.5} -> MAD 1.5
    const auto s = robust::modified_z(xs);
    EXPECT_FALSE(s.used_iqr);
    EXPECT_DOUBLE_EQ(s.center, 12.5);
    EXPECT_DOUBLE_EQ(s.scale, 1.5);
    EXPECT_NEAR(s.scores[5], 0.6745 * 27.5 / 1.5, 1e-12);
    EXPECT_NEAR(s.scores[0], -0.6745 * 2.5 / 1.5, 1e-12);
}

TEST(Robust, IqrFallbackWhenMadIsZero) {
    std::vector<double> xs(20, 7.0);
    xs[3] = 9.0;
    const auto s = robust::modified_z(xs);
    EXPECT_TRUE(s.used_iqr);
    EXPECT_GT(std::abs(s.scores[3]), 1.0);
    EXPECT_DOUBLE_EQ(s.scores[0], 0.0);
}

TEST(Extract, Snippet) {
    const auto f = extract(parse_document(testing_support::kSnippet));
    EXPECT_EQ(f.core[kColG1], 3.0);
    EXPECT_EQ(f.core[kColG0], 0.0);
    EXPECT_EQ(f.core[kColTotalLines], 3.0);
    EXPECT_DOUBLE_EQ(f.total_extruded, 3.0);
}

TEST(Extract, EmptyDocumentIsZero) {
    const auto f = extract(parse_document(""));
    for (double v : f.core)
        EXPECT_EQ(v, 0.0);
    EXPECT_EQ(f.layer_count, 0);
}

TEST(Extract, BoundsAndLayers) {
    const auto f = extract(parse_document(testing_support::layered_text(3, 4)));
    EXPECT_EQ(f.layer_count, 3);
    EXPECT_DOUBLE_EQ(f.bounds[0], 0.0);
    EXPECT_DOUBLE_EQ(f.bounds[1], 4.0);
    EXPECT_DOUBLE_EQ(f.bounds[5], 0.6);
}

TEST(Extract, Id1TwinDiffersByConvertedLines) {
    const auto doc = build_specimen(d1_specimen(), 21.0, 8);
    const auto r = apply_strategy(doc, default_strategy(StrategyId::ID1));
    const auto a = extract(doc), b = extract(r.document);
    const double k = static_cast<double>(r.log.lines_converted);
    EXPECT_GT(k, 0.0);
    EXPECT_EQ(b.core[kColG1], a.core[kColG1] - k);
    EXPECT_EQ(b.core[kColG0], a.core[kColG0] + k);
    EXPECT_EQ(b.core[kColTotalLines], a.core[kColTotalLines]);
}

TEST(Extract, PureFunctionOfBytes) {
    const auto text = build_specimen_text(d2_specimen(), 3.0, 1);
    const auto a = extract(parse_document(text)), b = extract(parse_document(text));
    EXPECT_EQ(a.core, b.core);
    EXPECT_EQ(a.e_decimal_histogram, b.e_decimal_histogram);
}

TEST(Matrix, ShapeAndOrder) {
    testing_support::TempDir dir("features");
    const auto m = generate_dataset(d1_specimen(), "D1", 180, 1.0, 1, dir.path, 3);
    const auto fm = build_matrix(m, dir.path);
    EXPECT_EQ(fm.size(), 180u);
    const auto z = standardize(fm);
    EXPECT_EQ(z.rows(), 180);
    EXPECT_EQ(z.cols(), 11);
    for (std::size_t i = 0; i < fm.size(); ++i)
        EXPECT_EQ(fm.paths[i], m.entries[i].path);
    EXPECT_EQ(fm.corpus_e_decimal_mode, 5);
}

TEST(Matrix, SingleRowHasZeroVariance) {
    const auto m = build_matrix({"a"}, {extract(parse_document(testing_support::kSnippet))});
    for (std::size_t c = 0; c < kCoreDims; ++c) {
        EXPECT_EQ(m.column_stds[c], 0.0);
        EXPECT_TRUE(m.zero_variance[c]);
    }
    EXPECT_THROW(standardize(m), TooFewRows);
}

TEST(Standardize, MomentsAndDegenerateColumns) {
    std::vector<std::string> paths;
    std::vector<FeatureVector> rows;
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        FeatureVector f;
        for (std::size_t c = 0; c < kCoreDims; ++c)
            f.core[c] = c == 3 ? 1.0 : static_cast<double>(rng() % 1000);
        paths.push_back("f" + std::to_string(i));
        rows.push_back(f);
    }
    const auto z = standardize(build_matrix(paths, rows));
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const double mean = z.col(c).mean();
        const double var = (z.col(c).array() - mean).square().mean();
        EXPECT_NEAR(mean, 0.0, 1e-12);
        if (c == 3)
            EXPECT_EQ(z.col(c).cwiseAbs().maxCoeff(), 0.0);
        else
            EXPECT_NEAR(var, 1.0, 1e-12);
    }
}

TEST(Standardize, TwoPointColumnIsPlusMinusOne) {
    FeatureVector a, b;
    a.core[0] = 3.0;
    b.core[0] = 9.0;
    const auto z = standardize(build_matrix({"a", "b"}, {a, b}));
    EXPECT_DOUBLE_EQ(z(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(z(1, 0), 1.0);
}

TEST(Matrix, DecimalAnomaliesAgainstCorpusMode) {
    const auto doc = build_specimen(d1_specimen(), 5.0, 1);
    auto odd = apply_strategy(doc, default_strategy(StrategyId::ID4)).document;
    const auto m = build_matrix({"a", "b", "c"}, {extract(doc), extract(doc), extract(odd)});
    EXPECT_EQ(m.rows[0].e_decimal_anomaly_count, 0u);
    EXPECT_GT(m.rows[2].e_decimal_anomaly_count, 0u);
}

TEST(Matrix, CsvHeaderAndRows) {
    const auto m = build_matrix({"a"}, {extract(parse_document(testing_support::kSnippet))});
    const auto csv = features_csv(m);
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "path,G0,G1,G92,M82,M84,M104,M105,M106,M107,M140,total_lines,layer_count,x_min,x_max,y_min,y_max,"
              "z_min,z_max,total_extruded,e_decimal_mode,e_decimal_anomaly_count");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

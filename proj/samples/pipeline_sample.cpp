// Library walk-through: build one specimen, sabotage it with every strategy,
// then screen a small corpus that hides one victim.

#include "gsentinel/gsentinel.hpp"

#include <cstdio>

using namespace gsentinel;

int main() {
    const auto doc = build_specimen(d1_specimen(), 30.0, 1);
    const auto base = simulate(doc);
    std::printf("pristine: %zu lines, G0 %zu, G1 %zu, final E %.5f\n", base.total_lines, base.count(codes::G0),
                base.count(codes::G1), base.final_e);

    for (auto id : kAllStrategies) {
        const auto res = apply_strategy(doc, default_strategy(id));
        const auto s = simulate(res.document);
        std::printf("%s: %zu lines touched, G0 %zu, G1 %zu, final E %.5f\n", to_string(id).c_str(),
                    res.log.affected_line_indices.size(), s.count(codes::G0), s.count(codes::G1), s.final_e);
    }

    const auto manifest = plan_dataset("D1", 60, 1.0, 1, 99);
    std::vector<std::string> paths;
    std::vector<FeatureVector> rows;
    for (const auto& e : manifest.entries) {
        auto d = parse_document(build_specimen_text(d1_specimen(), e.angle_deg, e.seed), e.path);
        if (e.path == manifest.entries[17].path)
            d = apply_strategy(d, default_strategy(StrategyId::ID5)).document;
        paths.push_back(e.path);
        rows.push_back(extract(d));
    }
    const auto flags = detect_combined_stat(build_matrix(paths, rows));
    std::printf("combined screen flagged %zu file(s):", flags.flagged.size());
    for (const auto& p : flags.flagged)
        std::printf(" %s", p.c_str());
    std::printf("\n");
    return 0;
}

#pragma once

#include "gsentinel/gcode.hpp"

#include <array>
#include <limits>
#include <map>

namespace gsentinel {

enum class ExtrusionMode { Absolute };

/// Machine state while replaying a document. Axes are absolute mm.
struct PrinterState {
    double x = 0.0, y = 0.0, z = 0.0;
    double e = 0.0;
    double extruded_length = 0.0;
    ExtrusionMode extrusion_mode = ExtrusionMode::Absolute;
};

struct AxisBounds {
    std::array<double, 3> min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                              std::numeric_limits<double>::infinity()};
    std::array<double, 3> max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                              -std::numeric_limits<double>::infinity()};

    bool empty(int axis) const { return min[axis] > max[axis]; }
    void add(int axis, double v) {
        min[axis] = std::min(min[axis], v);
        max[axis] = std::max(max[axis], v);
    }
};

struct PrintSummary {
    double final_e = 0.0;
    double total_extruded = 0.0;
    /// Range of the X/Y/Z values written on G0/G1 moves.
    AxisBounds bounds;
    int layer_count = 0;
    std::map<CommandCode, std::size_t> command_counts;
    std::size_t comment_lines = 0;
    std::size_t blank_lines = 0;
    std::size_t total_lines = 0;
    /// decimal count -> number of E tokens with that many decimals
    std::map<int, std::size_t> e_decimal_histogram;

    std::size_t count(const CommandCode& c) const {
        auto it = command_counts.find(c);
        return it == command_counts.end() ? 0 : it->second;
    }
};

/// Extrusion a single move contributes, given the register before it.
inline double move_extrusion(double e_previous, double e_target) {
    return std::max(0.0, e_target - e_previous);
}

/// Replays one line against the state. Returns the material this line deposited.
inline double step(PrinterState& st, const GcodeLine& line) {
    if (line.kind != LineKind::Command)
        return 0.0;
    if (line.is(codes::G0) || line.is(codes::G1)) {
        if (auto* p = line.find('X'))
            st.x = p->value;
        if (auto* p = line.find('Y'))
            st.y = p->value;
        if (auto* p = line.find('Z'))
            st.z = p->value;
        double deposited = 0.0;
        if (auto* p = line.find('E')) {
            if (line.is(codes::G1))
                deposited = move_extrusion(st.e, p->value);
            st.e = p->value;
        }
        st.extruded_length += deposited;
        return deposited;
    }
    if (line.is(codes::G92)) {
        if (auto* p = line.find('X'))
            st.x = p->value;
        if (auto* p = line.find('Y'))
            st.y = p->value;
        if (auto* p = line.find('Z'))
            st.z = p->value;
        if (auto* p = line.find('E'))
            st.e = p->value;
    }
    return 0.0;
}

inline PrintSummary simulate(const GcodeDocument& doc) {
    PrintSummary s;
    PrinterState st;
    s.total_lines = doc.lines.size();

    double top_extruding_z = -std::numeric_limits<double>::infinity();
    int z_layers = 0;

    for (const auto& line : doc.lines) {
        switch (line.kind) {
        case LineKind::Blank:
            ++s.blank_lines;
            continue;
        case LineKind::Comment:
            ++s.comment_lines;
            continue;
        case LineKind::Command:
            break;
        }
        ++s.command_counts[*line.code];
        for (const auto& p : line.params)
            if (p.axis == 'E')
                ++s.e_decimal_histogram[p.decimals()];

        const bool move = line.is(codes::G0) || line.is(codes::G1);
        if (move) {
            if (auto* p = line.find('X'))
                s.bounds.add(0, p->value);
            if (auto* p = line.find('Y'))
                s.bounds.add(1, p->value);
            if (auto* p = line.find('Z'))
                s.bounds.add(2, p->value);
        }
        const double deposited = step(st, line);
        if (deposited > 0.0 && st.z > top_extruding_z) {
            top_extruding_z = st.z;
            ++z_layers;
        }
    }

    s.final_e = st.e;
    s.total_extruded = st.extruded_length;
    s.layer_count = doc.layer_marks.empty() ? z_layers : static_cast<int>(doc.layer_marks.size());
    return s;
}

} // namespace gsentinel

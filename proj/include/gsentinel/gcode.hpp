#pragma once

// Line-level g-code model with byte-exact round-tripping.
//
// Accepted grammar, one line at a time (newline excluded):
//
//   line    := ws* ( command | comment )? ws*
//   command := CODE ( ws+ PARAM )* ws* comment?
//   comment := ';' <any text>
//   CODE    := [A-Z] [0-9]+            e.g. G1, M82, T0
//   PARAM   := [A-Z] ['-'|'+']? digits ( '.' digits? )?   or   [A-Z] ['-'|'+']? '.' digits
//
// A trailing '\r' is tolerated and kept in raw_text. Unmodified lines are always
// written back from raw_text, so the parser never has to canonicalize anything.

#include "gsentinel/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace gsentinel {

/// Command identifier: a letter plus a non-negative integer (G1, M104, T0).
struct CommandCode {
    char letter = 'G';
    int number = 0;

    friend bool operator==(const CommandCode&, const CommandCode&) = default;
    friend auto operator<=>(const CommandCode&, const CommandCode&) = default;

    std::string str() const { return letter + std::to_string(number); }
};

namespace codes {
inline constexpr CommandCode G0{'G', 0};
inline constexpr CommandCode G1{'G', 1};
inline constexpr CommandCode G28{'G', 28};
inline constexpr CommandCode G91{'G', 91};
inline constexpr CommandCode G92{'G', 92};
inline constexpr CommandCode M82{'M', 82};
inline constexpr CommandCode M83{'M', 83};
inline constexpr CommandCode M84{'M', 84};
inline constexpr CommandCode M104{'M', 104};
inline constexpr CommandCode M105{'M', 105};
inline constexpr CommandCode M106{'M', 106};
inline constexpr CommandCode M107{'M', 107};
inline constexpr CommandCode M140{'M', 140};
} // namespace codes

/// One lettered parameter. `text` is the numeric token exactly as written.
struct Param {
    char axis = 'X';
    std::string text;
    double value = 0.0;

    /// Digits after the decimal point in the original token.
    int decimals() const {
        const auto dot = text.find('.');
        return dot == std::string::npos ? 0 : static_cast<int>(text.size() - dot - 1);
    }
};

enum class LineKind { Command, Comment, Blank };

struct GcodeLine {
    std::string raw_text;
    LineKind kind = LineKind::Blank;
    std::optional<CommandCode> code;
    std::vector<Param> params;
    std::optional<std::string> comment;
    std::size_t line_index = 0;

    bool is(const CommandCode& c) const { return code && *code == c; }

    const Param* find(char axis) const {
        for (const auto& p : params)
            if (p.axis == axis)
                return &p;
        return nullptr;
    }
    Param* find(char axis) {
        for (auto& p : params)
            if (p.axis == axis)
                return &p;
        return nullptr;
    }
    bool has(char axis) const { return find(axis) != nullptr; }
};

struct LayerMark {
    std::size_t line_index = 0;
    int layer = 0;

    friend bool operator==(const LayerMark&, const LayerMark&) = default;
};

struct GcodeDocument {
    std::vector<GcodeLine> lines;
    std::vector<LayerMark> layer_marks;
    std::optional<std::string> source_path;
    /// False only when the source's last line lacked a terminating '\n'.
    bool final_newline = true;

    std::size_t size() const { return lines.size(); }
    bool empty() const { return lines.empty(); }

    /// Renumber line_index and rebuild layer_marks after lines were inserted or removed.
    void reindex();
};

// ---------------------------------------------------------------------------
// Number formatting

/// Fixed notation with exactly `decimals` digits after the point ("12.30000").
inline std::string format_fixed(double value, int decimals) {
    char buf[64];
    // Avoid emitting "-0.00000" for tiny negatives that round to zero.
    const double scale = std::pow(10.0, decimals);
    if (std::round(value * scale) == 0.0)
        value = 0.0;
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
    if (ec != std::errc{})
        throw Error("format_fixed: value out of range");
    return std::string(buf, end);
}

/// Shortest decimal text that parses back to exactly `value`, never in
/// exponent form, trailing zeros trimmed ("12.3", "12.300099999999999").
inline std::string format_shortest(double value) {
    if (value == 0.0)
        return "0";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    if (ec != std::errc{})
        throw Error("format_shortest: value out of range");
    return std::string(buf, end);
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t'; }
inline bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline bool valid_number(std::string_view s) {
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '-' || s[i] == '+'))
        ++i;
    std::size_t digits = 0;
    while (i < s.size() && is_digit(s[i])) {
        ++i;
        ++digits;
    }
    if (i < s.size() && s[i] == '.') {
        ++i;
        while (i < s.size() && is_digit(s[i])) {
            ++i;
            ++digits;
        }
    }
    return i == s.size() && digits > 0;
}

inline double to_double(std::string_view s) {
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error("unparseable number '" + std::string(s) + "'");
    return v;
}

/// Parses "LAYER:<int>" comment bodies.
inline std::optional<int> layer_from_comment(std::string_view c) {
    constexpr std::string_view tag = "LAYER:";
    if (c.substr(0, tag.size()) != tag)
        return std::nullopt;
    c.remove_prefix(tag.size());
    while (!c.empty() && (is_space(c.back()) || c.back() == '\r'))
        c.remove_suffix(1);
    int n = 0;
    auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), n);
    if (ec != std::errc{} || ptr != c.data() + c.size() || c.empty())
        return std::nullopt;
    return n;
}

} // namespace detail

/// Layer number carried by a `;LAYER:n` comment line, if any.
inline std::optional<int> layer_marker(const GcodeLine& line) {
    if (line.kind != LineKind::Comment || !line.comment)
        return std::nullopt;
    return detail::layer_from_comment(*line.comment);
}

inline GcodeLine parse_line(std::string_view text) {
    GcodeLine out;
    out.raw_text.assign(text);
    if (text.find('\n') != std::string_view::npos)
        throw MalformedLine(std::string(text), "embedded newline");

    std::string_view body = text;
    if (!body.empty() && body.back() == '\r')
        body.remove_suffix(1);
    if (const auto semi = body.find(';'); semi != std::string_view::npos) {
        out.comment = std::string(body.substr(semi + 1));
        body = body.substr(0, semi);
    }

    std::vector<std::string_view> tokens;
    for (std::size_t i = 0; i < body.size();) {
        while (i < body.size() && detail::is_space(body[i]))
            ++i;
        const std::size_t start = i;
        while (i < body.size() && !detail::is_space(body[i]))
            ++i;
        if (i > start)
            tokens.push_back(body.substr(start, i - start));
    }

    if (tokens.empty()) {
        out.kind = out.comment ? LineKind::Comment : LineKind::Blank;
        return out;
    }

    out.kind = LineKind::Command;
    const std::string_view head = tokens.front();
    if (head.size() < 2 || !detail::is_upper(head[0]) ||
        !std::all_of(head.begin() + 1, head.end(), detail::is_digit))
        throw MalformedLine(std::string(text), "bad command code '" + std::string(head) + "'");
    CommandCode code{head[0], 0};
    auto [ptr, ec] = std::from_chars(head.data() + 1, head.data() + head.size(), code.number);
    if (ec != std::errc{})
        throw MalformedLine(std::string(text), "command number out of range");
    out.code = code;

    out.params.reserve(tokens.size() - 1);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
        const std::string_view tok = tokens[t];
        if (!detail::is_upper(tok[0]))
            throw MalformedLine(std::string(text), "bad parameter '" + std::string(tok) + "'");
        const std::string_view num = tok.substr(1);
        if (!detail::valid_number(num))
            throw MalformedLine(std::string(text), "axis " + std::string(1, tok[0]) + " has no valid number");
        if (out.has(tok[0]))
            throw MalformedLine(std::string(text), "duplicate axis " + std::string(1, tok[0]));
        out.params.push_back(Param{tok[0], std::string(num), detail::to_double(num)});
    }
    return out;
}

inline void GcodeDocument::reindex() {
    layer_marks.clear();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        lines[i].line_index = i;
        if (auto n = layer_marker(lines[i]))
            layer_marks.push_back({i, *n});
    }
}

/// Parses a whole file. Relative extrusion (M83) and relative positioning
/// (G91) are rejected: the simulator and the mutators assume absolute axes.
inline GcodeDocument parse_document(std::string_view bytes, std::optional<std::string> source_path = {}) {
    GcodeDocument doc;
    doc.source_path = std::move(source_path);
    doc.lines.reserve(static_cast<std::size_t>(std::count(bytes.begin(), bytes.end(), '\n')) + 1);

    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto nl = bytes.find('\n', pos);
        const bool last = nl == std::string_view::npos;
        const std::string_view text = bytes.substr(pos, last ? std::string_view::npos : nl - pos);
        const std::size_t index = doc.lines.size();
        GcodeLine line;
        try {
            line = parse_line(text);
        } catch (const MalformedLine& e) {
            throw MalformedFile(index, e.what());
        }
        if (line.is(codes::M83))
            throw MalformedFile(index, "relative extrusion (M83) is not supported");
        if (line.is(codes::G91))
            throw MalformedFile(index, "relative positioning (G91) is not supported");
        line.line_index = index;
        if (auto n = layer_marker(line)) {
            if (!doc.layer_marks.empty() && *n <= doc.layer_marks.back().layer)
                throw MalformedFile(index, "layer markers must strictly increase");
            doc.layer_marks.push_back({index, *n});
        }
        doc.lines.push_back(std::move(line));
        if (last) {
            doc.final_newline = false;
            break;
        }
        pos = nl + 1;
    }
    return doc;
}

/// Builds the text of a line from its fields (used for lines a mutator rewrote).
inline std::string render(const GcodeLine& line) {
    std::string s;
    if (line.code) {
        s = line.code->str();
        for (const auto& p : line.params) {
            s += ' ';
            s += p.axis;
            s += p.text;
        }
        if (line.comment) {
            s += " ;";
            s += *line.comment;
        }
    } else if (line.comment) {
        s = ";" + *line.comment;
    }
    return s;
}

/// Makes a command line whose raw_text is rendered from the given fields.
inline GcodeLine make_command(CommandCode code, std::vector<Param> params,
                              std::optional<std::string> comment = {}) {
    GcodeLine line;
    line.kind = LineKind::Command;
    line.code = code;
    line.params = std::move(params);
    line.comment = std::move(comment);
    line.raw_text = render(line);
    return line;
}

inline Param make_param(char axis, std::string text) {
    const double v = detail::to_double(text);
    return Param{axis, std::move(text), v};
}

inline std::string serialize(const GcodeDocument& doc) {
    std::size_t total = 0;
    for (const auto& l : doc.lines)
        total += l.raw_text.size() + 1;
    std::string out;
    out.reserve(total);
    for (std::size_t i = 0; i < doc.lines.size(); ++i) {
        out += doc.lines[i].raw_text;
        if (i + 1 < doc.lines.size() || doc.final_newline)
            out += '\n';
    }
    return out;
}

} // namespace gsentinel

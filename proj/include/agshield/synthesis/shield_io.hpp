#pragma once

#include "agshield/synthesis/shield.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace agshield {

namespace detail {

inline std::string action_label(const ActionSpace& actions, ActionIndex a) {
    std::string label;
    const auto parts = actions.decode(a);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) label += ',';
        label += actions.labels(i)[parts[i]];
    }
    return label;
}

inline std::vector<std::string> split_words(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> words;
    for (std::string w; in >> w;) words.push_back(w);
    return words;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line, int base = 10) {
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value, base);
    if (ec != std::errc() || ptr != end) throw FormatError(line, "bad number '" + text + "'");
    return value;
}

} // namespace detail

/// Writes the DSHIELD v1 text format. Multi-agent action labels are joined with commas.
inline void write_shield(std::ostream& out, const Shield& shield) {
    const StateSpace& space = shield.space();
    out << "DSHIELD v1\n";
    out << "vars " << space.dimensions() << '\n';
    for (const auto& d : space.dims()) {
        out << "var " << d.name();
        if (d.kind() == VarDomain::Kind::integer) {
            out << " int " << d.lo() << ' ' << d.hi() << ' ' << d.step();
        } else {
            out << " enum";
            for (const auto& l : d.labels()) out << ' ' << l;
        }
        out << '\n';
    }
    out << "actions " << shield.action_count() << '\n';
    for (ActionIndex a = 0; a < shield.action_count(); ++a)
        out << "action " << a << ' ' << detail::action_label(shield.actions(), a) << '\n';
    out << "states " << shield.state_count() << '\n';
    char buf[17];
    for (auto m : shield.masks()) {
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, m, 16);
        out.write(buf, ptr - buf);
        out << '\n';
    }
}

[[nodiscard]] inline std::string serialize_shield(const Shield& shield) {
    std::ostringstream out;
    write_shield(out, shield);
    return out.str();
}

[[nodiscard]] inline Shield read_shield(std::istream& in) {
    std::size_t lineno = 0;
    std::string line;
    auto next = [&](const char* expected) -> std::vector<std::string> {
        if (!std::getline(in, line)) throw FormatError(lineno + 1, std::string("unexpected end of file, expected ") + expected);
        ++lineno;
        if (!line.empty() && line.back() == '\r') throw FormatError(lineno, "CR line ending");
        return detail::split_words(line);
    };
    auto expect_keyword = [&](const std::vector<std::string>& w, const char* key, std::size_t count) {
        if (w.size() != count || w[0] != key) throw FormatError(lineno, std::string("expected '") + key + "'");
    };

    if (next("header") != std::vector<std::string>{"DSHIELD", "v1"}) throw FormatError(lineno, "expected 'DSHIELD v1'");
    auto w = next("vars");
    expect_keyword(w, "vars", 2);
    const auto k = detail::parse_number<std::size_t>(w[1], lineno);
    if (k == 0) throw FormatError(lineno, "no variables");
    std::vector<VarDomain> dims;
    for (std::size_t d = 0; d < k; ++d) {
        w = next("var");
        if (w.size() < 3 || w[0] != "var") throw FormatError(lineno, "expected 'var'");
        try {
            if (w[2] == "int") {
                if (w.size() != 6) throw FormatError(lineno, "int variable needs lo, hi and step");
                dims.push_back(VarDomain::integer(w[1], detail::parse_number<int>(w[3], lineno),
                                                  detail::parse_number<int>(w[4], lineno),
                                                  detail::parse_number<int>(w[5], lineno)));
            } else if (w[2] == "enum") {
                dims.push_back(VarDomain::enumerated(w[1], {w.begin() + 3, w.end()}));
            } else {
                throw FormatError(lineno, "unknown variable kind '" + w[2] + "'");
            }
        } catch (const InvalidArgument& e) {
            throw FormatError(lineno, e.what());
        }
    }
    StateSpace space(std::move(dims));

    w = next("actions");
    expect_keyword(w, "actions", 2);
    const auto m = detail::parse_number<std::size_t>(w[1], lineno);
    if (m == 0 || m > kMaxMaskActions) throw FormatError(lineno, "action count must be 1..64");
    std::vector<std::string> labels;
    for (std::size_t a = 0; a < m; ++a) {
        w = next("action");
        expect_keyword(w, "action", 3);
        if (detail::parse_number<std::size_t>(w[1], lineno) != a) throw FormatError(lineno, "actions out of order");
        labels.push_back(w[2]);
    }

    w = next("states");
    expect_keyword(w, "states", 2);
    const auto count = detail::parse_number<StateIndex>(w[1], lineno);
    if (!space.indexable() || count != space.size()) throw FormatError(lineno, "state count does not match the variables");
    const ActionMask full = full_mask(m);
    std::vector<ActionMask> allow(count);
    for (StateIndex s = 0; s < count; ++s) {
        w = next("mask");
        if (w.size() != 1) throw FormatError(lineno, "expected one hexadecimal mask");
        const std::string& hex = w[0];
        if (hex.size() > 1 && hex[0] == '0') throw FormatError(lineno, "mask has leading zeros");
        for (char c : hex)
            if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) throw FormatError(lineno, "mask is not lowercase hex");
        allow[s] = detail::parse_number<ActionMask>(hex, lineno, 16);
        if ((allow[s] & ~full) != 0) throw FormatError(lineno, "mask names an undeclared action");
    }
    if (std::getline(in, line)) throw FormatError(lineno + 1, "trailing content");
    return {std::move(space), ActionSpace::single(std::move(labels)), std::move(allow)};
}

[[nodiscard]] inline Shield deserialize_shield(const std::string& text) {
    std::istringstream in(text);
    return read_shield(in);
}

inline void save_shield(const std::string& path, const Shield& shield) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    write_shield(out, shield);
    if (!out) throw Error("write failed: " + path);
}

[[nodiscard]] inline Shield load_shield(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    return read_shield(in);
}

} // namespace agshield

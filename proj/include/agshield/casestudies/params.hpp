#pragma once

#include "agshield/core/error.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace agshield {

/// Flat `key = value` parameter text. `#` starts a comment; tables are comma-separated.
/// Every key must be consumed by exactly one field, otherwise finish() reports it.
class ParamFile {
public:
    ParamFile() = default;

    static ParamFile parse(const std::string& text) {
        ParamFile p;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string body = trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos) throw FormatError(lineno, "expected 'key = value'");
            const std::string key = trim(body.substr(0, eq));
            const std::string value = trim(body.substr(eq + 1));
            if (key.empty() || value.empty()) throw FormatError(lineno, "expected 'key = value'");
            if (p.values_.count(key)) throw FormatError(lineno, "duplicate key '" + key + "'");
            p.values_[key] = {value, lineno};
        }
        return p;
    }

    static ParamFile load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot read parameter file " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    /// Sets or replaces a value (command-line overrides).
    void set(const std::string& key, const std::string& value) { values_[key] = {value, 0}; }

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }

    void get(const std::string& key, int& out) { read(key, out); }
    void get(const std::string& key, std::size_t& out) { read(key, out); }
    void get(const std::string& key, double& out) { read(key, out); }
    void get(const std::string& key, bool& out) {
        if (!has(key)) return;
        int v = 0;
        read(key, v);
        if (v != 0 && v != 1) throw FormatError(values_.at(key).line, "'" + key + "' must be 0 or 1");
        out = v == 1;
    }
    template <typename T>
    void get(const std::string& key, std::vector<T>& out) {
        auto it = values_.find(key);
        if (it == values_.end()) return;
        used_.insert(key);
        out.clear();
        std::stringstream ss(it->second.text);
        for (std::string item; std::getline(ss, item, ',');) out.push_back(number<T>(trim(item), it->second.line, key));
    }

    /// Throws on any key that no field consumed.
    void finish() const {
        for (const auto& [key, v] : values_)
            if (!used_.count(key)) throw FormatError(v.line, "unknown key '" + key + "'");
    }

private:
    struct Entry {
        std::string text;
        std::size_t line = 0;
    };

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    template <typename T>
    static T number(const std::string& text, std::size_t line, const std::string& key) {
        T value{};
        const char* end = text.data() + text.size();
        const auto [ptr, ec] = std::from_chars(text.data(), end, value);
        if (ec != std::errc() || ptr != end || text.empty())
            throw FormatError(line, "bad value '" + text + "' for '" + key + "'");
        return value;
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        auto it = values_.find(key);
        if (it == values_.end()) return;
        used_.insert(key);
        out = number<T>(it->second.text, it->second.line, key);
    }

    std::map<std::string, Entry> values_;
    std::set<std::string> used_;
};

} // namespace agshield

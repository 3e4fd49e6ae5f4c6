#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "uhdtest/errors.hpp"
#include "uhdtest/version.hpp"

namespace uhdtest {

// Shortest text that round-trips an IEEE double bit-exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("not a number: '" + s + "'");
    while (*end == ' ') ++end;
    if (*end != '\0') throw ParseError("trailing junk after number: '" + s + "'");
    return v;
}

// Ordered key: value document. Serialization is canonical, so
// serialize(parse(text)) == text for any document this writer produced.
class Report {
  public:
    void set(const std::string& key, std::string value) {
        items_.emplace_back(key, std::move(value));
    }
    void set_int(const std::string& key, long long v) { set(key, std::to_string(v)); }
    void set_uint64(const std::string& key, std::uint64_t v) {
        set(key, std::to_string(v));
    }
    void set_double(const std::string& key, double v) { set(key, format_double(v)); }
    void set_bool(const std::string& key, bool v) { set(key, v ? "true" : "false"); }

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : items_)
            if (k == key) return &v;
        return nullptr;
    }
    const std::string& get(const std::string& key) const {
        const std::string* v = find(key);
        if (!v) throw ParseError("report missing key '" + key + "'");
        return *v;
    }
    double get_double(const std::string& key) const { return parse_double(get(key)); }
    long long get_int(const std::string& key) const {
        return std::strtoll(get(key).c_str(), nullptr, 10);
    }
    std::uint64_t get_uint64(const std::string& key) const {
        return std::strtoull(get(key).c_str(), nullptr, 10);
    }
    bool get_bool(const std::string& key) const {
        const std::string& v = get(key);
        if (v == "true") return true;
        if (v == "false") return false;
        throw ParseError("report key '" + key + "' is not a boolean: '" + v + "'");
    }

    const std::vector<std::pair<std::string, std::string>>& items() const {
        return items_;
    }

    std::string serialize() const {
        std::string out;
        for (const auto& [k, v] : items_) {
            out += k;
            out += ": ";
            out += v;
            out += '\n';
        }
        return out;
    }

    static Report parse(const std::string& text) {
        Report r;
        std::size_t pos = 0;
        while (pos < text.size()) {
            std::size_t eol = text.find('\n', pos);
            if (eol == std::string::npos) eol = text.size();
            const std::string line = text.substr(pos, eol - pos);
            pos = eol + 1;
            if (line.empty()) continue;
            const std::size_t sep = line.find(": ");
            if (sep == std::string::npos)
                throw ParseError("malformed report line: '" + line + "'");
            r.set(line.substr(0, sep), line.substr(sep + 2));
        }
        return r;
    }

  private:
    std::vector<std::pair<std::string, std::string>> items_;
};

inline Report report_preamble(const std::string& command) {
    Report r;
    r.set_int("schema_version", kReportSchemaVersion);
    r.set("tool", std::string("uhdtest ") + kVersion);
    r.set("command", command);
    return r;
}

}  // namespace uhdtest

#pragma once
// Output formatting: JSON documents with fixed 9-significant-digit numbers,
// CSV cells, and shortest round-trip text for configuration values.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <system_error>

#include <json.hpp>

namespace limb::io {

using Json = nlohmann::ordered_json;

/// Scientific notation, 9 significant digits.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.8e", v);
    return buf;
}

/// Shortest text that parses back to exactly `v`.
inline std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc{}) return format_number(v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline void write_string(std::ostream& os, const std::string& s) {
    // reuse the library's escaping
    os << Json(s).dump();
}

inline void write(std::ostream& os, const Json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad;
                write_string(os, it.key());
                os << ": ";
                write(os, it.value(), indent, depth + 1);
            }
            os << "\n" << close_pad << "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            os << "[\n";
            bool first = true;
            for (const auto& v : j) {
                if (!first) os << ",\n";
                first = false;
                os << pad;
                write(os, v, indent, depth + 1);
            }
            os << "\n" << close_pad << "]";
            return;
        }
        case Json::value_t::number_float: {
            const double v = j.get<double>();
            if (std::isfinite(v)) {
                os << format_number(v);
            } else {
                os << "null";
            }
            return;
        }
        default: os << j.dump(); return;
    }
}

}  // namespace detail

inline void write_json(std::ostream& os, const Json& j, int indent = 2) {
    detail::write(os, j, indent, 0);
    os << "\n";
}

inline std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace limb::io

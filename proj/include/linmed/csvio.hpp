// csvio.hpp - deterministic CSV formatting helpers.
#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace linmed {

// Round-trip-exact decimal rendering, stable across runs and thread counts.
inline std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace linmed

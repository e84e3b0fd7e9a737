/**
 * @file csv.hpp
 * @brief Minimal CSV reading/writing for the plain numeric tables this
 *        project uses (no quoting or embedded separators).
 */

#ifndef SPO2CAM_CSV_HPP
#define SPO2CAM_CSV_HPP

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spo2cam/errors.hpp"

namespace spo2cam::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // Trim surrounding whitespace.
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

/// Read a CSV file with a mandatory header row. Blank lines are skipped.
inline Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    Table table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
        } else {
            if (cells.size() != table.header.size()) {
                throw ParseError(path.string() + ":" + std::to_string(lineno) +
                                 ": expected " + std::to_string(table.header.size()) +
                                 " columns, got " + std::to_string(cells.size()));
            }
            table.rows.push_back(std::move(cells));
        }
    }
    if (table.header.empty()) throw ParseError(path.string() + ": missing header row");
    return table;
}

inline double to_double(const std::string& cell, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double value = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return value;
    } catch (const std::exception&) {
        throw ParseError(context + ": not a number: '" + cell + "'");
    }
}

inline long to_long(const std::string& cell, const std::string& context) {
    try {
        std::size_t pos = 0;
        const long value = std::stol(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument(cell);
        return value;
    } catch (const std::exception&) {
        throw ParseError(context + ": not an integer: '" + cell + "'");
    }
}

/// Shortest round-trip representation; keeps emitted files byte-stable.
inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

} // namespace spo2cam::csv

#endif // SPO2CAM_CSV_HPP

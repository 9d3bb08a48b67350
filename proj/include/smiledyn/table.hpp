#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "detail/format.hpp"
#include "error.hpp"

namespace smiledyn {

using Cell = std::variant<double, long long, std::string>;

// Plot-ready export table. Every file format the toolkit writes goes through this.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row) {
        require(row.size() == header.size(), ErrorKind::invalid_argument, "table row width does not match header");
        rows.push_back(std::move(row));
    }
};

enum class OutputFormat { delimited, structured };

namespace detail {

inline std::string cell_text(const Cell& cell) {
    if (const auto* d = std::get_if<double>(&cell))
        return format_number(*d);
    if (const auto* i = std::get_if<long long>(&cell))
        return format_integer(*i);
    return std::get<std::string>(cell);
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    out.push_back('"');
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

inline std::string json_value(const Cell& cell) {
    if (const auto* d = std::get_if<double>(&cell))
        return std::isfinite(*d) ? format_number(*d) : std::string("null");
    if (const auto* i = std::get_if<long long>(&cell))
        return format_integer(*i);
    return json_escape(std::get<std::string>(cell));
}

} // namespace detail

inline void write_table(std::ostream& os, const Table& table, OutputFormat format = OutputFormat::delimited) {
    if (format == OutputFormat::delimited) {
        for (std::size_t c = 0; c < table.header.size(); ++c)
            os << (c ? "," : "") << table.header[c];
        os << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t c = 0; c < row.size(); ++c)
                os << (c ? "," : "") << detail::cell_text(row[c]);
            os << '\n';
        }
        return;
    }
    os << "[\n";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        os << "  {";
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            os << (c ? ", " : "") << detail::json_escape(table.header[c]) << ": "
               << detail::json_value(table.rows[r][c]);
        }
        os << (r + 1 < table.rows.size() ? "},\n" : "}\n");
    }
    os << "]\n";
}

inline void write_table(const std::filesystem::path& path, const Table& table,
                        OutputFormat format = OutputFormat::delimited) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorKind::file_not_found, "cannot open for writing: " + path.string());
    write_table(os, table, format);
    require(static_cast<bool>(os), ErrorKind::file_not_found, "write failed: " + path.string());
}

} // namespace smiledyn

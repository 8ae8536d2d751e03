#pragma once

#include <pplp/error.hpp>

#include <charconv>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pplp
{

/// Comma-separated table with a header row. Cells keep their text; quotes ("a, b") are honoured.
struct Table
{
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return i;
        throw ContractError("no column named '" + std::string(name) + "'");
    }
};

namespace detail
{

inline std::string trim(std::string_view s)
{
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r'))
        ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r'))
        --b;
    return std::string(s.substr(a, b - a));
}

} // namespace detail

inline Table read_csv(std::string_view text)
{
    std::vector<std::vector<std::string>> lines;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false, was_quoted = false, any = false;
    auto end_cell = [&] {
        row.push_back(was_quoted ? cell : detail::trim(cell));
        cell.clear();
        was_quoted = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = was_quoted = any = true;
        } else if (c == ',') {
            end_cell();
            any = true;
        } else if (c == '\n') {
            if (any || !cell.empty()) {
                end_cell();
                lines.push_back(std::move(row));
            }
            row.clear();
            any = false;
        } else {
            cell += c;
            any = any || (c != '\r' && c != ' ');
        }
    }
    if (quoted)
        throw ContractError("unterminated quote in CSV");
    if (any || !cell.empty()) {
        end_cell();
        lines.push_back(std::move(row));
    }
    if (lines.empty())
        throw ContractError("CSV has no header row");

    Table t;
    t.header = std::move(lines.front());
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].size() != t.header.size())
            throw ContractError("CSV row " + std::to_string(i + 1) + " has " + std::to_string(lines[i].size()) +
                                " cells, header has " + std::to_string(t.header.size()));
        t.rows.push_back(std::move(lines[i]));
    }
    return t;
}

/// Parses a numeric cell; empty cells and NA are missing.
inline std::optional<double> numeric_cell(const std::string& s)
{
    if (s.empty() || s == "NA" || s == "?" || s == "nan" || s == "NaN")
        return std::nullopt;
    double v = 0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (*b == '+')
        ++b;
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e)
        throw ContractError("'" + s + "' is not a number");
    return v;
}

struct NumericColumn
{
    std::vector<std::optional<double>> cells; // per row
    std::vector<double> values;               // present values only
    std::size_t missing = 0;
};

inline NumericColumn numeric_column(const Table& t, std::string_view name)
{
    const std::size_t c = t.column(name);
    NumericColumn col;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::optional<double> v;
        try {
            v = numeric_cell(t.rows[r][c]);
        } catch (const ContractError&) {
            throw ContractError("column '" + std::string(name) + "' row " + std::to_string(r + 2) + ": '" +
                                t.rows[r][c] + "' is not a number");
        }
        col.cells.push_back(v);
        if (v)
            col.values.push_back(*v);
        else
            ++col.missing;
    }
    if (col.values.empty())
        throw ContractError("column '" + std::string(name) + "' has no values");
    return col;
}

} // namespace pplp

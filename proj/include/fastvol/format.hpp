#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fastvol/batch.hpp"
#include "fastvol/error.hpp"
#include "fastvol/solver_result.hpp"
#include "fastvol/types.hpp"

namespace fastvol {

enum class OutputFormat { Csv, Json, Plain };

inline OutputFormat parse_format(std::string_view name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    if (name == "plain") return OutputFormat::Plain;
    throw DomainError("unknown output format '" + std::string(name) + "'");
}

/// Malformed CSV input. `row` counts data rows from 0; the header is row -1.
class CsvError : public std::runtime_error {
public:
    CsvError(long row, std::string column, const std::string& message)
        : std::runtime_error(where(row, column) + message), row_(row), column_(std::move(column)) {}

    long row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    static std::string where(long row, const std::string& column) {
        std::string text = row < 0 ? "header" : "row " + std::to_string(row);
        if (!column.empty()) text += ", column '" + column + "'";
        return text + ": ";
    }

    long row_;
    std::string column_;
};

/// Shortest decimal that parses back to the same double ("0.1", "1e-300", "nan").
inline std::string format_double(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

/// Fixed 8 decimals, or 8-digit scientific for magnitudes a fixed layout would hide.
inline std::string format_plain(double value) {
    char buffer[64];
    const double magnitude = std::fabs(value);
    const bool scientific = std::isfinite(value) && value != 0.0 && (magnitude < 1e-4 || magnitude >= 1e12);
    std::snprintf(buffer, sizeof buffer, scientific ? "%.8e" : "%.8f", value);
    return buffer;
}

namespace detail {

template <class T>
const T& broadcast_at(const std::vector<T>& values, std::size_t i) {
    return values.size() == 1 ? values[0] : values[i];
}

inline std::string cell_text(const ChainTable::Column& column, std::size_t i, bool plain) {
    return std::visit(
        [&](const auto& values) -> std::string {
            using T = typename std::decay_t<decltype(values)>::value_type;
            const T& v = broadcast_at(values, i);
            if constexpr (std::is_same_v<T, double>) {
                return plain ? format_plain(v) : format_double(v);
            } else if constexpr (std::is_same_v<T, OptionFlag>) {
                return std::string(1, v.to_char());
            } else {
                return std::string(to_string(v));
            }
        },
        column.data);
}

inline std::string_view trim(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    return text;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

inline double parse_number(std::string_view text, long row, const std::string& column) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto result = std::from_chars(first, last, value);
    if (text.empty() || result.ec != std::errc() || result.ptr != last) {
        throw CsvError(row, column, "cannot parse '" + std::string(text) + "' as a number");
    }
    return value;
}

} // namespace detail

/// Header row of column names, then one row per contract.
inline std::string format_csv(const ChainTable& table) {
    const std::size_t rows = table.rows();
    std::string out;
    const auto& cols = table.all();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c > 0) out += ',';
        out += cols[c].name;
    }
    out += '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c > 0) out += ',';
            out += detail::cell_text(cols[c], i, false);
        }
        out += '\n';
    }
    return out;
}

/// Object of column name to array; NaN renders as null.
inline std::string format_json(const ChainTable& table) {
    const std::size_t rows = table.rows();
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (const ChainTable::Column& column : table.all()) {
        nlohmann::ordered_json values = nlohmann::ordered_json::array();
        std::visit(
            [&](const auto& data) {
                using T = typename std::decay_t<decltype(data)>::value_type;
                for (std::size_t i = 0; i < rows; ++i) {
                    const T& v = detail::broadcast_at(data, i);
                    if constexpr (std::is_same_v<T, double>) values.push_back(v);
                    else if constexpr (std::is_same_v<T, OptionFlag>) values.push_back(std::string(1, v.to_char()));
                    else values.push_back(std::string(to_string(v)));
                }
            },
            column.data);
        doc[column.name] = std::move(values);
    }
    return doc.dump() + "\n";
}

/// Right-aligned columns for reading in a terminal.
inline std::string format_plain_table(const ChainTable& table) {
    const std::size_t rows = table.rows();
    const auto& cols = table.all();
    std::vector<std::vector<std::string>> cells(cols.size());
    std::vector<std::size_t> widths(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        widths[c] = cols[c].name.size();
        cells[c].reserve(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            cells[c].push_back(detail::cell_text(cols[c], i, true));
            widths[c] = std::max(widths[c], cells[c].back().size());
        }
    }
    std::string out;
    auto append_row = [&](auto cell) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const std::string& text = cell(c);
            if (c > 0) out += "  ";
            out.append(widths[c] - text.size(), ' ');
            out += text;
        }
        out += '\n';
    };
    append_row([&](std::size_t c) -> const std::string& { return cols[c].name; });
    for (std::size_t i = 0; i < rows; ++i) {
        append_row([&](std::size_t c) -> const std::string& { return cells[c][i]; });
    }
    return out;
}

inline std::string format_output(const ChainTable& table, OutputFormat format) {
    switch (format) {
    case OutputFormat::Csv: return format_csv(table);
    case OutputFormat::Json: return format_json(table);
    case OutputFormat::Plain: return format_plain_table(table);
    }
    return {};
}

/// Parses comma-separated text with a mandatory header. "flag" becomes a
/// flag column, "status" a status column, everything else numbers.
inline ChainTable parse_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find('\n', start);
        const std::string_view line = text.substr(start, end == text.npos ? text.npos : end - start);
        if (!detail::trim(line).empty()) lines.push_back(line);
        if (end == text.npos) break;
        start = end + 1;
    }
    if (lines.empty()) throw CsvError(-1, "", "missing header row");

    std::vector<std::string> names;
    for (std::string_view field : detail::split_fields(lines.front())) {
        if (field.empty()) throw CsvError(-1, "", "empty column name");
        if (std::find(names.begin(), names.end(), field) != names.end()) {
            throw CsvError(-1, std::string(field), "duplicate column");
        }
        names.emplace_back(field);
    }

    const std::size_t rows = lines.size() - 1;
    std::vector<std::vector<double>> numbers(names.size());
    std::vector<OptionFlag> flags;
    std::vector<SolverStatus> statuses;
    for (auto& column : numbers) column.reserve(rows);

    for (std::size_t i = 0; i < rows; ++i) {
        const long row = static_cast<long>(i);
        const std::vector<std::string_view> fields = detail::split_fields(lines[i + 1]);
        if (fields.size() != names.size()) {
            throw CsvError(row, "", "expected " + std::to_string(names.size()) + " fields, found " +
                                        std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < names.size(); ++c) {
            if (names[c] == columns::flag) {
                try {
                    flags.push_back(OptionFlag::parse(fields[c]));
                } catch (const DomainError&) {
                    throw CsvError(row, names[c], "unrecognised option flag '" + std::string(fields[c]) + "'");
                }
            } else if (names[c] == columns::status) {
                const auto status = parse_status(fields[c]);
                if (!status) throw CsvError(row, names[c], "unknown status '" + std::string(fields[c]) + "'");
                statuses.push_back(*status);
            } else {
                numbers[c].push_back(detail::parse_number(fields[c], row, names[c]));
            }
        }
    }

    ChainTable table;
    for (std::size_t c = 0; c < names.size(); ++c) {
        if (names[c] == columns::flag) table.set_flags(std::move(flags));
        else if (names[c] == columns::status) table.set_status(columns::status, std::move(statuses));
        else table.set(names[c], std::move(numbers[c]));
    }
    return table;
}

} // namespace fastvol

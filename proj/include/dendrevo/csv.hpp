#pragma once

// CSV tables with fixed headers. Numbers are written with 17 significant digits.

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "dendrevo/error.hpp"
#include "dendrevo/text.hpp"

namespace dendrevo::csv {

inline constexpr std::string_view trace_header =
    "variant,run,generation,best_train_mse,best_test_mse,best_gate_fraction,mean_gate_fraction";
inline constexpr std::string_view summary_header =
    "variant,n,k,runs,mean_test_mse,std_test_mse,min_test_mse,max_test_mse,mean_gate_fraction";
inline constexpr std::string_view compare_header = "variant_a,variant_b,mean_a,mean_b,t_statistic,p_value";
inline constexpr std::string_view sweep_header = "n,variant,split,mean,min,max";

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const
    {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == name)
                return c;
        throw InvalidInput("missing column '" + std::string(name) + "'");
    }

    /// Numeric cell with a row/column diagnostic on failure (rows are 1-based data rows).
    double number(std::size_t row, std::size_t col) const
    {
        try {
            return text::parse_real(rows[row][col]);
        } catch (const InvalidInput&) {
            throw InvalidInput("row " + std::to_string(row + 1) + ", column '" + header[col] +
                               "': not a number: '" + rows[row][col] + "'");
        }
    }

    std::string joined_header() const
    {
        std::string out;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c)
                out += ',';
            out += header[c];
        }
        return out;
    }
};

/// Reads a comma-separated table (no quoting). Every row must match the header width.
inline Table read(std::istream& is)
{
    Table t;
    std::string line;
    if (!std::getline(is, line) || text::trim(line).empty())
        throw InvalidInput("CSV input has no header");
    for (auto f : text::split(text::trim(line), ','))
        t.header.emplace_back(text::trim(f));
    std::size_t row_no = 0;
    while (std::getline(is, line)) {
        auto trimmed = text::trim(line);
        if (trimmed.empty())
            continue;
        ++row_no;
        auto fields = text::split(trimmed, ',');
        if (fields.size() != t.header.size())
            throw InvalidInput("row " + std::to_string(row_no) + ": expected " + std::to_string(t.header.size()) +
                               " columns, found " + std::to_string(fields.size()));
        auto& row = t.rows.emplace_back();
        for (auto f : fields)
            row.emplace_back(text::trim(f));
    }
    return t;
}

/// Streams one row; arguments may be strings or numbers.
class Writer {
public:
    explicit Writer(std::ostream& os) : os_(os) {}

    Writer& header(std::string_view h)
    {
        os_ << h << '\n';
        return *this;
    }

    template <typename... Fields>
    Writer& row(const Fields&... fields)
    {
        bool first = true;
        (put(first, fields), ...);
        os_ << '\n';
        return *this;
    }

private:
    void sep(bool& first)
    {
        if (!first)
            os_ << ',';
        first = false;
    }
    void put(bool& first, double v)
    {
        sep(first);
        os_ << text::real(v);
    }
    void put(bool& first, std::size_t v)
    {
        sep(first);
        os_ << v;
    }
    void put(bool& first, std::string_view v)
    {
        sep(first);
        os_ << v;
    }
    void put(bool& first, const std::string& v) { put(first, std::string_view(v)); }
    void put(bool& first, const char* v) { put(first, std::string_view(v)); }

    std::ostream& os_;
};

} // namespace dendrevo::csv

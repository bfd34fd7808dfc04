#ifndef ISOISING_CSV_HPP
#define ISOISING_CSV_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "isoising/base.hpp"

namespace isoising {

/// Deterministic CSV emitter: doubles printed with 17 significant digits so
/// reruns produce byte-identical files.
class CsvTable {
  public:
    using Cell = std::variant<std::string, double, long long>;

    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<Cell> row) {
        if (row.size() != header_.size())
            fail(ErrorKind::BadInput, "CsvTable: row width does not match header");
        rows_.push_back(std::move(row));
    }

    static std::string format(const Cell& c) {
        if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
        if (std::holds_alternative<long long>(c)) return std::to_string(std::get<long long>(c));
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(c));
        return buf;
    }

    std::string to_string() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < header_.size(); ++i)
            out << header_[i] << (i + 1 < header_.size() ? "," : "\n");
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << format(row[i]) << (i + 1 < row.size() ? "," : "\n");
        }
        return out.str();
    }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorKind::BadInput, "CsvTable: cannot open " + path);
        out << to_string();
    }

    std::size_t row_count() const { return rows_.size(); }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

}  // namespace isoising

#endif

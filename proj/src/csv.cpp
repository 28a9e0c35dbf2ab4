#include "capdet/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "capdet/error.hpp"

namespace capdet {

const std::vector<double>& CsvTable::column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == name) return columns.at(c);
    throw Error("no column named '" + name + "'");
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    if (table.header.size() != table.columns.size()) throw InvalidArgument("csv: header/column count mismatch");
    const std::size_t n = table.rows();
    for (const auto& c : table.columns)
        if (c.size() != n) throw InvalidArgument("csv: ragged columns for " + path.string());

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    for (std::size_t c = 0; c < table.header.size(); ++c) out << (c ? "," : "") << table.header[c];
    out << '\n';
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << format_double(table.columns[c][r]);
        out << '\n';
    }
    if (!out) throw Error("write failed for " + path.string());
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

} // namespace

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw Error(path.string() + ": missing header row");
    t.header = split(line);
    t.columns.resize(t.header.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size())
            throw Error(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(t.header.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double v = 0.0;
            const auto* b = cells[c].data();
            const auto [ptr, ec] = std::from_chars(b, b + cells[c].size(), v);
            if (ec != std::errc() || ptr != b + cells[c].size())
                throw Error(path.string() + ": row " + std::to_string(row) + ": cannot parse '" + cells[c] + "'");
            t.columns[c].push_back(v);
        }
    }
    return t;
}

} // namespace capdet

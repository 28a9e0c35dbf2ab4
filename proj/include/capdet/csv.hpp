#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace capdet {

/// Column-oriented numeric table with a header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    const std::vector<double>& column(const std::string& name) const;
};

/// 17 significant digits, so every double round-trips.
std::string format_double(double v);

/// Comma-separated, '\n' line endings, header first. All columns must be the
/// same length.
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Parses a file written by write_csv (or any numeric CSV with a header).
/// Throws Error naming the file on ragged rows or unparsable cells.
CsvTable read_csv(const std::filesystem::path& path);

} // namespace capdet

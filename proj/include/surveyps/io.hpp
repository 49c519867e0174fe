#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "surveyps/sample.hpp"

namespace surveyps {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns; // columns[j][i]

    std::size_t rows() const noexcept { return columns.empty() ? 0 : columns.front().size(); }
    // Index of a named column, or npos.
    std::size_t find(const std::string& name) const noexcept;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// Header row required, comma separated, decimal point only. Empty cells and
// NA-style tokens are parse errors.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

struct ColumnMapping {
    std::string treatment;
    std::string outcome;
    std::string weight;
    std::vector<std::string> covariates;

    // Every mapped column exists and no name is used twice.
    void validate(const CsvTable& table) const;
};

SurveySample build_sample(const CsvTable& table, const ColumnMapping& mapping, DesignMode design);

// Writes to a sibling temporary file and renames it over the target, so a
// failed run leaves no partial output.
void write_atomic(const std::filesystem::path& path, const std::string& content);

// %.17g
std::string format_number(double v);

} // namespace surveyps

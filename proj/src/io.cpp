#include "surveyps/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "surveyps/error.hpp"

namespace surveyps {

std::size_t CsvTable::find(const std::string& name) const noexcept {
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == name) return j;
    return npos;
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_cell(const std::string& cell, std::size_t line, std::size_t col) {
    const auto where = [&] { return " (line " + std::to_string(line) + ", column " + std::to_string(col + 1) + ")"; };
    if (cell.empty()) throw Error(ErrorCode::Parse, "csv: empty cell" + where());
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::general);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw Error(ErrorCode::Parse, "csv: not a finite number '" + cell + "'" + where());
    return v;
}

} // namespace

CsvTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    CsvTable t;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split(line);
        if (!have_header) {
            for (const auto& h : cells) {
                if (h.empty()) throw Error(ErrorCode::Parse, "csv: empty header name");
                bool numeric = true;
                double dummy = 0.0;
                const auto [ptr, ec] = std::from_chars(h.data(), h.data() + h.size(), dummy);
                numeric = ec == std::errc() && ptr == h.data() + h.size();
                if (numeric) throw Error(ErrorCode::Parse, "csv: header row required (found numeric '" + h + "')");
            }
            t.header = std::move(cells);
            t.columns.assign(t.header.size(), {});
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw Error(ErrorCode::Parse, "csv: line " + std::to_string(lineno) + " has " +
                                              std::to_string(cells.size()) + " fields, expected " +
                                              std::to_string(t.header.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) t.columns[j].push_back(parse_cell(cells[j], lineno, j));
    }
    if (!have_header) throw Error(ErrorCode::Parse, "csv: empty input");
    if (t.rows() == 0) throw Error(ErrorCode::Parse, "csv: no data rows");
    return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Parse, "csv: cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str());
}

void ColumnMapping::validate(const CsvTable& table) const {
    std::set<std::string> seen;
    const auto need = [&](const std::string& role, const std::string& name) {
        if (name.empty()) throw Error(ErrorCode::Config, "config: no column given for " + role);
        if (table.find(name) == CsvTable::npos)
            throw Error(ErrorCode::Config, "config: " + role + " column '" + name + "' not found");
        if (!seen.insert(name).second)
            throw Error(ErrorCode::Config, "config: column '" + name + "' mapped more than once");
    };
    need("treatment", treatment);
    need("outcome", outcome);
    need("weight", weight);
    if (covariates.empty()) throw Error(ErrorCode::Config, "config: no covariates given");
    for (const auto& c : covariates) need("covariate", c);
}

SurveySample build_sample(const CsvTable& table, const ColumnMapping& mapping, DesignMode design) {
    mapping.validate(table);
    const Index n = static_cast<Index>(table.rows());
    const auto column = [&](const std::string& name) {
        const auto& c = table.columns[table.find(name)];
        return Vector(Eigen::Map<const Vector>(c.data(), n));
    };
    Matrix x(n, static_cast<Index>(mapping.covariates.size()));
    for (std::size_t j = 0; j < mapping.covariates.size(); ++j) x.col(static_cast<Index>(j)) = column(mapping.covariates[j]);
    return SurveySample(std::move(x), mapping.covariates, column(mapping.treatment), column(mapping.outcome),
                        column(mapping.weight), design);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::Config, "output: cannot write '" + tmp.string() + "'");
        f << content;
        f.flush();
        if (!f) {
            std::filesystem::remove(tmp);
            throw Error(ErrorCode::Config, "output: write failed for '" + path.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace surveyps

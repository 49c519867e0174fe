#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "surveyps/balancing.hpp"
#include "surveyps/error.hpp"
#include "surveyps/io.hpp"
#include "surveyps/m_estimation.hpp"
#include "surveyps/propensity.hpp"

namespace surveyps {

enum class OutputFormat { Json, Csv };

struct RunConfig {
    std::filesystem::path input;
    ColumnMapping mapping;
    DesignMode design = DesignMode::Retrospective;
    PsMode ps_mode = PsMode::Weighted;
    std::vector<EstimandSpec> estimands{EstimandSpec::combined()};
    std::vector<EstimatorKind> estimators{EstimatorKind::PSW};
    double trunc_alpha = 0.0; // propensity-score truncation, 0 disables
    OutputFormat format = OutputFormat::Json;
};

struct SimulateConfig {
    std::filesystem::path scenario;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

DesignMode parse_design(std::string_view key);
PsMode parse_ps_mode(std::string_view key);
std::string_view ps_mode_key(PsMode mode) noexcept;
OutputFormat parse_format(std::string_view key);

// Each returns the full report text; nothing is written.
std::string estimate_report(const RunConfig& cfg);
std::string balance_report(const RunConfig& cfg);
std::string simulate_report(const SimulateConfig& cfg);

// {"code", "message", "context"}
nlohmann::ordered_json error_json(const Error& e);

} // namespace surveyps

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "surveyps/balancing.hpp"
#include "surveyps/sample.hpp"

namespace surveyps {

struct BalanceRow {
    std::string covariate;
    double mean_treated = 0.0;
    double mean_control = 0.0;
    double pooled_sd = 0.0;
    double psmd = 0.0;
};

// Means weighted by w1*z and w0*(1-z); pooled SD combines the two weighted
// within-arm variances in proportion to each arm's weight mass.
std::vector<BalanceRow> psmd_table(const SurveySample& sample, const UnitWeights& uw);

struct ArmWeightSummary {
    double min = 0.0;
    double max = 0.0;
    double cv = 0.0;  // population SD / mean
    double ess = 0.0; // (sum w)^2 / sum w^2
    Index count = 0;
};

struct WeightSummary {
    ArmWeightSummary treated; // w1 over z = 1
    ArmWeightSummary control; // w0 over z = 0
};

WeightSummary weight_summary(const SurveySample& sample, const UnitWeights& uw);
ArmWeightSummary summarize_weights(const std::vector<double>& w);

std::string balance_csv(const std::vector<BalanceRow>& rows);
nlohmann::ordered_json balance_json(const std::vector<BalanceRow>& rows);
nlohmann::ordered_json weight_summary_json(const WeightSummary& ws);

} // namespace surveyps

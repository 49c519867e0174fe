#pragma once

#include <array>
#include <optional>
#include <vector>

#include "surveyps/balancing.hpp"
#include "surveyps/glm.hpp"
#include "surveyps/m_estimation.hpp"
#include "surveyps/propensity.hpp"
#include "surveyps/sample.hpp"

namespace surveyps {

struct EstimateResult {
    EstimatorKind estimator = EstimatorKind::PSW;
    EstimandSpec estimand;
    double tau = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    // (v1, v2, v3) for augmented estimators; (tau1, tau0, 0) for PSW.
    std::array<double, 3> components{};
    Index n_used = 0;
};

struct OutcomeSpec {
    std::vector<std::size_t> covariate_columns;
    bool add_intercept = true;
};

struct OutcomeFit {
    EstimatorKind kind = EstimatorKind::MOM;
    Matrix design; // baseline outcome design over all units, without clever terms
    Vector alpha1;
    Vector alpha0;
    Vector m1; // predictions for every unit
    Vector m0;
    bool balancing_weighted = false;
    // CVR only: each unit's clever covariate in the treated and control fits.
    std::optional<Vector> clever1;
    std::optional<Vector> clever0;
};

Matrix outcome_design(const SurveySample& sample, const OutcomeSpec& spec);

EstimateResult estimate_psw(const SurveySample& sample, const PsFit& ps, const UnitWeights& uw);

OutcomeFit fit_outcome_models(const SurveySample& sample, const UnitWeights& uw, EstimatorKind kind,
                              const OutcomeSpec& spec, const GlmOptions& options = {});

EstimateResult estimate_augmented(const SurveySample& sample, const PsFit& ps, const UnitWeights& uw,
                                  const OutcomeFit& outcome);

// Plug-in theta of the stacked equations for a fitted estimator.
ThetaStack plug_in_theta(const PsFit& ps, const EstimateResult& est, const OutcomeFit* outcome);

// Stacked sandwich for a fitted estimator; outcome is null for PSW.
EeStack stacked_sandwich(const SurveySample& sample, const PsFit& ps, const UnitWeights& uw,
                         const EstimateResult& est, const OutcomeFit* outcome);

// Convenience: fit weights, outcome models and the requested estimator.
EstimateResult estimate(const SurveySample& sample, const PsFit& ps, const EstimandSpec& estimand,
                        EstimatorKind kind, const OutcomeSpec& outcome_spec);

} // namespace surveyps

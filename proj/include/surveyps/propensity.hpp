#pragma once

#include <optional>
#include <vector>

#include "surveyps/glm.hpp"
#include "surveyps/sample.hpp"

namespace surveyps {

// How survey weights enter the population-level propensity model:
// U_PS unweighted, W_PS as regression weights, C_PS as an extra covariate,
// CW_PS as both.
enum class PsMode { Unweighted, Weighted, Covariate, CovariateWeighted };

struct PsSpec {
    PsMode mode = PsMode::Weighted;
    std::vector<std::size_t> covariate_columns;
    bool add_intercept = true;
    // Symmetric truncation of the fitted score; 0 disables it. Units with
    // e_sp outside (alpha, 1 - alpha) get a zero tilting function.
    double trunc_alpha = 0.0;

    void validate(std::size_t n_covariates) const;
};

inline bool uses_weight_covariate(PsMode m) {
    return m == PsMode::Covariate || m == PsMode::CovariateWeighted;
}
inline bool uses_regression_weights(PsMode m) {
    return m == PsMode::Weighted || m == PsMode::CovariateWeighted;
}

struct PsFit {
    PsSpec spec;
    DesignMode design = DesignMode::Retrospective;
    Matrix design_sp;          // X* (intercept, covariates, survey weight for C/CW)
    Vector regression_weights; // omega_PS,SP
    Matrix design_fp;          // baseline covariates only; empty in prospective mode
    Vector beta_sp;
    Vector e_sp;
    std::optional<Vector> beta_fp;
    std::optional<Vector> e_fp;
    std::optional<Vector> r_z;
    GlmFit sp_diagnostics;
    std::optional<GlmFit> fp_diagnostics;
    double prob_clip = 1e-6;
};

PsFit fit_propensity(const SurveySample& sample, const PsSpec& spec, const GlmOptions& options = {});

// r_i = e_sp/e_fp for treated units, (1 - e_sp)/(1 - e_fp) for controls.
Vector compute_ratio_rz(const Vector& e_sp, const Vector& e_fp, const Vector& z);

// P(S=1|X): r_z * p_z in retrospective mode, 1/w in prospective mode; capped at 1.
Vector marginal_selection_probability(const SurveySample& sample, const PsFit& ps);

} // namespace surveyps

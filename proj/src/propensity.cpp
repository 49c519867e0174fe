#include "surveyps/propensity.hpp"

#include <cmath>
#include <string>

#include "surveyps/error.hpp"

namespace surveyps {

void PsSpec::validate(std::size_t n_covariates) const {
    if (covariate_columns.empty() && !add_intercept)
        throw Error(ErrorCode::Config, "propensity: empty model");
    for (auto c : covariate_columns)
        if (c >= n_covariates) throw Error(ErrorCode::Config, "propensity: covariate index out of range");
    if (!(trunc_alpha >= 0.0 && trunc_alpha <= 0.1))
        throw Error(ErrorCode::Config, "propensity: trunc_alpha must lie in [0, 0.1]");
}

namespace {

DesignMatrix build_design(const SurveySample& s, const std::vector<std::size_t>& cols,
                          bool intercept, bool weight_column) {
    Matrix x = s.columns(cols);
    auto names = s.column_names(cols);
    if (weight_column) {
        x.conservativeResize(Eigen::NoChange, x.cols() + 1);
        x.col(x.cols() - 1) = s.survey_weight();
        names.emplace_back("(survey_weight)");
    }
    return intercept ? DesignMatrix::with_intercept(x, names) : DesignMatrix(std::move(x), std::move(names));
}

} // namespace

PsFit fit_propensity(const SurveySample& sample, const PsSpec& spec, const GlmOptions& options) {
    spec.validate(sample.covariate_names().size());
    const Index n = sample.size();

    PsFit out;
    out.spec = spec;
    out.design = sample.design();
    out.prob_clip = options.prob_clip;

    const DesignMatrix xsp =
        build_design(sample, spec.covariate_columns, spec.add_intercept, uses_weight_covariate(spec.mode));
    out.design_sp = xsp.values();
    out.regression_weights =
        uses_regression_weights(spec.mode) ? sample.survey_weight() : Vector::Ones(n);
    try {
        out.sp_diagnostics = fit_weighted_logistic(xsp, sample.z(), out.regression_weights, options);
    } catch (const Error& e) {
        throw e.with_context("propensity.sp");
    }
    out.beta_sp = out.sp_diagnostics.coefficients;
    out.e_sp = out.sp_diagnostics.fitted;

    if (sample.design() == DesignMode::Retrospective) {
        const DesignMatrix xfp = build_design(sample, spec.covariate_columns, spec.add_intercept, false);
        out.design_fp = xfp.values();
        try {
            out.fp_diagnostics = fit_weighted_logistic(xfp, sample.z(), Vector::Ones(n), options);
        } catch (const Error& e) {
            throw e.with_context("propensity.fp");
        }
        out.beta_fp = out.fp_diagnostics->coefficients;
        out.e_fp = out.fp_diagnostics->fitted;
        out.r_z = compute_ratio_rz(out.e_sp, *out.e_fp, sample.z());
    }
    return out;
}

Vector compute_ratio_rz(const Vector& e_sp, const Vector& e_fp, const Vector& z) {
    const Index n = z.size();
    if (e_sp.size() != n || e_fp.size() != n)
        throw Error(ErrorCode::InvalidInput, "ratio: length mismatch");
    Vector r(n);
    for (Index i = 0; i < n; ++i) {
        const double a = e_sp(i), b = e_fp(i);
        if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || a >= 1.0 || b <= 0.0 || b >= 1.0)
            throw Error(ErrorCode::InvalidInput, "ratio: scores must lie strictly inside (0,1)");
        r(i) = z(i) == 1.0 ? a / b : (1.0 - a) / (1.0 - b);
    }
    return r;
}

Vector marginal_selection_probability(const SurveySample& sample, const PsFit& ps) {
    const Vector& w = sample.survey_weight();
    if (sample.design() == DesignMode::Prospective)
        return w.cwiseInverse().cwiseMin(1.0);
    if (!ps.r_z)
        throw Error(ErrorCode::MissingSampleLevelFit,
                    "selection probability: retrospective design needs the sample-level score");
    return (ps.r_z->array() / w.array()).min(1.0).matrix();
}

} // namespace surveyps

#include "surveyps/estimators.hpp"

#include <cmath>
#include <string>

#include "surveyps/error.hpp"

namespace surveyps {

namespace {

constexpr double kZ = 1.96;

void finish(EstimateResult& r, double variance) {
    r.se = std::sqrt(std::max(variance, 0.0));
    r.ci_low = r.tau - kZ * r.se;
    r.ci_high = r.tau + kZ * r.se;
}

Index count_active(const UnitWeights& uw) {
    return static_cast<Index>((uw.active.array() > 0.0).count());
}

std::vector<Index> arm_rows(const Vector& z, double arm) {
    std::vector<Index> rows;
    for (Index i = 0; i < z.size(); ++i)
        if (z(i) == arm) rows.push_back(i);
    return rows;
}

std::vector<std::string> generic_names(Index p) {
    std::vector<std::string> n;
    for (Index j = 0; j < p; ++j) n.push_back("c" + std::to_string(j));
    return n;
}

bool constant_over(const Vector& v, const std::vector<Index>& rows) {
    double lo = v(rows.front()), hi = lo;
    for (Index i : rows) {
        lo = std::min(lo, v(i));
        hi = std::max(hi, v(i));
    }
    return hi - lo <= 1e-12 * std::max(1.0, std::abs(hi));
}

struct ArmFit {
    Vector alpha;
    Vector fitted;
};

ArmFit fit_arm(const Matrix& base, const std::optional<Vector>& clever, const Vector& y,
               const Vector& reg_w, const std::vector<Index>& rows, const GlmOptions& options) {
    const Index q = base.cols();
    // A clever term that is constant within the arm duplicates the intercept;
    // it is dropped and gets a zero coefficient.
    const bool use_clever = clever && !constant_over(*clever, rows);
    const Index p = q + (use_clever ? 1 : 0);
    Matrix D(static_cast<Index>(rows.size()), p);
    Vector ya(D.rows()), wa(D.rows());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Index i = rows[k];
        D.row(static_cast<Index>(k)).head(q) = base.row(i);
        if (use_clever) D(static_cast<Index>(k), q) = (*clever)(i);
        ya(static_cast<Index>(k)) = y(i);
        wa(static_cast<Index>(k)) = reg_w(i);
    }
    const GlmFit fit = fit_weighted_linear(DesignMatrix(std::move(D), generic_names(p)), ya, wa, options);
    ArmFit out;
    out.alpha = Vector::Zero(q + (clever ? 1 : 0));
    out.alpha.head(p) = fit.coefficients;
    out.fitted = base * out.alpha.head(q);
    if (clever) out.fitted += out.alpha(q) * *clever;
    return out;
}

} // namespace

Matrix outcome_design(const SurveySample& sample, const OutcomeSpec& spec) {
    for (std::size_t c : spec.covariate_columns)
        if (c >= static_cast<std::size_t>(sample.covariates().cols()))
            throw Error(ErrorCode::Config, "outcome: covariate column out of range");
    if (spec.covariate_columns.empty() && !spec.add_intercept)
        throw Error(ErrorCode::Config, "outcome: empty design");
    const Matrix cov = sample.columns(spec.covariate_columns);
    if (!spec.add_intercept) return cov;
    Matrix d(sample.size(), cov.cols() + 1);
    d.col(0).setOnes();
    d.rightCols(cov.cols()) = cov;
    return d;
}

EstimateResult estimate_psw(const SurveySample& sample, const PsFit& ps, const UnitWeights& uw) {
    const Index n = sample.size();
    const double nd = static_cast<double>(n);
    const Vector& z = sample.z();
    const Vector& y = sample.y();
    const Vector zc = Vector::Ones(n) - z;

    const double s1 = (uw.w1.array() * z.array()).sum();
    const double s0 = (uw.w0.array() * zc.array()).sum();
    if (!(s1 > 0.0)) throw Error(ErrorCode::EmptyArm, "psw: treated arm has zero balancing weight");
    if (!(s0 > 0.0)) throw Error(ErrorCode::EmptyArm, "psw: control arm has zero balancing weight");
    const double tau1 = (uw.w1.array() * z.array() * y.array()).sum() / s1;
    const double tau0 = (uw.w0.array() * zc.array() * y.array()).sum() / s0;

    EstimateResult r;
    r.estimator = EstimatorKind::PSW;
    r.estimand = uw.estimand;
    r.tau = tau1 - tau0;
    r.components = {tau1, tau0, 0.0};
    r.n_used = count_active(uw);

    // Influence function with the PS estimation correction. Clipped scores
    // and the truncation indicator are treated as locally constant.
    const Matrix& X = ps.design_sp;
    const Vector& e = ps.e_sp;
    const Vector& om = ps.regression_weights;
    const Vector& sw = sample.survey_weight();
    const Index p = X.cols();
    Vector H1 = Vector::Zero(p), H0 = Vector::Zero(p);
    Matrix E = Matrix::Zero(p, p);
    for (Index i = 0; i < n; ++i) {
        const double ei = e(i);
        const bool clipped = ei <= ps.prob_clip || ei >= 1.0 - ps.prob_clip;
        const double d = clipped ? 0.0 : ei * (1.0 - ei);
        E.noalias() += (om(i) * d) * X.row(i).transpose() * X.row(i);
        if (d == 0.0 || uw.active(i) == 0.0) continue;
        const double pi = 1.0 / sw(i);
        const WeightPair slope = smooth_weight_slope(uw.estimand.tilt, ei, pi, pi);
        if (z(i) == 1.0) H1 += (y(i) - tau1) * slope.treated * d * X.row(i).transpose();
        else H0 += (y(i) - tau0) * slope.control * d * X.row(i).transpose();
    }
    E /= nd;
    H1 /= nd;
    H0 /= nd;
    const double nu1 = s1 / nd, nu0 = s0 / nd;
    const auto ldlt = E.ldlt();
    const Vector u1 = ldlt.solve(H1), u0 = ldlt.solve(H0);

    double ss = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double sc = om(i) * (z(i) - e(i));
        const double xu1 = sc * X.row(i).dot(u1), xu0 = sc * X.row(i).dot(u0);
        const double f = (z(i) * uw.w1(i) * (y(i) - tau1) + xu1) / nu1 -
                         (zc(i) * uw.w0(i) * (y(i) - tau0) + xu0) / nu0;
        ss += f * f;
    }
    finish(r, ss / (nd * nd));
    return r;
}

OutcomeFit fit_outcome_models(const SurveySample& sample, const UnitWeights& uw, EstimatorKind kind,
                              const OutcomeSpec& spec, const GlmOptions& options) {
    if (kind == EstimatorKind::PSW)
        throw Error(ErrorCode::Config, "outcome: PSW has no outcome model");
    const Index n = sample.size();
    OutcomeFit of;
    of.kind = kind;
    of.design = outcome_design(sample, spec);
    of.balancing_weighted = kind == EstimatorKind::WET;
    if (kind == EstimatorKind::CVR) {
        of.clever1 = uw.w1;
        of.clever0 = uw.w0;
    }
    const Vector ones = Vector::Ones(n);
    const std::vector<Index> t = arm_rows(sample.z(), 1.0), c = arm_rows(sample.z(), 0.0);

    ArmFit f1, f0;
    try {
        f1 = fit_arm(of.design, of.clever1, sample.y(), of.balancing_weighted ? uw.w1 : ones, t, options);
    } catch (const Error& e) {
        throw e.with_context("outcome.treated");
    }
    try {
        f0 = fit_arm(of.design, of.clever0, sample.y(), of.balancing_weighted ? uw.w0 : ones, c, options);
    } catch (const Error& e) {
        throw e.with_context("outcome.control");
    }
    of.alpha1 = std::move(f1.alpha);
    of.m1 = std::move(f1.fitted);
    of.alpha0 = std::move(f0.alpha);
    of.m0 = std::move(f0.fitted);
    return of;
}

EstimateResult estimate_augmented(const SurveySample& sample, const PsFit& ps, const UnitWeights& uw,
                                  const OutcomeFit& outcome) {
    const Index n = sample.size();
    const Vector& z = sample.z();
    const Vector& y = sample.y();
    const Vector zc = Vector::Ones(n) - z;

    const double sh = uw.h_over_ps.sum();
    const double s1 = (uw.w1.array() * z.array()).sum();
    const double s0 = (uw.w0.array() * zc.array()).sum();
    if (!(sh > 0.0)) throw Error(ErrorCode::EmptyArm, "augmented: tilting function sums to zero");
    if (!(s1 > 0.0)) throw Error(ErrorCode::EmptyArm, "augmented: treated arm has zero balancing weight");
    if (!(s0 > 0.0)) throw Error(ErrorCode::EmptyArm, "augmented: control arm has zero balancing weight");

    const double v1 = (uw.h_over_ps.array() * (outcome.m1 - outcome.m0).array()).sum() / sh;
    const double v2 = (uw.w1.array() * z.array() * (y - outcome.m1).array()).sum() / s1;
    const double v3 = (uw.w0.array() * zc.array() * (y - outcome.m0).array()).sum() / s0;

    EstimateResult r;
    r.estimator = outcome.kind;
    r.estimand = uw.estimand;
    r.tau = v1 + v2 - v3;
    r.components = {v1, v2, v3};
    r.n_used = count_active(uw);
    const EeStack st = stacked_sandwich(sample, ps, uw, r, &outcome);
    finish(r, st.tau_variance);
    return r;
}

ThetaStack plug_in_theta(const PsFit& ps, const EstimateResult& est, const OutcomeFit* outcome) {
    ThetaStack t;
    if (est.estimator == EstimatorKind::PSW) {
        t.v1 = 0.0;
        t.v2 = est.components[0];
        t.v3 = est.components[1];
    } else {
        if (!outcome) throw Error(ErrorCode::InvalidInput, "theta: augmented estimator needs its outcome fit");
        t.v1 = est.components[0];
        t.v2 = est.components[1];
        t.v3 = est.components[2];
        t.alpha0 = outcome->alpha0;
        t.alpha1 = outcome->alpha1;
    }
    if (ps.design == DesignMode::Retrospective) t.beta_fp = ps.beta_fp;
    t.beta_sp = ps.beta_sp;
    return t;
}

EeStack stacked_sandwich(const SurveySample& sample, const PsFit& ps, const UnitWeights& uw,
                         const EstimateResult& est, const OutcomeFit* outcome) {
    const Matrix od = outcome ? outcome->design : Matrix(sample.size(), 0);
    const StackData data = make_stack_data(sample, ps, uw, od);
    StackConfig cfg;
    cfg.kind = est.estimator;
    cfg.tilt = uw.estimand.tilt;
    cfg.design = ps.design;
    cfg.prob_clip = ps.prob_clip;
    return assemble_sandwich(data, plug_in_theta(ps, est, outcome), cfg);
}

EstimateResult estimate(const SurveySample& sample, const PsFit& ps, const EstimandSpec& estimand,
                        EstimatorKind kind, const OutcomeSpec& outcome_spec) {
    const UnitWeights uw = build_unit_weights(sample, ps, estimand);
    if (kind == EstimatorKind::PSW) return estimate_psw(sample, ps, uw);
    const OutcomeFit of = fit_outcome_models(sample, uw, kind, outcome_spec);
    return estimate_augmented(sample, ps, uw, of);
}

} // namespace surveyps

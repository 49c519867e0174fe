#include "surveyps/balancing.hpp"

#include <cmath>
#include <string>

#include "surveyps/error.hpp"

namespace surveyps {

void EstimandSpec::validate() const {
    if (tilt == Tilt::Truncated) {
        if (!(alpha > 0.0 && alpha <= 0.1))
            throw Error(ErrorCode::Config, "estimand: truncation alpha must lie in (0, 0.1]");
    } else if (alpha != 0.0) {
        throw Error(ErrorCode::Config, "estimand: alpha is only meaningful for the truncated tilt");
    }
}

std::string_view EstimandSpec::key() const noexcept {
    switch (tilt) {
    case Tilt::Combined: return "ate";
    case Tilt::Treated: return "att";
    case Tilt::Control: return "atc";
    case Tilt::Overlap: return "ato";
    case Tilt::Truncated: return "trunc";
    }
    return "?";
}

EstimandSpec parse_estimand(std::string_view key, double alpha) {
    if (key == "ate") return EstimandSpec::combined();
    if (key == "att") return EstimandSpec::treated();
    if (key == "atc") return EstimandSpec::control();
    if (key == "ato") return EstimandSpec::overlap();
    if (key == "trunc") {
        EstimandSpec s = EstimandSpec::truncated(alpha);
        s.validate();
        return s;
    }
    throw Error(ErrorCode::Config, "unknown estimand '" + std::string(key) + "'");
}

namespace {

bool inside(double e, double alpha) { return alpha < e && e < 1.0 - alpha; }

} // namespace

double smooth_tilting_value(Tilt tilt, double e) {
    switch (tilt) {
    case Tilt::Combined:
    case Tilt::Truncated: return 1.0;
    case Tilt::Treated: return e;
    case Tilt::Control: return 1.0 - e;
    case Tilt::Overlap: return e * (1.0 - e);
    }
    return 0.0;
}

double tilting_value(const EstimandSpec& spec, double e) {
    if (spec.tilt == Tilt::Truncated) return inside(e, spec.alpha) ? 1.0 : 0.0;
    return smooth_tilting_value(spec.tilt, e);
}

WeightPair smooth_weight_pair(Tilt tilt, double e, double p1, double p0) {
    switch (tilt) {
    case Tilt::Combined:
    case Tilt::Truncated: return {1.0 / (p1 * e), 1.0 / (p0 * (1.0 - e))};
    case Tilt::Treated: return {1.0 / p1, e / (p0 * (1.0 - e))};
    case Tilt::Control: return {(1.0 - e) / (p1 * e), 1.0 / p0};
    case Tilt::Overlap: return {(1.0 - e) / p1, e / p0};
    }
    return {};
}

WeightPair smooth_weight_slope(Tilt tilt, double e, double p1, double p0) {
    const double dt = -1.0 / (p1 * e * e);
    const double dc = 1.0 / (p0 * (1.0 - e) * (1.0 - e));
    switch (tilt) {
    case Tilt::Combined:
    case Tilt::Truncated: return {dt, dc};
    case Tilt::Treated: return {0.0, dc};
    case Tilt::Control: return {dt, 0.0};
    case Tilt::Overlap: return {-1.0 / p1, 1.0 / p0};
    }
    return {};
}

WeightPair unit_weight_pair(const EstimandSpec& spec, double e_sp, double p1, double p0) {
    if (spec.tilt == Tilt::Truncated && !inside(e_sp, spec.alpha)) return {0.0, 0.0};
    return smooth_weight_pair(spec.tilt, e_sp, p1, p0);
}

UnitWeights build_unit_weights(const SurveySample& sample, const PsFit& ps, const EstimandSpec& spec) {
    spec.validate();
    const Index n = sample.size();
    const Vector p_sel = marginal_selection_probability(sample, ps);
    const Vector& sw = sample.survey_weight();

    UnitWeights uw;
    uw.estimand = spec;
    uw.h.resize(n);
    uw.w1.resize(n);
    uw.w0.resize(n);
    uw.h_over_ps.resize(n);
    uw.active.resize(n);
    const double ps_alpha = ps.spec.trunc_alpha;
    for (Index i = 0; i < n; ++i) {
        const double e = ps.e_sp(i);
        bool on = ps_alpha <= 0.0 || inside(e, ps_alpha);
        if (spec.tilt == Tilt::Truncated) on = on && inside(e, spec.alpha);
        const double mask = on ? 1.0 : 0.0;
        const double p = 1.0 / sw(i);
        const WeightPair pair = smooth_weight_pair(spec.tilt, e, p, p);
        uw.active(i) = mask;
        uw.h(i) = mask * smooth_tilting_value(spec.tilt, e);
        uw.w1(i) = mask * pair.treated;
        uw.w0(i) = mask * pair.control;
        uw.h_over_ps(i) = uw.h(i) / p_sel(i);
    }
    return uw;
}

} // namespace surveyps

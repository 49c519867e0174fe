#pragma once

#include <string_view>

#include "surveyps/propensity.hpp"
#include "surveyps/sample.hpp"

namespace surveyps {

// Target populations: combined (PATE), treated (PATT), control (PATC),
// overlap (PATO) and the truncated combined population.
enum class Tilt { Combined, Treated, Control, Overlap, Truncated };

struct EstimandSpec {
    Tilt tilt = Tilt::Combined;
    double alpha = 0.0; // used only by Truncated, must lie in (0, 0.1]

    static EstimandSpec combined() { return {Tilt::Combined, 0.0}; }
    static EstimandSpec treated() { return {Tilt::Treated, 0.0}; }
    static EstimandSpec control() { return {Tilt::Control, 0.0}; }
    static EstimandSpec overlap() { return {Tilt::Overlap, 0.0}; }
    static EstimandSpec truncated(double alpha) { return {Tilt::Truncated, alpha}; }

    void validate() const;
    // "ate", "att", "atc", "ato", "trunc"
    std::string_view key() const noexcept;
    friend bool operator==(const EstimandSpec&, const EstimandSpec&) = default;
};

EstimandSpec parse_estimand(std::string_view key, double alpha = 0.0);

// h(e): 1, e, 1-e, e(1-e) or 1{alpha < e < 1-alpha}.
double tilting_value(const EstimandSpec& spec, double e);

struct WeightPair {
    double treated = 0.0;
    double control = 0.0;
};

// (h/(p1 e), h/(p0 (1-e))). Overlap is returned in its simplified form
// ((1-e)/p1, e/p0), which is the same quantity.
WeightPair unit_weight_pair(const EstimandSpec& spec, double e_sp, double p1, double p0);

// Weight pair with any indicator factor removed, and its derivative in e.
// The truncated tilt reduces to the combined one here; callers multiply by a
// fixed window mask.
WeightPair smooth_weight_pair(Tilt tilt, double e, double p1, double p0);
WeightPair smooth_weight_slope(Tilt tilt, double e, double p1, double p0);
double smooth_tilting_value(Tilt tilt, double e);

struct UnitWeights {
    EstimandSpec estimand;
    Vector h;         // tilting function
    Vector w1;        // treated-arm balancing weight, every unit
    Vector w0;        // control-arm balancing weight, every unit
    Vector h_over_ps; // h / P(S=1|X)
    Vector active;    // 1 inside every truncation window, 0 outside
};

// Row-wise balancing weights. Both arm weights are computed for every unit with
// that unit's own sampling probability p = 1/w.
UnitWeights build_unit_weights(const SurveySample& sample, const PsFit& ps, const EstimandSpec& spec);

} // namespace surveyps

#pragma once

#include <string>
#include <vector>

#include "surveyps/linalg.hpp"

namespace surveyps {

// Retrospective: sampling after exposure, weight = 1/p_z(x).
// Prospective: sampling before exposure, weight = 1/p(x).
enum class DesignMode { Retrospective, Prospective };

// Unit-level survey observational data. Validated on construction: n > 0, both
// arms present, z in {0,1}, y finite, survey weights positive and finite.
class SurveySample {
public:
    SurveySample(Matrix covariates, std::vector<std::string> covariate_names, Vector z, Vector y,
                 Vector survey_weight, DesignMode design = DesignMode::Retrospective);

    const Matrix& covariates() const noexcept { return x_; }
    const std::vector<std::string>& covariate_names() const noexcept { return names_; }
    const Vector& z() const noexcept { return z_; }
    const Vector& y() const noexcept { return y_; }
    const Vector& survey_weight() const noexcept { return w_; }
    DesignMode design() const noexcept { return design_; }
    Index size() const noexcept { return z_.size(); }

    // Column subset of the covariates, in the order given.
    Matrix columns(const std::vector<std::size_t>& which) const;
    std::vector<std::string> column_names(const std::vector<std::size_t>& which) const;

    // Same units with survey weights multiplied by c.
    SurveySample rescaled_weights(double c) const;
    // Units reordered so that unit k of the result is unit order[k] of this one.
    SurveySample permuted(const std::vector<Index>& order) const;

private:
    Matrix x_;
    std::vector<std::string> names_;
    Vector z_;
    Vector y_;
    Vector w_;
    DesignMode design_;
};

} // namespace surveyps

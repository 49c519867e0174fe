#pragma once

#include <string>
#include <vector>

#include "surveyps/linalg.hpp"

namespace surveyps {

// n x p design with labelled columns. Construction enforces n >= p, finite
// entries and no all-zero column.
class DesignMatrix {
public:
    DesignMatrix(Matrix values, std::vector<std::string> column_names);

    // Prepends a column of ones labelled "(intercept)".
    static DesignMatrix with_intercept(const Matrix& covariates,
                                       const std::vector<std::string>& names);

    const Matrix& values() const noexcept { return values_; }
    const std::vector<std::string>& column_names() const noexcept { return names_; }
    Index rows() const noexcept { return values_.rows(); }
    Index cols() const noexcept { return values_.cols(); }

    DesignMatrix select_rows(const std::vector<Index>& rows) const;

private:
    Matrix values_;
    std::vector<std::string> names_;
};

struct GlmFit {
    Vector coefficients;
    Vector fitted;
    bool converged = false;
    int iterations = 0;
    double deviance = 0.0;
};

struct GlmOptions {
    int max_iter = 100;
    double tolerance = 1e-8;
    double separation_bound = 30.0;
    double rcond_min = 1e-12;
    double prob_clip = 1e-6;
};

double expit(double eta) noexcept;
Vector expit(const Vector& eta);

// Clips probabilities into [clip, 1 - clip].
Vector clip_probabilities(Vector p, double clip);

// Weighted maximum likelihood for a logistic model; solves
// sum_i w_i (z_i - expit(x_i'b)) x_i = 0 by Newton with step-halving.
GlmFit fit_weighted_logistic(const DesignMatrix& X, const Vector& z, const Vector& w,
                             const GlmOptions& options = {});

// Weighted least squares via the normal equations X'WX a = X'Wy. Zero weights
// are allowed (rows drop out) as long as the weighted Gram matrix is regular.
GlmFit fit_weighted_linear(const DesignMatrix& X, const Vector& y, const Vector& w,
                           const GlmOptions& options = {});

} // namespace surveyps

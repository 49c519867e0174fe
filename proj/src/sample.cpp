#include "surveyps/sample.hpp"

#include "surveyps/error.hpp"

namespace surveyps {

SurveySample::SurveySample(Matrix covariates, std::vector<std::string> covariate_names, Vector z,
                           Vector y, Vector survey_weight, DesignMode design)
    : x_(std::move(covariates)), names_(std::move(covariate_names)), z_(std::move(z)),
      y_(std::move(y)), w_(std::move(survey_weight)), design_(design) {
    const Index n = z_.size();
    if (n == 0) throw Error(ErrorCode::InvalidInput, "sample: no units");
    if (x_.rows() != n || y_.size() != n || w_.size() != n)
        throw Error(ErrorCode::InvalidInput, "sample: column lengths differ");
    if (static_cast<Index>(names_.size()) != x_.cols())
        throw Error(ErrorCode::InvalidInput, "sample: covariate names do not match columns");
    if (!x_.allFinite()) throw Error(ErrorCode::InvalidInput, "sample: non-finite covariate");
    if (!y_.allFinite()) throw Error(ErrorCode::InvalidInput, "sample: non-finite outcome");
    if (!w_.allFinite() || (w_.array() <= 0.0).any())
        throw Error(ErrorCode::InvalidInput, "sample: survey weights must be positive and finite");
    Index treated = 0;
    for (Index i = 0; i < n; ++i) {
        if (z_(i) == 1.0) ++treated;
        else if (z_(i) != 0.0) throw Error(ErrorCode::InvalidInput, "sample: treatment must be 0/1");
    }
    if (treated == 0 || treated == n)
        throw Error(ErrorCode::InvalidInput, "sample: both treatment arms must be present");
}

Matrix SurveySample::columns(const std::vector<std::size_t>& which) const {
    Matrix out(size(), static_cast<Index>(which.size()));
    for (std::size_t k = 0; k < which.size(); ++k) {
        if (which[k] >= names_.size())
            throw Error(ErrorCode::Config, "sample: covariate index out of range");
        out.col(static_cast<Index>(k)) = x_.col(static_cast<Index>(which[k]));
    }
    return out;
}

std::vector<std::string> SurveySample::column_names(const std::vector<std::size_t>& which) const {
    std::vector<std::string> out;
    out.reserve(which.size());
    for (auto j : which) {
        if (j >= names_.size()) throw Error(ErrorCode::Config, "sample: covariate index out of range");
        out.push_back(names_[j]);
    }
    return out;
}

SurveySample SurveySample::rescaled_weights(double c) const {
    return SurveySample(x_, names_, z_, y_, w_ * c, design_);
}

SurveySample SurveySample::permuted(const std::vector<Index>& order) const {
    const Index n = size();
    if (static_cast<Index>(order.size()) != n)
        throw Error(ErrorCode::InvalidInput, "sample: permutation length mismatch");
    Matrix x(n, x_.cols());
    Vector z(n), y(n), w(n);
    for (Index k = 0; k < n; ++k) {
        const Index i = order[static_cast<std::size_t>(k)];
        x.row(k) = x_.row(i);
        z(k) = z_(i);
        y(k) = y_(i);
        w(k) = w_(i);
    }
    return SurveySample(std::move(x), names_, std::move(z), std::move(y), std::move(w), design_);
}

} // namespace surveyps

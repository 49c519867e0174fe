#include "surveyps/glm.hpp"

#include <algorithm>
#include <cmath>

#include "surveyps/error.hpp"

namespace surveyps {

double equilibrated_rcond(const Matrix& sym) {
    const Index p = sym.rows();
    if (p == 0) return 0.0;
    Vector scale(p);
    for (Index j = 0; j < p; ++j) {
        const double d = sym(j, j);
        if (!(d > 0.0) || !std::isfinite(d)) return 0.0;
        scale(j) = 1.0 / std::sqrt(d);
    }
    const Matrix eq = scale.asDiagonal() * sym * scale.asDiagonal();
    Eigen::JacobiSVD<Matrix> svd(eq);
    const auto& s = svd.singularValues();
    if (s(0) <= 0.0) return 0.0;
    return s(p - 1) / s(0);
}

DesignMatrix::DesignMatrix(Matrix values, std::vector<std::string> column_names)
    : values_(std::move(values)), names_(std::move(column_names)) {
    if (static_cast<Index>(names_.size()) != values_.cols())
        throw Error(ErrorCode::InvalidInput, "design: column name count does not match columns");
    if (values_.rows() < values_.cols())
        throw Error(ErrorCode::DegenerateDesign, "design: fewer rows than columns");
    if (!values_.allFinite())
        throw Error(ErrorCode::InvalidInput, "design: non-finite entry");
    for (Index j = 0; j < values_.cols(); ++j) {
        if ((values_.col(j).array() == 0.0).all())
            throw Error(ErrorCode::DegenerateDesign,
                        "design: column '" + names_[static_cast<std::size_t>(j)] + "' is all zero");
    }
}

DesignMatrix DesignMatrix::with_intercept(const Matrix& covariates,
                                          const std::vector<std::string>& names) {
    Matrix v(covariates.rows(), covariates.cols() + 1);
    v.col(0).setOnes();
    v.rightCols(covariates.cols()) = covariates;
    std::vector<std::string> n;
    n.reserve(names.size() + 1);
    n.emplace_back("(intercept)");
    n.insert(n.end(), names.begin(), names.end());
    return DesignMatrix(std::move(v), std::move(n));
}

DesignMatrix DesignMatrix::select_rows(const std::vector<Index>& rows) const {
    Matrix v(static_cast<Index>(rows.size()), values_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) v.row(static_cast<Index>(i)) = values_.row(rows[i]);
    return DesignMatrix(std::move(v), names_);
}

double expit(double eta) noexcept {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

Vector expit(const Vector& eta) {
    return eta.unaryExpr([](double t) { return expit(t); });
}

Vector clip_probabilities(Vector p, double clip) {
    return p.cwiseMax(clip).cwiseMin(1.0 - clip);
}

namespace {

double softplus(double t) noexcept {
    return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double logistic_deviance(const Vector& eta, const Vector& z, const Vector& w) {
    double ll = 0.0;
    for (Index i = 0; i < eta.size(); ++i) ll += w(i) * (z(i) * eta(i) - softplus(eta(i)));
    return -2.0 * ll;
}

void check_weights(const Vector& w, Index n, bool strictly_positive) {
    if (w.size() != n) throw Error(ErrorCode::InvalidInput, "weights: length mismatch");
    if (!w.allFinite()) throw Error(ErrorCode::InvalidInput, "weights: non-finite entry");
    if (strictly_positive ? (w.array() <= 0.0).any() : (w.array() < 0.0).any())
        throw Error(ErrorCode::InvalidInput, "weights: must be positive");
    if (!(w.sum() > 0.0)) throw Error(ErrorCode::InvalidInput, "weights: zero total");
}

// Solves the symmetric system after unit-diagonal equilibration.
Vector equilibrated_solve(const Matrix& sym, const Vector& rhs) {
    const Vector scale = sym.diagonal().cwiseSqrt().cwiseInverse();
    const Matrix eq = scale.asDiagonal() * sym * scale.asDiagonal();
    return scale.asDiagonal() * eq.ldlt().solve(scale.asDiagonal() * rhs);
}

} // namespace

GlmFit fit_weighted_logistic(const DesignMatrix& design, const Vector& z, const Vector& w,
                             const GlmOptions& options) {
    const Matrix& X = design.values();
    const Index n = X.rows();
    if (z.size() != n) throw Error(ErrorCode::InvalidInput, "logistic: response length mismatch");
    check_weights(w, n, true);
    bool has0 = false, has1 = false;
    for (Index i = 0; i < n; ++i) {
        if (z(i) == 1.0) has1 = true;
        else if (z(i) == 0.0) has0 = true;
        else throw Error(ErrorCode::InvalidInput, "logistic: response must be 0/1");
    }
    if (!has0 || !has1) throw Error(ErrorCode::InvalidInput, "logistic: both classes required");

    // Normalized to mean one; the Newton path is then identical for any c * w.
    const Vector wn = w * (static_cast<double>(n) / w.sum());
    const double wsum = static_cast<double>(n);

    Vector beta = Vector::Zero(X.cols());
    Vector eta = X * beta;
    double dev = logistic_deviance(eta, z, wn);

    GlmFit fit;
    bool polish = false;
    for (int iter = 1; iter <= options.max_iter; ++iter) {
        const Vector mu = expit(eta);
        const Vector score = X.transpose() * (wn.array() * (z - mu).array()).matrix();
        const Vector iw = (wn.array() * mu.array() * (1.0 - mu.array())).matrix();
        const Matrix info = X.transpose() * iw.asDiagonal() * X;
        if (equilibrated_rcond(info) < options.rcond_min) {
            // At beta = 0 the information is X'WX / 4; later rank loss comes
            // from fitted values saturating at 0 or 1.
            if (iter > 1) throw Error(ErrorCode::Separation, "logistic: fitted probabilities saturated");
            throw Error(ErrorCode::DegenerateDesign, "logistic: weighted information is rank deficient");
        }
        const Vector step = equilibrated_solve(info, score);

        double t = 1.0;
        Vector cand = beta + step;
        Vector cand_eta = X * cand;
        double cand_dev = logistic_deviance(cand_eta, z, wn);
        // The polishing step is taken in full; near the optimum the deviance
        // comparison is at rounding level.
        for (int halving = 0; !polish && halving < 30 && !(cand_dev <= dev); ++halving) {
            t *= 0.5;
            cand = beta + t * step;
            cand_eta = X * cand;
            cand_dev = logistic_deviance(cand_eta, z, wn);
        }
        const double rel_change = std::abs(dev - cand_dev) / (std::abs(cand_dev) + 0.1);
        const double moved = t * step.cwiseAbs().maxCoeff();
        beta = std::move(cand);
        eta = std::move(cand_eta);
        dev = cand_dev;
        fit.iterations = iter;

        if (beta.cwiseAbs().maxCoeff() > options.separation_bound)
            throw Error(ErrorCode::Separation, "logistic: coefficient exceeds separation bound");
        if (polish) {
            fit.converged = true;
            break;
        }
        const Vector new_score = X.transpose() * (wn.array() * (z - expit(eta)).array()).matrix();
        const bool score_small = new_score.cwiseAbs().maxCoeff() < options.tolerance * wsum;
        // Under quasi-separation both the score and the deviance change go
        // flat while |beta| keeps growing, so the step must have settled too.
        const bool settled = moved < std::sqrt(options.tolerance) * (1.0 + beta.cwiseAbs().maxCoeff());
        // One more Newton step takes the score down to rounding level.
        if (settled && (score_small || rel_change < options.tolerance)) polish = true;
    }
    if (!fit.converged)
        throw Error(ErrorCode::NonConvergence, "logistic: iteration limit reached");

    fit.coefficients = beta;
    fit.fitted = clip_probabilities(expit(eta), options.prob_clip);
    fit.deviance = logistic_deviance(eta, z, w);
    return fit;
}

GlmFit fit_weighted_linear(const DesignMatrix& design, const Vector& y, const Vector& w,
                           const GlmOptions& options) {
    const Matrix& X = design.values();
    const Index n = X.rows();
    if (y.size() != n) throw Error(ErrorCode::InvalidInput, "linear: response length mismatch");
    if (!y.allFinite()) throw Error(ErrorCode::InvalidInput, "linear: non-finite response");
    check_weights(w, n, false);

    const Vector wn = w / w.maxCoeff();
    const Matrix gram = X.transpose() * wn.asDiagonal() * X;
    if (equilibrated_rcond(gram) < options.rcond_min)
        throw Error(ErrorCode::DegenerateDesign, "linear: weighted Gram matrix is singular");
    const Vector rhs = X.transpose() * (wn.array() * y.array()).matrix();

    GlmFit fit;
    fit.coefficients = equilibrated_solve(gram, rhs);
    fit.fitted = X * fit.coefficients;
    fit.converged = true;
    fit.iterations = 1;
    fit.deviance = (w.array() * (y - fit.fitted).array().square()).sum();
    return fit;
}

} // namespace surveyps

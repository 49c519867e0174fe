#pragma once

#include <optional>
#include <string_view>

#include "surveyps/balancing.hpp"
#include "surveyps/propensity.hpp"
#include "surveyps/sample.hpp"

namespace surveyps {

enum class EstimatorKind { PSW, MOM, CVR, WET };

std::string_view estimator_key(EstimatorKind kind) noexcept; // "psw", "mom", ...
EstimatorKind parse_estimator(std::string_view key);

// Per-unit inputs of the stacked estimating equations. One row per unit.
struct StackData {
    Matrix x_sp;   // covariates of the population-level PS model (X*)
    Matrix x_fp;   // covariates of the sample-level PS model; no columns in prospective mode
    Matrix x_or;   // baseline outcome covariates (X' and X'' before any clever term)
    Vector z;
    Vector y;
    Vector w;      // survey weight
    Vector omega_sp; // regression weights of the population-level PS model
    Vector active; // truncation mask, frozen at the fitted scores

    Index size() const noexcept { return z.size(); }
    StackData row(Index i) const;
};

struct StackConfig {
    EstimatorKind kind = EstimatorKind::MOM;
    Tilt tilt = Tilt::Combined;
    DesignMode design = DesignMode::Retrospective;
    double prob_clip = 1e-6;
};

// Parameter vector, packed as (v1, v2, v3, alpha0, alpha1, beta_fp, beta_sp).
// PSW stacks carry no alpha blocks; prospective stacks carry no beta_fp.
struct ThetaStack {
    double v1 = 0.0;
    double v2 = 0.0;
    double v3 = 0.0;
    Vector alpha0;
    Vector alpha1;
    std::optional<Vector> beta_fp;
    Vector beta_sp;

    Vector pack() const;
};

struct StackLayout {
    Index p_or = 0; // per-arm outcome dimension (0 for PSW)
    Index p_fp = 0;
    Index p_sp = 0;

    Index alpha0_offset() const noexcept { return 3; }
    Index alpha1_offset() const noexcept { return 3 + p_or; }
    Index beta_fp_offset() const noexcept { return 3 + 2 * p_or; }
    Index beta_sp_offset() const noexcept { return 3 + 2 * p_or + p_fp; }
    Index dim() const noexcept { return 3 + 2 * p_or + p_fp + p_sp; }
};

StackLayout stack_layout(const StackData& data, const StackConfig& config);
ThetaStack unpack_theta(const Vector& packed, const StackLayout& layout);

struct EeStack {
    ThetaStack theta;
    Index psi_dim = 0;
    Matrix A;
    Matrix B;
    Matrix V;
    Vector psi_mean;           // column means of psi at theta; ~0 at the plug-in solution
    double tau_variance = 0.0; // g'Vg/n with g = (1, 1, -1, 0, ...)
};

StackData make_stack_data(const SurveySample& sample, const PsFit& ps, const UnitWeights& uw,
                          const Matrix& outcome_design);

// n x psi_dim matrix of per-unit estimating functions at a packed theta.
Matrix psi_matrix(const StackData& data, const StackConfig& config, const Vector& theta);

// Stacked residual vector of a single unit (data must hold exactly one row).
Vector evaluate_psi(const StackData& unit, const ThetaStack& theta, const StackConfig& config);

// A = -n^-1 sum dpsi/dtheta by central differences, B = n^-1 sum psi psi',
// V = A^-1 B A^-T.
EeStack assemble_sandwich(const StackData& data, const ThetaStack& theta, const StackConfig& config);

} // namespace surveyps

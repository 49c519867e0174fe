#include "surveyps/m_estimation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "surveyps/error.hpp"

namespace surveyps {

std::string_view estimator_key(EstimatorKind kind) noexcept {
    switch (kind) {
    case EstimatorKind::PSW: return "psw";
    case EstimatorKind::MOM: return "mom";
    case EstimatorKind::CVR: return "cvr";
    case EstimatorKind::WET: return "wet";
    }
    return "?";
}

EstimatorKind parse_estimator(std::string_view key) {
    if (key == "psw") return EstimatorKind::PSW;
    if (key == "mom") return EstimatorKind::MOM;
    if (key == "cvr") return EstimatorKind::CVR;
    if (key == "wet") return EstimatorKind::WET;
    throw Error(ErrorCode::Config, "unknown estimator '" + std::string(key) + "'");
}

StackData StackData::row(Index i) const {
    StackData r;
    r.x_sp = x_sp.row(i);
    r.x_fp = x_fp.cols() > 0 ? Matrix(x_fp.row(i)) : Matrix(1, 0);
    r.x_or = x_or.cols() > 0 ? Matrix(x_or.row(i)) : Matrix(1, 0);
    r.z = Vector::Constant(1, z(i));
    r.y = Vector::Constant(1, y(i));
    r.w = Vector::Constant(1, w(i));
    r.omega_sp = Vector::Constant(1, omega_sp(i));
    r.active = Vector::Constant(1, active(i));
    return r;
}

Vector ThetaStack::pack() const {
    const Index p_fp = beta_fp ? beta_fp->size() : 0;
    Vector out(3 + alpha0.size() + alpha1.size() + p_fp + beta_sp.size());
    out(0) = v1;
    out(1) = v2;
    out(2) = v3;
    Index k = 3;
    out.segment(k, alpha0.size()) = alpha0;
    k += alpha0.size();
    out.segment(k, alpha1.size()) = alpha1;
    k += alpha1.size();
    if (beta_fp) {
        out.segment(k, p_fp) = *beta_fp;
        k += p_fp;
    }
    out.segment(k, beta_sp.size()) = beta_sp;
    return out;
}

StackLayout stack_layout(const StackData& data, const StackConfig& config) {
    StackLayout l;
    if (config.kind != EstimatorKind::PSW)
        l.p_or = data.x_or.cols() + (config.kind == EstimatorKind::CVR ? 1 : 0);
    l.p_fp = config.design == DesignMode::Retrospective ? data.x_fp.cols() : 0;
    l.p_sp = data.x_sp.cols();
    return l;
}

ThetaStack unpack_theta(const Vector& packed, const StackLayout& l) {
    if (packed.size() != l.dim()) throw Error(ErrorCode::InvalidInput, "theta: length mismatch");
    ThetaStack t;
    t.v1 = packed(0);
    t.v2 = packed(1);
    t.v3 = packed(2);
    t.alpha0 = packed.segment(l.alpha0_offset(), l.p_or);
    t.alpha1 = packed.segment(l.alpha1_offset(), l.p_or);
    if (l.p_fp > 0) t.beta_fp = packed.segment(l.beta_fp_offset(), l.p_fp);
    t.beta_sp = packed.segment(l.beta_sp_offset(), l.p_sp);
    return t;
}

StackData make_stack_data(const SurveySample& sample, const PsFit& ps, const UnitWeights& uw,
                          const Matrix& outcome_design) {
    StackData d;
    d.x_sp = ps.design_sp;
    d.x_fp = ps.design == DesignMode::Retrospective ? ps.design_fp : Matrix(sample.size(), 0);
    d.x_or = outcome_design;
    d.z = sample.z();
    d.y = sample.y();
    d.w = sample.survey_weight();
    d.omega_sp = ps.regression_weights;
    d.active = uw.active;
    return d;
}

namespace {

Vector clipped_expit(const Vector& eta, double clip) {
    return clip_probabilities(expit(eta), clip);
}

} // namespace

Matrix psi_matrix(const StackData& d, const StackConfig& config, const Vector& packed) {
    const StackLayout l = stack_layout(d, config);
    const ThetaStack t = unpack_theta(packed, l);
    const Index n = d.size();
    const bool retro = config.design == DesignMode::Retrospective;
    const bool has_or = config.kind != EstimatorKind::PSW;
    const bool cvr = config.kind == EstimatorKind::CVR;

    const Vector e = clipped_expit(d.x_sp * t.beta_sp, config.prob_clip);
    Vector e_fp;
    if (retro) e_fp = clipped_expit(d.x_fp * *t.beta_fp, config.prob_clip);

    Vector h(n), w1(n), w0(n), hp(n);
    for (Index i = 0; i < n; ++i) {
        const double p = 1.0 / d.w(i);
        double p_sel = p;
        if (retro) {
            const double r = d.z(i) == 1.0 ? e(i) / e_fp(i) : (1.0 - e(i)) / (1.0 - e_fp(i));
            p_sel = r * p;
        }
        p_sel = std::min(p_sel, 1.0);
        const WeightPair pair = smooth_weight_pair(config.tilt, e(i), p, p);
        h(i) = d.active(i) * smooth_tilting_value(config.tilt, e(i));
        w1(i) = d.active(i) * pair.treated;
        w0(i) = d.active(i) * pair.control;
        hp(i) = h(i) / p_sel;
    }

    Vector m1 = Vector::Zero(n), m0 = Vector::Zero(n);
    const Index q = d.x_or.cols();
    if (has_or) {
        m1 = d.x_or * t.alpha1.head(q);
        m0 = d.x_or * t.alpha0.head(q);
        if (cvr) {
            m1 += t.alpha1(q) * w1;
            m0 += t.alpha0(q) * w0;
        }
    }

    const Vector zc = Vector::Ones(n) - d.z;
    Matrix psi(n, l.dim());
    psi.col(0) = (hp.array() * (m1 - m0).array() - hp.array() * t.v1).matrix();
    psi.col(1) = (w1.array() * d.z.array() * (d.y - m1).array() - w1.array() * d.z.array() * t.v2).matrix();
    psi.col(2) = (w0.array() * zc.array() * (d.y - m0).array() - w0.array() * zc.array() * t.v3).matrix();

    if (has_or) {
        const bool wet = config.kind == EstimatorKind::WET;
        const Vector r0 = ((wet ? w0 : Vector::Ones(n)).array() * zc.array() * (d.y - m0).array()).matrix();
        const Vector r1 = ((wet ? w1 : Vector::Ones(n)).array() * d.z.array() * (d.y - m1).array()).matrix();
        psi.middleCols(l.alpha0_offset(), q) = r0.asDiagonal() * d.x_or;
        psi.middleCols(l.alpha1_offset(), q) = r1.asDiagonal() * d.x_or;
        if (cvr) {
            psi.col(l.alpha0_offset() + q) = (r0.array() * w0.array()).matrix();
            psi.col(l.alpha1_offset() + q) = (r1.array() * w1.array()).matrix();
        }
    }
    if (l.p_fp > 0)
        psi.middleCols(l.beta_fp_offset(), l.p_fp) = (d.z - e_fp).asDiagonal() * d.x_fp;
    psi.middleCols(l.beta_sp_offset(), l.p_sp) =
        (d.omega_sp.array() * (d.z - e).array()).matrix().asDiagonal() * d.x_sp;
    return psi;
}

Vector evaluate_psi(const StackData& unit, const ThetaStack& theta, const StackConfig& config) {
    if (unit.size() != 1) throw Error(ErrorCode::InvalidInput, "evaluate_psi: expects a single unit");
    return psi_matrix(unit, config, theta.pack()).row(0).transpose();
}

EeStack assemble_sandwich(const StackData& data, const ThetaStack& theta, const StackConfig& config) {
    const StackLayout l = stack_layout(data, config);
    const Vector packed = theta.pack();
    if (packed.size() != l.dim()) throw Error(ErrorCode::InvalidInput, "sandwich: theta does not match the stack");
    const Index k = l.dim();
    const double n = static_cast<double>(data.size());

    const Matrix psi = psi_matrix(data, config, packed);
    EeStack out;
    out.theta = theta;
    out.psi_dim = k;
    out.psi_mean = psi.colwise().mean().transpose();
    out.B = psi.transpose() * psi / n;
    out.B = 0.5 * (out.B + out.B.transpose()).eval();

    const double step_base = std::cbrt(std::numeric_limits<double>::epsilon());
    out.A.resize(k, k);
    for (Index j = 0; j < k; ++j) {
        const double hstep = step_base * std::max(1.0, std::abs(packed(j)));
        Vector up = packed, dn = packed;
        up(j) += hstep;
        dn(j) -= hstep;
        const Vector d = (psi_matrix(data, config, up).colwise().mean() -
                          psi_matrix(data, config, dn).colwise().mean()).transpose();
        out.A.col(j) = -d / (up(j) - dn(j));
    }

    // Row scaling to a unit diagonal before judging conditioning; the blocks
    // of A live on very different scales (survey weights enter some rows).
    Vector rs(k);
    for (Index i = 0; i < k; ++i) {
        const double a = std::abs(out.A(i, i));
        rs(i) = a > 0.0 && std::isfinite(a) ? 1.0 / a : 1.0;
    }
    const Matrix scaled = rs.asDiagonal() * out.A;
    if (!scaled.allFinite()) throw Error(ErrorCode::SingularA, "sandwich: non-finite derivative");
    Eigen::JacobiSVD<Matrix> svd(scaled);
    const auto& s = svd.singularValues();
    if (!(s(0) > 0.0) || s(k - 1) / s(0) < 1e-12)
        throw Error(ErrorCode::SingularA, "sandwich: derivative matrix A is singular");

    const Eigen::FullPivLU<Matrix> lu(out.A);
    const Matrix AinvB = lu.solve(out.B);
    out.V = lu.solve(AinvB.transpose()).transpose();
    out.V = 0.5 * (out.V + out.V.transpose());

    Vector g = Vector::Zero(k);
    g(0) = 1.0;
    g(1) = 1.0;
    g(2) = -1.0;
    out.tau_variance = g.dot(out.V * g) / n;
    return out;
}

} // namespace surveyps

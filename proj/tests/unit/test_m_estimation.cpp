#include "support.hpp"

#include <Eigen/Eigenvalues>

#include "surveyps/error.hpp"

using namespace surveyps;
using namespace testsupport;

namespace {

struct Fitted {
    SurveySample sample;
    PsFit ps;
    UnitWeights uw;
};

Fitted fit(const SurveySample& s, const EstimandSpec& est) {
    PsFit ps = fit_propensity(s, wps(all_columns(s)));
    UnitWeights uw = build_unit_weights(s, ps, est);
    return {s, std::move(ps), std::move(uw)};
}

SurveySample duplicated(const SurveySample& s) {
    const Index n = s.size();
    Matrix x(2 * n, s.covariates().cols());
    x << s.covariates(), s.covariates();
    Vector z(2 * n), y(2 * n), w(2 * n);
    z << s.z(), s.z();
    y << s.y(), s.y();
    w << s.survey_weight(), s.survey_weight();
    return SurveySample(x, s.covariate_names(), z, y, w, s.design());
}

} // namespace

TEST_CASE("single unit stack matches the hand evaluation") {
    const auto j = load_json("single_unit_psi.json");
    const auto& u = j["unit"];
    StackData d;
    d.x_sp = Matrix{{1.0, u["x1"].get<double>(), u["x2"].get<double>()}};
    d.x_fp = d.x_sp;
    d.x_or = d.x_sp;
    d.z = Vector::Constant(1, u["z"].get<double>());
    d.y = Vector::Constant(1, u["y"].get<double>());
    d.w = Vector::Constant(1, u["w"].get<double>());
    d.omega_sp = d.w;
    d.active = Vector::Ones(1);
    StackConfig cfg;
    cfg.kind = EstimatorKind::MOM;
    const ThetaStack t = unpack_theta(vec(j["theta"]), stack_layout(d, cfg));
    const Vector psi = evaluate_psi(d, t, cfg);
    const Vector expect = vec(j["psi"]);
    REQUIRE(psi.size() == expect.size());
    for (Index k = 0; k < psi.size(); ++k) CHECK(std::abs(psi(k) - expect(k)) < 1e-12 * std::max(1.0, std::abs(expect(k))));

    CHECK_THROWS_AS(unpack_theta(vec(j["theta"]).head(14), stack_layout(d, cfg)), Error);
}

TEST_CASE("prospective stacks drop the sample level rows") {
    const SurveySample s = toy12(DesignMode::Prospective);
    const PsFit ps = fit_propensity(s, wps());
    const UnitWeights uw = build_unit_weights(s, ps, EstimandSpec::combined());
    const EstimateResult r = estimate_psw(s, ps, uw);
    const EeStack st = stacked_sandwich(s, ps, uw, r, nullptr);
    CHECK(st.psi_dim == 3 + 3);
    CHECK(rel(std::sqrt(st.tau_variance), r.se) < 1e-6);
}

TEST_CASE("TOY12 stacked PSW and augmented stacks match the oracle") {
    const auto j = load_json("toy12_oracle.json");
    const SurveySample s = toy12();
    const PsFit ps = fit_propensity(s, wps());
    for (const char* key : {"ate", "att", "atc", "ato"}) {
        CAPTURE(key);
        const UnitWeights uw = build_unit_weights(s, ps, parse_estimand(key, 0.0));
        const EstimateResult p = estimate_psw(s, ps, uw);
        const EeStack st = stacked_sandwich(s, ps, uw, p, nullptr);
        const double se_stacked = std::sqrt(st.tau_variance);
        CHECK(rel(se_stacked, j["by_tilt"][key]["psw"]["se_stacked"].get<double>()) < 1e-6);
        CHECK(rel(se_stacked, p.se) < 1e-8);
        CHECK(st.psi_mean.cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("stack root, symmetric PSD meat and V identity") {
    const SurveySample s = random_sample(61, 250, 3);
    for (const EstimandSpec& est : {EstimandSpec::combined(), EstimandSpec::treated(), EstimandSpec::overlap()}) {
        const Fitted f = fit(s, est);
        for (EstimatorKind k : {EstimatorKind::MOM, EstimatorKind::CVR, EstimatorKind::WET}) {
            const OutcomeFit of = fit_outcome_models(s, f.uw, k, {all_columns(s), true});
            const EstimateResult r = estimate_augmented(s, f.ps, f.uw, of);
            const EeStack st = stacked_sandwich(s, f.ps, f.uw, r, &of);
            CHECK(st.psi_mean.cwiseAbs().maxCoeff() <= 1e-6);
            CHECK((st.B - st.B.transpose()).cwiseAbs().maxCoeff() == 0.0);
            const Eigen::SelfAdjointEigenSolver<Matrix> eig(st.B);
            CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, eig.eigenvalues().maxCoeff()));
            const Matrix Ainv = st.A.inverse();
            const Matrix V = Ainv * st.B * Ainv.transpose();
            CHECK((V - st.V).cwiseAbs().maxCoeff() <= 1e-8 * V.cwiseAbs().maxCoeff());
            // WET and CVR pin v2, v3 at exactly zero variance; allow rounding there.
            CHECK(st.V.diagonal().minCoeff() >= -1e-10 * st.V.diagonal().maxCoeff());
        }
    }
}

TEST_CASE("closed-form weighted mean difference") {
    const auto j = load_json("closed_form.json");
    Matrix x(40, 1);
    x.col(0) = vec(j["x"]);
    const SurveySample s(x, {"x"}, vec(j["z"]), vec(j["y"]), vec(j["w"]), DesignMode::Prospective);
    PsSpec spec;
    spec.mode = PsMode::Unweighted;
    const PsFit ps = fit_propensity(s, spec);
    const UnitWeights uw = build_unit_weights(s, ps, EstimandSpec::combined());
    const EstimateResult p = estimate_psw(s, ps, uw);
    CHECK(rel(p.tau, j["tau"].get<double>()) < 1e-12);
    CHECK(rel(p.se * p.se, j["variance"].get<double>()) < 1e-10);
    const EeStack st = stacked_sandwich(s, ps, uw, p, nullptr);
    CHECK(rel(st.tau_variance, j["variance"].get<double>()) < 1e-6);

    // An intercept-only MOM stack has the same contrast.
    const OutcomeFit of = fit_outcome_models(s, uw, EstimatorKind::MOM, OutcomeSpec{{}, true});
    const EstimateResult m = estimate_augmented(s, ps, uw, of);
    CHECK(rel(m.tau, j["tau"].get<double>()) < 1e-12);
    CHECK(rel(m.se * m.se, j["variance"].get<double>()) < 1e-6);
}

TEST_CASE("duplicating every unit halves the variance") {
    const SurveySample s = random_sample(62, 150, 2);
    const SurveySample d = duplicated(s);
    for (EstimatorKind k : {EstimatorKind::PSW, EstimatorKind::MOM, EstimatorKind::WET}) {
        const PsFit a = fit_propensity(s, wps(all_columns(s)));
        const PsFit b = fit_propensity(d, wps(all_columns(s)));
        const double va = std::pow(estimate(s, a, EstimandSpec::overlap(), k, {all_columns(s), true}).se, 2);
        const double vb = std::pow(estimate(d, b, EstimandSpec::overlap(), k, {all_columns(s), true}).se, 2);
        CHECK(rel(vb, 0.5 * va) < 1e-8);
    }
}

TEST_CASE("analytic and stacked PSW agree on random samples") {
    for (std::uint64_t seed = 70; seed < 74; ++seed) {
        const SurveySample s = random_sample(seed, 300, 4);
        for (const EstimandSpec& est :
             {EstimandSpec::combined(), EstimandSpec::treated(), EstimandSpec::control(), EstimandSpec::overlap()}) {
            const Fitted f = fit(s, est);
            const EstimateResult p = estimate_psw(s, f.ps, f.uw);
            const EeStack st = stacked_sandwich(s, f.ps, f.uw, p, nullptr);
            CHECK(rel(std::sqrt(st.tau_variance), p.se) < 1e-6);
        }
    }
}

TEST_CASE("singular derivative matrix is reported") {
    const SurveySample s = toy12();
    const PsFit ps = fit_propensity(s, wps());
    UnitWeights uw = build_unit_weights(s, ps, EstimandSpec::combined());
    uw.active.setZero(); // every stack row for the v terms vanishes
    const EstimateResult r{EstimatorKind::PSW, EstimandSpec::combined(), 0.0, 0.0, 0.0, 0.0, {1.0, 1.0, 0.0}, 0};
    try {
        stacked_sandwich(s, ps, uw, r, nullptr);
        FAIL("expected SingularA");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularA);
    }
}

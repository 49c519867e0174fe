#include "support.hpp"

#include <filesystem>
#include <fstream>
#include <functional>

#include "surveyps/cli.hpp"

using namespace surveyps;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

RunConfig toy_config() {
    RunConfig c;
    c.input = fixture_path("toy12.csv");
    c.mapping = {"z", "y", "w", {"x1", "x2"}};
    return c;
}

Error error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e;
    }
    FAIL("expected an error");
    return Error(ErrorCode::InvalidInput, "");
}

} // namespace

TEST_CASE("estimate report reproduces the TOY12 fixture") {
    const auto oracle = load_json("toy12_oracle.json")["by_tilt"];
    RunConfig c = toy_config();
    c.estimands = {EstimandSpec::overlap(), EstimandSpec::combined()};
    c.estimators = {EstimatorKind::WET, EstimatorKind::PSW, EstimatorKind::MOM, EstimatorKind::CVR};
    const auto j = nlohmann::json::parse(estimate_report(c));
    REQUIRE(j["results"].size() == 8);
    for (const auto& r : j["results"]) {
        const auto& o = oracle[r["estimand"].get<std::string>()][r["estimator"].get<std::string>()];
        CAPTURE(r["estimand"].get<std::string>());
        CAPTURE(r["estimator"].get<std::string>());
        CHECK(rel(r["tau"].get<double>(), o["tau"].get<double>()) < 1e-10);
        CHECK(rel(r["se"].get<double>(), o["se"].get<double>()) < 1e-6);
        CHECK(r["n_used"].get<int>() == 12);
    }
    CHECK(j["propensity"]["converged"].get<bool>());
}

TEST_CASE("reports are byte-identical across runs") {
    RunConfig c = toy_config();
    c.estimands = {EstimandSpec::overlap(), EstimandSpec::truncated(0.05)};
    c.estimators = {EstimatorKind::WET, EstimatorKind::CVR};
    CHECK(estimate_report(c) == estimate_report(c));
    c.format = OutputFormat::Csv;
    const std::string csv = estimate_report(c);
    CHECK(csv == estimate_report(c));
    CHECK(csv.find("trunc=0.050000000000000003,cvr,") != std::string::npos);
}

TEST_CASE("balance report") {
    RunConfig c = toy_config();
    c.estimands = {EstimandSpec::overlap()};
    const auto j = nlohmann::json::parse(balance_report(c));
    for (const auto& row : j["estimands"][0]["balance"]) CHECK(std::abs(row["psmd"].get<double>()) <= 1e-6);

    RunConfig imb = c;
    imb.input = fixture_path("imbalanced.csv");
    imb.estimands = {EstimandSpec::combined()};
    const auto ji = nlohmann::json::parse(balance_report(imb));
    double worst = 0.0;
    for (const auto& row : ji["estimands"][0]["balance"]) worst = std::max(worst, std::abs(row["psmd"].get<double>()));
    CHECK(worst > 0.1);

    c.format = OutputFormat::Csv;
    CHECK(balance_report(c).rfind("estimand,covariate,mean_treated,mean_control,pooled_sd,psmd\nato,x1,", 0) == 0);
}

TEST_CASE("configuration errors") {
    RunConfig c = toy_config();
    c.mapping.weight = "survey_weight";
    CHECK(error_of([&] { estimate_report(c); }).code() == ErrorCode::Config);
    c = toy_config();
    c.mapping.covariates = {"x1", "x1"};
    CHECK(error_of([&] { balance_report(c); }).code() == ErrorCode::Config);
    c = toy_config();
    c.mapping.covariates = {"x1", "z"};
    CHECK(error_of([&] { balance_report(c); }).code() == ErrorCode::Config);
    CHECK(error_of([] { parse_ps_mode("x"); }).code() == ErrorCode::Config);
    CHECK(error_of([] { parse_design("both"); }).code() == ErrorCode::Config);
    c = toy_config();
    c.input = "/nonexistent/input.csv";
    CHECK(error_of([&] { estimate_report(c); }).code() != ErrorCode::Separation);

    const auto j = error_json(Error(ErrorCode::EmptyArm, "no treated units", "ato/psw"));
    CHECK(j.dump() == R"({"code":"E_EMPTY_ARM","message":"no treated units","context":"ato/psw"})");
}

TEST_CASE("estimation errors carry provenance") {
    // x1 separates the arms perfectly.
    RunConfig c = toy_config();
    const fs::path tmp = fs::temp_directory_path() / "surveyps_sep.csv";
    {
        std::ofstream f(tmp);
        f << "x1,z,y,w\n";
        for (int i = 0; i < 20; ++i) f << (i < 10 ? -3.0 - 0.1 * i : 3.0 + 0.1 * i) << ',' << (i < 10 ? 0 : 1) << ",1,2\n";
    }
    c.input = tmp;
    c.mapping = {"z", "y", "w", {"x1"}};
    const Error e = error_of([&] { estimate_report(c); });
    CHECK(e.code() == ErrorCode::Separation);
    CHECK(e.context() == "propensity.sp");
    fs::remove(tmp);
}

TEST_CASE("simulation output does not depend on threads") {
    const fs::path tmp = fs::temp_directory_path() / "surveyps_scenario.txt";
    {
        std::ofstream f(tmp);
        f << "name = tiny\nunits_per_cluster = 200\nallocations = 85,75,70,65,60,40,35,30,25,15\n"
             "replications = 5\nestimator = wet:c:att:mis:cor\n";
    }
    SimulateConfig s{tmp, std::nullopt, 1};
    const std::string one = simulate_report(s);
    s.threads = 4;
    CHECK(simulate_report(s) == one);
    s.seed = 99;
    CHECK(simulate_report(s) != one);
    CHECK(one.rfind("scenario,estimand,estimator,ps_mode,ps_model,or_model,truth,", 0) == 0);
    fs::remove(tmp);
}

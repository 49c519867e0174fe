#include "surveyps/cli.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "surveyps/diagnostics.hpp"
#include "surveyps/estimators.hpp"
#include "surveyps/simulation.hpp"

namespace surveyps {

using nlohmann::ordered_json;

DesignMode parse_design(std::string_view key) {
    if (key == "retro") return DesignMode::Retrospective;
    if (key == "pro") return DesignMode::Prospective;
    throw Error(ErrorCode::Config, "unknown design '" + std::string(key) + "'");
}

PsMode parse_ps_mode(std::string_view key) {
    if (key == "u") return PsMode::Unweighted;
    if (key == "w") return PsMode::Weighted;
    if (key == "c") return PsMode::Covariate;
    if (key == "cw") return PsMode::CovariateWeighted;
    throw Error(ErrorCode::Config, "unknown ps mode '" + std::string(key) + "'");
}

std::string_view ps_mode_key(PsMode mode) noexcept {
    switch (mode) {
    case PsMode::Unweighted: return "u";
    case PsMode::Weighted: return "w";
    case PsMode::Covariate: return "c";
    case PsMode::CovariateWeighted: return "cw";
    }
    return "?";
}

OutputFormat parse_format(std::string_view key) {
    if (key == "json") return OutputFormat::Json;
    if (key == "csv") return OutputFormat::Csv;
    throw Error(ErrorCode::Config, "unknown format '" + std::string(key) + "'");
}

ordered_json error_json(const Error& e) {
    ordered_json j;
    j["code"] = code_string(e.code());
    j["message"] = e.what();
    j["context"] = e.context();
    return j;
}

namespace {

struct Prepared {
    SurveySample sample;
    PsFit ps;
    std::vector<std::size_t> columns;
};

Prepared prepare(const RunConfig& cfg) {
    if (cfg.estimands.empty()) throw Error(ErrorCode::Config, "no estimand requested");
    for (const auto& e : cfg.estimands) e.validate();
    const CsvTable table = read_csv(cfg.input);
    cfg.mapping.validate(table);
    SurveySample sample = build_sample(table, cfg.mapping, cfg.design);

    std::vector<std::size_t> cols(cfg.mapping.covariates.size());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    PsSpec spec;
    spec.mode = cfg.ps_mode;
    spec.covariate_columns = cols;
    spec.trunc_alpha = cfg.trunc_alpha;
    spec.validate(cols.size());

    const std::size_t p = cols.size() + 1 + (uses_weight_covariate(cfg.ps_mode) ? 1 : 0);
    if (static_cast<std::size_t>(sample.size()) < 2 * p)
        throw Error(ErrorCode::Config, "input has fewer than twice as many rows as model parameters");
    PsFit ps = fit_propensity(sample, spec);
    return {std::move(sample), std::move(ps), std::move(cols)};
}

std::string estimand_label(const EstimandSpec& e) {
    std::string s(e.key());
    if (e.tilt == Tilt::Truncated) s += "=" + format_number(e.alpha);
    return s;
}

ordered_json ps_summary(const Prepared& p, const RunConfig& cfg) {
    std::vector<std::string> names{"(intercept)"};
    for (const auto& c : cfg.mapping.covariates) names.push_back(c);
    if (uses_weight_covariate(cfg.ps_mode)) names.emplace_back("(survey_weight)");

    ordered_json j;
    j["mode"] = ps_mode_key(cfg.ps_mode);
    j["design"] = cfg.design == DesignMode::Retrospective ? "retro" : "pro";
    j["converged"] = p.ps.sp_diagnostics.converged;
    j["iterations"] = p.ps.sp_diagnostics.iterations;
    ordered_json coef = ordered_json::object();
    for (std::size_t k = 0; k < names.size(); ++k) coef[names[k]] = p.ps.beta_sp(static_cast<Index>(k));
    j["coefficients"] = coef;
    const Vector& e = p.ps.e_sp;
    j["e_min"] = e.minCoeff();
    j["e_max"] = e.maxCoeff();
    const double clip = p.ps.prob_clip;
    j["n_clipped"] = (e.array() <= clip || e.array() >= 1.0 - clip).count();
    j["trunc_alpha"] = cfg.trunc_alpha;
    if (cfg.trunc_alpha > 0.0)
        j["n_truncated"] = (e.array() <= cfg.trunc_alpha || e.array() >= 1.0 - cfg.trunc_alpha).count();
    return j;
}

template <class F>
auto with_provenance(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw e.with_context(where);
    }
}

} // namespace

std::string estimate_report(const RunConfig& cfg) {
    if (cfg.estimators.empty()) throw Error(ErrorCode::Config, "no estimator requested");
    const Prepared p = prepare(cfg);
    OutcomeSpec os;
    os.covariate_columns = p.columns;

    ordered_json results = ordered_json::array();
    std::ostringstream csv;
    csv << "estimand,estimator,tau,se,ci_low,ci_high,component1,component2,component3,n_used\n";
    for (const auto& estimand : cfg.estimands) {
        const std::string label = estimand_label(estimand);
        const UnitWeights uw = build_unit_weights(p.sample, p.ps, estimand);
        const WeightSummary ws = with_provenance(label, [&] { return weight_summary(p.sample, uw); });
        for (EstimatorKind kind : cfg.estimators) {
            const std::string where = label + "/" + std::string(estimator_key(kind));
            const EstimateResult r =
                with_provenance(where, [&] { return estimate(p.sample, p.ps, estimand, kind, os); });
            ordered_json j;
            j["estimand"] = estimand.key();
            if (estimand.tilt == Tilt::Truncated) j["alpha"] = estimand.alpha;
            j["estimator"] = estimator_key(kind);
            j["tau"] = r.tau;
            j["se"] = r.se;
            j["ci_low"] = r.ci_low;
            j["ci_high"] = r.ci_high;
            j["components"] = r.components;
            j["n_used"] = r.n_used;
            j["weights"] = weight_summary_json(ws);
            results.push_back(std::move(j));

            csv << label << ',' << estimator_key(kind) << ',' << format_number(r.tau) << ','
                << format_number(r.se) << ',' << format_number(r.ci_low) << ',' << format_number(r.ci_high);
            for (double c : r.components) csv << ',' << format_number(c);
            csv << ',' << r.n_used << '\n';
        }
    }
    if (cfg.format == OutputFormat::Csv) return csv.str();
    ordered_json out;
    out["n"] = p.sample.size();
    out["propensity"] = ps_summary(p, cfg);
    out["results"] = std::move(results);
    return out.dump(2) + "\n";
}

std::string balance_report(const RunConfig& cfg) {
    const Prepared p = prepare(cfg);
    ordered_json out = ordered_json::array();
    std::ostringstream csv;
    for (const auto& estimand : cfg.estimands) {
        const std::string label = estimand_label(estimand);
        const UnitWeights uw = build_unit_weights(p.sample, p.ps, estimand);
        const auto rows = with_provenance(label, [&] { return psmd_table(p.sample, uw); });
        if (cfg.format == OutputFormat::Csv) {
            // One table per estimand; the header is repeated with an estimand column.
            std::istringstream body(balance_csv(rows));
            std::string line;
            bool header = true;
            while (std::getline(body, line)) {
                if (header) {
                    if (csv.tellp() == 0) csv << "estimand," << line << '\n';
                    header = false;
                } else {
                    csv << label << ',' << line << '\n';
                }
            }
        } else {
            ordered_json j;
            j["estimand"] = estimand.key();
            if (estimand.tilt == Tilt::Truncated) j["alpha"] = estimand.alpha;
            j["balance"] = balance_json(rows);
            j["weights"] = weight_summary_json(weight_summary(p.sample, uw));
            out.push_back(std::move(j));
        }
    }
    if (cfg.format == OutputFormat::Csv) return csv.str();
    ordered_json top;
    top["n"] = p.sample.size();
    top["propensity"] = ps_summary(p, cfg);
    top["estimands"] = std::move(out);
    return top.dump(2) + "\n";
}

std::string simulate_report(const SimulateConfig& cfg) {
    Scenario sc = load_scenario(cfg.scenario.string());
    if (cfg.seed) sc.config.seed = *cfg.seed;
    if (cfg.threads) sc.config.threads = *cfg.threads;
    return scenario_csv(run_scenario(sc));
}

} // namespace surveyps

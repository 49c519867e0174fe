#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "surveyps/cli.hpp"

using namespace surveyps;

namespace {

struct Flags {
    std::string input, treatment, outcome, weight;
    std::vector<std::string> covariates;
    std::string design = "retro", ps_mode = "w", format = "json", out;
    std::vector<std::string> estimands{"ate"}, estimators{"psw"};
    double alpha = 0.0, trunc_alpha = 0.0;
};

void add_data_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--input", f.input, "input CSV")->required();
    cmd->add_option("--treatment", f.treatment, "0/1 treatment column")->required();
    cmd->add_option("--outcome", f.outcome, "outcome column")->required();
    cmd->add_option("--weight", f.weight, "survey weight column")->required();
    cmd->add_option("--covariates", f.covariates, "covariate columns")->required()->delimiter(',');
    cmd->add_option("--design", f.design, "retro | pro");
    cmd->add_option("--ps-mode", f.ps_mode, "u | w | c | cw");
    cmd->add_option("--estimand", f.estimands, "ate | att | atc | ato | trunc")->delimiter(',');
    cmd->add_option("--alpha", f.alpha, "truncation level of the trunc estimand");
    cmd->add_option("--trunc-alpha", f.trunc_alpha, "propensity-score truncation level");
    cmd->add_option("--format", f.format, "json | csv");
    cmd->add_option("--out", f.out, "output path; stdout when omitted");
}

RunConfig to_config(const Flags& f) {
    RunConfig c;
    c.input = f.input;
    c.mapping = {f.treatment, f.outcome, f.weight, f.covariates};
    c.design = parse_design(f.design);
    c.ps_mode = parse_ps_mode(f.ps_mode);
    c.estimands.clear();
    for (const auto& e : f.estimands) c.estimands.push_back(parse_estimand(e, e == "trunc" ? f.alpha : 0.0));
    c.estimators.clear();
    for (const auto& e : f.estimators) c.estimators.push_back(parse_estimator(e));
    c.trunc_alpha = f.trunc_alpha;
    c.format = parse_format(f.format);
    return c;
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty()) std::cout << text;
    else write_atomic(out, text);
}

int fail(const Error& e) {
    std::cerr << error_json(e).dump() << '\n';
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Survey-weighted propensity score estimation"};
    app.require_subcommand(1);

    Flags f;
    auto* est = app.add_subcommand("estimate", "treatment effect estimates");
    add_data_flags(est, f);
    est->add_option("--estimator", f.estimators, "psw | mom | cvr | wet")->delimiter(',');

    auto* bal = app.add_subcommand("balance", "covariate balance table");
    add_data_flags(bal, f);

    SimulateConfig sim;
    std::string sim_out;
    auto* simc = app.add_subcommand("simulate", "Monte-Carlo scenario");
    simc->add_option("scenario", sim.scenario, "scenario file")->required();
    simc->add_option("--seed", sim.seed, "overrides the scenario seed");
    simc->add_option("--threads", sim.threads, "worker threads; 0 uses all cores");
    simc->add_option("--out", sim_out, "output CSV; stdout when omitted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(Error(ErrorCode::Config, e.what(), "cli"));
    }

    try {
        if (*est) emit(f.out, estimate_report(to_config(f)));
        else if (*bal) emit(f.out, balance_report(to_config(f)));
        else emit(sim_out, simulate_report(sim));
    } catch (const Error& e) {
        return fail(e);
    } catch (const std::exception& e) {
        return fail(Error(ErrorCode::InvalidInput, e.what()));
    }
    return 0;
}

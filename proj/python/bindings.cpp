#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "surveyps/cli.hpp"
#include "surveyps/diagnostics.hpp"
#include "surveyps/estimators.hpp"

namespace py = pybind11;
using namespace surveyps;

namespace {

SurveySample make_sample(const Matrix& x, const Vector& z, const Vector& y, const Vector& w,
                         std::vector<std::string> names, const std::string& design) {
    if (names.empty())
        for (Index j = 0; j < x.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
    return SurveySample(x, std::move(names), z, y, w, parse_design(design));
}

PsFit fit(const SurveySample& s, const std::string& ps_mode, double trunc_alpha) {
    PsSpec spec;
    spec.mode = parse_ps_mode(ps_mode);
    for (std::size_t j = 0; j < s.covariate_names().size(); ++j) spec.covariate_columns.push_back(j);
    spec.trunc_alpha = trunc_alpha;
    return fit_propensity(s, spec);
}

py::dict to_dict(const EstimateResult& r) {
    py::dict d;
    d["estimand"] = std::string(r.estimand.key());
    d["estimator"] = std::string(estimator_key(r.estimator));
    d["tau"] = r.tau;
    d["se"] = r.se;
    d["ci_low"] = r.ci_low;
    d["ci_high"] = r.ci_high;
    d["components"] = py::make_tuple(r.components[0], r.components[1], r.components[2]);
    d["n_used"] = r.n_used;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Survey-weighted propensity score estimators";

    static py::exception<Error> error_type(m, "SurveyPSError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
            exc.attr("code") = std::string(code_string(e.code()));
            exc.attr("context") = e.context();
            PyErr_SetObject(error_type.ptr(), exc.ptr());
        }
    });

    m.def(
        "fit_propensity",
        [](const Matrix& x, const Vector& z, const Vector& w, const std::string& ps_mode, const std::string& design) {
            const SurveySample s = make_sample(x, z, Vector::Zero(z.size()), w, {}, design);
            const PsFit ps = fit(s, ps_mode, 0.0);
            py::dict d;
            d["beta_sp"] = ps.beta_sp;
            d["e_sp"] = ps.e_sp;
            if (ps.beta_fp) d["beta_fp"] = *ps.beta_fp;
            if (ps.e_fp) d["e_fp"] = *ps.e_fp;
            d["iterations"] = ps.sp_diagnostics.iterations;
            return d;
        },
        py::arg("x"), py::arg("z"), py::arg("w"), py::arg("ps_mode") = "w", py::arg("design") = "retro");

    m.def(
        "estimate",
        [](const Matrix& x, const Vector& z, const Vector& y, const Vector& w, const std::string& estimand,
           const std::string& estimator, const std::string& ps_mode, const std::string& design, double alpha,
           double trunc_alpha) {
            const SurveySample s = make_sample(x, z, y, w, {}, design);
            const PsFit ps = fit(s, ps_mode, trunc_alpha);
            OutcomeSpec os;
            os.covariate_columns = ps.spec.covariate_columns;
            return to_dict(estimate(s, ps, parse_estimand(estimand, alpha), parse_estimator(estimator), os));
        },
        py::arg("x"), py::arg("z"), py::arg("y"), py::arg("w"), py::arg("estimand") = "ate",
        py::arg("estimator") = "psw", py::arg("ps_mode") = "w", py::arg("design") = "retro", py::arg("alpha") = 0.0,
        py::arg("trunc_alpha") = 0.0);

    m.def(
        "balance",
        [](const Matrix& x, const Vector& z, const Vector& w, std::vector<std::string> names,
           const std::string& estimand, const std::string& ps_mode, const std::string& design, double alpha) {
            const SurveySample s = make_sample(x, z, Vector::Zero(z.size()), w, std::move(names), design);
            const PsFit ps = fit(s, ps_mode, 0.0);
            py::list out;
            for (const auto& r : psmd_table(s, build_unit_weights(s, ps, parse_estimand(estimand, alpha)))) {
                py::dict d;
                d["covariate"] = r.covariate;
                d["mean_treated"] = r.mean_treated;
                d["mean_control"] = r.mean_control;
                d["pooled_sd"] = r.pooled_sd;
                d["psmd"] = r.psmd;
                out.append(d);
            }
            return out;
        },
        py::arg("x"), py::arg("z"), py::arg("w"), py::arg("names") = std::vector<std::string>{},
        py::arg("estimand") = "ate", py::arg("ps_mode") = "w", py::arg("design") = "retro", py::arg("alpha") = 0.0);

    m.def(
        "estimate_report",
        [](const std::string& input, const std::string& treatment, const std::string& outcome,
           const std::string& weight, const std::vector<std::string>& covariates,
           const std::vector<std::string>& estimands, const std::vector<std::string>& estimators,
           const std::string& ps_mode, const std::string& design, double alpha, double trunc_alpha,
           const std::string& format) {
            RunConfig c;
            c.input = input;
            c.mapping = {treatment, outcome, weight, covariates};
            c.design = parse_design(design);
            c.ps_mode = parse_ps_mode(ps_mode);
            c.estimands.clear();
            for (const auto& e : estimands) c.estimands.push_back(parse_estimand(e, e == "trunc" ? alpha : 0.0));
            c.estimators.clear();
            for (const auto& e : estimators) c.estimators.push_back(parse_estimator(e));
            c.trunc_alpha = trunc_alpha;
            c.format = parse_format(format);
            py::gil_scoped_release release;
            return estimate_report(c);
        },
        py::arg("input"), py::arg("treatment"), py::arg("outcome"), py::arg("weight"), py::arg("covariates"),
        py::arg("estimands") = std::vector<std::string>{"ate"},
        py::arg("estimators") = std::vector<std::string>{"psw"}, py::arg("ps_mode") = "w",
        py::arg("design") = "retro", py::arg("alpha") = 0.0, py::arg("trunc_alpha") = 0.0,
        py::arg("format") = "json");

    m.def(
        "simulate",
        [](const std::string& scenario, std::optional<std::uint64_t> seed, std::optional<int> threads) {
            py::gil_scoped_release release;
            return simulate_report({scenario, seed, threads});
        },
        py::arg("scenario"), py::arg("seed") = py::none(), py::arg("threads") = py::none());
}

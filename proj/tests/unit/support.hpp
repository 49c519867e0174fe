#pragma once

#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "surveyps/estimators.hpp"
#include "surveyps/io.hpp"

namespace testsupport {

using namespace surveyps;

inline std::string fixture_path(const std::string& name) { return std::string(SURVEYPS_FIXTURES) + "/" + name; }

inline nlohmann::json load_json(const std::string& name) {
    std::ifstream f(fixture_path(name));
    REQUIRE(f.good());
    return nlohmann::json::parse(f);
}

inline Vector vec(const nlohmann::json& a) {
    Vector v(static_cast<Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Index>(i)) = a[i].get<double>();
    return v;
}

inline double max_rel(const Vector& a, const Vector& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a(i) - b(i)) / std::max(1.0, std::abs(b(i))));
    return m;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline SurveySample load_sample(const std::string& csv, const std::vector<std::string>& covs,
                                DesignMode design = DesignMode::Retrospective) {
    ColumnMapping m{"z", "y", "w", covs};
    return build_sample(read_csv(fixture_path(csv)), m, design);
}

inline SurveySample toy12(DesignMode design = DesignMode::Retrospective) {
    return load_sample("toy12.csv", {"x1", "x2"}, design);
}

inline PsSpec wps(std::vector<std::size_t> cols = {0, 1}) {
    PsSpec s;
    s.mode = PsMode::Weighted;
    s.covariate_columns = std::move(cols);
    return s;
}

// Random retrospective sample: Gaussian covariates, logistic treatment,
// linear outcome, positive weights that depend on treatment and x1.
inline SurveySample random_sample(std::uint64_t seed, Index n, Index p) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;
    Matrix x(n, p);
    Vector z(n), y(n), w(n);
    std::vector<std::string> names;
    for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
    for (Index i = 0; i < n; ++i) {
        double lin = -0.3, out = 1.0;
        for (Index j = 0; j < p; ++j) {
            x(i, j) = nd(rng);
            lin += 0.4 * x(i, j) / static_cast<double>(j + 1);
            out += 0.8 * x(i, j) / static_cast<double>(j + 1);
        }
        z(i) = ud(rng) < expit(lin) ? 1.0 : 0.0;
        y(i) = out + z(i) * (1.0 + 0.3 * x(i, 0)) + nd(rng);
        w(i) = 5.0 + 20.0 * ud(rng) + 10.0 * z(i) + 3.0 * std::abs(x(i, 0));
    }
    return SurveySample(std::move(x), std::move(names), std::move(z), std::move(y), std::move(w));
}

inline std::vector<std::size_t> all_columns(const SurveySample& s) {
    std::vector<std::size_t> c;
    for (Index j = 0; j < s.covariates().cols(); ++j) c.push_back(static_cast<std::size_t>(j));
    return c;
}

} // namespace testsupport

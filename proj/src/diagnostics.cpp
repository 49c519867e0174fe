#include "surveyps/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "surveyps/error.hpp"
#include "surveyps/io.hpp"

namespace surveyps {

std::vector<BalanceRow> psmd_table(const SurveySample& sample, const UnitWeights& uw) {
    const Index n = sample.size();
    const Vector& z = sample.z();
    const Vector a1 = (uw.w1.array() * z.array()).matrix();
    const Vector a0 = (uw.w0.array() * (1.0 - z.array())).matrix();
    const double s1 = a1.sum(), s0 = a0.sum();
    if (!(s1 > 0.0)) throw Error(ErrorCode::EmptyArm, "psmd: treated arm has zero balancing weight");
    if (!(s0 > 0.0)) throw Error(ErrorCode::EmptyArm, "psmd: control arm has zero balancing weight");

    std::vector<BalanceRow> rows;
    const Matrix& X = sample.covariates();
    for (Index k = 0; k < X.cols(); ++k) {
        const Vector x = X.col(k);
        BalanceRow r;
        r.covariate = sample.covariate_names()[static_cast<std::size_t>(k)];
        r.mean_treated = a1.dot(x) / s1;
        r.mean_control = a0.dot(x) / s0;
        double v1 = 0.0, v0 = 0.0;
        for (Index i = 0; i < n; ++i) {
            v1 += a1(i) * (x(i) - r.mean_treated) * (x(i) - r.mean_treated);
            v0 += a0(i) * (x(i) - r.mean_control) * (x(i) - r.mean_control);
        }
        r.pooled_sd = std::sqrt((v1 + v0) / (s1 + s0));
        const double diff = std::abs(r.mean_treated - r.mean_control);
        if (r.pooled_sd < 1e-12) {
            if (diff > 1e-12)
                throw Error(ErrorCode::ZeroVariance, "psmd: covariate '" + r.covariate + "' has zero pooled SD");
            r.psmd = 0.0;
        } else {
            r.psmd = diff / r.pooled_sd;
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

ArmWeightSummary summarize_weights(const std::vector<double>& w) {
    ArmWeightSummary s;
    s.count = static_cast<Index>(w.size());
    if (w.empty()) return s;
    const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    s.min = *lo;
    s.max = *hi;
    double sum = 0.0, sq = 0.0;
    for (double v : w) {
        sum += v;
        sq += v * v;
    }
    const double m = sum / static_cast<double>(w.size());
    double ss = 0.0;
    for (double v : w) ss += (v - m) * (v - m);
    s.cv = m != 0.0 ? std::sqrt(ss / static_cast<double>(w.size())) / m : 0.0;
    s.ess = sq > 0.0 ? sum * sum / sq : 0.0;
    return s;
}

WeightSummary weight_summary(const SurveySample& sample, const UnitWeights& uw) {
    std::vector<double> t, c;
    for (Index i = 0; i < sample.size(); ++i) {
        if (sample.z()(i) == 1.0) t.push_back(uw.w1(i));
        else c.push_back(uw.w0(i));
    }
    return {summarize_weights(t), summarize_weights(c)};
}

std::string balance_csv(const std::vector<BalanceRow>& rows) {
    std::string out = "covariate,mean_treated,mean_control,pooled_sd,psmd\n";
    for (const auto& r : rows) {
        out += r.covariate + "," + format_number(r.mean_treated) + "," + format_number(r.mean_control) + "," +
               format_number(r.pooled_sd) + "," + format_number(r.psmd) + "\n";
    }
    return out;
}

nlohmann::ordered_json balance_json(const std::vector<BalanceRow>& rows) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        arr.push_back({{"covariate", r.covariate},
                       {"mean_treated", r.mean_treated},
                       {"mean_control", r.mean_control},
                       {"pooled_sd", r.pooled_sd},
                       {"psmd", r.psmd}});
    }
    return arr;
}

nlohmann::ordered_json weight_summary_json(const WeightSummary& ws) {
    const auto arm = [](const ArmWeightSummary& a) {
        return nlohmann::ordered_json{{"min", a.min}, {"max", a.max}, {"cv", a.cv}, {"ess", a.ess}, {"count", a.count}};
    };
    return {{"treated", arm(ws.treated)}, {"control", arm(ws.control)}};
}

} // namespace surveyps

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "surveyps/balancing.hpp"
#include "surveyps/m_estimation.hpp"
#include "surveyps/propensity.hpp"
#include "surveyps/sample.hpp"

namespace surveyps {

enum class SamplingKind { Multistage, TreatmentDependent };

struct SimConfig {
    int n_strata = 10;
    int clusters_per_stratum = 20;
    int units_per_cluster = 1000;
    double sigma_stratum = 0.35;
    double sigma_cluster = 0.15;

    // Treatment model: logit e = a0 + psi (a'X + a7 X1 X2).
    double a0 = std::log(35.0 / 80.0);
    double psi = 0.6;
    std::array<double, 6> a{std::log(1.1), std::log(1.25), std::log(1.5), std::log(1.75), std::log(2.0), std::log(2.5)};
    double a7 = std::log(1.1);

    // Outcome: Y = b0 + d0 (b'X + b7 X1 X2) + Z (d1 + d2 (b'X + b8 X1 X2)) + eps.
    double b0 = 0.0;
    std::array<double, 6> b{2.5, -2.0, 1.75, -1.25, 1.5, 1.1};
    double b7 = 2.5;
    double b8 = 1.5;
    double delta0 = 0.3;
    double delta1 = 1.0;
    double delta2 = 0.2;

    SamplingKind sampling = SamplingKind::Multistage;
    std::vector<int> allocations{170, 150, 140, 130, 120, 80, 70, 60, 50, 30};
    int clusters_sampled = 5;
    // logit p = c0 + delta_s Z + c'X
    double c0 = std::log(0.005 / 0.995);
    double delta_s = std::log(0.9);
    std::array<double, 6> c{std::log(1.05), std::log(1.10), std::log(1.15), std::log(1.10), std::log(1.05), std::log(1.10)};

    DesignMode design = DesignMode::Retrospective;
    double trunc_alpha = 0.0; // symmetric PS truncation applied at estimation
    int replications = 500;
    std::uint64_t seed = 20240611;
    int threads = 0; // 0: hardware concurrency

    void validate() const;
    Index population_size() const noexcept {
        return static_cast<Index>(n_strata) * clusters_per_stratum * units_per_cluster;
    }
};

// Good overlap: psi = 0.6, a0 = log(35/80). Poor overlap: psi = 2, a0 = log(20/80).
void set_overlap(SimConfig& cfg, bool good);

struct Population {
    Matrix x;  // N x 6
    Vector e;  // true propensity
    Vector z;
    Vector y0;
    Vector y1;
    Vector y;
    std::vector<int> stratum;
    std::vector<int> cluster; // global cluster index
    Index size() const noexcept { return z.size(); }
};

struct Truths {
    double pate = 0.0;
    double patt = 0.0;
    double patc = 0.0;
    double pato = 0.0;
    double of(Tilt tilt) const;
};

// One engine per (seed, replication, stage); replication order and thread
// count cannot change any stream.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t stage);

Population generate_superpopulation(const SimConfig& cfg, std::uint64_t seed);
Truths population_truths(const Population& pop);

// Covariate columns of a drawn sample: x1..x6 and the x1x2 interaction.
SurveySample draw_multistage_sample(const Population& pop, const SimConfig& cfg, std::mt19937_64& rng);
SurveySample draw_treatment_dependent_sample(const Population& pop, const SimConfig& cfg, std::mt19937_64& rng);
SurveySample draw_sample(const Population& pop, const SimConfig& cfg, std::mt19937_64& rng);

struct MenuItem {
    EstimatorKind kind = EstimatorKind::PSW;
    PsMode mode = PsMode::Weighted;
    EstimandSpec estimand;
    bool ps_correct = true;
    bool or_correct = true;

    // "psw:w:ate:cor:cor"
    std::string key() const;
    static MenuItem parse(const std::string& key);
    bool operator==(const MenuItem&) const = default;
};

struct ReplicateEstimate {
    bool ok = false;
    double tau = 0.0;
    double se = 0.0;
    std::string error; // code string when !ok
};

struct ScenarioMetrics {
    double truth = 0.0;
    double mean_estimate = 0.0;
    double relative_bias_pct = 0.0;
    double mc_variance = 0.0;
    double relative_efficiency = 0.0;
    double coverage = 0.0;
    double mean_se = 0.0;
    int successes = 0;
    int failures = 0;
};

// Metrics over the successful replications; relative efficiency is
// ref_variance / mc_variance.
ScenarioMetrics summarize(const std::vector<ReplicateEstimate>& estimates, double truth, double ref_variance);

struct Scenario {
    std::string name = "scenario";
    SimConfig config;
    std::vector<MenuItem> menu;
    MenuItem reference{EstimatorKind::PSW, PsMode::Weighted, EstimandSpec::combined(), true, true};
};

struct ScenarioResult {
    Scenario scenario;
    Truths truths;
    std::vector<std::vector<ReplicateEstimate>> estimates; // [menu item][replication]
    std::vector<ScenarioMetrics> metrics;
};

// Estimates every menu item on one sample.
std::vector<ReplicateEstimate> estimate_menu(const SurveySample& sample, const std::vector<MenuItem>& menu,
                                             double trunc_alpha);

ScenarioResult run_scenario(const Scenario& scenario);

// key = value lines, '#' comments. Unknown keys are config errors.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string scenario_csv(const ScenarioResult& result);

} // namespace surveyps

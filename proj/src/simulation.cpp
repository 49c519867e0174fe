#include "surveyps/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "surveyps/error.hpp"
#include "surveyps/estimators.hpp"
#include "surveyps/io.hpp"

namespace surveyps {

void SimConfig::validate() const {
    if (n_strata <= 0 || clusters_per_stratum <= 0 || units_per_cluster <= 0)
        throw Error(ErrorCode::Config, "simulation: population dimensions must be positive");
    if (!(sigma_stratum > 0.0) || !(sigma_cluster > 0.0))
        throw Error(ErrorCode::Config, "simulation: variance parameters must be positive");
    if (replications <= 0) throw Error(ErrorCode::Config, "simulation: replications must be positive");
    if (!(trunc_alpha >= 0.0 && trunc_alpha <= 0.1))
        throw Error(ErrorCode::Config, "simulation: trunc_alpha must lie in [0, 0.1]");
    if (sampling == SamplingKind::Multistage) {
        if (static_cast<int>(allocations.size()) != n_strata)
            throw Error(ErrorCode::Config, "simulation: need one allocation per stratum");
        if (clusters_sampled <= 0 || clusters_sampled > clusters_per_stratum)
            throw Error(ErrorCode::Config, "simulation: infeasible number of sampled clusters");
        for (int a : allocations) {
            if (a <= 0 || a % clusters_sampled != 0 || a / clusters_sampled > units_per_cluster)
                throw Error(ErrorCode::Config, "simulation: infeasible allocation " + std::to_string(a));
        }
    }
}

void set_overlap(SimConfig& cfg, bool good) {
    cfg.psi = good ? 0.6 : 2.0;
    cfg.a0 = good ? std::log(35.0 / 80.0) : std::log(20.0 / 80.0);
}

double Truths::of(Tilt tilt) const {
    switch (tilt) {
    case Tilt::Combined:
    case Tilt::Truncated: return pate;
    case Tilt::Treated: return patt;
    case Tilt::Control: return patc;
    case Tilt::Overlap: return pato;
    }
    return pate;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t stage) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replication), static_cast<std::uint32_t>(replication >> 32),
                      static_cast<std::uint32_t>(stage)};
    return std::mt19937_64(seq);
}

namespace {

constexpr std::uint64_t kPopulationStream = 0xFFFFFFFFFFFFull;

double linear_part(const std::array<double, 6>& coef, const Matrix& x, Index i) {
    double s = 0.0;
    for (int l = 0; l < 6; ++l) s += coef[static_cast<std::size_t>(l)] * x(i, l);
    return s;
}

SurveySample make_sample(const Population& pop, const std::vector<Index>& rows, const std::vector<double>& w,
                         DesignMode design) {
    const Index n = static_cast<Index>(rows.size());
    Matrix x(n, 7);
    Vector z(n), y(n), sw(n);
    for (Index k = 0; k < n; ++k) {
        const Index i = rows[static_cast<std::size_t>(k)];
        x.row(k).head(6) = pop.x.row(i);
        x(k, 6) = pop.x(i, 0) * pop.x(i, 1);
        z(k) = pop.z(i);
        y(k) = pop.y(i);
        sw(k) = w[static_cast<std::size_t>(k)];
    }
    return SurveySample(std::move(x), {"x1", "x2", "x3", "x4", "x5", "x6", "x1x2"}, std::move(z), std::move(y),
                        std::move(sw), design);
}

// First k entries of a uniformly shuffled 0..n-1, in drawn order.
std::vector<int> srs(int n, int k, std::mt19937_64& rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    for (int j = 0; j < k; ++j) {
        std::uniform_int_distribution<int> pick(j, n - 1);
        std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    idx.resize(static_cast<std::size_t>(k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace

Population generate_superpopulation(const SimConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng = make_stream(seed, kPopulationStream, 0);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;

    const Index N = cfg.population_size();
    Population pop;
    pop.x.resize(N, 6);
    pop.e.resize(N);
    pop.z.resize(N);
    pop.y0.resize(N);
    pop.y1.resize(N);
    pop.y.resize(N);
    pop.stratum.resize(static_cast<std::size_t>(N));
    pop.cluster.resize(static_cast<std::size_t>(N));

    Index i = 0;
    for (int s = 0; s < cfg.n_strata; ++s) {
        std::array<double, 6> nu_s{};
        for (double& v : nu_s) v = cfg.sigma_stratum * nd(rng);
        for (int c = 0; c < cfg.clusters_per_stratum; ++c) {
            std::array<double, 6> nu_c{};
            for (double& v : nu_c) v = cfg.sigma_cluster * nd(rng);
            const int gc = s * cfg.clusters_per_stratum + c;
            for (int u = 0; u < cfg.units_per_cluster; ++u, ++i) {
                for (int l = 0; l < 6; ++l)
                    pop.x(i, l) = nu_s[static_cast<std::size_t>(l)] + nu_c[static_cast<std::size_t>(l)] + nd(rng);
                pop.stratum[static_cast<std::size_t>(i)] = s;
                pop.cluster[static_cast<std::size_t>(i)] = gc;
            }
        }
    }
    for (i = 0; i < N; ++i) {
        const double x12 = pop.x(i, 0) * pop.x(i, 1);
        pop.e(i) = expit(cfg.a0 + cfg.psi * (linear_part(cfg.a, pop.x, i) + cfg.a7 * x12));
        pop.z(i) = ud(rng) < pop.e(i) ? 1.0 : 0.0;
        const double bx = linear_part(cfg.b, pop.x, i);
        const double eps = nd(rng);
        pop.y0(i) = cfg.b0 + cfg.delta0 * (bx + cfg.b7 * x12) + eps;
        pop.y1(i) = pop.y0(i) + cfg.delta1 + cfg.delta2 * (bx + cfg.b8 * x12);
        pop.y(i) = pop.z(i) == 1.0 ? pop.y1(i) : pop.y0(i);
    }
    return pop;
}

Truths population_truths(const Population& pop) {
    double all = 0.0, tr = 0.0, ctl = 0.0, ov = 0.0, ovw = 0.0;
    Index nt = 0, nc = 0;
    for (Index i = 0; i < pop.size(); ++i) {
        const double d = pop.y1(i) - pop.y0(i);
        all += d;
        if (pop.z(i) == 1.0) {
            tr += d;
            ++nt;
        } else {
            ctl += d;
            ++nc;
        }
        const double h = pop.e(i) * (1.0 - pop.e(i));
        ov += h * d;
        ovw += h;
    }
    Truths t;
    t.pate = all / static_cast<double>(pop.size());
    t.patt = nt > 0 ? tr / static_cast<double>(nt) : 0.0;
    t.patc = nc > 0 ? ctl / static_cast<double>(nc) : 0.0;
    t.pato = ov / ovw;
    return t;
}

SurveySample draw_multistage_sample(const Population& pop, const SimConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    if (pop.size() != cfg.population_size()) throw Error(ErrorCode::Config, "simulation: population does not match config");
    std::vector<Index> rows;
    std::vector<double> w;
    for (int s = 0; s < cfg.n_strata; ++s) {
        const int per_cluster = cfg.allocations[static_cast<std::size_t>(s)] / cfg.clusters_sampled;
        const double weight = (static_cast<double>(cfg.clusters_per_stratum) / cfg.clusters_sampled) *
                              (static_cast<double>(cfg.units_per_cluster) / per_cluster);
        for (int c : srs(cfg.clusters_per_stratum, cfg.clusters_sampled, rng)) {
            const Index base = (static_cast<Index>(s) * cfg.clusters_per_stratum + c) * cfg.units_per_cluster;
            for (int u : srs(cfg.units_per_cluster, per_cluster, rng)) {
                rows.push_back(base + u);
                w.push_back(weight);
            }
        }
    }
    return make_sample(pop, rows, w, cfg.design);
}

SurveySample draw_treatment_dependent_sample(const Population& pop, const SimConfig& cfg, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ud;
    std::vector<Index> rows;
    std::vector<double> w;
    for (Index i = 0; i < pop.size(); ++i) {
        const double p = expit(cfg.c0 + cfg.delta_s * pop.z(i) + linear_part(cfg.c, pop.x, i));
        if (ud(rng) < p) {
            rows.push_back(i);
            w.push_back(1.0 / p);
        }
    }
    return make_sample(pop, rows, w, cfg.design);
}

SurveySample draw_sample(const Population& pop, const SimConfig& cfg, std::mt19937_64& rng) {
    return cfg.sampling == SamplingKind::Multistage ? draw_multistage_sample(pop, cfg, rng)
                                                    : draw_treatment_dependent_sample(pop, cfg, rng);
}

std::string MenuItem::key() const {
    static const char* modes[] = {"u", "w", "c", "cw"};
    std::string k = std::string(estimator_key(kind)) + ":" + modes[static_cast<int>(mode)] + ":" +
                    std::string(estimand.key());
    if (estimand.tilt == Tilt::Truncated) k += "=" + format_number(estimand.alpha);
    return k + ":" + (ps_correct ? "cor" : "mis") + ":" + (or_correct ? "cor" : "mis");
}

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) out.push_back(part);
    return out;
}

PsMode parse_mode(const std::string& s) {
    if (s == "u") return PsMode::Unweighted;
    if (s == "w") return PsMode::Weighted;
    if (s == "c") return PsMode::Covariate;
    if (s == "cw") return PsMode::CovariateWeighted;
    throw Error(ErrorCode::Config, "unknown ps mode '" + s + "'");
}

bool parse_spec_flag(const std::string& s) {
    if (s == "cor") return true;
    if (s == "mis") return false;
    throw Error(ErrorCode::Config, "model flag must be cor or mis, got '" + s + "'");
}

} // namespace

MenuItem MenuItem::parse(const std::string& key) {
    const auto parts = split_on(key, ':');
    if (parts.size() != 5)
        throw Error(ErrorCode::Config, "menu item '" + key + "' must be estimator:mode:estimand:ps:or");
    MenuItem m;
    m.kind = parse_estimator(parts[0]);
    m.mode = parse_mode(parts[1]);
    const auto eq = parts[2].find('=');
    if (eq == std::string::npos) {
        m.estimand = parse_estimand(parts[2], 0.0);
    } else {
        double alpha = 0.0;
        try {
            alpha = std::stod(parts[2].substr(eq + 1));
        } catch (const std::exception&) {
            throw Error(ErrorCode::Config, "menu item '" + key + "' has a bad truncation alpha");
        }
        m.estimand = parse_estimand(parts[2].substr(0, eq), alpha);
    }
    m.ps_correct = parse_spec_flag(parts[3]);
    m.or_correct = parse_spec_flag(parts[4]);
    return m;
}

ScenarioMetrics summarize(const std::vector<ReplicateEstimate>& estimates, double truth, double ref_variance) {
    ScenarioMetrics m;
    m.truth = truth;
    double sum = 0.0, se_sum = 0.0;
    int covered = 0;
    for (const auto& e : estimates) {
        if (!e.ok) {
            ++m.failures;
            continue;
        }
        ++m.successes;
        sum += e.tau;
        se_sum += e.se;
        if (std::abs(e.tau - truth) <= 1.96 * e.se) ++covered;
    }
    if (m.successes == 0) return m;
    const double k = m.successes;
    m.mean_estimate = sum / k;
    m.mean_se = se_sum / k;
    m.relative_bias_pct = 100.0 * (m.mean_estimate - truth) / truth;
    double ss = 0.0;
    for (const auto& e : estimates)
        if (e.ok) ss += (e.tau - m.mean_estimate) * (e.tau - m.mean_estimate);
    m.mc_variance = m.successes > 1 ? ss / (k - 1.0) : 0.0;
    m.relative_efficiency = m.mc_variance > 0.0 ? ref_variance / m.mc_variance : 0.0;
    m.coverage = covered / k;
    return m;
}

std::vector<ReplicateEstimate> estimate_menu(const SurveySample& sample, const std::vector<MenuItem>& menu,
                                             double trunc_alpha) {
    const std::vector<std::size_t> correct{0, 1, 2, 3, 4, 5, 6};
    const std::vector<std::size_t> wrong{0, 1, 2, 3, 4, 5};
    std::map<std::pair<int, bool>, PsFit> ps_cache;
    std::map<std::pair<int, bool>, Error> ps_error;

    std::vector<ReplicateEstimate> out;
    out.reserve(menu.size());
    for (const MenuItem& item : menu) {
        ReplicateEstimate r;
        try {
            const auto key = std::make_pair(static_cast<int>(item.mode), item.ps_correct);
            if (const auto failed = ps_error.find(key); failed != ps_error.end()) throw failed->second;
            auto it = ps_cache.find(key);
            if (it == ps_cache.end()) {
                PsSpec spec;
                spec.mode = item.mode;
                spec.covariate_columns = item.ps_correct ? correct : wrong;
                spec.trunc_alpha = trunc_alpha;
                try {
                    it = ps_cache.emplace(key, fit_propensity(sample, spec)).first;
                } catch (const Error& e) {
                    ps_error.emplace(key, e);
                    throw;
                }
            }
            const OutcomeSpec os{item.or_correct ? correct : wrong, true};
            const EstimateResult e = estimate(sample, it->second, item.estimand, item.kind, os);
            r.ok = std::isfinite(e.tau) && std::isfinite(e.se);
            r.tau = e.tau;
            r.se = e.se;
            if (!r.ok) r.error = "non-finite estimate";
        } catch (const Error& e) {
            r.ok = false;
            r.error = std::string(code_string(e.code()));
        }
        out.push_back(std::move(r));
    }
    return out;
}

ScenarioResult run_scenario(const Scenario& scenario) {
    const SimConfig& cfg = scenario.config;
    cfg.validate();
    if (scenario.menu.empty()) throw Error(ErrorCode::Config, "scenario: empty estimator menu");

    ScenarioResult res;
    res.scenario = scenario;
    std::vector<MenuItem> items = scenario.menu;
    auto ref_it = std::find(items.begin(), items.end(), scenario.reference);
    if (ref_it == items.end()) {
        items.push_back(scenario.reference);
        ref_it = items.end() - 1;
    }
    const std::size_t ref_index = static_cast<std::size_t>(ref_it - items.begin());

    const Population pop = generate_superpopulation(cfg, cfg.seed);
    res.truths = population_truths(pop);

    const int reps = cfg.replications;
    std::vector<std::vector<ReplicateEstimate>> by_rep(static_cast<std::size_t>(reps));
    std::atomic<int> next{0};
    const auto worker = [&] {
        for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) {
            std::mt19937_64 rng = make_stream(cfg.seed, static_cast<std::uint64_t>(r), 1);
            try {
                const SurveySample s = draw_sample(pop, cfg, rng);
                by_rep[static_cast<std::size_t>(r)] = estimate_menu(s, items, cfg.trunc_alpha);
            } catch (const Error& e) {
                ReplicateEstimate fail;
                fail.error = std::string(code_string(e.code()));
                by_rep[static_cast<std::size_t>(r)].assign(items.size(), fail);
            }
        }
    };
    int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, reps);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    res.estimates.assign(items.size(), {});
    for (std::size_t k = 0; k < items.size(); ++k) {
        res.estimates[k].reserve(static_cast<std::size_t>(reps));
        for (int r = 0; r < reps; ++r) res.estimates[k].push_back(by_rep[static_cast<std::size_t>(r)][k]);
    }
    const ScenarioMetrics ref =
        summarize(res.estimates[ref_index], res.truths.of(items[ref_index].estimand.tilt), 0.0);
    for (std::size_t k = 0; k < items.size(); ++k)
        res.metrics.push_back(summarize(res.estimates[k], res.truths.of(items[k].estimand.tilt), ref.mc_variance));
    res.scenario.menu = std::move(items);
    return res;
}

namespace {

std::string trim_copy(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T number(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        T out;
        if constexpr (std::is_same_v<T, double>) out = std::stod(v, &used);
        else if constexpr (std::is_same_v<T, int>) out = std::stoi(v, &used);
        else out = static_cast<T>(std::stoull(v, &used));
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw Error(ErrorCode::Config, "scenario: bad value '" + v + "' for key '" + key + "'");
    }
}

} // namespace

Scenario parse_scenario(const std::string& text) {
    Scenario sc;
    SimConfig& c = sc.config;
    bool menu_given = false;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim_copy(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::Config, "scenario: line " + std::to_string(lineno) + " is not key = value");
        const std::string key = trim_copy(line.substr(0, eq));
        const std::string v = trim_copy(line.substr(eq + 1));
        if (key == "name") sc.name = v;
        else if (key == "overlap") {
            if (v != "good" && v != "poor") throw Error(ErrorCode::Config, "scenario: overlap must be good or poor");
            set_overlap(c, v == "good");
        } else if (key == "psi") c.psi = number<double>(key, v);
        else if (key == "a0") c.a0 = number<double>(key, v);
        else if (key == "strata") c.n_strata = number<int>(key, v);
        else if (key == "clusters_per_stratum") c.clusters_per_stratum = number<int>(key, v);
        else if (key == "units_per_cluster") c.units_per_cluster = number<int>(key, v);
        else if (key == "clusters_sampled") c.clusters_sampled = number<int>(key, v);
        else if (key == "sampling") {
            if (v == "multistage") c.sampling = SamplingKind::Multistage;
            else if (v == "treatment_dependent") c.sampling = SamplingKind::TreatmentDependent;
            else throw Error(ErrorCode::Config, "scenario: unknown sampling '" + v + "'");
        } else if (key == "allocations") {
            c.allocations.clear();
            for (const auto& a : split_on(v, ',')) c.allocations.push_back(number<int>(key, trim_copy(a)));
        } else if (key == "design") {
            if (v == "retro") c.design = DesignMode::Retrospective;
            else if (v == "pro") c.design = DesignMode::Prospective;
            else throw Error(ErrorCode::Config, "scenario: design must be retro or pro");
        } else if (key == "delta1") c.delta1 = number<double>(key, v);
        else if (key == "delta2") c.delta2 = number<double>(key, v);
        else if (key == "b8") c.b8 = number<double>(key, v);
        else if (key == "trunc_alpha") c.trunc_alpha = number<double>(key, v);
        else if (key == "replications") c.replications = number<int>(key, v);
        else if (key == "seed") c.seed = number<std::uint64_t>(key, v);
        else if (key == "threads") c.threads = number<int>(key, v);
        else if (key == "estimator") {
            if (!menu_given) sc.menu.clear();
            menu_given = true;
            sc.menu.push_back(MenuItem::parse(v));
        } else if (key == "reference") sc.reference = MenuItem::parse(v);
        else throw Error(ErrorCode::Config, "scenario: unknown key '" + key + "'");
    }
    c.validate();
    if (sc.menu.empty()) throw Error(ErrorCode::Config, "scenario: no estimator lines");
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::Config, "scenario: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_scenario(ss.str());
}

std::string scenario_csv(const ScenarioResult& result) {
    static const char* modes[] = {"U.PS", "W.PS", "C.PS", "CW.PS"};
    std::string out = "scenario,estimand,estimator,ps_mode,ps_model,or_model,truth,mean_estimate,relative_bias_pct,"
                      "relative_efficiency,coverage,mc_variance,mean_se,successes,failures\n";
    const auto& menu = result.scenario.menu;
    for (std::size_t k = 0; k < menu.size(); ++k) {
        const MenuItem& m = menu[k];
        const ScenarioMetrics& s = result.metrics[k];
        std::string estimand(m.estimand.key());
        if (m.estimand.tilt == Tilt::Truncated) estimand += "=" + format_number(m.estimand.alpha);
        std::string kind(estimator_key(m.kind));
        std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char ch) { return std::toupper(ch); });
        out += result.scenario.name + "," + estimand + "," + kind + "," + modes[static_cast<int>(m.mode)] + "," +
               (m.ps_correct ? "Cor" : "Mis") + "," + (m.kind == EstimatorKind::PSW ? "-" : (m.or_correct ? "Cor" : "Mis")) +
               "," + format_number(s.truth) + "," + format_number(s.mean_estimate) + "," +
               format_number(s.relative_bias_pct) + "," + format_number(s.relative_efficiency) + "," +
               format_number(s.coverage) + "," + format_number(s.mc_variance) + "," + format_number(s.mean_se) + "," +
               std::to_string(s.successes) + "," + std::to_string(s.failures) + "\n";
    }
    return out;
}

} // namespace surveyps

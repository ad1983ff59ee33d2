#include "survblend/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "survblend/rng.hpp"
#include "survblend/specfun.hpp"
#include "survblend/threads.hpp"

namespace survblend::sim {

namespace {

// Stream-id tags; every random draw in a scenario run hangs off one of
// these, so method subsets and thread counts never change shared results.
constexpr std::uint64_t kTagTrainLarge = 1;
constexpr std::uint64_t kTagTestLarge = 2;
constexpr std::uint64_t kTagPit = 3;
constexpr std::uint64_t kTagTrainSmall = 4;
constexpr std::uint64_t kTagTestSmall = 5;

} // namespace

ScenarioConfig scenario_config(int id) {
    if (id < 1 || id > 16) {
        throw std::invalid_argument("scenario id must lie in 1..16");
    }
    ScenarioConfig cfg;
    cfg.id = id;
    const int block = (id - 1) % 8;  // position within the large/small block
    cfg.n_train = id <= 8 ? 1000 : 20;
    cfg.balanced = block < 4;
    cfg.biased = (block % 4) >= 2;
    const bool large_ens1 = (block % 2) == 0;
    cfg.n1 = large_ens1 ? 100 : 20;
    cfg.n2 = 20;
    if (cfg.balanced) {
        cfg.tau0 = cfg.tau1 = cfg.tau2 = 0.4;
    } else {
        cfg.tau0 = 0.53;
        cfg.tau1 = 0.4;
        cfg.tau2 = 0.2;
    }
    cfg.bias_shift = cfg.biased ? -0.5 : 0.0;
    return cfg;
}

ScenarioConfig apply_overrides(ScenarioConfig cfg,
                               const std::map<std::string, std::string>& kv) {
    auto as_int = [](const std::string& v) { return std::stoi(v); };
    auto as_double = [](const std::string& v) { return std::stod(v); };
    auto as_bool = [](const std::string& v) {
        if (v == "1" || v == "true" || v == "yes") return true;
        if (v == "0" || v == "false" || v == "no") return false;
        throw std::invalid_argument("config: expected a boolean, got '" + v + "'");
    };

    bool taus_explicit = false;
    bool shift_explicit = false;
    for (const auto& [key, value] : kv) {
        if (key == "n_train") cfg.n_train = as_int(value);
        else if (key == "balanced") cfg.balanced = as_bool(value);
        else if (key == "biased") cfg.biased = as_bool(value);
        else if (key == "n1") cfg.n1 = as_int(value);
        else if (key == "n2") cfg.n2 = as_int(value);
        else if (key == "tau0") { cfg.tau0 = as_double(value); taus_explicit = true; }
        else if (key == "tau1") { cfg.tau1 = as_double(value); taus_explicit = true; }
        else if (key == "tau2") { cfg.tau2 = as_double(value); taus_explicit = true; }
        else if (key == "xi0") cfg.xi0 = as_double(value);
        else if (key == "lead1") cfg.lead1 = as_double(value);
        else if (key == "lead2") cfg.lead2 = as_double(value);
        else if (key == "bias_shift") { cfg.bias_shift = as_double(value); shift_explicit = true; }
        else if (key == "truth_horizon") cfg.truth_horizon = as_double(value);
        else if (key == "n_test") cfg.n_test = as_int(value);
        else if (key == "n_replications") cfg.n_replications = as_int(value);
        else if (key == "t_max") cfg.t_max = as_int(value);
        else if (key == "randomized_censored_pit") cfg.randomized_censored_pit = as_bool(value);
        else throw std::invalid_argument("config: unknown scenario key '" + key + "'");
    }

    // balanced/biased switches re-derive their dependent fields unless the
    // user pinned those explicitly
    if (kv.count("balanced") && !taus_explicit) {
        if (cfg.balanced) {
            cfg.tau0 = cfg.tau1 = cfg.tau2 = 0.4;
        } else {
            cfg.tau0 = 0.53;
            cfg.tau1 = 0.4;
            cfg.tau2 = 0.2;
        }
    }
    if (kv.count("biased") && !shift_explicit) {
        cfg.bias_shift = cfg.biased ? -0.5 : 0.0;
    }
    return cfg;
}

SimulatedYear simulate_year(const ScenarioConfig& cfg, std::uint64_t seed,
                            std::uint64_t stream) {
    CounterRng rng(seed, stream);
    SimulatedYear y;
    y.x1 = rng.normal(0.0, cfg.tau1);
    y.x2 = rng.normal(0.0, cfg.tau2);

    const double t = rng.lognormal(cfg.xi0 + y.x1 + y.x2, cfg.tau0);
    if (t > cfg.truth_horizon) {
        y.truth = {cfg.truth_horizon, false};
    } else {
        y.truth = {t, true};
    }

    const double sd1 = std::hypot(cfg.tau0, cfg.tau2);
    const double sd2 = std::hypot(cfg.tau0, cfg.tau1);
    y.ens1.source_id = "source1";
    y.ens1.max_lead_time = cfg.lead1;
    y.ens1.members.reserve(static_cast<std::size_t>(cfg.n1));
    for (int j = 0; j < cfg.n1; ++j) {
        const double m = rng.lognormal(cfg.xi0 + y.x1, sd1);
        y.ens1.members.push_back(m > cfg.lead1 ? CensoredTime{cfg.lead1, false}
                                               : CensoredTime{m, true});
    }
    y.ens2.source_id = "source2";
    y.ens2.max_lead_time = cfg.lead2;
    y.ens2.members.reserve(static_cast<std::size_t>(cfg.n2));
    for (int j = 0; j < cfg.n2; ++j) {
        const double m = rng.lognormal(cfg.xi0 + y.x2 + cfg.bias_shift, sd2);
        y.ens2.members.push_back(m > cfg.lead2 ? CensoredTime{cfg.lead2, false}
                                               : CensoredTime{m, true});
    }
    return y;
}

const std::vector<MethodSpec>& table1_methods() {
    static const std::vector<MethodSpec> methods = [] {
        using Kind = MethodSpec::Kind;
        auto combo = [](CombineMethod cm, Restriction r = Restriction::Full) {
            ComboParams p;
            p.method = cm;
            p.restriction = r;
            return p;
        };
        std::vector<MethodSpec> m;
        m.push_back({"source1_ml", Kind::SourceMl, 1, {}, Estimator::ML});
        m.push_back({"source2_ml", Kind::SourceMl, 2, {}, Estimator::ML});
        m.push_back({"source1_km", Kind::SourceKm, 1, {}, Estimator::ML});
        m.push_back({"source2_km", Kind::SourceKm, 2, {}, Estimator::ML});
        m.push_back({"lp", Kind::Combination, 0, combo(CombineMethod::LP), Estimator::ML});
        m.push_back({"bp3", Kind::Combination, 0, combo(CombineMethod::BP), Estimator::ML});
        m.push_back({"gp3", Kind::Combination, 0, combo(CombineMethod::GP), Estimator::ML});
        m.push_back({"hb", Kind::Combination, 0, combo(CombineMethod::HB), Estimator::MinIbs});
        m.push_back({"lp_ibs", Kind::Combination, 0, combo(CombineMethod::LP), Estimator::MinIbs});
        m.push_back({"bp_ibs", Kind::Combination, 0, combo(CombineMethod::BP), Estimator::MinIbs});
        m.push_back({"gp_ibs", Kind::Combination, 0, combo(CombineMethod::GP), Estimator::MinIbs});
        m.push_back({"bp2", Kind::Combination, 0,
                     combo(CombineMethod::BP, Restriction::FixAlphaEqBeta), Estimator::ML});
        m.push_back({"gp1", Kind::Combination, 0,
                     combo(CombineMethod::GP, Restriction::FixMeanVar), Estimator::ML});
        m.push_back({"gp2", Kind::Combination, 0,
                     combo(CombineMethod::GP, Restriction::FixMean), Estimator::ML});
        m.push_back({"gp3t", Kind::Combination, 0, combo(CombineMethod::GPt), Estimator::ML});
        m.push_back({"lp0", Kind::Combination, 0,
                     combo(CombineMethod::LP0, Restriction::FixedEqualWeights), Estimator::ML});
        m.push_back({"merge", Kind::Combination, 0, combo(CombineMethod::Merge), Estimator::ML});
        return m;
    }();
    return methods;
}

const MethodSpec& method_by_name(const std::string& name) {
    for (const auto& m : table1_methods()) {
        if (m.name == name) return m;
    }
    throw std::invalid_argument("unknown method '" + name + "'");
}

namespace {

struct FittedYear {
    SimulatedYear sim;
    SurvivalCurve fit1, fit2;  // invalid when the censored ML fit failed
    SurvivalCurve km1, km2;
};

FittedYear fit_year(SimulatedYear sy) {
    FittedYear fy;
    fy.km1 = SurvivalCurve(km_estimate(sy.ens1));
    fy.km2 = SurvivalCurve(km_estimate(sy.ens2));
    try {
        fy.fit1 = SurvivalCurve(lognormal_ml_fit(sy.ens1));
    } catch (const DegenerateFitError&) {
    } catch (const specfun::NonConvergenceError&) {
    }
    try {
        fy.fit2 = SurvivalCurve(lognormal_ml_fit(sy.ens2));
    } catch (const DegenerateFitError&) {
    } catch (const specfun::NonConvergenceError&) {
    }
    fy.sim = std::move(sy);
    return fy;
}

bool needs_estimation(const MethodSpec& m) {
    if (m.kind != MethodSpec::Kind::Combination) return false;
    return m.combo.method != CombineMethod::Merge;
}

bool needs_training_fits(std::span<const MethodSpec> methods) {
    for (const auto& m : methods) {
        if (needs_estimation(m) && m.combo.method != CombineMethod::LP0) return true;
    }
    return false;
}

TrainingSet build_training_set(std::span<const FittedYear> years, int* dropped) {
    TrainingSet train;
    train.pairs.reserve(years.size());
    int skip = 0;
    for (const auto& y : years) {
        if (!y.fit1.valid() || !y.fit2.valid()) {
            ++skip;
            continue;
        }
        TrainingPair pair;
        pair.ensembles = {y.sim.ens1, y.sim.ens2};
        pair.realized = y.sim.truth;
        pair.fitted = {y.fit1, y.fit2};
        train.pairs.push_back(std::move(pair));
    }
    if (dropped != nullptr) *dropped = skip;
    return train;
}

std::optional<ComboParams> estimate_method(const MethodSpec& m, const TrainingSet& train,
                                           int t_max) {
    try {
        if (m.combo.method == CombineMethod::Merge) {
            ComboParams p;
            p.method = CombineMethod::Merge;
            return p;
        }
        if (m.estimator == Estimator::ML || m.combo.method == CombineMethod::LP0) {
            return ml_estimate(m.combo, train);
        }
        return minibs_estimate(m.combo, train, t_max);
    } catch (const DegenerateTrainingError&) {
    } catch (const specfun::NonConvergenceError&) {
    } catch (const NoDensityError&) {
    }
    return std::nullopt;
}

struct YearScore {
    double ibs_value = 0.0;
    std::optional<double> pit_value;
};

std::optional<YearScore> score_year(const MethodSpec& m, const ComboParams* params,
                                    const FittedYear& y, const ScenarioConfig& cfg,
                                    CounterRng& pit_rng) {
    SurvivalCurve curve;
    switch (m.kind) {
        case MethodSpec::Kind::SourceMl:
            curve = m.source == 1 ? y.fit1 : y.fit2;
            if (!curve.valid()) return std::nullopt;
            break;
        case MethodSpec::Kind::SourceKm:
            curve = m.source == 1 ? y.km1 : y.km2;
            break;
        case MethodSpec::Kind::Combination:
            if (m.combo.method == CombineMethod::Merge) {
                try {
                    curve = SurvivalCurve(merge_combine(y.sim.ens1, y.sim.ens2));
                } catch (const DegenerateFitError&) {
                    return std::nullopt;
                } catch (const specfun::NonConvergenceError&) {
                    return std::nullopt;
                }
            } else if (m.combo.method == CombineMethod::HB) {
                if (params == nullptr) return std::nullopt;
                curve = SurvivalCurve(hb_combine(y.sim.ens1, y.sim.ens2, params->omega));
            } else {
                if (params == nullptr || !y.fit1.valid() || !y.fit2.valid()) {
                    return std::nullopt;
                }
                curve = combine_with(*params, y.fit1, y.fit2);
            }
            break;
    }

    YearScore score;
    score.ibs_value = ibs(curve, y.sim.truth, cfg.t_max);
    if (y.sim.truth.event) {
        score.pit_value = pit(curve, y.sim.truth, pit_rng);
    } else if (cfg.randomized_censored_pit) {
        score.pit_value = censored_pit(curve, y.sim.truth, pit_rng);
    }
    return score;
}

MethodResult reduce_scores(const MethodSpec& m,
                           const std::vector<std::optional<YearScore>>& scores,
                           int extra_failures) {
    std::vector<double> ibs_values;
    std::vector<double> pit_values;
    ibs_values.reserve(scores.size());
    int failures = extra_failures;
    for (const auto& s : scores) {
        if (!s) {
            ++failures;
            continue;
        }
        ibs_values.push_back(s->ibs_value);
        if (s->pit_value) pit_values.push_back(*s->pit_value);
    }
    MethodResult result;
    result.method = m.name;
    result.report = make_report(ibs_values, std::move(pit_values));
    result.failures = failures;
    return result;
}

} // namespace

ScenarioResult run_scenario_large(const ScenarioConfig& cfg, std::uint64_t seed,
                                  std::span<const MethodSpec> methods, int threads) {
    if (cfg.id < 1 || cfg.id > 8) {
        throw std::invalid_argument("run_scenario_large: scenario id must lie in 1..8");
    }
    const std::uint64_t sid = static_cast<std::uint64_t>(cfg.id);

    // Training years and one estimation per method.
    std::vector<std::optional<ComboParams>> estimated(methods.size());
    std::vector<bool> estimation_failed(methods.size(), false);
    if (needs_training_fits(methods)) {
        std::vector<FittedYear> train_years(static_cast<std::size_t>(cfg.n_train));
        parallel_chunks(train_years.size(), threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) {
                train_years[i] =
                    fit_year(simulate_year(cfg, seed, derive_stream({kTagTrainLarge, sid, i})));
            }
        });
        const TrainingSet train = build_training_set(train_years, nullptr);
        for (std::size_t m = 0; m < methods.size(); ++m) {
            if (!needs_estimation(methods[m])) continue;
            estimated[m] = estimate_method(methods[m], train, cfg.t_max);
            estimation_failed[m] = !estimated[m].has_value();
        }
    } else {
        // only LP0 can appear here: fixed weights, nothing to estimate
        for (std::size_t m = 0; m < methods.size(); ++m) {
            if (needs_estimation(methods[m]) &&
                methods[m].combo.method == CombineMethod::LP0) {
                ComboParams p;
                p.method = CombineMethod::LP0;
                p.restriction = Restriction::FixedEqualWeights;
                estimated[m] = p;
            }
        }
    }

    // Test years.
    std::vector<FittedYear> test_years(static_cast<std::size_t>(cfg.n_test));
    parallel_chunks(test_years.size(), threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            test_years[i] =
                fit_year(simulate_year(cfg, seed, derive_stream({kTagTestLarge, sid, i})));
        }
    });

    ScenarioResult result;
    result.scenario_id = cfg.id;
    result.methods.resize(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        const MethodSpec& spec = methods[m];
        std::vector<std::optional<YearScore>> scores(test_years.size());
        if (!(needs_estimation(spec) && estimation_failed[m])) {
            const ComboParams* params = estimated[m] ? &*estimated[m] : nullptr;
            parallel_chunks(test_years.size(), threads, [&](std::size_t b, std::size_t e) {
                for (std::size_t y = b; y < e; ++y) {
                    CounterRng pit_rng(seed, derive_stream({kTagPit, sid, m, y}));
                    scores[y] = score_year(spec, params, test_years[y], cfg, pit_rng);
                }
            });
        }
        result.methods[m] = reduce_scores(spec, scores, 0);
        result.methods[m].params = estimated[m];
    }
    return result;
}

ScenarioResult run_scenario_small(const ScenarioConfig& cfg, std::uint64_t seed,
                                  std::span<const MethodSpec> methods, int threads) {
    if (cfg.id < 9 || cfg.id > 16) {
        throw std::invalid_argument("run_scenario_small: scenario id must lie in 9..16");
    }
    const std::uint64_t sid = static_cast<std::uint64_t>(cfg.id);
    const std::size_t reps = static_cast<std::size_t>(cfg.n_replications);
    const bool train_fits = needs_training_fits(methods);

    // scores[m][rep]
    std::vector<std::vector<std::optional<YearScore>>> scores(
        methods.size(), std::vector<std::optional<YearScore>>(reps));

    parallel_chunks(reps, threads, [&](std::size_t b, std::size_t e) {
        std::vector<FittedYear> train_years(static_cast<std::size_t>(cfg.n_train));
        for (std::size_t r = b; r < e; ++r) {
            TrainingSet train;
            if (train_fits) {
                for (std::size_t i = 0; i < train_years.size(); ++i) {
                    train_years[i] = fit_year(
                        simulate_year(cfg, seed, derive_stream({kTagTrainSmall, sid, r, i})));
                }
                train = build_training_set(train_years, nullptr);
            }
            const FittedYear test_year =
                fit_year(simulate_year(cfg, seed, derive_stream({kTagTestSmall, sid, r})));

            for (std::size_t m = 0; m < methods.size(); ++m) {
                const MethodSpec& spec = methods[m];
                std::optional<ComboParams> params;
                if (needs_estimation(spec)) {
                    if (spec.combo.method == CombineMethod::LP0) {
                        ComboParams p;
                        p.method = CombineMethod::LP0;
                        p.restriction = Restriction::FixedEqualWeights;
                        params = p;
                    } else {
                        params = estimate_method(spec, train, cfg.t_max);
                        if (!params) continue;  // replication excluded for this method
                    }
                }
                CounterRng pit_rng(seed, derive_stream({kTagPit, sid, m, r}));
                scores[m][r] = score_year(spec, params ? &*params : nullptr, test_year, cfg,
                                          pit_rng);
            }
        }
    });

    ScenarioResult result;
    result.scenario_id = cfg.id;
    result.methods.resize(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        result.methods[m] = reduce_scores(methods[m], scores[m], 0);
    }
    return result;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed,
                            std::span<const MethodSpec> methods, int threads) {
    return cfg.id <= 8 ? run_scenario_large(cfg, seed, methods, threads)
                       : run_scenario_small(cfg, seed, methods, threads);
}

} // namespace survblend::sim

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survblend/estimate.hpp"
#include "survblend/evaluate.hpp"

namespace survblend::sim {

/// Full parameterization of one simulation scenario. Defaults follow the
/// scenario table; any field can be overridden from a config file.
struct ScenarioConfig {
    int id = 1;  // 1..16; ids 1..8 use the large-n protocol, 9..16 the small-n one
    int n_train = 1000;
    bool balanced = true;
    bool biased = false;
    int n1 = 100;
    int n2 = 20;
    double tau0 = 0.4;
    double tau1 = 0.4;
    double tau2 = 0.4;
    double xi0 = 3.8066624897703196;  // log(45): median time-to-event of 45 days
    double lead1 = 120.0;
    double lead2 = 60.0;
    double bias_shift = 0.0;  // -0.5 on source 2 in biased scenarios
    double truth_horizon = 120.0;
    int n_test = 10000;          // large-n protocol test sample
    int n_replications = 10000;  // small-n protocol repetitions
    int t_max = 120;
    // Censored test realizations enter PIT summaries through a randomized
    // draw on (F(c), 1); see censored_pit. Excluding them instead would
    // truncate the PIT sample of even a perfectly calibrated forecast.
    bool randomized_censored_pit = true;
};

/// Scenario-table defaults for ids 1..16.
ScenarioConfig scenario_config(int id);

/// Applies key=value overrides (field names as keys) on top of a config.
/// Unknown keys throw std::invalid_argument.
ScenarioConfig apply_overrides(ScenarioConfig cfg,
                               const std::map<std::string, std::string>& kv);

/// One simulated year: latent components, the realized (possibly
/// censored) time, and the two forecast ensembles.
struct SimulatedYear {
    double x1 = 0.0;
    double x2 = 0.0;
    CensoredTime truth;
    Ensemble ens1, ens2;
};

/// Draws one year on its own counter stream: x1 ~ N(0, tau1^2),
/// x2 ~ N(0, tau2^2), truth ~ LogNormal(xi0 + x1 + x2, tau0^2) censored at
/// the truth horizon, members per source censored at the source lead time.
SimulatedYear simulate_year(const ScenarioConfig& cfg, std::uint64_t seed,
                            std::uint64_t stream);

/// One row of the forecast-method registry.
struct MethodSpec {
    enum class Kind { SourceMl, SourceKm, Combination };

    std::string name;
    Kind kind = Kind::Combination;
    int source = 0;  // 1 or 2 for single-source rows
    ComboParams combo;
    Estimator estimator = Estimator::ML;
};

/// The 17 probabilistic forecasts of the simulation experiment, in table
/// order: four single-source rows, eleven estimated combinations, and the
/// two benchmarks (fixed equal weights; merged-ensemble fit).
const std::vector<MethodSpec>& table1_methods();

/// Registry lookup by CSV name (e.g. "gp3", "source1_ml"); throws
/// std::invalid_argument on unknown names.
const MethodSpec& method_by_name(const std::string& name);

struct MethodResult {
    std::string method;
    ScoreReport report;
    int failures = 0;  // skipped test years or replications
    std::optional<ComboParams> params;  // estimated once (large-n protocol)
};

struct ScenarioResult {
    int scenario_id = 0;
    std::vector<MethodResult> methods;
};

/// Large-n protocol (ids 1..8): estimate each method once on n_train
/// years, evaluate on n_test fresh years.
ScenarioResult run_scenario_large(const ScenarioConfig& cfg, std::uint64_t seed,
                                  std::span<const MethodSpec> methods, int threads);

/// Small-n protocol (ids 9..16): n_replications repetitions of
/// (draw n_train years, estimate, score one fresh test year).
ScenarioResult run_scenario_small(const ScenarioConfig& cfg, std::uint64_t seed,
                                  std::span<const MethodSpec> methods, int threads);

/// Dispatches on the scenario id.
ScenarioResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed,
                            std::span<const MethodSpec> methods, int threads);

} // namespace survblend::sim

#pragma once

#include <string>
#include <vector>

#include "survblend/combine.hpp"
#include "survblend/survcurve.hpp"

namespace survblend {

/// One training year: ensembles and fitted single-source curves from all
/// sources, plus the realized (possibly censored) event time.
struct TrainingPair {
    std::string year_id;
    std::vector<Ensemble> ensembles;
    CensoredTime realized;
    std::vector<SurvivalCurve> fitted;  // one per source, populated before estimation
};

struct TrainingSet {
    std::vector<TrainingPair> pairs;
};

enum class Estimator { ML, MinIbs };

class DegenerateTrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Log-likelihood of a combination parameter set over the training data.
/// Event realizations contribute log f_c(t_i), censored ones log S_c(t_i).
double combo_loglik(const ComboParams& params, const TrainingSet& train);

/// Training-set integrated Brier score of a combination parameter set,
/// summed over integer days 1..t_max and averaged over pairs; a censored
/// realization's time-sum stops at its censoring time.
double combo_ibs(const ComboParams& params, const TrainingSet& train, int t_max);

/// Maximum-likelihood estimation of the free combination parameters of
/// spec.method under spec.restriction. All fitted curves must be
/// parametric. For GPt the degrees of freedom are n-1 with n the number
/// of training pairs. Throws DegenerateTrainingError when every
/// realization is censored.
ComboParams ml_estimate(const ComboParams& spec, const TrainingSet& train);

/// Estimation by minimizing the training-set IBS. Supports LP, BP, GP and
/// HB; HB requires raw ensembles in the training pairs.
ComboParams minibs_estimate(const ComboParams& spec, const TrainingSet& train, int t_max);

} // namespace survblend

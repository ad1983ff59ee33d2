#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "survblend/rng.hpp"
#include "survblend/survcurve.hpp"

namespace survblend {

/// PIT moments under perfect calibration.
inline constexpr double kCalibratedPitMean = 0.5;
inline constexpr double kCalibratedPitSd = 0.28867513459481287;  // 1/sqrt(12)

inline constexpr int kPitHistogramBins = 10;

struct ScoreReport {
    double ibs = 0.0;  // mean per-realization integrated Brier score
    std::vector<double> pit_values;
    double pit_mean = 0.0;
    double pit_sd = 0.0;
    std::array<int, kPitHistogramBins> histogram{};
};

class CensoredRealizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Brier score at time t, averaged over the realizations whose survival
/// indicator is known at t (a censored realization enters only while
/// t <= its censoring time).
double brier_score(std::span<const SurvivalCurve> curves,
                   std::span<const CensoredTime> realized, double t);

/// Integrated Brier score of one forecast against one realization: the
/// sum over integer days 1..t_max of the squared deviation between the
/// survival indicator and the forecast. For a censored realization the
/// sum stops at the censoring time.
double ibs(const SurvivalCurve& curve, const CensoredTime& realized, int t_max);

/// Probability integral transform F(t_i). For step-function forecasts a
/// randomized PIT is drawn uniformly between the left and right limits of
/// F at t_i. Throws CensoredRealizationError for censored realizations.
double pit(const SurvivalCurve& curve, const CensoredTime& realized, CounterRng& rng);

/// Randomized PIT for a censored realization: uniform on (F(c), 1], the
/// conditional law of the PIT given survival past the censoring time under
/// a calibrated forecast. Used by study protocols that keep censored years
/// in calibration summaries.
double censored_pit(const SurvivalCurve& curve, const CensoredTime& realized, CounterRng& rng);

/// Relative improvement over a reference score: 1 - ibs/ibs_reference.
/// Throws std::domain_error when the reference is not positive.
double skill_score(double ibs_method, double ibs_reference);

/// Aggregates per-realization scores into a report: mean IBS, PIT moments
/// (sample sd) and a 10-bin histogram on [0,1].
ScoreReport make_report(std::span<const double> ibs_values, std::vector<double> pit_values);

/// One row of the report CSV: scope is a scenario or location label.
struct ReportRow {
    std::string scope;
    std::string method;
    ScoreReport report;
    int failures = 0;
};

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows);
void write_histogram_csv(std::ostream& out, std::span<const ReportRow> rows);

} // namespace survblend

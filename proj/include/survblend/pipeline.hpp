#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "survblend/estimate.hpp"

namespace survblend::pipeline {

/// Daily mean temperatures (deg C) of one ensemble member (or the
/// observation series), indexed by day-from-issue 1..values.size().
/// issue_day places the trajectory on the common study clock: day d from
/// issue is study-clock day issue_day + d.
struct Trajectory {
    std::string source_id;
    std::string location_id;
    int year = 0;
    int member = 0;
    int issue_day = 0;
    std::vector<double> values;

    int max_lead() const { return static_cast<int>(values.size()); }
};

struct DayStats {
    double mean = 0.0;
    double sd = 0.0;
};

/// Historical day-wise climatology: observation stats per (location, day)
/// and forecast stats per (source, location, day), days on the study clock.
struct ClimatologyStats {
    std::map<std::pair<std::string, int>, DayStats> obs;
    std::map<std::tuple<std::string, std::string, int>, DayStats> forecast;
    bool leave_one_out = false;
};

class MissingStatsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyEnsembleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientHistoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CSV parse failure; the message carries file and line.
class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Day-wise standardization against the forecast climatology followed by
/// re-standardization to the observation climatology. Throws
/// MissingStatsError when a (source, location, day) or (location, day) is
/// not covered and std::domain_error on a nonpositive sd.
Trajectory postprocess(const Trajectory& traj, const ClimatologyStats& stats);

/// First day (from issue) whose value lies strictly below the threshold;
/// no crossing gives a censored time at the maximum lead.
CensoredTime extract_event_time(const Trajectory& traj, double threshold);

/// Drops event members at or before the issue offset (the clock is not
/// restarted). Throws EmptyEnsembleError when nothing remains.
Ensemble condition_on_issue_date(const Ensemble& ens, double issue_offset);

struct YearObs {
    int year = 0;
    CensoredTime realized;
};

/// Kaplan-Meier fit to the historical realizations, leaving out the
/// target year and years whose event precedes the issue offset. Requires
/// at least two usable years.
StepCurve climatology_forecast(std::span<const YearObs> history, int leave_out_year,
                               double issue_offset);

/// Climatology computed from trajectories (the observation series carries
/// obs_source_id). Leave-one-year-out when a target year is given and at
/// least five history years exist; otherwise full-sample with a warning.
ClimatologyStats compute_climatology(std::span<const Trajectory> trajectories,
                                     std::optional<int> leave_out_year,
                                     const std::string& obs_source_id = "obs");

enum class SourceFit { ML, KM };

/// One study year at one location, on the common clock.
struct YearRecord {
    int year = 0;
    Ensemble ens1, ens2;
    CensoredTime realized;
};

struct LocationDataset {
    std::string location_id;
    std::vector<YearRecord> years;
};

struct StudyConfig {
    double threshold = 0.0;    // event definition: first day strictly below
    double issue_offset = 0.0; // combined-forecast issue date on the study clock
    int t_max = 120;
    bool apply_postprocess = true;
    std::string obs_source_id = "obs";
};

/// Builds per-location TrainingPairs from a dataset: single-source curves
/// fitted per year (ML log-normal or KM), year ids from the year numbers.
/// Years whose ML fit degenerates keep an invalid curve; estimation and
/// folds skip them.
TrainingSet make_training_set(std::span<const YearRecord> years, SourceFit fit);

struct FoldResult {
    std::string year_id;
    std::optional<ComboParams> params;
    double ibs_value = 0.0;
    std::optional<double> pit_value;
    bool failed = false;
    std::string error;
};

/// Leave-one-year-out combination: for each target year the parameters
/// are estimated on the remaining years, the target year's curves combined
/// and scored. A realized event at or before the issue offset records an
/// IBS of 0 (study protocol). Requires at least three years.
std::vector<FoldResult> leave_one_year_out(const TrainingSet& data, const ComboParams& method,
                                           Estimator estimator, int t_max,
                                           double issue_offset, std::uint64_t pit_seed);

// --- ingestion -------------------------------------------------------

struct EventRow {
    std::string source_id;
    std::string location_id;
    int year = 0;
    int member = 0;
    double time = 0.0;
    bool event = true;
};

/// Pre-extracted event times: header
/// source_id,location_id,year,member,time,event_flag.
std::vector<EventRow> read_event_csv(const std::string& path);

/// Daily trajectories: header source_id,location_id,year,member,day,temp.
/// Rows of one member must cover a contiguous day range; the range start
/// fixes the member's issue day.
std::vector<Trajectory> read_trajectory_csv(const std::string& path);

/// Full ingestion: post-processing (when enabled, against leave-one-year-
/// out climatologies), event extraction, conditioning on the issue date,
/// realized times from the observation series. Non-obs sources map to
/// (source 1, source 2) in lexicographic order. Years that lose all
/// members to conditioning are dropped with a warning.
std::vector<LocationDataset> datasets_from_trajectories(std::span<const Trajectory> trajs,
                                                        const StudyConfig& config);
std::vector<LocationDataset> datasets_from_events(std::span<const EventRow> rows,
                                                  const StudyConfig& config);

} // namespace survblend::pipeline

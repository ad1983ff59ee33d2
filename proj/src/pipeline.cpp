#include "survblend/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "survblend/combine.hpp"
#include "survblend/evaluate.hpp"
#include "survblend/rng.hpp"
#include "survblend/specfun.hpp"

namespace survblend::pipeline {

Trajectory postprocess(const Trajectory& traj, const ClimatologyStats& stats) {
    Trajectory out = traj;
    for (int d = 1; d <= traj.max_lead(); ++d) {
        const int study_day = traj.issue_day + d;
        const auto fc_it =
            stats.forecast.find({traj.source_id, traj.location_id, study_day});
        if (fc_it == stats.forecast.end()) {
            throw MissingStatsError("postprocess: no forecast climatology for source '" +
                                    traj.source_id + "' location '" + traj.location_id +
                                    "' day " + std::to_string(study_day));
        }
        const auto obs_it = stats.obs.find({traj.location_id, study_day});
        if (obs_it == stats.obs.end()) {
            throw MissingStatsError("postprocess: no observation climatology for location '" +
                                    traj.location_id + "' day " + std::to_string(study_day));
        }
        const DayStats& fc = fc_it->second;
        const DayStats& ob = obs_it->second;
        if (!(fc.sd > 0.0) || !(ob.sd > 0.0)) {
            throw std::domain_error("postprocess: climatology sd must be positive");
        }
        const double anomaly = (traj.values[static_cast<std::size_t>(d - 1)] - fc.mean) / fc.sd;
        out.values[static_cast<std::size_t>(d - 1)] = anomaly * ob.sd + ob.mean;
    }
    return out;
}

CensoredTime extract_event_time(const Trajectory& traj, double threshold) {
    for (int d = 1; d <= traj.max_lead(); ++d) {
        if (traj.values[static_cast<std::size_t>(d - 1)] < threshold) {
            return {static_cast<double>(d), true};
        }
    }
    return {static_cast<double>(traj.max_lead()), false};
}

Ensemble condition_on_issue_date(const Ensemble& ens, double issue_offset) {
    if (issue_offset < 0.0) {
        throw std::invalid_argument("condition_on_issue_date: offset must be >= 0");
    }
    Ensemble out;
    out.source_id = ens.source_id;
    out.max_lead_time = ens.max_lead_time;
    for (const auto& m : ens.members) {
        if (m.event && m.time <= issue_offset) continue;
        out.members.push_back(m);
    }
    if (out.members.empty()) {
        throw EmptyEnsembleError("condition_on_issue_date: every member predicts the event "
                                 "before the issue date");
    }
    return out;
}

StepCurve climatology_forecast(std::span<const YearObs> history, int leave_out_year,
                               double issue_offset) {
    std::vector<CensoredTime> retained;
    for (const auto& h : history) {
        if (h.year == leave_out_year) continue;
        if (h.realized.event && h.realized.time <= issue_offset) continue;
        retained.push_back(h.realized);
    }
    if (retained.size() < 2) {
        throw InsufficientHistoryError("climatology_forecast: fewer than two usable years");
    }
    return km_estimate(std::span<const CensoredTime>(retained));
}

ClimatologyStats compute_climatology(std::span<const Trajectory> trajectories,
                                     std::optional<int> leave_out_year,
                                     const std::string& obs_source_id) {
    std::set<int> years;
    for (const auto& t : trajectories) years.insert(t.year);
    bool loyo = leave_out_year.has_value();
    if (loyo && years.size() < 5) {
        std::fprintf(stderr,
                     "compute_climatology: only %zu history years, using the full sample\n",
                     years.size());
        loyo = false;
    }

    struct Acc {
        double sum = 0.0, sumsq = 0.0;
        std::size_t n = 0;
    };
    std::map<std::tuple<std::string, std::string, int>, Acc> fc;
    std::map<std::pair<std::string, int>, Acc> obs;
    for (const auto& t : trajectories) {
        if (loyo && t.year == *leave_out_year) continue;
        const bool is_obs = t.source_id == obs_source_id;
        for (int d = 1; d <= t.max_lead(); ++d) {
            const double v = t.values[static_cast<std::size_t>(d - 1)];
            Acc& a = is_obs ? obs[{t.location_id, t.issue_day + d}]
                            : fc[{t.source_id, t.location_id, t.issue_day + d}];
            a.sum += v;
            a.sumsq += v * v;
            ++a.n;
        }
    }

    auto to_stats = [](const Acc& a) {
        DayStats s;
        s.mean = a.sum / static_cast<double>(a.n);
        if (a.n > 1) {
            const double ss = a.sumsq - a.sum * a.sum / static_cast<double>(a.n);
            s.sd = std::sqrt(std::max(ss, 0.0) / static_cast<double>(a.n - 1));
        }
        return s;
    };
    ClimatologyStats stats;
    stats.leave_one_out = loyo;
    for (const auto& [key, acc] : fc) stats.forecast[key] = to_stats(acc);
    for (const auto& [key, acc] : obs) stats.obs[key] = to_stats(acc);
    return stats;
}

TrainingSet make_training_set(std::span<const YearRecord> years, SourceFit fit) {
    TrainingSet train;
    train.pairs.reserve(years.size());
    for (const auto& y : years) {
        TrainingPair pair;
        pair.year_id = std::to_string(y.year);
        pair.ensembles = {y.ens1, y.ens2};
        pair.realized = y.realized;
        pair.fitted.resize(2);
        if (fit == SourceFit::KM) {
            pair.fitted[0] = SurvivalCurve(km_estimate(y.ens1));
            pair.fitted[1] = SurvivalCurve(km_estimate(y.ens2));
        } else {
            try {
                pair.fitted[0] = SurvivalCurve(lognormal_ml_fit(y.ens1));
            } catch (const DegenerateFitError&) {
            } catch (const specfun::NonConvergenceError&) {
            }
            try {
                pair.fitted[1] = SurvivalCurve(lognormal_ml_fit(y.ens2));
            } catch (const DegenerateFitError&) {
            } catch (const specfun::NonConvergenceError&) {
            }
        }
        train.pairs.push_back(std::move(pair));
    }
    return train;
}

std::vector<FoldResult> leave_one_year_out(const TrainingSet& data, const ComboParams& method,
                                           Estimator estimator, int t_max,
                                           double issue_offset, std::uint64_t pit_seed) {
    if (data.pairs.size() < 3) {
        throw std::invalid_argument("leave_one_year_out: at least three years required");
    }
    const bool needs_fits = method.method != CombineMethod::HB &&
                            method.method != CombineMethod::Merge;

    std::vector<FoldResult> folds;
    folds.reserve(data.pairs.size());
    for (std::size_t target = 0; target < data.pairs.size(); ++target) {
        const TrainingPair& pair = data.pairs[target];
        FoldResult fold;
        fold.year_id = pair.year_id;

        try {
            if (method.method != CombineMethod::Merge) {
                TrainingSet fold_train;
                fold_train.pairs.reserve(data.pairs.size() - 1);
                for (std::size_t j = 0; j < data.pairs.size(); ++j) {
                    if (j == target) continue;
                    const TrainingPair& other = data.pairs[j];
                    if (needs_fits &&
                        (!other.fitted[0].valid() || !other.fitted[1].valid())) {
                        continue;  // a degenerate training-year fit drops out of the fold
                    }
                    fold_train.pairs.push_back(other);
                }
                fold.params = estimator == Estimator::ML
                                  ? ml_estimate(method, fold_train)
                                  : minibs_estimate(method, fold_train, t_max);
            } else {
                ComboParams p;
                p.method = CombineMethod::Merge;
                fold.params = p;
            }

            // Study protocol: an event at or before the issue date scores 0.
            if (pair.realized.event && pair.realized.time <= issue_offset) {
                fold.ibs_value = 0.0;
                folds.push_back(std::move(fold));
                continue;
            }

            if (needs_fits && (!pair.fitted[0].valid() || !pair.fitted[1].valid())) {
                throw DegenerateFitError("target-year single-source fit unavailable");
            }
            const SurvivalCurve curve =
                combine_with(*fold.params, pair.fitted.empty() ? SurvivalCurve{} : pair.fitted[0],
                             pair.fitted.size() > 1 ? pair.fitted[1] : SurvivalCurve{},
                             &pair.ensembles[0], &pair.ensembles[1]);
            fold.ibs_value = ibs(curve, pair.realized, t_max);
            if (pair.realized.event) {
                CounterRng rng(pit_seed, derive_stream({0x907ULL, target}));
                fold.pit_value = pit(curve, pair.realized, rng);
            }
        } catch (const std::exception& e) {
            fold.failed = true;
            fold.error = e.what();
        }
        folds.push_back(std::move(fold));
    }
    return folds;
}

// --- ingestion -------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

struct CsvReader {
    std::string path;
    std::ifstream in;
    std::vector<std::string> header;
    int line_no = 0;

    explicit CsvReader(const std::string& p) : path(p), in(p) {
        if (!in) {
            throw CsvError(path + ": cannot open file");
        }
        std::string line;
        if (!std::getline(in, line)) {
            throw CsvError(path + ":1: empty file, header row required");
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++line_no;
        header = split_csv_line(line);
    }

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        throw CsvError(path + ":1: missing required column '" + name + "'");
    }

    bool next(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            fields = split_csv_line(line);
            if (fields.size() != header.size()) {
                throw CsvError(path + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
            }
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw CsvError(path + ":" + std::to_string(line_no) + ": " + what);
    }

    double to_double(const std::string& s) const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) fail("malformed number '" + s + "'");
            return v;
        } catch (const CsvError&) {
            throw;
        } catch (const std::exception&) {
            fail("malformed number '" + s + "'");
        }
    }

    int to_int(const std::string& s) const {
        try {
            std::size_t pos = 0;
            const int v = std::stoi(s, &pos);
            if (pos != s.size()) fail("malformed integer '" + s + "'");
            return v;
        } catch (const CsvError&) {
            throw;
        } catch (const std::exception&) {
            fail("malformed integer '" + s + "'");
        }
    }
};

} // namespace

std::vector<EventRow> read_event_csv(const std::string& path) {
    CsvReader reader(path);
    const int c_source = reader.column("source_id");
    const int c_loc = reader.column("location_id");
    const int c_year = reader.column("year");
    const int c_member = reader.column("member");
    const int c_time = reader.column("time");
    const int c_event = reader.column("event_flag");

    std::vector<EventRow> rows;
    std::vector<std::string> f;
    while (reader.next(f)) {
        EventRow row;
        row.source_id = f[static_cast<std::size_t>(c_source)];
        row.location_id = f[static_cast<std::size_t>(c_loc)];
        row.year = reader.to_int(f[static_cast<std::size_t>(c_year)]);
        row.member = reader.to_int(f[static_cast<std::size_t>(c_member)]);
        row.time = reader.to_double(f[static_cast<std::size_t>(c_time)]);
        const int flag = reader.to_int(f[static_cast<std::size_t>(c_event)]);
        if (flag != 0 && flag != 1) reader.fail("event_flag must be 0 or 1");
        row.event = flag == 1;
        if (!(row.time > 0.0)) reader.fail("time must be positive");
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<Trajectory> read_trajectory_csv(const std::string& path) {
    CsvReader reader(path);
    const int c_source = reader.column("source_id");
    const int c_loc = reader.column("location_id");
    const int c_year = reader.column("year");
    const int c_member = reader.column("member");
    const int c_day = reader.column("day");
    const int c_temp = reader.column("temp");

    std::map<std::tuple<std::string, std::string, int, int>, std::vector<std::pair<int, double>>>
        groups;
    std::vector<std::string> f;
    while (reader.next(f)) {
        const int day = reader.to_int(f[static_cast<std::size_t>(c_day)]);
        if (day < 1) reader.fail("day must be >= 1");
        groups[{f[static_cast<std::size_t>(c_source)], f[static_cast<std::size_t>(c_loc)],
                reader.to_int(f[static_cast<std::size_t>(c_year)]),
                reader.to_int(f[static_cast<std::size_t>(c_member)])}]
            .emplace_back(day, reader.to_double(f[static_cast<std::size_t>(c_temp)]));
    }

    std::vector<Trajectory> out;
    out.reserve(groups.size());
    for (auto& [key, days] : groups) {
        std::sort(days.begin(), days.end());
        Trajectory t;
        t.source_id = std::get<0>(key);
        t.location_id = std::get<1>(key);
        t.year = std::get<2>(key);
        t.member = std::get<3>(key);
        t.issue_day = days.front().first - 1;
        t.values.reserve(days.size());
        int expected = days.front().first;
        for (const auto& [day, temp] : days) {
            if (day != expected) {
                throw CsvError(path + ": member series (" + t.source_id + "," +
                               t.location_id + "," + std::to_string(t.year) + "," +
                               std::to_string(t.member) + ") has non-contiguous days near day " +
                               std::to_string(day));
            }
            t.values.push_back(temp);
            ++expected;
        }
        out.push_back(std::move(t));
    }
    return out;
}

namespace {

// Lexicographic source order fixes which source is "source 1".
std::pair<std::string, std::string> source_pair(const std::set<std::string>& sources,
                                                const std::string& obs_id) {
    std::vector<std::string> ids;
    for (const auto& s : sources) {
        if (s != obs_id) ids.push_back(s);
    }
    if (ids.size() != 2) {
        throw std::invalid_argument("expected exactly two forecast sources besides '" + obs_id +
                                    "', found " + std::to_string(ids.size()));
    }
    return {ids[0], ids[1]};
}

std::vector<LocationDataset> assemble(
    const std::map<std::pair<std::string, int>,
                   std::map<std::string, std::vector<CensoredTime>>>& members,
    const std::map<std::pair<std::string, int>, CensoredTime>& realized,
    const std::map<std::string, double>& max_lead, const std::string& src1,
    const std::string& src2, const StudyConfig& config) {
    std::map<std::string, LocationDataset> by_location;
    for (const auto& [loc_year, by_source] : members) {
        const auto& [loc, year] = loc_year;
        const auto obs_it = realized.find(loc_year);
        if (obs_it == realized.end()) {
            std::fprintf(stderr, "pipeline: no observation for location %s year %d, skipped\n",
                         loc.c_str(), year);
            continue;
        }
        const auto e1 = by_source.find(src1);
        const auto e2 = by_source.find(src2);
        if (e1 == by_source.end() || e2 == by_source.end()) {
            std::fprintf(stderr, "pipeline: missing a source for location %s year %d, skipped\n",
                         loc.c_str(), year);
            continue;
        }

        YearRecord record;
        record.year = year;
        record.ens1 = Ensemble{e1->second, max_lead.at(src1), src1};
        record.ens2 = Ensemble{e2->second, max_lead.at(src2), src2};
        record.realized = obs_it->second;
        try {
            record.ens1 = condition_on_issue_date(record.ens1, config.issue_offset);
            record.ens2 = condition_on_issue_date(record.ens2, config.issue_offset);
        } catch (const EmptyEnsembleError&) {
            std::fprintf(stderr,
                         "pipeline: location %s year %d lost all members to the issue-date "
                         "condition, skipped\n",
                         loc.c_str(), year);
            continue;
        }
        auto& dataset = by_location[loc];
        dataset.location_id = loc;
        dataset.years.push_back(std::move(record));
    }

    std::vector<LocationDataset> out;
    out.reserve(by_location.size());
    for (auto& [loc, dataset] : by_location) {
        std::sort(dataset.years.begin(), dataset.years.end(),
                  [](const YearRecord& a, const YearRecord& b) { return a.year < b.year; });
        out.push_back(std::move(dataset));
    }
    return out;
}

} // namespace

std::vector<LocationDataset> datasets_from_trajectories(std::span<const Trajectory> trajs,
                                                        const StudyConfig& config) {
    std::set<std::string> sources;
    for (const auto& t : trajs) sources.insert(t.source_id);
    const auto [src1, src2] = source_pair(sources, config.obs_source_id);

    // climatologies per target year, shared across locations
    std::map<int, ClimatologyStats> stats_by_year;
    if (config.apply_postprocess) {
        std::set<int> years;
        for (const auto& t : trajs) years.insert(t.year);
        for (int y : years) stats_by_year.emplace(y, compute_climatology(trajs, y, config.obs_source_id));
    }

    std::map<std::pair<std::string, int>, std::map<std::string, std::vector<CensoredTime>>>
        members;
    std::map<std::pair<std::string, int>, CensoredTime> realized;
    std::map<std::string, double> max_lead;

    for (const auto& traj : trajs) {
        if (traj.source_id == config.obs_source_id) {
            const CensoredTime t = extract_event_time(traj, config.threshold);
            realized[{traj.location_id, traj.year}] = {traj.issue_day + t.time, t.event};
            continue;
        }
        const Trajectory* use = &traj;
        Trajectory processed;
        if (config.apply_postprocess) {
            processed = postprocess(traj, stats_by_year.at(traj.year));
            use = &processed;
        }
        const CensoredTime local = extract_event_time(*use, config.threshold);
        members[{traj.location_id, traj.year}][traj.source_id].push_back(
            {traj.issue_day + local.time, local.event});
        max_lead[traj.source_id] = static_cast<double>(traj.issue_day + traj.max_lead());
    }
    return assemble(members, realized, max_lead, src1, src2, config);
}

std::vector<LocationDataset> datasets_from_events(std::span<const EventRow> rows,
                                                  const StudyConfig& config) {
    std::set<std::string> sources;
    for (const auto& r : rows) sources.insert(r.source_id);
    const auto [src1, src2] = source_pair(sources, config.obs_source_id);

    std::map<std::pair<std::string, int>, std::map<std::string, std::vector<CensoredTime>>>
        members;
    std::map<std::pair<std::string, int>, CensoredTime> realized;
    std::map<std::string, double> max_lead;
    for (const auto& r : rows) {
        if (r.source_id == config.obs_source_id) {
            realized[{r.location_id, r.year}] = {r.time, r.event};
            continue;
        }
        members[{r.location_id, r.year}][r.source_id].push_back({r.time, r.event});
        max_lead[r.source_id] = std::max(max_lead[r.source_id], r.time);
    }
    return assemble(members, realized, max_lead, src1, src2, config);
}

} // namespace survblend::pipeline

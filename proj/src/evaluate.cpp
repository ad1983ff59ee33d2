#include "survblend/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace survblend {

double brier_score(std::span<const SurvivalCurve> curves,
                   std::span<const CensoredTime> realized, double t) {
    if (curves.size() != realized.size() || curves.empty()) {
        throw std::invalid_argument("brier_score: curves and realizations must pair up");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        if (!realized[i].event && t > realized[i].time) continue;
        const double indicator = realized[i].event ? (realized[i].time > t ? 1.0 : 0.0) : 1.0;
        const double d = indicator - curves[i].survival(t);
        sum += d * d;
        ++count;
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

double ibs(const SurvivalCurve& curve, const CensoredTime& realized, int t_max) {
    if (t_max < 1) {
        throw std::invalid_argument("ibs: t_max must be >= 1");
    }
    const int last = realized.event
                         ? t_max
                         : std::min(t_max, static_cast<int>(std::floor(realized.time)));
    double total = 0.0;
    for (int t = 1; t <= last; ++t) {
        const double td = static_cast<double>(t);
        const double indicator = realized.event ? (realized.time > td ? 1.0 : 0.0) : 1.0;
        const double d = indicator - curve.survival(td);
        total += d * d;
    }
    return total;
}

double pit(const SurvivalCurve& curve, const CensoredTime& realized, CounterRng& rng) {
    if (!realized.event) {
        throw CensoredRealizationError("pit: undefined for a censored realization");
    }
    const double lo = curve.cdf_left(realized.time);
    const double hi = curve.cdf(realized.time);
    if (hi <= lo) return hi;
    return lo + (hi - lo) * rng.uniform();
}

double censored_pit(const SurvivalCurve& curve, const CensoredTime& realized, CounterRng& rng) {
    if (realized.event) {
        throw std::invalid_argument("censored_pit: realization is not censored");
    }
    const double lo = curve.cdf(realized.time);
    return lo + (1.0 - lo) * rng.uniform();
}

double skill_score(double ibs_method, double ibs_reference) {
    if (!(ibs_reference > 0.0)) {
        throw std::domain_error("skill_score: reference score must be positive");
    }
    return 1.0 - ibs_method / ibs_reference;
}

ScoreReport make_report(std::span<const double> ibs_values, std::vector<double> pit_values) {
    ScoreReport rep;
    if (!ibs_values.empty()) {
        double sum = 0.0;
        for (double v : ibs_values) sum += v;
        rep.ibs = sum / static_cast<double>(ibs_values.size());
    }
    rep.pit_values = std::move(pit_values);
    const std::size_t n = rep.pit_values.size();
    if (n > 0) {
        double sum = 0.0;
        for (double p : rep.pit_values) sum += p;
        rep.pit_mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (double p : rep.pit_values) {
            const double d = p - rep.pit_mean;
            ss += d * d;
        }
        rep.pit_sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        for (double p : rep.pit_values) {
            int bin = static_cast<int>(p * kPitHistogramBins);
            bin = std::clamp(bin, 0, kPitHistogramBins - 1);
            ++rep.histogram[static_cast<std::size_t>(bin)];
        }
    }
    return rep;
}

namespace {

void write_double(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    out << buf;
}

} // namespace

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows) {
    out << "scope,method,mean_ibs,pit_mean,pit_sd,n_pit,failures";
    for (int b = 0; b < kPitHistogramBins; ++b) out << ",bin_" << b;
    out << "\n";
    for (const auto& row : rows) {
        out << row.scope << "," << row.method << ",";
        write_double(out, row.report.ibs);
        out << ",";
        write_double(out, row.report.pit_mean);
        out << ",";
        write_double(out, row.report.pit_sd);
        out << "," << row.report.pit_values.size() << "," << row.failures;
        for (int b = 0; b < kPitHistogramBins; ++b) {
            out << "," << row.report.histogram[static_cast<std::size_t>(b)];
        }
        out << "\n";
    }
}

void write_histogram_csv(std::ostream& out, std::span<const ReportRow> rows) {
    out << "scope,method,bin_index,bin_lower,bin_upper,count,frequency\n";
    for (const auto& row : rows) {
        const double total = static_cast<double>(row.report.pit_values.size());
        for (int b = 0; b < kPitHistogramBins; ++b) {
            const int count = row.report.histogram[static_cast<std::size_t>(b)];
            out << row.scope << "," << row.method << "," << b << ",";
            write_double(out, static_cast<double>(b) / kPitHistogramBins);
            out << ",";
            write_double(out, static_cast<double>(b + 1) / kPitHistogramBins);
            out << "," << count << ",";
            write_double(out, total > 0 ? count / total : 0.0);
            out << "\n";
        }
    }
}

} // namespace survblend

#include "survblend/survcurve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survblend/specfun.hpp"

namespace survblend {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;

double lognormal_survival(double log_t, double xi, double tau) {
    return 0.5 * std::erfc((log_t - xi) / (tau * kSqrt2));
}

double lognormal_log_density(double log_t, double xi, double tau) {
    const double z = (log_t - xi) / tau;
    return -0.5 * z * z - log_t - std::log(tau * kSqrt2Pi);
}

struct LogTimes {
    std::vector<double> events;    // log event times
    std::vector<double> censored;  // log censoring times
};

LogTimes split_log_times(std::span<const CensoredTime> members) {
    LogTimes out;
    for (const auto& m : members) {
        (m.event ? out.events : out.censored).push_back(std::log(m.time));
    }
    return out;
}

// Mean and ML standard deviation of all log times, censored treated as
// events; always a feasible starting point.
std::pair<double, double> naive_log_moments(std::span<const CensoredTime> members) {
    double sum = 0.0;
    for (const auto& m : members) sum += std::log(m.time);
    const double mean = sum / static_cast<double>(members.size());
    double ss = 0.0;
    for (const auto& m : members) {
        const double d = std::log(m.time) - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(members.size()));
    return {mean, sd};
}

double tau_from_theta(double theta) { return kTauLowerBound + std::exp(theta); }

double theta_from_tau(double tau) {
    return std::log(std::max(tau - kTauLowerBound, 1e-8));
}

} // namespace

void validate_ensemble(const Ensemble& ens) {
    if (ens.members.empty()) {
        throw std::invalid_argument("ensemble has no members");
    }
    for (const auto& m : ens.members) {
        if (!(m.time > 0.0) || !std::isfinite(m.time)) {
            throw std::invalid_argument("ensemble member time must be positive and finite");
        }
        if (m.event) {
            if (m.time > ens.max_lead_time) {
                throw std::invalid_argument("event member beyond the maximum lead time");
            }
        } else if (m.time != ens.max_lead_time) {
            throw std::invalid_argument("censored member not at the maximum lead time");
        }
    }
}

double StepCurve::survival(double t) const {
    // last jump time <= t
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    if (it == jump_times.begin()) return 1.0;
    return surv_values[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

double StepCurve::survival_left(double t) const {
    const auto it = std::lower_bound(jump_times.begin(), jump_times.end(), t);
    if (it == jump_times.begin()) return 1.0;
    return surv_values[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

double LogNormalCurve::effective_scale() const {
    if (!correction_df) return tau;
    const double n_k = static_cast<double>(*correction_df + 1);
    return tau * std::sqrt(1.0 + 1.0 / n_k);
}

double LogNormalCurve::survival(double t) const {
    if (t <= 0.0) return 1.0;
    const double z = (std::log(t) - xi) / effective_scale();
    if (correction_df) {
        return 1.0 - specfun::student_t_cdf(z, static_cast<double>(*correction_df));
    }
    return 0.5 * std::erfc(z / kSqrt2);
}

double LogNormalCurve::density(double t) const {
    if (t <= 0.0) return 0.0;
    const double scale = effective_scale();
    const double z = (std::log(t) - xi) / scale;
    if (correction_df) {
        return specfun::student_t_pdf(z, static_cast<double>(*correction_df)) / (t * scale);
    }
    return specfun::normal_pdf(z) / (t * scale);
}

StepCurve km_estimate(std::span<const CensoredTime> members) {
    struct Obs {
        double time;
        bool event;
    };
    std::vector<Obs> obs;
    obs.reserve(members.size());
    for (const auto& m : members) obs.push_back({m.time, m.event});
    std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.event > b.event;  // events precede censoring at ties
    });

    StepCurve curve;
    double surv = 1.0;
    std::size_t at_risk = obs.size();
    std::size_t i = 0;
    while (i < obs.size()) {
        const double t = obs[i].time;
        std::size_t d = 0, removed = 0;
        while (i < obs.size() && obs[i].time == t) {
            if (obs[i].event) ++d;
            ++removed;
            ++i;
        }
        if (d > 0 && at_risk > 0) {
            surv *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
            curve.jump_times.push_back(t);
            curve.surv_values.push_back(surv);
        }
        at_risk -= removed;
    }
    return curve;
}

StepCurve km_estimate(const Ensemble& ens) {
    validate_ensemble(ens);
    return km_estimate(std::span<const CensoredTime>(ens.members));
}

LogNormalCurve lognormal_ml_fit(std::span<const CensoredTime> members) {
    const LogTimes lt = split_log_times(members);
    if (lt.events.size() < 2) {
        throw DegenerateFitError("lognormal_ml_fit: fewer than two event members");
    }
    const auto [emin, emax] = std::minmax_element(lt.events.begin(), lt.events.end());
    if (*emin == *emax) {
        throw DegenerateFitError("lognormal_ml_fit: all event times identical");
    }

    if (lt.censored.empty()) {
        // Uncensored MLE in closed form: mean and ML variance of log times.
        const auto [mean, sd] = naive_log_moments(members);
        return LogNormalCurve{mean, sd, std::nullopt};
    }

    auto neg_loglik = [&lt](std::span<const double> p) {
        const double xi = p[0];
        const double tau = tau_from_theta(p[1]);
        double ll = 0.0;
        for (double log_t : lt.events) ll += lognormal_log_density(log_t, xi, tau);
        for (double log_t : lt.censored) {
            const double s = lognormal_survival(log_t, xi, tau);
            ll += std::log(std::max(s, 1e-300));
        }
        return -ll;
    };

    const auto [mean0, sd0] = naive_log_moments(members);
    const double start[] = {mean0, theta_from_tau(std::max(sd0, 2.0 * kTauLowerBound))};
    const auto res = specfun::minimize(neg_loglik, start);
    return LogNormalCurve{res.x[0], tau_from_theta(res.x[1]), std::nullopt};
}

LogNormalCurve lognormal_ml_fit(const Ensemble& ens) {
    validate_ensemble(ens);
    return lognormal_ml_fit(std::span<const CensoredTime>(ens.members));
}

LogNormalCurve lognormal_minibs_fit(const Ensemble& ens, double t_max) {
    validate_ensemble(ens);
    std::size_t n_events = 0;
    for (const auto& m : ens.members) n_events += m.event ? 1 : 0;
    if (n_events == 0) {
        throw DegenerateFitError("lognormal_minibs_fit: no event members");
    }

    const int days = static_cast<int>(std::floor(t_max));
    std::vector<double> log_day(static_cast<std::size_t>(days) + 1, 0.0);
    for (int t = 1; t <= days; ++t) log_day[static_cast<std::size_t>(t)] = std::log(t);

    // Per member: last day included in its time-sum (censored members stop
    // at their censoring time) and the realized time for the indicator.
    struct MemberGrid {
        int last_day;
        double time;
        bool event;
    };
    std::vector<MemberGrid> grid;
    grid.reserve(ens.members.size());
    for (const auto& m : ens.members) {
        const int last = m.event ? days : std::min(days, static_cast<int>(std::floor(m.time)));
        grid.push_back({last, m.time, m.event});
    }

    auto objective = [&](std::span<const double> p) {
        const double xi = p[0];
        const double tau = tau_from_theta(p[1]);
        double total = 0.0;
        for (const auto& g : grid) {
            for (int t = 1; t <= g.last_day; ++t) {
                const double ind = (g.time > static_cast<double>(t)) ? 1.0 : 0.0;
                const double s = lognormal_survival(log_day[static_cast<std::size_t>(t)], xi, tau);
                const double d = ind - s;
                total += d * d;
            }
        }
        return total;
    };

    const auto [mean0, sd0] = naive_log_moments(ens.members);
    const double start[] = {mean0, theta_from_tau(std::max(sd0, 2.0 * kTauLowerBound))};
    const auto res = specfun::minimize(objective, start);
    return LogNormalCurve{res.x[0], tau_from_theta(res.x[1]), std::nullopt};
}

LogNormalCurve corrected_curve(const LogNormalCurve& fit, int n_k) {
    if (fit.correction_df) {
        throw std::invalid_argument("corrected_curve: fit is already corrected");
    }
    if (n_k < 2) {
        throw std::domain_error("corrected_curve: n_k must be >= 2");
    }
    return LogNormalCurve{fit.xi, fit.tau, n_k - 1};
}

} // namespace survblend

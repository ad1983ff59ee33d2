#include "survblend/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "survblend/rng.hpp"
#include "survblend/specfun.hpp"

namespace survblend {

namespace {

using specfun::logistic;
using specfun::logit;

constexpr double kLogFloor = -745.0;  // log of the smallest normal double

double safe_log(double x) { return x > 0.0 ? std::max(std::log(x), kLogFloor) : kLogFloor; }

double clamp_unit(double f) { return std::clamp(f, kPoolEps, 1.0 - kPoolEps); }

// Everything about one training pair that the likelihood needs but that
// does not depend on the combination parameters.
struct PairStats {
    bool event;
    double F1, F2;  // source CDFs at the realized time, clamped
    double f1, f2;  // source densities (event pairs only)
    double q1, q2;  // probit of the source CDFs
    double a1, a2;  // quantile-derivative times density, GP chain-rule factor
};

std::vector<PairStats> pair_stats(const TrainingSet& train, bool need_density,
                                  bool need_probit) {
    std::vector<PairStats> stats;
    stats.reserve(train.pairs.size());
    std::size_t n_events = 0;
    std::size_t dropped = 0;
    for (const auto& pair : train.pairs) {
        if (pair.fitted.size() < 2 || !pair.fitted[0].valid() || !pair.fitted[1].valid()) {
            throw std::invalid_argument("estimate: training pair lacks fitted source curves");
        }
        if (!(pair.realized.time > 0.0)) {
            ++dropped;
            continue;
        }
        PairStats s{};
        s.event = pair.realized.event;
        if (s.event) ++n_events;
        const double t = pair.realized.time;
        s.F1 = clamp_unit(pair.fitted[0].cdf(t));
        s.F2 = clamp_unit(pair.fitted[1].cdf(t));
        if (need_density && s.event) {
            s.f1 = pair.fitted[0].density(t);
            s.f2 = pair.fitted[1].density(t);
        }
        if (need_probit) {
            s.q1 = specfun::normal_quantile(s.F1);
            s.q2 = specfun::normal_quantile(s.F2);
            if (need_density && s.event) {
                s.a1 = specfun::normal_quantile_deriv(s.F1) * s.f1;
                s.a2 = specfun::normal_quantile_deriv(s.F2) * s.f2;
            }
        }
        stats.push_back(s);
    }
    if (dropped > 0) {
        std::fprintf(stderr,
                     "estimate: dropped %zu training pair(s) with realization outside the "
                     "curve support\n",
                     dropped);
    }
    if (stats.empty()) {
        throw DegenerateTrainingError("estimate: no usable training pairs");
    }
    if (n_events == 0) {
        throw DegenerateTrainingError("estimate: every training realization is censored");
    }
    return stats;
}

double loglik_from_stats(const ComboParams& p, const std::vector<PairStats>& stats) {
    double ll = 0.0;
    switch (p.method) {
        case CombineMethod::LP:
        case CombineMethod::LP0: {
            const double w = p.omega;
            for (const auto& s : stats) {
                if (s.event) {
                    ll += safe_log(w * s.f1 + (1.0 - w) * s.f2);
                } else {
                    ll += safe_log(1.0 - (w * s.F1 + (1.0 - w) * s.F2));
                }
            }
            return ll;
        }
        case CombineMethod::BP: {
            const double w = p.omega;
            const double log_beta_norm = std::lgamma(p.alpha) + std::lgamma(p.beta) -
                                         std::lgamma(p.alpha + p.beta);
            for (const auto& s : stats) {
                const double u = std::clamp(w * s.F1 + (1.0 - w) * s.F2, kPoolEps,
                                            1.0 - kPoolEps);
                if (s.event) {
                    const double log_pdf = (p.alpha - 1.0) * std::log(u) +
                                           (p.beta - 1.0) * std::log1p(-u) - log_beta_norm;
                    ll += log_pdf + safe_log(w * s.f1 + (1.0 - w) * s.f2);
                } else {
                    ll += safe_log(1.0 - specfun::beta_cdf(u, p.alpha, p.beta));
                }
            }
            return ll;
        }
        case CombineMethod::GP:
        case CombineMethod::GPt: {
            const double w = p.omega;
            const bool t_outer = p.method == CombineMethod::GPt;
            const double df = static_cast<double>(p.df);
            const double log_sigma = std::log(p.sigma);
            for (const auto& s : stats) {
                const double z = (w * s.q1 + (1.0 - w) * s.q2 - p.mu) / p.sigma;
                if (s.event) {
                    const double log_outer =
                        t_outer ? safe_log(specfun::student_t_pdf(z, df))
                                : -0.5 * z * z - 0.9189385332046727;  // log phi(z)
                    ll += log_outer - log_sigma + safe_log(w * s.a1 + (1.0 - w) * s.a2);
                } else {
                    const double surv = t_outer ? 1.0 - specfun::student_t_cdf(z, df)
                                                : 0.5 * std::erfc(z / 1.4142135623730951);
                    ll += safe_log(surv);
                }
            }
            return ll;
        }
        default:
            throw std::invalid_argument("combo_loglik: likelihood undefined for this method");
    }
}

// Free-parameter packing through the smooth bijections; fixed parameters
// (per restriction) are excluded from the optimization vector.
struct ParamCodec {
    CombineMethod method;
    Restriction restriction;
    int df = 1;

    int size() const {
        switch (method) {
            case CombineMethod::LP:
                return restriction == Restriction::FixedEqualWeights ? 0 : 1;
            case CombineMethod::HB:
                return 1;
            case CombineMethod::BP:
                return restriction == Restriction::FixAlphaEqBeta ? 2 : 3;
            case CombineMethod::GP:
            case CombineMethod::GPt:
                switch (restriction) {
                    case Restriction::FixMeanVar: return 1;
                    case Restriction::FixMean: return 2;
                    default: return 3;
                }
            default:
                return 0;
        }
    }

    ComboParams decode(std::span<const double> x) const {
        ComboParams p;
        p.method = method;
        p.restriction = restriction;
        p.df = df;
        switch (method) {
            case CombineMethod::LP:
            case CombineMethod::HB:
                p.omega = restriction == Restriction::FixedEqualWeights ? 0.5 : logistic(x[0]);
                break;
            case CombineMethod::BP:
                p.omega = logistic(x[0]);
                p.alpha = std::exp(x[1]);
                p.beta = restriction == Restriction::FixAlphaEqBeta ? p.alpha : std::exp(x[2]);
                break;
            case CombineMethod::GP:
            case CombineMethod::GPt:
                p.omega = logistic(x[0]);
                if (restriction == Restriction::FixMeanVar) {
                    p.mu = 0.0;
                    p.sigma = 1.0;
                } else if (restriction == Restriction::FixMean) {
                    p.mu = 0.0;
                    p.sigma = std::exp(x[1]);
                } else {
                    p.mu = x[1];
                    p.sigma = std::exp(x[2]);
                }
                break;
            default:
                break;
        }
        return p;
    }

    std::vector<double> neutral_start() const {
        // omega = 0.5, mu = 0, sigma = 1, alpha = beta = 1: the point where
        // BP equals LP and the GP transform is the identity.
        return std::vector<double>(static_cast<std::size_t>(size()), 0.0);
    }

    std::vector<double> random_start(CounterRng& rng) const {
        std::vector<double> x(static_cast<std::size_t>(size()));
        switch (method) {
            case CombineMethod::LP:
            case CombineMethod::HB:
                if (!x.empty()) x[0] = logit(0.1 + 0.8 * rng.uniform());
                break;
            case CombineMethod::BP:
                x[0] = logit(0.1 + 0.8 * rng.uniform());
                x[1] = std::log(0.5 + 1.5 * rng.uniform());
                if (x.size() > 2) x[2] = std::log(0.5 + 1.5 * rng.uniform());
                break;
            case CombineMethod::GP:
            case CombineMethod::GPt:
                x[0] = logit(0.1 + 0.8 * rng.uniform());
                if (restriction == Restriction::FixMean && x.size() > 1) {
                    x[1] = std::log(0.5 + 1.5 * rng.uniform());
                } else if (restriction == Restriction::Full && x.size() > 2) {
                    x[1] = -1.0 + 2.0 * rng.uniform();
                    x[2] = std::log(0.5 + 1.5 * rng.uniform());
                }
                break;
            default:
                break;
        }
        return x;
    }
};

// Runs the optimizer from the neutral start, plus three deterministic
// random restarts when the training sample is small, keeping the best
// objective. Training sets under 30 pairs make the likelihood surface
// unstable enough that restarts pay for themselves.
ComboParams optimize_params(const ParamCodec& codec,
                            const std::function<double(const ComboParams&)>& objective_max,
                            std::size_t n_pairs, std::uint64_t method_tag) {
    if (codec.size() == 0) {
        return codec.decode({});
    }
    auto neg = [&](std::span<const double> x) { return -objective_max(codec.decode(x)); };

    std::vector<std::vector<double>> starts;
    starts.push_back(codec.neutral_start());
    if (n_pairs < 30) {
        CounterRng rng(0x5eedULL, derive_stream({0xe57ULL, method_tag}));
        for (int i = 0; i < 3; ++i) starts.push_back(codec.random_start(rng));
    }

    bool have_best = false;
    specfun::MinimizeResult best;
    for (const auto& s : starts) {
        try {
            auto res = specfun::minimize(neg, s);
            if (!have_best || res.value < best.value) {
                best = std::move(res);
                have_best = true;
            }
        } catch (const specfun::NonConvergenceError&) {
            // a diverging restart is ignored unless every start fails
        }
    }
    if (!have_best) {
        throw specfun::NonConvergenceError("estimate: optimizer failed from every start");
    }
    return codec.decode(best.x);
}

std::uint64_t method_tag(const ComboParams& spec) {
    return static_cast<std::uint64_t>(spec.method) * 16 +
           static_cast<std::uint64_t>(spec.restriction);
}

// ---------------------------------------------------------------------
// min-IBS machinery: per-pair day grids precomputed once per estimation.

struct PairGrid {
    int last_day;                // truncation at a censored realization
    std::vector<double> indicator;  // I{t_i > t}, t = 1..last_day
    std::vector<double> F1, F2;     // source CDFs on the day grid
    std::vector<double> q1, q2;     // probits (GP only)
};

struct HbPairGrid {
    int last_day;
    std::vector<double> indicator;
    std::vector<double> d1, n1, d2, n2;  // per union event time
    std::vector<int> jumps_upto_day;     // per day: count of event times <= day
};

std::vector<PairGrid> pair_grids(const TrainingSet& train, int t_max, bool need_probit) {
    std::vector<PairGrid> grids;
    grids.reserve(train.pairs.size());
    for (const auto& pair : train.pairs) {
        if (pair.fitted.size() < 2 || !pair.fitted[0].valid() || !pair.fitted[1].valid()) {
            throw std::invalid_argument("estimate: training pair lacks fitted source curves");
        }
        PairGrid g;
        g.last_day = pair.realized.event
                         ? t_max
                         : std::min(t_max, static_cast<int>(std::floor(pair.realized.time)));
        g.indicator.reserve(static_cast<std::size_t>(std::max(g.last_day, 0)));
        for (int t = 1; t <= g.last_day; ++t) {
            const double td = static_cast<double>(t);
            g.indicator.push_back(pair.realized.event ? (pair.realized.time > td ? 1.0 : 0.0)
                                                      : 1.0);
            g.F1.push_back(clamp_unit(pair.fitted[0].cdf(td)));
            g.F2.push_back(clamp_unit(pair.fitted[1].cdf(td)));
            if (need_probit) {
                g.q1.push_back(specfun::normal_quantile(g.F1.back()));
                g.q2.push_back(specfun::normal_quantile(g.F2.back()));
            }
        }
        grids.push_back(std::move(g));
    }
    return grids;
}

std::vector<HbPairGrid> hb_pair_grids(const TrainingSet& train, int t_max) {
    std::vector<HbPairGrid> grids;
    grids.reserve(train.pairs.size());
    for (const auto& pair : train.pairs) {
        if (pair.ensembles.size() < 2 || pair.ensembles[0].members.empty() ||
            pair.ensembles[1].members.empty()) {
            throw std::invalid_argument("minibs_estimate: HB requires raw ensembles");
        }
        HbPairGrid g;
        g.last_day = pair.realized.event
                         ? t_max
                         : std::min(t_max, static_cast<int>(std::floor(pair.realized.time)));
        for (int t = 1; t <= g.last_day; ++t) {
            g.indicator.push_back(pair.realized.event
                                      ? (pair.realized.time > static_cast<double>(t) ? 1.0 : 0.0)
                                      : 1.0);
        }

        const auto& e1 = pair.ensembles[0].members;
        const auto& e2 = pair.ensembles[1].members;
        std::vector<double> times;
        for (const auto& m : e1) {
            if (m.event) times.push_back(m.time);
        }
        for (const auto& m : e2) {
            if (m.event) times.push_back(m.time);
        }
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        for (double t : times) {
            double d1 = 0, n1 = 0, d2 = 0, n2 = 0;
            for (const auto& m : e1) {
                if (m.time >= t) n1 += 1.0;
                if (m.event && m.time == t) d1 += 1.0;
            }
            for (const auto& m : e2) {
                if (m.time >= t) n2 += 1.0;
                if (m.event && m.time == t) d2 += 1.0;
            }
            g.d1.push_back(d1);
            g.n1.push_back(n1);
            g.d2.push_back(d2);
            g.n2.push_back(n2);
        }
        g.jumps_upto_day.resize(static_cast<std::size_t>(std::max(g.last_day, 0)));
        std::size_t j = 0;
        for (int t = 1; t <= g.last_day; ++t) {
            while (j < times.size() && times[j] <= static_cast<double>(t)) ++j;
            g.jumps_upto_day[static_cast<std::size_t>(t - 1)] = static_cast<int>(j);
        }
        grids.push_back(std::move(g));
    }
    return grids;
}

double ibs_from_grids(const ComboParams& p, const std::vector<PairGrid>& grids) {
    double total = 0.0;
    const double w = p.omega;
    for (const auto& g : grids) {
        double pair_sum = 0.0;
        for (std::size_t i = 0; i < g.indicator.size(); ++i) {
            double cdf;
            switch (p.method) {
                case CombineMethod::LP:
                case CombineMethod::LP0:
                    cdf = w * g.F1[i] + (1.0 - w) * g.F2[i];
                    break;
                case CombineMethod::BP:
                    cdf = specfun::beta_cdf(
                        std::clamp(w * g.F1[i] + (1.0 - w) * g.F2[i], 0.0, 1.0), p.alpha,
                        p.beta);
                    break;
                case CombineMethod::GP:
                    cdf = specfun::normal_cdf((w * g.q1[i] + (1.0 - w) * g.q2[i] - p.mu) /
                                              p.sigma);
                    break;
                case CombineMethod::GPt:
                    cdf = specfun::student_t_cdf(
                        (w * g.q1[i] + (1.0 - w) * g.q2[i] - p.mu) / p.sigma,
                        static_cast<double>(p.df));
                    break;
                default:
                    throw std::invalid_argument("combo_ibs: unsupported method");
            }
            const double d = g.indicator[i] - (1.0 - cdf);
            pair_sum += d * d;
        }
        total += pair_sum;
    }
    return total / static_cast<double>(grids.size());
}

double hb_ibs_from_grids(double omega, const std::vector<HbPairGrid>& grids) {
    double total = 0.0;
    std::vector<double> surv_after;
    for (const auto& g : grids) {
        surv_after.resize(g.d1.size());
        double surv = 1.0;
        for (std::size_t i = 0; i < g.d1.size(); ++i) {
            const double denom = omega * g.n1[i] + (1.0 - omega) * g.n2[i];
            const double hazard =
                denom > 0.0 ? (omega * g.d1[i] + (1.0 - omega) * g.d2[i]) / denom : 0.0;
            surv *= 1.0 - hazard;
            surv_after[i] = surv;
        }
        double pair_sum = 0.0;
        for (std::size_t t = 0; t < g.indicator.size(); ++t) {
            const int j = g.jumps_upto_day[t];
            const double s = j > 0 ? surv_after[static_cast<std::size_t>(j - 1)] : 1.0;
            const double d = g.indicator[t] - s;
            pair_sum += d * d;
        }
        total += pair_sum;
    }
    return total / static_cast<double>(grids.size());
}

} // namespace

double combo_loglik(const ComboParams& params, const TrainingSet& train) {
    const bool probit =
        params.method == CombineMethod::GP || params.method == CombineMethod::GPt;
    const auto stats = pair_stats(train, /*need_density=*/true, probit);
    return loglik_from_stats(params, stats);
}

double combo_ibs(const ComboParams& params, const TrainingSet& train, int t_max) {
    if (params.method == CombineMethod::HB) {
        const auto grids = hb_pair_grids(train, t_max);
        return hb_ibs_from_grids(params.omega, grids);
    }
    const bool probit =
        params.method == CombineMethod::GP || params.method == CombineMethod::GPt;
    const auto grids = pair_grids(train, t_max, probit);
    return ibs_from_grids(params, grids);
}

ComboParams ml_estimate(const ComboParams& spec, const TrainingSet& train) {
    if (spec.method != CombineMethod::LP && spec.method != CombineMethod::LP0 &&
        spec.method != CombineMethod::BP && spec.method != CombineMethod::GP &&
        spec.method != CombineMethod::GPt) {
        throw std::invalid_argument("ml_estimate: method has no likelihood");
    }
    if (train.pairs.empty()) {
        throw DegenerateTrainingError("ml_estimate: empty training set");
    }

    ParamCodec codec{spec.method, spec.restriction};
    if (spec.method == CombineMethod::LP0) {
        codec.method = CombineMethod::LP;
        codec.restriction = Restriction::FixedEqualWeights;
    }
    if (spec.method == CombineMethod::GPt) {
        codec.df = std::max(1, static_cast<int>(train.pairs.size()) - 1);
    }
    if (codec.size() == 0) {
        // nothing to estimate: the fixed-equal-weights benchmark
        return codec.decode({});
    }

    const bool probit =
        spec.method == CombineMethod::GP || spec.method == CombineMethod::GPt;
    const auto stats = pair_stats(train, /*need_density=*/true, probit);
    auto objective = [&stats](const ComboParams& p) { return loglik_from_stats(p, stats); };
    return optimize_params(codec, objective, stats.size(), method_tag(spec));
}

ComboParams minibs_estimate(const ComboParams& spec, const TrainingSet& train, int t_max) {
    if (t_max < 1) {
        throw std::invalid_argument("minibs_estimate: t_max must be >= 1");
    }
    if (spec.method != CombineMethod::LP && spec.method != CombineMethod::LP0 &&
        spec.method != CombineMethod::BP && spec.method != CombineMethod::GP &&
        spec.method != CombineMethod::HB) {
        throw std::invalid_argument("minibs_estimate: method not supported");
    }
    if (train.pairs.empty()) {
        throw DegenerateTrainingError("minibs_estimate: empty training set");
    }

    ParamCodec codec{spec.method, spec.restriction};
    if (spec.method == CombineMethod::LP0) {
        codec.method = CombineMethod::LP;
        codec.restriction = Restriction::FixedEqualWeights;
    }
    if (codec.size() == 0) {
        return codec.decode({});
    }

    if (spec.method == CombineMethod::HB) {
        const auto grids = hb_pair_grids(train, t_max);
        auto objective = [&grids](const ComboParams& p) {
            return -hb_ibs_from_grids(p.omega, grids);
        };
        return optimize_params(codec, objective, train.pairs.size(),
                               method_tag(spec) + 0x100);
    }

    const bool probit =
        spec.method == CombineMethod::GP || spec.method == CombineMethod::GPt;
    const auto grids = pair_grids(train, t_max, probit);
    auto objective = [&grids](const ComboParams& p) { return -ibs_from_grids(p, grids); };
    return optimize_params(codec, objective, train.pairs.size(), method_tag(spec) + 0x100);
}

} // namespace survblend

#include "survblend/combine.hpp"

#include <algorithm>
#include <cmath>

#include "survblend/specfun.hpp"

namespace survblend {

namespace {

double clamp_unit(double f) { return std::clamp(f, kPoolEps, 1.0 - kPoolEps); }

} // namespace

void validate(const ComboParams& p) {
    if (!(p.omega >= 0.0 && p.omega <= 1.0)) {
        throw std::invalid_argument("ComboParams: omega must lie in [0,1]");
    }
    if (!(p.sigma > 0.0)) {
        throw std::invalid_argument("ComboParams: sigma must be positive");
    }
    if (!(p.alpha > 0.0) || !(p.beta > 0.0)) {
        throw std::invalid_argument("ComboParams: alpha and beta must be positive");
    }
    if (p.method == CombineMethod::GPt && p.df < 1) {
        throw std::invalid_argument("ComboParams: df must be >= 1");
    }
    switch (p.restriction) {
        case Restriction::Full:
            break;
        case Restriction::FixMean:
        case Restriction::FixMeanVar:
            if (p.method != CombineMethod::GP && p.method != CombineMethod::GPt) {
                throw std::invalid_argument("ComboParams: mean/variance restrictions apply to GP only");
            }
            break;
        case Restriction::FixAlphaEqBeta:
            if (p.method != CombineMethod::BP) {
                throw std::invalid_argument("ComboParams: alpha=beta restriction applies to BP only");
            }
            break;
        case Restriction::FixedEqualWeights:
            if (p.method != CombineMethod::LP && p.method != CombineMethod::LP0) {
                throw std::invalid_argument("ComboParams: fixed equal weights apply to LP only");
            }
            break;
    }
}

std::string method_name(CombineMethod method) {
    switch (method) {
        case CombineMethod::LP: return "lp";
        case CombineMethod::BP: return "bp";
        case CombineMethod::GP: return "gp";
        case CombineMethod::GPt: return "gpt";
        case CombineMethod::HB: return "hb";
        case CombineMethod::LP0: return "lp0";
        case CombineMethod::Merge: return "merge";
    }
    return "?";
}

double CombinedCurve::survival(double t) const {
    if (blended) return blended->survival(t);

    double pooled = 0.0;
    switch (params.method) {
        case CombineMethod::LP:
        case CombineMethod::LP0:
            for (std::size_t k = 0; k < sources.size(); ++k) {
                pooled += weights[k] * sources[k].cdf(t);
            }
            return 1.0 - pooled;
        case CombineMethod::BP:
            for (std::size_t k = 0; k < sources.size(); ++k) {
                pooled += weights[k] * sources[k].cdf(t);
            }
            return 1.0 - specfun::beta_cdf(std::clamp(pooled, 0.0, 1.0), params.alpha, params.beta);
        case CombineMethod::GP:
        case CombineMethod::GPt: {
            for (std::size_t k = 0; k < sources.size(); ++k) {
                pooled += weights[k] * specfun::normal_quantile(clamp_unit(sources[k].cdf(t)));
            }
            const double z = (pooled - params.mu) / params.sigma;
            if (params.method == CombineMethod::GPt) {
                return 1.0 - specfun::student_t_cdf(z, static_cast<double>(params.df));
            }
            return 1.0 - specfun::normal_cdf(z);
        }
        default:
            break;
    }
    throw std::logic_error("CombinedCurve: unsupported method");
}

double CombinedCurve::survival_left(double t) const {
    if (blended) return blended->survival_left(t);

    double pooled = 0.0;
    switch (params.method) {
        case CombineMethod::LP:
        case CombineMethod::LP0:
            for (std::size_t k = 0; k < sources.size(); ++k) {
                pooled += weights[k] * sources[k].cdf_left(t);
            }
            return 1.0 - pooled;
        case CombineMethod::BP:
            for (std::size_t k = 0; k < sources.size(); ++k) {
                pooled += weights[k] * sources[k].cdf_left(t);
            }
            return 1.0 - specfun::beta_cdf(std::clamp(pooled, 0.0, 1.0), params.alpha, params.beta);
        case CombineMethod::GP:
        case CombineMethod::GPt: {
            for (std::size_t k = 0; k < sources.size(); ++k) {
                pooled += weights[k] * specfun::normal_quantile(clamp_unit(sources[k].cdf_left(t)));
            }
            const double z = (pooled - params.mu) / params.sigma;
            if (params.method == CombineMethod::GPt) {
                return 1.0 - specfun::student_t_cdf(z, static_cast<double>(params.df));
            }
            return 1.0 - specfun::normal_cdf(z);
        }
        default:
            break;
    }
    throw std::logic_error("CombinedCurve: unsupported method");
}

bool CombinedCurve::has_density() const {
    if (blended) return false;
    for (const auto& s : sources) {
        if (!s.has_density()) return false;
    }
    return true;
}

double CombinedCurve::density(double t) const {
    if (!has_density()) {
        throw NoDensityError("combined curve over step functions has no density");
    }
    switch (params.method) {
        case CombineMethod::LP:
        case CombineMethod::LP0: {
            double f = 0.0;
            for (std::size_t k = 0; k < sources.size(); ++k) {
                f += weights[k] * sources[k].density(t);
            }
            return f;
        }
        case CombineMethod::BP: {
            double pooled = 0.0, dpool = 0.0;
            for (std::size_t k = 0; k < sources.size(); ++k) {
                pooled += weights[k] * sources[k].cdf(t);
                dpool += weights[k] * sources[k].density(t);
            }
            return specfun::beta_pdf(std::clamp(pooled, 0.0, 1.0), params.alpha, params.beta) *
                   dpool;
        }
        case CombineMethod::GP:
        case CombineMethod::GPt: {
            double pooled = 0.0, dpool = 0.0;
            for (std::size_t k = 0; k < sources.size(); ++k) {
                const double fk = clamp_unit(sources[k].cdf(t));
                pooled += weights[k] * specfun::normal_quantile(fk);
                dpool += weights[k] * specfun::normal_quantile_deriv(fk) * sources[k].density(t);
            }
            const double z = (pooled - params.mu) / params.sigma;
            const double outer = params.method == CombineMethod::GPt
                                     ? specfun::student_t_pdf(z, static_cast<double>(params.df))
                                     : specfun::normal_pdf(z);
            return outer / params.sigma * dpool;
        }
        default:
            break;
    }
    throw std::logic_error("CombinedCurve: unsupported method");
}

namespace {

CombinedCurve make_pooled(CombineMethod method, SurvivalCurve f1, SurvivalCurve f2,
                          double omega) {
    CombinedCurve c;
    c.params.method = method;
    c.params.omega = omega;
    c.sources = {std::move(f1), std::move(f2)};
    c.weights = {omega, 1.0 - omega};
    return c;
}

} // namespace

CombinedCurve lp_combine(SurvivalCurve f1, SurvivalCurve f2, double omega) {
    auto c = make_pooled(CombineMethod::LP, std::move(f1), std::move(f2), omega);
    validate(c.params);
    return c;
}

CombinedCurve bp_combine(SurvivalCurve f1, SurvivalCurve f2, double omega, double alpha,
                         double beta) {
    auto c = make_pooled(CombineMethod::BP, std::move(f1), std::move(f2), omega);
    c.params.alpha = alpha;
    c.params.beta = beta;
    validate(c.params);
    return c;
}

CombinedCurve gp_combine(SurvivalCurve f1, SurvivalCurve f2, double omega, double mu,
                         double sigma) {
    auto c = make_pooled(CombineMethod::GP, std::move(f1), std::move(f2), omega);
    c.params.mu = mu;
    c.params.sigma = sigma;
    validate(c.params);
    return c;
}

CombinedCurve gpt_combine(SurvivalCurve f1, SurvivalCurve f2, double omega, double mu,
                          double sigma, int df) {
    if (df < 1) {
        throw std::domain_error("gpt_combine: df must be >= 1");
    }
    auto c = make_pooled(CombineMethod::GPt, std::move(f1), std::move(f2), omega);
    c.params.mu = mu;
    c.params.sigma = sigma;
    c.params.df = df;
    validate(c.params);
    return c;
}

CombinedCurve hb_combine(const Ensemble& ens1, const Ensemble& ens2, double omega) {
    validate_ensemble(ens1);
    validate_ensemble(ens2);
    if (!(omega >= 0.0 && omega <= 1.0)) {
        throw std::invalid_argument("hb_combine: omega must lie in [0,1]");
    }

    std::vector<double> times;
    for (const auto& m : ens1.members) {
        if (m.event) times.push_back(m.time);
    }
    for (const auto& m : ens2.members) {
        if (m.event) times.push_back(m.time);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    StepCurve blended;
    double surv = 1.0;
    for (double t : times) {
        double d1 = 0.0, n1 = 0.0, d2 = 0.0, n2 = 0.0;
        for (const auto& m : ens1.members) {
            if (m.time >= t) n1 += 1.0;
            if (m.event && m.time == t) d1 += 1.0;
        }
        for (const auto& m : ens2.members) {
            if (m.time >= t) n2 += 1.0;
            if (m.event && m.time == t) d2 += 1.0;
        }
        const double denom = omega * n1 + (1.0 - omega) * n2;
        const double hazard = denom > 0.0 ? (omega * d1 + (1.0 - omega) * d2) / denom : 0.0;
        if (hazard > 0.0) {
            surv *= 1.0 - hazard;
            blended.jump_times.push_back(t);
            blended.surv_values.push_back(surv);
        }
    }

    CombinedCurve c;
    c.params.method = CombineMethod::HB;
    c.params.omega = omega;
    c.weights = {omega, 1.0 - omega};
    c.blended = std::move(blended);
    return c;
}

LogNormalCurve merge_combine(const Ensemble& ens1, const Ensemble& ens2) {
    validate_ensemble(ens1);
    validate_ensemble(ens2);
    // Censoring horizons differ between the sources, so the merged member
    // list is fit directly rather than through a single-lead Ensemble.
    std::vector<CensoredTime> merged;
    merged.reserve(ens1.members.size() + ens2.members.size());
    merged.insert(merged.end(), ens1.members.begin(), ens1.members.end());
    merged.insert(merged.end(), ens2.members.begin(), ens2.members.end());
    return lognormal_ml_fit(std::span<const CensoredTime>(merged));
}

SurvivalCurve combine_with(const ComboParams& params, const SurvivalCurve& f1,
                           const SurvivalCurve& f2, const Ensemble* ens1,
                           const Ensemble* ens2) {
    switch (params.method) {
        case CombineMethod::LP:
            return lp_combine(f1, f2, params.omega);
        case CombineMethod::LP0:
            return lp_combine(f1, f2, 0.5);
        case CombineMethod::BP:
            return bp_combine(f1, f2, params.omega, params.alpha, params.beta);
        case CombineMethod::GP:
            return gp_combine(f1, f2, params.omega, params.mu, params.sigma);
        case CombineMethod::GPt:
            return gpt_combine(f1, f2, params.omega, params.mu, params.sigma, params.df);
        case CombineMethod::HB:
            if (ens1 == nullptr || ens2 == nullptr) {
                throw std::invalid_argument("combine_with: HB requires raw ensembles");
            }
            return hb_combine(*ens1, *ens2, params.omega);
        case CombineMethod::Merge:
            if (ens1 == nullptr || ens2 == nullptr) {
                throw std::invalid_argument("combine_with: merge requires raw ensembles");
            }
            return merge_combine(*ens1, *ens2);
    }
    throw std::logic_error("combine_with: unknown method");
}

} // namespace survblend

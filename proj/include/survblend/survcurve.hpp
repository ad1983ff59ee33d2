#pragma once

#include <concepts>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace survblend {

/// A possibly right-censored event time. event = true means the event was
/// observed at `time`; event = false means the observation was censored
/// there and the true event time is only known to exceed it.
struct CensoredTime {
    double time = 0.0;
    bool event = true;
};

/// A set of time-to-event forecasts from one source, all sharing a common
/// maximum lead time. Censored members sit exactly at the lead time.
struct Ensemble {
    std::vector<CensoredTime> members;
    double max_lead_time = 0.0;
    std::string source_id;
};

/// Throws std::invalid_argument when the ensemble violates its invariants
/// (empty, nonpositive times, censoring away from the lead time).
void validate_ensemble(const Ensemble& ens);

class NoDensityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Evaluable survival function. Implementations are immutable after
/// construction and safe to share across threads.
class Curve {
public:
    virtual ~Curve() = default;

    virtual double survival(double t) const = 0;

    /// Left limit S(t-); differs from survival(t) only for step functions.
    virtual double survival_left(double t) const { return survival(t); }

    virtual bool has_density() const { return false; }

    virtual double density(double) const {
        throw NoDensityError("density undefined for this curve");
    }
};

/// Value wrapper around a shared immutable Curve: cheap to copy, evaluable
/// as S(t), F(t) = 1 - S(t) and (where defined) the density f(t).
class SurvivalCurve {
public:
    SurvivalCurve() = default;

    template <class C>
        requires std::derived_from<C, Curve>
    SurvivalCurve(C curve) : impl_(std::make_shared<const C>(std::move(curve))) {}

    explicit SurvivalCurve(std::shared_ptr<const Curve> impl) : impl_(std::move(impl)) {}

    bool valid() const { return impl_ != nullptr; }
    double survival(double t) const { return impl_->survival(t); }
    double survival_left(double t) const { return impl_->survival_left(t); }
    double cdf(double t) const { return 1.0 - impl_->survival(t); }
    double cdf_left(double t) const { return 1.0 - impl_->survival_left(t); }
    bool has_density() const { return impl_->has_density(); }
    double density(double t) const { return impl_->density(t); }
    const Curve& impl() const { return *impl_; }

private:
    std::shared_ptr<const Curve> impl_;
};

/// Right-continuous step survival function: S(t) = surv_values[i] for
/// t in [jump_times[i], jump_times[i+1]), and 1 before the first jump.
class StepCurve final : public Curve {
public:
    std::vector<double> jump_times;   // strictly increasing
    std::vector<double> surv_values;  // nonincreasing, starting <= 1

    StepCurve() = default;
    StepCurve(std::vector<double> times, std::vector<double> values)
        : jump_times(std::move(times)), surv_values(std::move(values)) {}

    double survival(double t) const override;
    double survival_left(double t) const override;
};

/// Log-normal survival curve with log-scale mean xi and sd tau. When
/// correction_df is set the curve is the estimation-uncertainty-corrected
/// version: a student-t CDF with correction_df degrees of freedom applied
/// to the log-time standardized with the inflated scale
/// tau * sqrt(1 + 1/n_k), n_k = correction_df + 1.
class LogNormalCurve final : public Curve {
public:
    double xi = 0.0;
    double tau = 1.0;
    std::optional<int> correction_df;

    LogNormalCurve() = default;
    LogNormalCurve(double xi_in, double tau_in, std::optional<int> correction = std::nullopt)
        : xi(xi_in), tau(tau_in), correction_df(correction) {}

    double survival(double t) const override;
    bool has_density() const override { return true; }
    double density(double t) const override;

    double effective_scale() const;
};

/// Kaplan-Meier estimate over survival data. Members with identical event
/// times aggregate into one jump; at ties, events precede censoring.
StepCurve km_estimate(std::span<const CensoredTime> members);
StepCurve km_estimate(const Ensemble& ens);

/// Censored maximum-likelihood fit of the log-normal model: censored
/// members contribute log S, event members log f. Requires at least two
/// event members with distinct times; throws DegenerateFitError otherwise.
/// The span overload accepts mixed censoring horizons (merged ensembles).
LogNormalCurve lognormal_ml_fit(std::span<const CensoredTime> members);
LogNormalCurve lognormal_ml_fit(const Ensemble& ens);

/// Fit by minimizing the sum over members of the member-wise integrated
/// Brier score over integer days 1..t_max; a censored member's time-sum
/// stops at its censoring time. Requires at least one event member.
LogNormalCurve lognormal_minibs_fit(const Ensemble& ens, double t_max);

/// Lower bound enforced on tau during numerical fitting.
inline constexpr double kTauLowerBound = 0.01;

/// Student-t corrected curve accounting for parameter-estimation
/// uncertainty in a fit based on n_k members. Converges pointwise to the
/// uncorrected curve as n_k grows.
LogNormalCurve corrected_curve(const LogNormalCurve& fit, int n_k);

} // namespace survblend

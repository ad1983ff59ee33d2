#pragma once

#include <optional>
#include <string>
#include <vector>

#include "survblend/survcurve.hpp"

namespace survblend {

enum class CombineMethod { LP, BP, GP, GPt, HB, LP0, Merge };

enum class Restriction {
    Full,
    FixMean,            // GP2: mu = 0
    FixMeanVar,         // GP1: mu = 0, sigma = 1
    FixAlphaEqBeta,     // BP2: alpha = beta
    FixedEqualWeights,  // LP0: omega = 0.5, nothing estimated
};

struct ComboParams {
    CombineMethod method = CombineMethod::LP;
    double omega = 0.5;   // weight on source 1
    double alpha = 1.0;   // BP
    double beta = 1.0;    // BP
    double mu = 0.0;      // GP / GPt
    double sigma = 1.0;   // GP / GPt
    int df = 1;           // GPt
    Restriction restriction = Restriction::Full;
};

/// Throws std::invalid_argument on violated invariants (omega outside
/// [0,1], nonpositive sigma/alpha/beta, df < 1, restriction inconsistent
/// with the method).
void validate(const ComboParams& params);

std::string method_name(CombineMethod method);

/// CDF values are clamped to [kPoolEps, 1-kPoolEps] before the probit
/// transform in GP/GPt, so the output saturates at the boundary instead
/// of diverging.
inline constexpr double kPoolEps = 1e-12;

/// A combined forecast distribution. Parametric combinations store their
/// sources and weights and evaluate lazily; HB precomputes its blended
/// step function at construction.
class CombinedCurve final : public Curve {
public:
    ComboParams params;
    std::vector<SurvivalCurve> sources;
    std::vector<double> weights;       // same length as sources, sums to 1
    std::optional<StepCurve> blended;  // HB only

    double survival(double t) const override;
    double survival_left(double t) const override;
    bool has_density() const override;
    double density(double t) const override;
};

/// Linear pool: S = 1 - [w F1 + (1-w) F2].
CombinedCurve lp_combine(SurvivalCurve f1, SurvivalCurve f2, double omega);

/// Beta-transformed linear pool: S = 1 - B_{a,b}[w F1 + (1-w) F2].
CombinedCurve bp_combine(SurvivalCurve f1, SurvivalCurve f2, double omega, double alpha,
                         double beta);

/// Gaussian pool: S = 1 - Phi[(w q(F1) + (1-w) q(F2) - mu)/sigma] with
/// q the standard normal quantile function.
CombinedCurve gp_combine(SurvivalCurve f1, SurvivalCurve f2, double omega, double mu,
                         double sigma);

/// Student-t variant of the Gaussian pool: the outer Phi is replaced by
/// the t CDF with df degrees of freedom; the inner transforms stay probit.
CombinedCurve gpt_combine(SurvivalCurve f1, SurvivalCurve f2, double omega, double mu,
                          double sigma, int df);

/// Hazard blending over the union of event times of both ensembles:
/// lambda_i = (w d1_i + (1-w) d2_i) / (w n1_i + (1-w) n2_i), with a zero
/// blended risk set giving lambda_i = 0.
CombinedCurve hb_combine(const Ensemble& ens1, const Ensemble& ens2, double omega);

/// Log-normal ML fit on the concatenated member lists of both ensembles.
LogNormalCurve merge_combine(const Ensemble& ens1, const Ensemble& ens2);

/// Builds the combined curve for a parameter set. HB needs the raw
/// ensembles; Merge ignores the fitted curves.
SurvivalCurve combine_with(const ComboParams& params, const SurvivalCurve& f1,
                           const SurvivalCurve& f2, const Ensemble* ens1 = nullptr,
                           const Ensemble* ens2 = nullptr);

} // namespace survblend

#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace survblend::specfun {

/// Standard normal CDF. Saturates to 0/1 in the far tails; absolute
/// error below 1e-12 everywhere.
double normal_cdf(double x);

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal quantile function. Throws std::domain_error unless
/// 0 < p < 1.
double normal_quantile(double p);

/// Derivative of the quantile function, 1/phi(Phi^-1(p)). Strictly
/// positive on (0,1); throws std::domain_error at the boundary.
double normal_quantile_deriv(double p);

/// Regularized incomplete beta function I_x(alpha, beta).
/// Throws std::domain_error on alpha <= 0, beta <= 0 or x outside [0,1].
double beta_cdf(double x, double alpha, double beta);

/// Beta(alpha, beta) density.
double beta_pdf(double x, double alpha, double beta);

/// CDF of the student-t distribution with df degrees of freedom (df >= 1).
double student_t_cdf(double x, double df);

/// Student-t density.
double student_t_pdf(double x, double df);

// Smooth bijections used to optimize constrained parameters on an
// unconstrained scale: weights through logit/logistic, positive
// parameters through log/exp.
double logit(double p);
double logistic(double x);

struct MinimizeOptions {
    double tol = 1e-8;       // simplex-diameter stopping rule, parameter scale
    int max_iterations = 5000;
};

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
};

class NonConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Derivative-free Nelder-Mead minimization. Deterministic: identical
/// inputs give bit-identical outputs. Throws NonConvergenceError when the
/// simplex diameter has not reached opts.tol within opts.max_iterations.
MinimizeResult minimize(const std::function<double(std::span<const double>)>& objective,
                        std::span<const double> start,
                        const MinimizeOptions& opts = {});

} // namespace survblend::specfun

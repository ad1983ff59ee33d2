#include "survblend/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace survblend::specfun {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;
constexpr double kPi = 3.141592653589793;

// Modified Lentz evaluation of the incomplete-beta continued fraction
// (Numerical Recipes form). Converges for x < (a+1)/(a+b+2).
double beta_continued_fraction(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 3e-16;
    const int max_iter = 200000;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

} // namespace

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / kSqrt2);
}

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / kSqrt2Pi;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("normal_quantile: p must lie strictly in (0,1)");
    }
    // Acklam's rational approximation, then one Halley step against
    // normal_cdf to reach full double precision.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double e = normal_cdf(x) - p;
    const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

double normal_quantile_deriv(double p) {
    const double z = normal_quantile(p);
    return 1.0 / normal_pdf(z);
}

double beta_cdf(double x, double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw std::domain_error("beta_cdf: alpha and beta must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("beta_cdf: x must lie in [0,1]");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double front =
        std::exp(alpha * std::log(x) + beta * std::log1p(-x) - log_beta(alpha, beta));
    if (x < (alpha + 1.0) / (alpha + beta + 2.0)) {
        return front * beta_continued_fraction(x, alpha, beta) / alpha;
    }
    return 1.0 - front * beta_continued_fraction(1.0 - x, beta, alpha) / beta;
}

double beta_pdf(double x, double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw std::domain_error("beta_pdf: alpha and beta must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("beta_pdf: x must lie in [0,1]");
    }
    if (x == 0.0) {
        if (alpha < 1.0) return std::numeric_limits<double>::infinity();
        return alpha > 1.0 ? 0.0 : std::exp(-log_beta(alpha, beta));
    }
    if (x == 1.0) {
        if (beta < 1.0) return std::numeric_limits<double>::infinity();
        return beta > 1.0 ? 0.0 : std::exp(-log_beta(alpha, beta));
    }
    return std::exp((alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x) -
                    log_beta(alpha, beta));
}

double student_t_cdf(double x, double df) {
    if (!(df >= 1.0)) {
        throw std::domain_error("student_t_cdf: df must be >= 1");
    }
    if (x == 0.0) return 0.5;
    const double tail = 0.5 * beta_cdf(df / (df + x * x), 0.5 * df, 0.5);
    return x > 0.0 ? 1.0 - tail : tail;
}

double student_t_pdf(double x, double df) {
    if (!(df >= 1.0)) {
        throw std::domain_error("student_t_pdf: df must be >= 1");
    }
    const double log_norm = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                            0.5 * std::log(df * kPi);
    return std::exp(log_norm - 0.5 * (df + 1.0) * std::log1p(x * x / df));
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("logit: p must lie strictly in (0,1)");
    }
    return std::log(p / (1.0 - p));
}

double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

MinimizeResult minimize(const std::function<double(std::span<const double>)>& objective,
                        std::span<const double> start, const MinimizeOptions& opts) {
    const int n = static_cast<int>(start.size());
    if (n < 1) {
        throw std::invalid_argument("minimize: empty start point");
    }

    // Initial simplex: start plus one perturbed vertex per coordinate.
    std::vector<std::vector<double>> x(n + 1, std::vector<double>(start.begin(), start.end()));
    for (int i = 0; i < n; ++i) {
        x[i + 1][i] += (x[i + 1][i] != 0.0) ? 0.1 * std::fabs(x[i + 1][i]) + 0.05 : 0.25;
    }
    std::vector<double> fx(n + 1);
    for (int j = 0; j <= n; ++j) fx[j] = objective(x[j]);

    auto order = [&]() {
        // insertion sort keeps the ordering deterministic and cheap for n <= 3
        for (int i = 1; i <= n; ++i) {
            auto xv = std::move(x[i]);
            const double fv = fx[i];
            int j = i - 1;
            while (j >= 0 && fx[j] > fv) {
                x[j + 1] = std::move(x[j]);
                fx[j + 1] = fx[j];
                --j;
            }
            x[j + 1] = std::move(xv);
            fx[j + 1] = fv;
        }
    };
    auto diameter = [&]() {
        double d = 0.0;
        for (int j = 1; j <= n; ++j) {
            for (int i = 0; i < n; ++i) {
                d = std::max(d, std::fabs(x[j][i] - x[0][i]));
            }
        }
        return d;
    };

    std::vector<double> centroid(n), xr(n), xt(n);
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        order();
        if (diameter() <= opts.tol) {
            return {x[0], fx[0], iter};
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) centroid[i] += x[j][i];
        }
        for (int i = 0; i < n; ++i) centroid[i] /= n;

        for (int i = 0; i < n; ++i) xr[i] = centroid[i] + (centroid[i] - x[n][i]);
        const double fr = objective(xr);

        if (fr < fx[0]) {
            for (int i = 0; i < n; ++i) xt[i] = centroid[i] + 2.0 * (xr[i] - centroid[i]);
            const double fe = objective(xt);
            if (fe < fr) {
                x[n] = xt;
                fx[n] = fe;
            } else {
                x[n] = xr;
                fx[n] = fr;
            }
        } else if (fr < fx[n - 1]) {
            x[n] = xr;
            fx[n] = fr;
        } else {
            const bool outside = fr < fx[n];
            if (outside) {
                for (int i = 0; i < n; ++i) xt[i] = centroid[i] + 0.5 * (xr[i] - centroid[i]);
            } else {
                for (int i = 0; i < n; ++i) xt[i] = centroid[i] + 0.5 * (x[n][i] - centroid[i]);
            }
            const double fc = objective(xt);
            if (fc < (outside ? fr : fx[n])) {
                x[n] = xt;
                fx[n] = fc;
            } else {
                for (int j = 1; j <= n; ++j) {
                    for (int i = 0; i < n; ++i) {
                        x[j][i] = x[0][i] + 0.5 * (x[j][i] - x[0][i]);
                    }
                    fx[j] = objective(x[j]);
                }
            }
        }
    }
    throw NonConvergenceError("minimize: simplex did not converge within iteration cap");
}

} // namespace survblend::specfun

#pragma once

#include <functional>
#include <vector>

namespace blp {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool converged = true;
    int intervals = 0;
};

// Adaptive Gauss-Kronrod (G7,K15) on [a,b] to absolute tolerance abs_tol.
// `kinks` are interior points where the integrand is only piecewise smooth
// (compensation boundaries, truncation levels); the initial partition is
// split there so each leaf sees a smooth piece.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol, const std::vector<double>& kinks = {},
                           int max_intervals = 20000);

// Tail sum accelerator for decreasing, convex series terms:
//   sum_{m > M} f(m)  ~=  integral_{M+1/2}^inf f(x) dx
// with midpoint-rule error bounded by |f'(M)| / 24. The improper integral is
// evaluated in log space: `term_log(y)` must equal f(e^y) * e^y computed
// stably for large y (x itself would overflow), so that the substitution
// y = T/w maps the domain to (0, 1] and tames 1/(x log^2 x)-type decay.
struct TailSum {
    double value = 0.0;
    double error_bound = 0.0;
};
TailSum tail_sum_decreasing(const std::function<double(double)>& f,
                            const std::function<double(double)>& term_log, double M,
                            double abs_tol = 1e-13);

}  // namespace blp

#include "blp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace blp {

namespace {

// Kronrod-15 abscissae on [0,1] and weights; Gauss-7 weights on the odd nodes.
constexpr double kKronrodX[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
constexpr double kKronrodW[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kGaussW[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Cell {
    double a, b, value, err;
    bool operator<(const Cell& o) const { return err < o.err; }
};

Cell evaluate_cell(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * kKronrodX[i]);
        fv[14 - i] = f(c + h * kKronrodX[i]);
    }
    fv[7] = f(c);
    double kron = kKronrodW[7] * fv[7];
    double gauss = kGaussW[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        kron += kKronrodW[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1) gauss += kGaussW[i / 2] * (fv[i] + fv[14 - i]);
    }
    kron *= h;
    gauss *= h;
    // the G7/K15 difference over-estimates the K15 error on smooth pieces;
    // keep it as-is rather than sharpening (sharpened estimates proved
    // optimistic on oscillatory integrands)
    const double diff = std::abs(kron - gauss);
    return {a, b, kron, std::max(diff, std::abs(kron) * 5e-17)};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol, const std::vector<double>& kinks,
                           int max_intervals) {
    QuadratureResult out;
    if (!(b > a)) return out;

    std::vector<double> pts{a, b};
    for (double k : kinks)
        if (k > a && k < b) pts.push_back(k);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    std::priority_queue<Cell> heap;
    double total = 0.0, total_err = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        Cell cell = evaluate_cell(f, pts[i], pts[i + 1]);
        total += cell.value;
        total_err += cell.err;
        heap.push(cell);
        ++out.intervals;
    }

    while (total_err > abs_tol && out.intervals < max_intervals) {
        Cell worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {  // interval at FP resolution
            heap.push({worst.a, worst.b, worst.value, 0.0});
            total_err -= worst.err;
            continue;
        }
        Cell left = evaluate_cell(f, worst.a, mid);
        Cell right = evaluate_cell(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        ++out.intervals;
    }

    out.value = total;
    out.error_estimate = total_err;
    out.converged = total_err <= abs_tol;
    return out;
}

TailSum tail_sum_decreasing(const std::function<double(double)>& f,
                            const std::function<double(double)>& term_log, double M,
                            double abs_tol) {
    TailSum out;
    const double T = std::log(M + 0.5);
    // integral_{M+1/2}^inf f dx = integral_T^inf term_log(y) dy, then y = T/w
    auto g = [&term_log, T](double w) {
        if (w <= 0.0) return 0.0;
        const double y = T / w;
        return term_log(y) * T / (w * w);
    };
    QuadratureResult q = integrate(g, 0.0, 1.0, abs_tol);
    out.value = q.value;

    // midpoint-rule second-order term: |sum - integral| <= |f'(M)|/24,
    // f' estimated by central difference (terms are smooth in m)
    const double h = std::max(1.0, M * 1e-4);
    const double fp = (f(M + h) - f(M - h)) / (2.0 * h);
    out.error_bound = std::abs(fp) / 24.0 + q.error_estimate;
    return out;
}

}  // namespace blp

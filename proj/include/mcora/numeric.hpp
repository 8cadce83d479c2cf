#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "mcora/errors.hpp"

namespace mcora {

// Root of f on [lo, hi] where f(lo) and f(hi) bracket zero and f is monotone
// non-decreasing. Converges to |hi-lo| <= rel_tol * max(1, |hi|).
template <class F>
double bisect_increasing(F&& f, double lo, double hi, double rel_tol = 1e-12) {
    double flo = f(lo);
    if (flo >= 0.0) return lo;
    if (f(hi) <= 0.0) return hi;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (hi - lo <= rel_tol * std::max(1.0, std::abs(hi))) return mid;
        if (f(mid) <= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace detail {

template <class F>
double simpson(F&& f, double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adaptive_simpson_rec(F&& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(f, a, m, fa, flm, fm);
    double right = simpson(f, m, b, fm, frm, fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive Simpson quadrature with relative tolerance on the running estimate.
template <class F>
double integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-10, int max_depth = 48) {
    if (b <= a) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = detail::simpson(f, a, b, fa, fm, fb);
    double tol = rel_tol * std::max(1.0, std::abs(whole));
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// Golden-section minimizer for a unimodal function on [a, b].
template <class F>
double golden_min(F&& f, double a, double b, double tol = 1e-12, int max_iter = 200) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < max_iter && (b - a) > tol * std::max(1.0, std::abs(b)); ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

struct NelderMeadResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

// Deterministic Nelder-Mead (reflection/expansion/contraction/shrink) with
// index-stable tie breaking so results do not depend on sort internals.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, double initial_step,
                                    int max_iter = 4000, double xatol = 1e-11,
                                    double fatol = 1e-13) {
    const size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (size_t i = 0; i < n; ++i) {
        double h = initial_step * std::max(1.0, std::abs(x0[i]));
        pts[i + 1][i] += h;
    }
    for (size_t i = 0; i <= n; ++i) fv[i] = f(pts[i]);

    std::vector<size_t> order(n + 1);
    NelderMeadResult res;
    int it = 0;
    for (; it < max_iter; ++it) {
        for (size_t i = 0; i <= n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return fv[a] < fv[b]; });
        size_t best = order[0], worst = order[n], second = order[n - 1];

        double spread = 0.0, fspread = std::abs(fv[worst] - fv[best]);
        for (size_t i = 0; i < n; ++i)
            spread = std::max(spread, std::abs(pts[worst][i] - pts[best][i]));
        if (spread <= xatol * std::max(1.0, std::abs(pts[best][0])) && fspread <= fatol) break;

        std::vector<double> centroid(n, 0.0);
        for (size_t k = 0; k <= n; ++k) {
            if (k == worst) continue;
            for (size_t i = 0; i < n; ++i) centroid[i] += pts[k][i] / double(n);
        }
        auto blend = [&](double t) {
            std::vector<double> p(n);
            for (size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (centroid[i] - pts[worst][i]);
            return p;
        };
        std::vector<double> xr = blend(1.0);
        double fr = f(xr);
        if (fr < fv[best]) {
            std::vector<double> xe = blend(2.0);
            double fe = f(xe);
            if (fe < fr) {
                pts[worst] = std::move(xe);
                fv[worst] = fe;
            } else {
                pts[worst] = std::move(xr);
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            pts[worst] = std::move(xr);
            fv[worst] = fr;
        } else {
            bool outside = fr < fv[worst];
            std::vector<double> xc = blend(outside ? 0.5 : -0.5);
            double fc = f(xc);
            if (fc < std::min(fr, fv[worst])) {
                pts[worst] = std::move(xc);
                fv[worst] = fc;
            } else {
                for (size_t k = 0; k <= n; ++k) {
                    if (k == best) continue;
                    for (size_t i = 0; i < n; ++i)
                        pts[k][i] = pts[best][i] + 0.5 * (pts[k][i] - pts[best][i]);
                    fv[k] = f(pts[k]);
                }
            }
        }
    }
    size_t bi = 0;
    for (size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[bi]) bi = i;
    res.x = pts[bi];
    res.value = fv[bi];
    res.iterations = it;
    res.converged = it < max_iter;
    return res;
}

} // namespace mcora

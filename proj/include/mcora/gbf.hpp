#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mcora/core.hpp"
#include "mcora/errors.hpp"
#include "mcora/numeric.hpp"
#include "mcora/pf.hpp"
#include "mcora/threshold.hpp"

namespace mcora {

// gamma values within this band route to the gamma = 1 formulas everywhere;
// the (gamma-1) powers cancel catastrophically closer in.
inline constexpr double kGammaOneBand = 1e-6;

inline bool is_gamma_one(double gamma) { return std::abs(gamma - 1.0) < kGammaOneBand; }

// Isoelastic fairness kernel f of Eq. (3).
inline double f_value(double x, double gamma) {
    if (gamma < 0.0) raise(errc::gamma_unsupported, "gamma must be >= 0");
    if (x <= 0.0) {
        if (gamma >= 1.0) raise(errc::non_positive_utility, "f undefined at x <= 0");
        return 0.0;
    }
    if (is_gamma_one(gamma)) return std::log(x);
    return std::pow(x, 1.0 - gamma) / (1.0 - gamma);
}

// Theorem-7 utilization kernel F_j(v; gamma), 1-based class index j.
// gamma = +inf uses the exponent limits (gamma-1)/gamma -> 1, gamma/(gamma-1) -> 1.
inline double utilization_F(double v, double gamma, int j, const ClassProfile& p) {
    const int K = p.num_classes;
    if (j < 1 || j > K) raise(errc::bad_class_id, "utilization_F class index");
    if (gamma <= 0.0) raise(errc::gamma_unsupported, "utilization_F needs gamma > 0");
    if (is_gamma_one(gamma)) return (1.0 + std::log(v)) / double(K);
    if (std::isinf(gamma)) {
        double S = 0.0, S1 = 0.0;
        for (int i = 1; i <= K; ++i) {
            if (i == j) continue;
            S += v / p.theta(i);
            S1 += 1.0 / p.theta(i);
        }
        return 1.0 / (S + 1.0) + std::log(v * (S1 + 1.0) / (S + 1.0));
    }
    double e = (gamma - 1.0) / gamma;
    if (gamma > 1.0) {
        double S = 0.0, S1 = 0.0;
        for (int i = 1; i <= K; ++i) {
            if (i == j) continue;
            S += std::pow(v / p.theta(i), e);
            S1 += std::pow(1.0 / p.theta(i), e);
        }
        return 1.0 / (S + 1.0) +
               gamma / (gamma - 1.0) * std::log(std::pow(v, e) * (S1 + 1.0) / (S + 1.0));
    }
    double ve = std::pow(v, e);
    double denom = double(K - 1) * ve + 1.0;
    return 1.0 / denom + gamma / (gamma - 1.0) * std::log(double(K) * ve / denom);
}

// Inner max of Eq. (5) over the boundary vertices v_j in {1, theta_j}; the
// gamma = 1 and gamma = inf aggregations are the product and max limits.
inline double vertex_aggregate_beta(std::span<const double> beta_j, double gamma,
                                    const ClassProfile& p) {
    const int K = p.num_classes;
    if (is_gamma_one(gamma)) {
        double prod = 0.0;
        for (double b : beta_j) prod += std::log(b);
        return std::exp(prod / double(K));
    }
    if (std::isinf(gamma)) {
        double mx = 1.0;
        for (double b : beta_j) mx = std::max(mx, b);
        return mx;
    }
    if (K > 20) raise(errc::too_many_classes, "vertex enumeration capped at K = 20");
    double e = (1.0 - gamma) / gamma;
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << K); ++mask) {
        double num = 0.0, den = 0.0;
        for (int j = 0; j < K; ++j) {
            double vj = (mask >> j) & 1 ? p.thetas[size_t(j)] : 1.0;
            double w = std::pow(vj, e);
            num += std::pow(beta_j[size_t(j)], gamma - 1.0) * w;
            den += w;
        }
        best = std::max(best, std::exp(std::log(num / den) / (gamma - 1.0)));
    }
    return best;
}

struct BetaWeights {
    std::vector<double> beta_j;
    double beta = 1.0;
};

namespace detail {

// Feasibility of Eq. (5)/(6): sum_j psi_j(theta_j) <= B, i.e. sum F_j/beta_j <= 1.
inline bool gbf_budget_ok(std::span<const double> beta_j, std::span<const double> Ftheta,
                          double tol = 1e-9) {
    double s = 0.0;
    for (size_t j = 0; j < beta_j.size(); ++j) s += Ftheta[j] / beta_j[j];
    return s <= 1.0 + tol;
}

// Coordinate descent on budget shares x_j = F_j(theta_j)/beta_j over the
// simplex sum x = 1, 0 < x_j <= min(F_j, 1); pairwise golden-section transfers.
inline BetaWeights gbf_coordinate_descent(const ClassProfile& p, double gamma,
                                          std::span<const double> Ftheta) {
    const int K = p.num_classes;
    std::vector<double> cap(size_t(K));
    for (int j = 0; j < K; ++j) cap[size_t(j)] = std::min(Ftheta[size_t(j)], 1.0);
    std::vector<double> x(size_t(K), 1.0 / double(K));
    // project the start into the caps
    for (int rounds = 0; rounds < K; ++rounds) {
        double excess = 0.0, room = 0.0;
        for (int j = 0; j < K; ++j) {
            if (x[size_t(j)] > cap[size_t(j)]) {
                excess += x[size_t(j)] - cap[size_t(j)];
                x[size_t(j)] = cap[size_t(j)];
            } else {
                room += cap[size_t(j)] - x[size_t(j)];
            }
        }
        if (excess <= 1e-15 || room <= 0.0) break;
        for (int j = 0; j < K; ++j)
            if (x[size_t(j)] < cap[size_t(j)])
                x[size_t(j)] += excess * (cap[size_t(j)] - x[size_t(j)]) / room;
    }
    auto beta_of = [&](const std::vector<double>& xs) {
        std::vector<double> b(size_t(K));
        for (int j = 0; j < K; ++j) b[size_t(j)] = Ftheta[size_t(j)] / xs[size_t(j)];
        return b;
    };
    std::vector<double> bj = beta_of(x);
    double best = vertex_aggregate_beta(bj, gamma, p);
    for (int sweep = 0; sweep < 200; ++sweep) {
        double before = best;
        for (int a = 0; a < K; ++a) {
            for (int c = a + 1; c < K; ++c) {
                double pool = x[size_t(a)] + x[size_t(c)];
                double lo = std::max(1e-12, pool - cap[size_t(c)]);
                double hi = std::min(cap[size_t(a)], pool - 1e-12);
                if (hi <= lo) continue;
                auto obj = [&](double xa) {
                    std::vector<double> xs = x;
                    xs[size_t(a)] = xa;
                    xs[size_t(c)] = pool - xa;
                    return vertex_aggregate_beta(beta_of(xs), gamma, p);
                };
                double xa = golden_min(obj, lo, hi, 1e-13);
                double val = obj(xa);
                if (val < best) {
                    best = val;
                    x[size_t(a)] = xa;
                    x[size_t(c)] = pool - xa;
                }
            }
        }
        if (before - best < 1e-8) break;
    }
    bj = beta_of(x);
    return BetaWeights{std::move(bj), best};
}

// Appendix C.2 closed forms for K = 2 (ratio branch); validity of the branch is
// settled by comparing true aggregated values among candidates.
inline bool gbf_k2_ratio_branch(const ClassProfile& p, double gamma, double F1, double F2,
                                BetaWeights& out) {
    double t1 = p.thetas[0], t2 = p.thetas[1];
    double b1, b2;
    if (gamma > 1.0) {
        double e = (gamma - 1.0) / gamma;
        b1 = F2 * std::pow(std::pow(t1, e) * F1 / F2, 1.0 / gamma) + F1;
        b2 = F1 * std::pow(std::pow(t1, -e) * F2 / F1, 1.0 / gamma) + F2;
    } else {
        double ee = (1.0 - gamma) / gamma;
        b1 = F2 * std::pow(std::pow(t2, ee) * F1 / F2, 1.0 / gamma) + F1;
        b2 = F1 * std::pow(std::pow(t2, -ee) * F2 / F1, 1.0 / gamma) + F2;
    }
    if (!(b1 >= 1.0 && b2 >= 1.0) || !std::isfinite(b1) || !std::isfinite(b2)) return false;
    out.beta_j = {b1, b2};
    out.beta = vertex_aggregate_beta(out.beta_j, gamma, p);
    return true;
}

} // namespace detail

// Eqs. (5)/(6): the per-class weights beta_j and the aggregated guarantee beta.
inline BetaWeights solve_beta_weights(const ClassProfile& p, double gamma) {
    validate_profile(p);
    const int K = p.num_classes;
    if (gamma <= 0.0) raise(errc::gamma_unsupported, "solve_beta_weights needs gamma > 0");
    if (K > 20) raise(errc::too_many_classes, "K capped at 20 for the minimax solver");

    if (is_gamma_one(gamma)) {
        // beta_j = alpha_j with the budget exactly binding; beta is the geometric mean
        BetaWeights bw;
        bw.beta_j = class_alphas(p);
        double s = 0.0;
        for (double a : bw.beta_j) s += std::log(a);
        bw.beta = std::exp(s / double(K));
        return bw;
    }

    std::vector<double> Ftheta(size_t(K));
    for (int j = 1; j <= K; ++j)
        Ftheta[size_t(j - 1)] = utilization_F(p.thetas[size_t(j - 1)], gamma, j, p);

    // equal-weights candidate: budget binds at beta_j = sum F
    double sumF = 0.0;
    for (double f : Ftheta) sumF += f;
    BetaWeights best;
    best.beta_j.assign(size_t(K), std::max(1.0, sumF));
    best.beta = vertex_aggregate_beta(best.beta_j, gamma, p);

    if (std::isinf(gamma)) return best; // equalization is optimal for the max aggregation

    if (K == 2) {
        BetaWeights ratio;
        if (detail::gbf_k2_ratio_branch(p, gamma, Ftheta[0], Ftheta[1], ratio) &&
            detail::gbf_budget_ok(ratio.beta_j, Ftheta) && ratio.beta < best.beta)
            best = std::move(ratio);
    }
    BetaWeights cd = detail::gbf_coordinate_descent(p, gamma, Ftheta);
    if (detail::gbf_budget_ok(cd.beta_j, Ftheta) && cd.beta < best.beta) best = std::move(cd);
    return best;
}

// Theorem-7 thresholds: phi_j is the numeric inverse of psi_j = (B/beta_j) F_j.
inline LocalThresholdSet build_gbf_thresholds(const ClassProfile& p, double gamma) {
    BetaWeights bw = solve_beta_weights(p, gamma);
    const int K = p.num_classes;
    const double B = p.budget;
    LocalThresholdSet set;
    set.gamma = gamma;
    set.guarantee = bw.beta;
    set.beta_weights = bw.beta_j;
    set.b.resize(size_t(K));
    set.phi.reserve(size_t(K));
    double total = 0.0;
    for (int j = 1; j <= K; ++j) {
        double bj = bw.beta_j[size_t(j - 1)];
        UtilizationFn fn;
        fn.v_lo = 1.0;
        fn.v_hi = p.thetas[size_t(j - 1)];
        fn.psi = [B, bj, gamma, j, p](double v) { return B / bj * utilization_F(v, gamma, j, p); };
        set.phi.push_back(from_utilization(fn));
        set.b[size_t(j - 1)] = set.phi.back().domain_cap();
        total += set.b[size_t(j - 1)];
    }
    if (total > B + kEpsNum) raise(errc::bad_spec, "reservations exceed budget");
    return set;
}

} // namespace mcora

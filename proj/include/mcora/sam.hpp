#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcora/core.hpp"
#include "mcora/errors.hpp"
#include "mcora/gbf.hpp"
#include "mcora/numeric.hpp"
#include "mcora/pf.hpp"
#include "mcora/threshold.hpp"

namespace mcora {

// Set-aside policy: per-class local thresholds plus one global threshold over
// the remaining budget. gamma = 0 marks the PF variant.
struct SamPolicy {
    LocalThresholdSet locals;
    PiecewiseThreshold global;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 0.0;
};

// Theorem-5 construction for a given beta >= (1/K) sum alpha_j.
inline SamPolicy build_sam_pf(const ClassProfile& p, double beta) {
    validate_profile(p);
    const int K = p.num_classes;
    const double B = p.budget;
    std::vector<double> alphas = class_alphas(p);
    double S = 0.0;
    for (double a : alphas) S += a;
    double beta_min = S / double(K);
    if (beta < beta_min - 1e-12)
        raise(errc::beta_too_small, "beta below (1/K) sum alpha_j = " + std::to_string(beta_min));

    SamPolicy pol;
    pol.gamma = 0.0;
    pol.beta = beta;
    pol.alpha = alphas.back() / (1.0 - (S - alphas.back()) / (double(K) * beta));

    pol.locals.gamma = 0.0;
    pol.locals.guarantee = beta;
    pol.locals.beta_weights.assign(size_t(K), beta);
    pol.locals.b.resize(size_t(K));
    double flat_end = B / (double(K) * beta);
    for (int j = 0; j < K; ++j) {
        double bj = B * alphas[size_t(j)] / (double(K) * beta);
        pol.locals.b[size_t(j)] = bj;
        std::vector<PiecewiseThreshold::Segment> segs;
        segs.push_back(PiecewiseThreshold::constant(0.0, flat_end, 1.0));
        if (bj > flat_end + 1e-15)
            segs.push_back(PiecewiseThreshold::exponential(flat_end, bj, 1.0,
                                                           double(K) * beta / B, -1.0));
        pol.locals.phi.push_back(
            PiecewiseThreshold::from_segments(std::move(segs), 1.0, p.thetas[size_t(j)]));
    }

    double G = B * (1.0 - S / (double(K) * beta));
    G = std::max(G, 0.0);
    std::vector<PiecewiseThreshold::Segment> gsegs;
    if (G <= 1e-15) {
        gsegs.push_back(PiecewiseThreshold::constant(0.0, 0.0, p.theta_max()));
    } else {
        double gflat = G / alphas.back();
        gsegs.push_back(PiecewiseThreshold::constant(0.0, gflat, 1.0));
        gsegs.push_back(
            PiecewiseThreshold::exponential(gflat, G, 1.0, alphas.back() / G, -1.0));
    }
    pol.global = PiecewiseThreshold::from_segments(std::move(gsegs), 1.0, p.theta_max());
    return pol;
}

namespace detail {

// Solve vertex_aggregate(beta_1..beta_K) = beta for beta_K given the others.
inline bool solve_last_weight(const ClassProfile& p, double gamma,
                              std::vector<double>& beta_j, double beta) {
    const size_t K = beta_j.size();
    auto agg = [&](double bK) {
        beta_j[K - 1] = bK;
        return vertex_aggregate_beta(beta_j, gamma, p);
    };
    double lo = 1e-9;
    if (agg(lo) > beta * (1.0 + 1e-13)) return false;
    double hi = std::max(10.0, beta * 4.0);
    int guard = 0;
    while (agg(hi) < beta && guard++ < 60) hi *= 4.0;
    if (agg(hi) < beta) return false;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (agg(mid) <= beta)
            lo = mid;
        else
            hi = mid;
    }
    beta_j[K - 1] = 0.5 * (lo + hi);
    return true;
}

} // namespace detail

// Theorem-9 construction: pick beta_j minimizing alpha subject to the budget
// and the beta-consistency constraint held at equality, then invert psi_j and
// psi^G numerically.
inline SamPolicy build_sam_gbf(const ClassProfile& p, double gamma, double beta) {
    validate_profile(p);
    if (gamma < 1.0 - kGammaOneBand)
        raise(errc::gamma_unsupported, "trade-off construction needs gamma >= 1");
    const int K = p.num_classes;
    const double B = p.budget;
    const double aK = alpha_of_theta(p.theta_max());

    BetaWeights fair = solve_beta_weights(p, gamma);
    if (beta < fair.beta - 1e-9)
        raise(errc::beta_too_small,
              "beta below the Theorem-7 minimum " + std::to_string(fair.beta));

    std::vector<double> Ftheta(size_t(K)), Fone(size_t(K));
    for (int j = 1; j <= K; ++j) {
        Ftheta[size_t(j - 1)] = utilization_F(p.thetas[size_t(j - 1)], gamma, j, p);
        Fone[size_t(j - 1)] = utilization_F(1.0, gamma, j, p);
    }

    std::vector<double> bj;
    if (beta <= fair.beta * (1.0 + 1e-12)) {
        bj = fair.beta_j; // boundary: the global part degenerates
    } else if (K == 1) {
        bj = {beta};
    } else {
        auto feasible = [&](const std::vector<double>& head) {
            std::vector<double> full = head;
            full.push_back(1.0);
            if (!detail::solve_last_weight(p, gamma, full, beta)) return std::pair(false, full);
            for (double b : full)
                if (b < 1.0 - 1e-12) return std::pair(false, full);
            double s = 0.0;
            for (int j = 0; j < K; ++j) s += Ftheta[size_t(j)] / full[size_t(j)];
            return std::pair(s <= 1.0 + 1e-12, full);
        };
        if (K == 2) {
            // objective is monotone in beta_1 alone: march to the feasibility edge
            double c = beta / fair.beta;
            double b1 = c * fair.beta_j[0];
            if (!feasible({b1}).first) b1 = std::max(1.0, fair.beta_j[0]);
            if (!feasible({b1}).first)
                raise(errc::solver_diverged, "no feasible start for the trade-off solve");
            double step = std::max(0.25 * b1, 0.5);
            while (feasible({b1 + step}).first) {
                b1 += step;
                step *= 2.0;
            }
            double lo = b1, hi = b1 + step;
            for (int i = 0; i < 200; ++i) {
                double mid = 0.5 * (lo + hi);
                if (feasible({mid}).first)
                    lo = mid;
                else
                    hi = mid;
            }
            auto [ok, full] = feasible({lo});
            if (!ok) raise(errc::solver_diverged, "trade-off bisection failed");
            bj = full;
        } else {
            // K >= 3: Nelder-Mead on log beta_{1..K-1} with penalties
            std::vector<double> w(size_t(K - 1));
            for (int j = 0; j < K - 1; ++j) w[size_t(j)] = Ftheta[size_t(j)] - Fone[size_t(j)];
            auto objective = [&](const std::vector<double>& z) {
                std::vector<double> head(size_t(K - 1));
                for (size_t j = 0; j + 1 < size_t(K); ++j) head[j] = std::exp(z[j]);
                std::vector<double> full = head;
                full.push_back(1.0);
                double pen = 0.0;
                if (!detail::solve_last_weight(p, gamma, full, beta)) return 1e6;
                for (double b : full)
                    if (b < 1.0) pen += (1.0 - b) * 1e3;
                double s = 0.0;
                for (int j = 0; j < K; ++j) s += Ftheta[size_t(j)] / full[size_t(j)];
                if (s > 1.0) pen += (s - 1.0) * 1e3;
                double obj = 0.0;
                for (int j = 0; j < K - 1; ++j) obj += w[size_t(j)] / full[size_t(j)];
                return obj + pen;
            };
            double c = beta / fair.beta;
            std::vector<double> z0(size_t(K - 1));
            for (int j = 0; j < K - 1; ++j) z0[size_t(j)] = std::log(c * fair.beta_j[size_t(j)]);
            NelderMeadResult nm = nelder_mead(objective, z0, 0.25, 6000, 1e-12, 1e-14);
            std::vector<double> full(size_t(K));
            for (int j = 0; j < K - 1; ++j) full[size_t(j)] = std::exp(nm.x[size_t(j)]);
            full[size_t(K - 1)] = 1.0;
            if (!detail::solve_last_weight(p, gamma, full, beta))
                raise(errc::solver_diverged, "consistency solve failed after descent");
            double s = 0.0;
            for (int j = 0; j < K; ++j) s += Ftheta[size_t(j)] / full[size_t(j)];
            if (s > 1.0 + 1e-6) raise(errc::solver_diverged, "budget violated after descent");
            for (double b : full)
                if (b < 1.0 - 1e-6) raise(errc::solver_diverged, "weight below 1 after descent");
            bj = full;
        }
    }

    double deficit = 0.0; // sum_{j<K} (F_j(theta_j) - F_j(1)) / beta_j
    for (int j = 0; j < K - 1; ++j)
        deficit += (Ftheta[size_t(j)] - Fone[size_t(j)]) / bj[size_t(j)];

    SamPolicy pol;
    pol.gamma = gamma;
    pol.beta = beta;
    pol.alpha = aK / (1.0 - deficit);

    pol.locals.gamma = gamma;
    pol.locals.guarantee = beta;
    pol.locals.beta_weights = bj;
    pol.locals.b.resize(size_t(K));
    for (int j = 1; j <= K; ++j) {
        double w = bj[size_t(j - 1)];
        UtilizationFn fn;
        fn.v_lo = 1.0;
        fn.v_hi = p.thetas[size_t(j - 1)];
        fn.psi = [B, w, gamma, j, p](double v) { return B / w * utilization_F(v, gamma, j, p); };
        pol.locals.phi.push_back(from_utilization(fn));
        pol.locals.b[size_t(j - 1)] = pol.locals.phi.back().domain_cap();
    }

    double scale = (1.0 - deficit) / aK;
    double fixed = 0.0;
    for (int j = 0; j < K - 1; ++j) fixed += B / bj[size_t(j)] * Fone[size_t(j)];
    double bK = bj[size_t(K - 1)];
    UtilizationFn gfn;
    gfn.v_lo = 1.0;
    gfn.v_hi = p.theta_max();
    gfn.psi = [B, scale, fixed, bK, gamma, K, p](double v) {
        return B * scale * (1.0 + std::log(v)) - B / bK * utilization_F(v, gamma, K, p) - fixed;
    };
    pol.global = from_utilization(gfn);
    return pol;
}

// Algorithm 3: local step with the full rate, then the global step with the
// residual rate; utilizations tracked separately.
inline Allocation run_sam(const Instance& inst, const SamPolicy& pol) {
    if (pol.locals.phi.size() != size_t(inst.profile.num_classes))
        raise(errc::bad_spec, "policy does not match profile");
    std::vector<double> x(inst.agents.size(), 0.0);
    std::vector<double> u(pol.locals.phi.size(), 0.0);
    double ug = 0.0;
    for (size_t t = 0; t < inst.agents.size(); ++t) {
        const Agent& a = inst.agents[t];
        size_t j = size_t(a.class_id - 1);
        double x1 = allocation_step(pol.locals.phi[j], u[j], a.valuation, a.rate_limit);
        double x2 = allocation_step(pol.global, ug, a.valuation, a.rate_limit - x1);
        u[j] += x1;
        ug += x2;
        x[t] = x1 + x2;
    }
    return class_utilities(inst, x);
}

// Theorem-5 alpha as a function of beta; strictly decreasing.
inline std::vector<std::pair<double, double>> pareto_frontier_pf(const ClassProfile& p,
                                                                 std::span<const double> betas) {
    validate_profile(p);
    std::vector<double> alphas = class_alphas(p);
    double S = 0.0;
    for (double a : alphas) S += a;
    double beta_min = S / double(p.num_classes);
    std::vector<std::pair<double, double>> out;
    out.reserve(betas.size());
    for (double beta : betas) {
        if (beta < beta_min - 1e-12)
            raise(errc::beta_too_small, "frontier point below minimum beta");
        double alpha =
            alphas.back() / (1.0 - (S - alphas.back()) / (double(p.num_classes) * beta));
        out.emplace_back(beta, alpha);
    }
    return out;
}

} // namespace mcora

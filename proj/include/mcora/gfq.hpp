#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcora/core.hpp"
#include "mcora/errors.hpp"
#include "mcora/threshold.hpp"

namespace mcora {

// Reservation vector m plus the derived prefix quantities used by the
// threshold construction: M = sum m_i, C_j = B - sum_{i<j} m_i,
// D_j = sum_{i<j} m_i theta_i (1-based j stored at index j-1).
struct GfqRequirement {
    std::vector<double> m;
    double M = 0.0;
    std::vector<double> C;
    std::vector<double> D;
};

inline GfqRequirement make_gfq_requirement(const ClassProfile& p, std::vector<double> m) {
    validate_profile(p);
    if (m.size() != size_t(p.num_classes)) raise(errc::bad_spec, "m size mismatch");
    GfqRequirement req;
    req.M = 0.0;
    for (double mj : m) {
        if (mj < 0.0) raise(errc::infeasible_gfq, "negative m_j");
        req.M += mj;
    }
    if (req.M > p.budget + kEpsNum) raise(errc::infeasible_gfq, "sum m_j exceeds budget");
    const int K = p.num_classes;
    req.C.resize(size_t(K));
    req.D.resize(size_t(K));
    double acc_m = 0.0, acc_mt = 0.0;
    for (int j = 0; j < K; ++j) {
        req.C[size_t(j)] = p.budget - acc_m;
        req.D[size_t(j)] = acc_mt;
        acc_m += m[size_t(j)];
        acc_mt += m[size_t(j)] * p.thetas[size_t(j)];
    }
    req.m = std::move(m);
    return req;
}

enum class GfqRegime { case0, case_jstar };

struct GfqPolicy {
    PiecewiseThreshold threshold; // over [0, B - M]
    double alpha = 1.0;
    GfqRegime regime = GfqRegime::case0;
    int jstar = 0;     // 1-based, valid when regime == case_jstar
    double vstar = 1.0; // threshold start value in the j* regime
};

namespace detail {

inline double gfq_alpha0(const ClassProfile& p, const GfqRequirement& req) {
    double a = 1.0 + std::log(p.theta_max());
    for (int j = 0; j + 1 < p.num_classes; ++j)
        a -= req.m[size_t(j)] / p.budget * std::log(p.theta_max() / p.thetas[size_t(j)]);
    return a;
}

inline double gfq_alpha_jstar(const ClassProfile& p, const GfqRequirement& req, int js) {
    const double B = p.budget, M = req.M;
    const double Cj = req.C[size_t(js - 1)], Dj = req.D[size_t(js - 1)];
    double X = 0.0;
    for (int i = js; i <= p.num_classes - 1; ++i)
        X += req.m[size_t(i - 1)] * std::log(p.theta_max() / p.thetas[size_t(i - 1)]);
    double arg = p.theta_max() * (B - M) / M * std::exp(-X / Cj) *
                 std::exp(-Dj * (B - M) / (Cj * M));
    return Dj / M + Cj / (B - M) * lambert_w0(arg);
}

} // namespace detail

// Optimal threshold construction. Case selection uses half-open intervals with
// 1e-9 slack; the two regimes meet continuously so exactly one applies.
inline GfqPolicy build_gfq_policy(const ClassProfile& p, const std::vector<double>& m_in) {
    GfqRequirement req = make_gfq_requirement(p, m_in);
    const int K = p.num_classes;
    const double B = p.budget, M = req.M;
    const double slack = 1e-9;

    GfqPolicy pol;
    double alpha0 = detail::gfq_alpha0(p, req);

    if (M <= B / alpha0 + slack) {
        pol.alpha = alpha0;
        pol.regime = GfqRegime::case0;
        pol.vstar = 1.0;
        std::vector<PiecewiseThreshold::Segment> segs;
        double gamma0 = std::max(0.0, B / alpha0 - M);
        if (gamma0 > 0.0) segs.push_back(PiecewiseThreshold::constant(0.0, gamma0, 1.0));
        double prev = gamma0, acc_log = 0.0;
        for (int j = 1; j <= K; ++j) {
            double Cj = req.C[size_t(j - 1)];
            double gj = B / alpha0 - M + Cj / alpha0 * std::log(p.thetas[size_t(j - 1)]) +
                        acc_log / alpha0;
            if (j == K) gj = B - M; // analytic endpoint; guards fp drift
            if (gj > prev + 1e-15) {
                // exp((alpha0 (u + M) - B - acc_log) / Cj)
                segs.push_back(PiecewiseThreshold::exponential(
                    prev, gj, 1.0, alpha0 / Cj, (alpha0 * M - B - acc_log) / Cj));
                prev = gj;
            }
            acc_log += req.m[size_t(j - 1)] * std::log(p.thetas[size_t(j - 1)]);
        }
        if (segs.empty()) segs.push_back(PiecewiseThreshold::constant(0.0, 0.0, p.theta_max()));
        pol.threshold = PiecewiseThreshold::from_segments(std::move(segs), 1.0, p.theta_max());
        return pol;
    }

    if (M >= B - 1e-12) {
        // limit of the j* = K regime as M -> B: zero-length threshold domain
        pol.alpha = (req.D[size_t(K - 1)] + req.C[size_t(K - 1)] * p.theta_max()) / B;
        pol.regime = GfqRegime::case_jstar;
        pol.jstar = K;
        pol.vstar = p.theta_max();
        std::vector<PiecewiseThreshold::Segment> segs{
            PiecewiseThreshold::constant(0.0, 0.0, p.theta_max())};
        pol.threshold = PiecewiseThreshold::from_segments(std::move(segs), pol.vstar,
                                                          p.theta_max());
        return pol;
    }

    for (int js = 1; js <= K; ++js) {
        double alpha = detail::gfq_alpha_jstar(p, req, js);
        double th_prev = js == 1 ? 1.0 : p.thetas[size_t(js - 2)];
        double lo = (th_prev * req.C[size_t(js - 1)] + req.D[size_t(js - 1)]) / alpha;
        double hi = (p.thetas[size_t(js - 1)] * req.C[size_t(js - 1)] + req.D[size_t(js - 1)]) /
                    alpha;
        if (!(M > lo - slack && M <= hi + slack)) continue;

        pol.alpha = alpha;
        pol.regime = GfqRegime::case_jstar;
        pol.jstar = js;
        double vstar = (alpha * M - req.D[size_t(js - 1)]) / req.C[size_t(js - 1)];
        vstar = std::clamp(vstar, 1.0, p.theta_max());
        pol.vstar = vstar;
        std::vector<PiecewiseThreshold::Segment> segs;
        double prev = 0.0, acc_log = 0.0; // acc_log = sum_{i=j*}^{j-1} m_i ln(theta_i / v*)
        for (int j = js; j <= K; ++j) {
            double Cj = req.C[size_t(j - 1)];
            double gj = Cj / alpha * std::log(p.thetas[size_t(j - 1)] / vstar) + acc_log / alpha;
            if (j == K) gj = B - M;
            if (gj > prev + 1e-15) {
                // v* exp((alpha u - acc_log) / Cj)
                segs.push_back(PiecewiseThreshold::exponential(prev, gj, vstar, alpha / Cj,
                                                               -acc_log / Cj));
                prev = gj;
            }
            acc_log += req.m[size_t(j - 1)] * std::log(p.thetas[size_t(j - 1)] / vstar);
        }
        if (segs.empty()) segs.push_back(PiecewiseThreshold::constant(0.0, 0.0, p.theta_max()));
        pol.threshold = PiecewiseThreshold::from_segments(std::move(segs), vstar, p.theta_max());
        return pol;
    }
    raise(errc::no_regime_match, "no Theorem-1 regime matched (numeric defect)");
}

struct QThresholdResult {
    Allocation allocation;
    std::vector<double> reserved;            // per-class quantity auto-accepted
    std::vector<std::uint8_t> fairness_shortfall; // class never reached m_j
    double alpha = 1.0;                      // guarantee from the policy
};

// Algorithm 1: reservation step first, then the global-threshold step on the
// (B - M) portion. Online: strictly one pass over agents.
inline QThresholdResult run_q_threshold(const Instance& inst, const std::vector<double>& m) {
    GfqPolicy pol = build_gfq_policy(inst.profile, m);
    const int K = inst.profile.num_classes;
    std::vector<double> x(inst.agents.size(), 0.0);
    std::vector<double> class_res(size_t(K), 0.0);
    double u = 0.0;
    const double cap = pol.threshold.domain_cap();
    for (size_t t = 0; t < inst.agents.size(); ++t) {
        const Agent& a = inst.agents[t];
        size_t j = size_t(a.class_id - 1);
        double y = 0.0;
        if (class_res[j] < m[j] - 1e-15) {
            y = std::min(a.rate_limit, m[j] - class_res[j]);
            class_res[j] += y;
        }
        double xt = allocation_step(pol.threshold, u, a.valuation, a.rate_limit - y);
        xt = std::min(xt, cap - u);
        u += xt;
        x[t] = xt + y;
    }
    QThresholdResult res{class_utilities(inst, x), std::move(class_res), {}, pol.alpha};
    res.fairness_shortfall.assign(size_t(K), 0);
    for (int j = 0; j < K; ++j)
        if (res.reserved[size_t(j)] < m[size_t(j)] - kEpsNum)
            res.fairness_shortfall[size_t(j)] = 1;
    return res;
}

struct CrCurvePoint {
    double m_value = 0.0;
    double alpha = 1.0;
    GfqRegime regime = GfqRegime::case0;
    int jstar = 0;
};

// Competitive ratio as a function of m_j with the other entries fixed.
inline std::vector<CrCurvePoint> gfq_cr_curve(const ClassProfile& p, std::vector<double> m,
                                              int j, std::span<const double> grid) {
    if (j < 1 || j > p.num_classes) raise(errc::bad_spec, "class index out of range");
    std::vector<CrCurvePoint> out;
    out.reserve(grid.size());
    for (double mj : grid) {
        m[size_t(j - 1)] = mj;
        GfqPolicy pol = build_gfq_policy(p, m);
        out.push_back({mj, pol.alpha, pol.regime, pol.jstar});
    }
    return out;
}

} // namespace mcora

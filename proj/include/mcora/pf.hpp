#pragma once

#include <cmath>
#include <vector>

#include "mcora/core.hpp"
#include "mcora/errors.hpp"
#include "mcora/threshold.hpp"

namespace mcora {

// Per-class threshold functions with their reserved budgets. gamma = 0 marks
// the PF construction; beta_weights carry the per-class beta_j otherwise.
struct LocalThresholdSet {
    std::vector<PiecewiseThreshold> phi;
    std::vector<double> b;
    double guarantee = 1.0;
    double gamma = 0.0;
    std::vector<double> beta_weights;
};

inline double pf_guarantee(const ClassProfile& p) {
    validate_profile(p);
    double s = 0.0;
    for (double th : p.thetas) s += alpha_of_theta(th);
    return s / double(p.num_classes);
}

// Theorem-3 construction: common flat region [0, B / sum alpha], then the
// shared exponential truncated at b_j = B alpha_j / sum alpha.
inline LocalThresholdSet build_pf_thresholds(const ClassProfile& p) {
    validate_profile(p);
    const int K = p.num_classes;
    std::vector<double> alphas = class_alphas(p);
    double S = 0.0;
    for (double a : alphas) S += a;
    const double B = p.budget;
    double flat_end = B / S;

    LocalThresholdSet set;
    set.guarantee = S / double(K);
    set.gamma = 0.0;
    set.beta_weights.assign(size_t(K), set.guarantee);
    set.b.resize(size_t(K));
    set.phi.reserve(size_t(K));
    for (int j = 0; j < K; ++j) {
        double bj = B * alphas[size_t(j)] / S;
        set.b[size_t(j)] = bj;
        std::vector<PiecewiseThreshold::Segment> segs;
        segs.push_back(PiecewiseThreshold::constant(0.0, flat_end, 1.0));
        if (bj > flat_end + 1e-15) {
            // exp(S u / B - 1); at u = b_j this reaches theta_j
            segs.push_back(PiecewiseThreshold::exponential(flat_end, bj, 1.0, S / B, -1.0));
        }
        set.phi.push_back(
            PiecewiseThreshold::from_segments(std::move(segs), 1.0, p.thetas[size_t(j)]));
    }
    return set;
}

// Algorithm 2: each agent sees only its class threshold.
inline Allocation run_u_threshold(const Instance& inst, const LocalThresholdSet& set) {
    if (set.phi.size() != size_t(inst.profile.num_classes))
        raise(errc::bad_spec, "threshold set does not match profile");
    std::vector<double> x(inst.agents.size(), 0.0);
    std::vector<double> u(set.phi.size(), 0.0);
    for (size_t t = 0; t < inst.agents.size(); ++t) {
        const Agent& a = inst.agents[t];
        size_t j = size_t(a.class_id - 1);
        double xt = allocation_step(set.phi[j], u[j], a.valuation, a.rate_limit);
        u[j] += xt;
        x[t] = xt;
    }
    return class_utilities(inst, x);
}

} // namespace mcora

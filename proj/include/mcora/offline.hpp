#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mcora/core.hpp"
#include "mcora/errors.hpp"

namespace mcora {

struct OfflineSolution {
    double value = 0.0;
    std::vector<double> w;
};

namespace detail {

// indices sorted by valuation descending, ties by arrival order
inline std::vector<size_t> by_value_desc(const Instance& inst) {
    std::vector<size_t> idx(inst.agents.size());
    std::iota(idx.begin(), idx.end(), size_t(0));
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        return inst.agents[a].valuation > inst.agents[b].valuation;
    });
    return idx;
}

} // namespace detail

// Fractional knapsack: Eq.-(1) offline optimum.
inline OfflineSolution solve_opt(const Instance& inst) {
    OfflineSolution sol;
    sol.w.assign(inst.agents.size(), 0.0);
    double remaining = inst.profile.budget;
    for (size_t i : detail::by_value_desc(inst)) {
        if (remaining <= 0.0) break;
        double g = std::min(inst.agents[i].rate_limit, remaining);
        sol.w[i] = g;
        sol.value += g * inst.agents[i].valuation;
        remaining -= g;
    }
    return sol;
}

// GFQ-constrained offline optimum: reserve m_j on each class's best agents,
// then spend the remainder greedily over residual capacities.
inline OfflineSolution solve_opt_gfq(const Instance& inst, const std::vector<double>& m) {
    const int K = inst.profile.num_classes;
    if (m.size() != size_t(K)) raise(errc::bad_spec, "m size mismatch");
    double M = 0.0;
    for (double mj : m) {
        if (mj < 0.0) raise(errc::infeasible_gfq, "negative m_j");
        M += mj;
    }
    if (M > inst.profile.budget + kEpsNum) raise(errc::infeasible_gfq, "sum m exceeds budget");

    OfflineSolution sol;
    sol.w.assign(inst.agents.size(), 0.0);
    auto order = detail::by_value_desc(inst);
    std::vector<double> need(m);
    for (int j = 0; j < K; ++j) {
        if (need[j] <= 0.0) continue;
        for (size_t i : order) {
            if (inst.agents[i].class_id != j + 1) continue;
            double g = std::min(inst.agents[i].rate_limit - sol.w[i], need[j]);
            sol.w[i] += g;
            need[j] -= g;
            if (need[j] <= 1e-15) break;
        }
        if (need[j] > kEpsNum)
            raise(errc::infeasible_gfq,
                  "class " + std::to_string(j + 1) + " capacity below m_j");
    }
    double remaining = inst.profile.budget - M;
    for (size_t i : order) {
        if (remaining <= 0.0) break;
        double g = std::min(inst.agents[i].rate_limit - sol.w[i], remaining);
        sol.w[i] += g;
        remaining -= g;
    }
    for (size_t i = 0; i < sol.w.size(); ++i) sol.value += sol.w[i] * inst.agents[i].valuation;
    return sol;
}

struct BestResponse {
    std::vector<double> w;
    double value = 0.0; // objective of the adversary problem
};

// Maximizes (1/K) sum_j U_j(w)/U_j(x): a fractional knapsack with weights
// v_t / (K * U_{j_t}(x)). Convention: +inf when a present class has zero
// utility under x; absent classes contribute zero terms.
inline BestResponse best_response_pf(const Instance& inst, const std::vector<double>& U_x) {
    const int K = inst.profile.num_classes;
    if (U_x.size() != size_t(K)) raise(errc::bad_spec, "U_x size mismatch");
    std::vector<bool> present(size_t(K), false);
    for (const Agent& a : inst.agents) present[size_t(a.class_id - 1)] = true;
    BestResponse br;
    br.w.assign(inst.agents.size(), 0.0);
    for (int j = 0; j < K; ++j) {
        if (present[size_t(j)] && U_x[size_t(j)] <= 0.0) {
            br.value = std::numeric_limits<double>::infinity();
            return br;
        }
    }
    std::vector<size_t> idx(inst.agents.size());
    std::iota(idx.begin(), idx.end(), size_t(0));
    auto weight = [&](size_t i) {
        const Agent& a = inst.agents[i];
        return a.valuation / (double(K) * U_x[size_t(a.class_id - 1)]);
    };
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return weight(a) > weight(b); });
    double remaining = inst.profile.budget;
    for (size_t i : idx) {
        if (remaining <= 0.0) break;
        double g = std::min(inst.agents[i].rate_limit, remaining);
        br.w[i] = g;
        br.value += g * weight(i);
        remaining -= g;
    }
    return br;
}

namespace detail {

// Concave piecewise-linear greedy envelope of one class: best utility as a
// function of the class budget.
struct ClassEnvelope {
    std::vector<double> slope;   // valuations, descending
    std::vector<double> width;   // rate limits in the same order
    std::vector<size_t> agent;   // original agent index
    double capacity = 0.0;

    double value_at(double b) const {
        double v = 0.0;
        for (size_t k = 0; k < slope.size() && b > 0.0; ++k) {
            double g = std::min(width[k], b);
            v += g * slope[k];
            b -= g;
        }
        return v;
    }
    // largest budget b <= capacity with marginal f'(V(b)) * slope(b) >= level,
    // given f'(x) = x^{-gamma}
    double budget_for_level(double level, double gamma) const {
        double b = 0.0, V = 0.0;
        for (size_t k = 0; k < slope.size(); ++k) {
            double s = slope[k];
            double Vtarget = std::pow(s / level, 1.0 / gamma);
            if (Vtarget <= V) break;
            double Vend = V + s * width[k];
            if (Vtarget >= Vend) {
                b += width[k];
                V = Vend;
                continue;
            }
            b += (Vtarget - V) / s;
            V = Vtarget;
            break;
        }
        return b;
    }
};

inline std::vector<ClassEnvelope> class_envelopes(const Instance& inst) {
    const int K = inst.profile.num_classes;
    std::vector<ClassEnvelope> env(size_t(K));
    for (size_t i : by_value_desc(inst)) {
        const Agent& a = inst.agents[i];
        ClassEnvelope& e = env[size_t(a.class_id - 1)];
        e.slope.push_back(a.valuation);
        e.width.push_back(a.rate_limit);
        e.agent.push_back(i);
        e.capacity += a.rate_limit;
    }
    return env;
}

inline void fill_class(BestResponse& br, const Instance& inst, const ClassEnvelope& e, double b) {
    for (size_t k = 0; k < e.agent.size() && b > 0.0; ++k) {
        double g = std::min(e.width[k], b);
        br.w[e.agent[k]] += g;
        b -= g;
    }
    (void)inst;
}

} // namespace detail

// Maximizes sum_j f(U_j(w)) over feasible w. gamma = 0 reduces to solve_opt;
// gamma = +inf is max-min equalization; otherwise concave water-filling on the
// marginal level with per-class greedy envelopes.
inline BestResponse best_response_gbf(const Instance& inst, double gamma) {
    const int K = inst.profile.num_classes;
    const double B = inst.profile.budget;
    if (gamma < 0.0) raise(errc::gamma_unsupported, "gamma must be >= 0");
    if (gamma == 0.0) {
        OfflineSolution opt = solve_opt(inst);
        return BestResponse{std::move(opt.w), opt.value};
    }
    auto env = detail::class_envelopes(inst);
    if (gamma >= 1.0) {
        for (int j = 0; j < K; ++j)
            if (env[size_t(j)].agent.empty())
                raise(errc::empty_class,
                      "class " + std::to_string(j + 1) + " has no agents (objective -inf)");
    }

    BestResponse br;
    br.w.assign(inst.agents.size(), 0.0);

    if (std::isinf(gamma)) {
        // max-min: largest common utility tau reachable within the budget
        double tau_hi = std::numeric_limits<double>::infinity();
        for (int j = 0; j < K; ++j)
            tau_hi = std::min(tau_hi, env[size_t(j)].value_at(env[size_t(j)].capacity));
        auto budget_for_tau = [&](double tau) {
            double total = 0.0;
            for (int j = 0; j < K; ++j) {
                const auto& e = env[size_t(j)];
                // minimal budget with V(b) = tau
                double b = 0.0, V = 0.0;
                for (size_t k = 0; k < e.slope.size(); ++k) {
                    double Vend = V + e.slope[k] * e.width[k];
                    if (Vend >= tau) {
                        b += (tau - V) / e.slope[k];
                        V = tau;
                        break;
                    }
                    b += e.width[k];
                    V = Vend;
                }
                total += b;
            }
            return total;
        };
        double lo = 0.0, hi = tau_hi;
        if (budget_for_tau(tau_hi) > B) {
            for (int i = 0; i < 200; ++i) {
                double mid = 0.5 * (lo + hi);
                if (budget_for_tau(mid) <= B)
                    lo = mid;
                else
                    hi = mid;
            }
        } else {
            lo = tau_hi;
        }
        double used = 0.0;
        for (int j = 0; j < K; ++j) {
            const auto& e = env[size_t(j)];
            double b = 0.0, V = 0.0;
            for (size_t k = 0; k < e.slope.size(); ++k) {
                double Vend = V + e.slope[k] * e.width[k];
                if (Vend >= lo) {
                    b += (lo - V) / e.slope[k];
                    break;
                }
                b += e.width[k];
                V = Vend;
            }
            detail::fill_class(br, inst, e, b);
            used += b;
        }
        // leftovers do not change the min; spend them greedily for Pareto sanity
        double remaining = B - used;
        for (size_t i : detail::by_value_desc(inst)) {
            if (remaining <= 1e-15) break;
            double g = std::min(inst.agents[i].rate_limit - br.w[i], remaining);
            br.w[i] += g;
            remaining -= g;
        }
        br.value = lo; // min-utility objective
        return br;
    }

    // finite gamma > 0: water-filling on the marginal level f'(V_j) * slope
    const double floor = 1e-12;
    std::vector<double> base(size_t(K), 0.0);
    double budget = B;
    for (int j = 0; j < K; ++j) {
        const auto& e = env[size_t(j)];
        if (e.agent.empty()) continue;
        base[size_t(j)] = std::min(floor, e.capacity);
        budget -= base[size_t(j)];
    }
    double level_hi = 0.0;
    for (int j = 0; j < K; ++j) {
        const auto& e = env[size_t(j)];
        if (e.agent.empty()) continue;
        double V0 = e.value_at(base[size_t(j)]);
        level_hi = std::max(level_hi, std::pow(V0, -gamma) * e.slope.front());
    }
    auto total_at_level = [&](double level) {
        double total = 0.0;
        for (int j = 0; j < K; ++j) {
            const auto& e = env[size_t(j)];
            if (e.agent.empty()) continue;
            total += std::max(e.budget_for_level(level, gamma), base[size_t(j)]);
        }
        return total;
    };
    double lo = 1e-300, hi = std::max(level_hi, 1e-300) * 2.0;
    if (total_at_level(lo) <= B) {
        hi = lo; // ample budget: everyone at capacity
    } else {
        for (int i = 0; i < 300; ++i) {
            double mid = std::sqrt(lo * hi); // geometric bisection over levels
            if (total_at_level(mid) <= B)
                hi = mid;
            else
                lo = mid;
        }
    }
    double used = 0.0;
    std::vector<double> give(size_t(K), 0.0);
    for (int j = 0; j < K; ++j) {
        const auto& e = env[size_t(j)];
        if (e.agent.empty()) continue;
        give[size_t(j)] = std::max(e.budget_for_level(hi, gamma), base[size_t(j)]);
        used += give[size_t(j)];
    }
    // scale down tiny overshoot from bisection slack
    if (used > B && used > 0.0) {
        for (double& g : give) g *= B / used;
        used = B;
    }
    (void)budget;
    for (int j = 0; j < K; ++j)
        if (give[size_t(j)] > 0.0) detail::fill_class(br, inst, env[size_t(j)], give[size_t(j)]);
    // objective
    double obj = 0.0;
    bool is_log = std::abs(gamma - 1.0) < 1e-6;
    for (int j = 0; j < K; ++j) {
        const auto& e = env[size_t(j)];
        double U = e.agent.empty() ? 0.0 : e.value_at(give[size_t(j)]);
        if (U <= 0.0) {
            if (gamma < 1.0) continue; // f(0) = 0
            obj = -std::numeric_limits<double>::infinity();
            break;
        }
        obj += is_log ? std::log(U) : std::pow(U, 1.0 - gamma) / (1.0 - gamma);
    }
    br.value = obj;
    return br;
}

// Closed-form Hoelder bound on sum_j f(U_j(w)) for one agent per class at
// valuations v_j with r = B: (1/(1-g)) (sum (B v_j)^{(1-g)/g})^g and the
// maximizing split w_j = B v_j^{(1-g)/g} / sum_i v_i^{(1-g)/g}.
inline std::pair<double, std::vector<double>> holder_bound(const std::vector<double>& v_per_class,
                                                           double gamma, double B) {
    if (gamma == 0.0 || gamma == 1.0)
        raise(errc::gamma_unsupported, "holder_bound needs gamma > 0, gamma != 1");
    double e = (1.0 - gamma) / gamma;
    double S = 0.0;
    for (double v : v_per_class) S += std::pow(v, e);
    std::vector<double> w(v_per_class.size());
    for (size_t j = 0; j < w.size(); ++j) w[j] = B * std::pow(v_per_class[j], e) / S;
    double sum = 0.0;
    for (double v : v_per_class) sum += std::pow(B * v, e);
    double bound = std::pow(sum, gamma) / (1.0 - gamma);
    return {bound, std::move(w)};
}

} // namespace mcora

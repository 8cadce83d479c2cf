#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mcora/errors.hpp"

namespace mcora {

// Absolute feasibility tolerance on budget / rate constraints.
inline constexpr double kEpsNum = 1e-9;

// One online arrival. class_id is 1-based, matching trace files.
struct Agent {
    double valuation = 1.0;
    int class_id = 1;
    double rate_limit = 1.0;
};

// Static problem environment: K classes with sorted fluctuation ratios and a budget.
struct ClassProfile {
    int num_classes = 1;
    std::vector<double> thetas; // non-decreasing, each >= 1
    double budget = 1.0;

    double theta(int class_id) const { return thetas[size_t(class_id - 1)]; }
    double theta_max() const { return thetas.back(); }
};

inline void validate_profile(const ClassProfile& p) {
    if (p.num_classes < 1 || p.thetas.size() != size_t(p.num_classes))
        raise(errc::bad_spec, "num_classes must match thetas size and be >= 1");
    if (!(p.budget > 0.0)) raise(errc::bad_spec, "budget must be positive");
    for (size_t j = 0; j < p.thetas.size(); ++j) {
        if (!(p.thetas[j] >= 1.0)) raise(errc::bad_spec, "theta must be >= 1");
        if (j > 0 && p.thetas[j] < p.thetas[j - 1])
            raise(errc::unsorted_thetas,
                  "thetas must be non-decreasing at index " + std::to_string(j + 1));
    }
}

struct Instance {
    std::vector<Agent> agents;
    ClassProfile profile;

    size_t size() const { return agents.size(); }
};

inline Instance validate_instance(std::vector<Agent> agents, ClassProfile profile) {
    validate_profile(profile);
    for (size_t t = 0; t < agents.size(); ++t) {
        const Agent& a = agents[t];
        if (a.class_id < 1 || a.class_id > profile.num_classes)
            raise(errc::bad_class_id,
                  "agent " + std::to_string(t + 1) + " has class " + std::to_string(a.class_id));
        if (!(a.rate_limit > 0.0))
            raise(errc::non_positive_rate, "agent " + std::to_string(t + 1));
        double th = profile.theta(a.class_id);
        if (!(a.valuation >= 1.0) || a.valuation > th)
            raise(errc::valuation_out_of_range,
                  "agent " + std::to_string(t + 1) + ": v=" + std::to_string(a.valuation) +
                      " outside [1, " + std::to_string(th) + "]");
    }
    return Instance{std::move(agents), std::move(profile)};
}

// Per-agent allocations with derived per-class accounting.
struct Allocation {
    std::vector<double> x;
    std::vector<double> per_class_utility;
    std::vector<double> per_class_used;
    double total_used = 0.0;

    // Total utility is defined as the sum of per-class utilities so that report
    // accounting matches exactly, independent of arrival interleaving.
    double total_utility() const {
        return std::accumulate(per_class_utility.begin(), per_class_utility.end(), 0.0);
    }
};

inline Allocation class_utilities(const Instance& inst, std::span<const double> x) {
    if (x.size() != inst.agents.size())
        raise(errc::infeasible_allocation, "allocation length mismatch");
    Allocation out;
    out.x.assign(x.begin(), x.end());
    out.per_class_utility.assign(size_t(inst.profile.num_classes), 0.0);
    out.per_class_used.assign(size_t(inst.profile.num_classes), 0.0);
    double total = 0.0;
    for (size_t t = 0; t < x.size(); ++t) {
        const Agent& a = inst.agents[t];
        if (x[t] < -kEpsNum || x[t] > a.rate_limit + kEpsNum)
            raise(errc::infeasible_allocation,
                  "x[" + std::to_string(t + 1) + "]=" + std::to_string(x[t]) +
                      " outside [0, " + std::to_string(a.rate_limit) + "]");
        size_t j = size_t(a.class_id - 1);
        out.per_class_utility[j] += a.valuation * x[t];
        out.per_class_used[j] += x[t];
        total += x[t];
    }
    if (total > inst.profile.budget + kEpsNum)
        raise(errc::infeasible_allocation,
              "total " + std::to_string(total) + " exceeds budget " +
                  std::to_string(inst.profile.budget));
    out.total_used = total;
    return out;
}

inline double alpha_of_theta(double theta) { return 1.0 + std::log(theta); }

inline std::vector<double> class_alphas(const ClassProfile& p) {
    std::vector<double> a(p.thetas.size());
    for (size_t j = 0; j < a.size(); ++j) a[j] = alpha_of_theta(p.thetas[j]);
    return a;
}

} // namespace mcora

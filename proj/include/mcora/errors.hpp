#pragma once

#include <stdexcept>
#include <string>

namespace mcora {

enum class errc {
    valuation_out_of_range,
    bad_class_id,
    non_positive_rate,
    unsorted_thetas,
    infeasible_allocation,
    domain_error,
    non_monotone,
    infeasible_gfq,
    no_regime_match,
    gamma_unsupported,
    empty_class,
    beta_too_small,
    solver_diverged,
    too_many_classes,
    non_positive_utility,
    bad_probs,
    parse_error,
    io_error,
    bad_spec,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::valuation_out_of_range: return "ValuationOutOfRange";
        case errc::bad_class_id: return "BadClassId";
        case errc::non_positive_rate: return "NonPositiveRate";
        case errc::unsorted_thetas: return "UnsortedThetas";
        case errc::infeasible_allocation: return "InfeasibleAllocation";
        case errc::domain_error: return "DomainError";
        case errc::non_monotone: return "NonMonotone";
        case errc::infeasible_gfq: return "InfeasibleGfq";
        case errc::no_regime_match: return "NoRegimeMatch";
        case errc::gamma_unsupported: return "GammaUnsupported";
        case errc::empty_class: return "EmptyClass";
        case errc::beta_too_small: return "BetaTooSmall";
        case errc::solver_diverged: return "SolverDiverged";
        case errc::too_many_classes: return "TooManyClasses";
        case errc::non_positive_utility: return "NonPositiveUtility";
        case errc::bad_probs: return "BadProbs";
        case errc::parse_error: return "ParseError";
        case errc::io_error: return "IoError";
        case errc::bad_spec: return "BadSpec";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
    errc code() const { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) { throw Error(code, what); }

} // namespace mcora

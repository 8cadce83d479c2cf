#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mcora/errors.hpp"
#include "mcora/numeric.hpp"

namespace mcora {

// Principal-branch Lambert W via Halley iteration from a log-based guess.
// Contract: |w e^w - x| <= 1e-12 * max(1, x) for x >= 0.
inline double lambert_w0(double x) {
    constexpr double inv_e = 0.36787944117144233;
    if (x < -inv_e) raise(errc::domain_error, "lambert_w0 argument below -1/e");
    if (x == 0.0) return 0.0;
    double w;
    if (x < 1.0) {
        // series seed around 0
        w = x * (1.0 - x + 1.5 * x * x);
    } else {
        double lx = std::log(x);
        double llx = std::log(lx > 1.0 ? lx : 1.0);
        w = lx - llx;
    }
    if (w < -0.99) w = -0.99;
    for (int it = 0; it < 64; ++it) {
        double ew = std::exp(w);
        double r = w * ew - x;
        if (std::abs(r) <= 1e-13 * std::max(1.0, std::abs(x))) break;
        double denom = ew * (w + 1.0) - (w + 2.0) * r / (2.0 * w + 2.0);
        w -= r / denom;
    }
    return w;
}

// Monotone non-decreasing map v -> u on [v_lo, v_hi], used to define thresholds
// as inverses (Theorem-7-style constructions).
struct UtilizationFn {
    std::function<double(double)> psi;
    double v_lo = 1.0;
    double v_hi = 1.0;
};

// Monotone non-decreasing utilization -> price map assembled from segments
// tiling [0, domain_cap]. Immutable once built.
class PiecewiseThreshold {
public:
    enum class Kind { constant, exponential, numeric_inverse };

    struct Segment {
        double u_lo = 0.0, u_hi = 0.0;
        Kind kind = Kind::constant;
        double c = 1.0;              // constant value
        double a = 1.0, b = 0.0, s = 0.0; // a * exp(b*u + s)
        std::function<double(double)> psi; // numeric inverse: psi(v) = u
        double v_lo = 1.0, v_hi = 1.0;
        std::vector<std::pair<double, double>> knots; // (v, psi(v)) ascending in v

        double value_at_lo() const {
            switch (kind) {
                case Kind::constant: return c;
                case Kind::exponential: return a * std::exp(b * u_lo + s);
                case Kind::numeric_inverse: return v_lo;
            }
            return c;
        }
        double value_at_hi() const {
            switch (kind) {
                case Kind::constant: return c;
                case Kind::exponential: return a * std::exp(b * u_hi + s);
                case Kind::numeric_inverse: return v_hi;
            }
            return c;
        }
    };

    static Segment constant(double u_lo, double u_hi, double value) {
        Segment s;
        s.u_lo = u_lo;
        s.u_hi = u_hi;
        s.kind = Kind::constant;
        s.c = value;
        return s;
    }
    // a * exp(b*u + s) on [u_lo, u_hi]
    static Segment exponential(double u_lo, double u_hi, double a, double b, double shift) {
        Segment seg;
        seg.u_lo = u_lo;
        seg.u_hi = u_hi;
        seg.kind = Kind::exponential;
        seg.a = a;
        seg.b = b;
        seg.s = shift;
        return seg;
    }

    static PiecewiseThreshold from_segments(std::vector<Segment> segs, double value_floor,
                                            double value_ceiling) {
        if (segs.empty()) raise(errc::bad_spec, "threshold needs at least one segment");
        PiecewiseThreshold th;
        if (std::abs(segs.front().u_lo) > 1e-12)
            raise(errc::bad_spec, "threshold domain must start at 0");
        segs.front().u_lo = 0.0;
        for (size_t i = 0; i < segs.size(); ++i) {
            if (segs[i].u_hi < segs[i].u_lo - 1e-12)
                raise(errc::bad_spec, "segment with negative length");
            if (i > 0) {
                if (std::abs(segs[i].u_lo - segs[i - 1].u_hi) > 1e-9 * std::max(1.0, segs[i].u_lo))
                    raise(errc::bad_spec, "segments must tile the domain");
                segs[i].u_lo = segs[i - 1].u_hi;
                double left = segs[i - 1].value_at_hi();
                double right = segs[i].value_at_lo();
                if (right < left - 1e-9 * std::max(1.0, std::abs(left)))
                    raise(errc::non_monotone, "decreasing across segment junction");
            }
            if (segs[i].value_at_hi() < segs[i].value_at_lo() - 1e-9)
                raise(errc::non_monotone, "decreasing inside a segment");
        }
        th.segments_ = std::move(segs);
        th.cap_ = th.segments_.back().u_hi;
        th.value_floor_ = value_floor;
        th.value_ceiling_ = value_ceiling;
        return th;
    }

    double domain_cap() const { return cap_; }
    double value_floor() const { return value_floor_; }
    double value_ceiling() const { return value_ceiling_; }
    const std::vector<Segment>& segments() const { return segments_; }

    double eval(double u) const {
        double slack = 1e-9 * std::max(1.0, cap_);
        if (u < -slack || u > cap_ + slack)
            raise(errc::domain_error, "eval at u=" + std::to_string(u) + ", cap=" +
                                          std::to_string(cap_));
        u = std::clamp(u, 0.0, cap_);
        const Segment& seg = segment_for(u);
        switch (seg.kind) {
            case Kind::constant: return seg.c;
            case Kind::exponential: return seg.a * std::exp(seg.b * u + seg.s);
            case Kind::numeric_inverse: return eval_numeric(seg, u);
        }
        return seg.c;
    }

    // sup{u in [0, cap] : phi(u) <= v}; 0 if v < phi(0), cap if v >= phi(cap).
    // Flat segments resolve to their right endpoint (maximal tie-break).
    double invert(double v) const {
        if (v < segments_.front().value_at_lo()) return 0.0;
        double res = 0.0;
        for (const Segment& seg : segments_) {
            if (v >= seg.value_at_hi()) {
                res = seg.u_hi;
                continue;
            }
            if (v >= seg.value_at_lo()) {
                switch (seg.kind) {
                    case Kind::constant:
                        res = seg.u_hi; // v >= c here only when v == c within fp noise
                        break;
                    case Kind::exponential: {
                        double u = (std::log(v / seg.a) - seg.s) / seg.b;
                        res = std::clamp(u, seg.u_lo, seg.u_hi);
                        break;
                    }
                    case Kind::numeric_inverse:
                        res = std::clamp(seg.psi(v), seg.u_lo, seg.u_hi);
                        break;
                }
            }
            break;
        }
        return std::min(res, cap_);
    }

    // int_{u0}^{u1} phi; closed form per segment, adaptive Simpson for numeric ones.
    double integrate(double u0, double u1) const {
        double slack = 1e-9 * std::max(1.0, cap_);
        if (u0 < -slack || u1 > cap_ + slack || u0 > u1 + slack)
            raise(errc::domain_error, "integrate bounds");
        u0 = std::clamp(u0, 0.0, cap_);
        u1 = std::clamp(u1, 0.0, cap_);
        if (u1 <= u0) return 0.0;
        double total = 0.0;
        for (const Segment& seg : segments_) {
            double lo = std::max(u0, seg.u_lo), hi = std::min(u1, seg.u_hi);
            if (hi <= lo) continue;
            switch (seg.kind) {
                case Kind::constant:
                    total += seg.c * (hi - lo);
                    break;
                case Kind::exponential:
                    if (seg.b == 0.0)
                        total += seg.a * std::exp(seg.s) * (hi - lo);
                    else
                        total += seg.a / seg.b *
                                 (std::exp(seg.b * hi + seg.s) - std::exp(seg.b * lo + seg.s));
                    break;
                case Kind::numeric_inverse:
                    total += integrate_adaptive([&](double u) { return eval_numeric(seg, u); },
                                               lo, hi, 1e-10);
                    break;
            }
        }
        return total;
    }

    friend PiecewiseThreshold from_utilization(const UtilizationFn& f);

private:
    const Segment& segment_for(double u) const {
        // first segment whose u_hi >= u; zero-length segments resolve rightwards
        size_t lo = 0, hi = segments_.size() - 1;
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (segments_[mid].u_hi < u)
                lo = mid + 1;
            else
                hi = mid;
        }
        return segments_[lo];
    }

    static double eval_numeric(const Segment& seg, double u) {
        // bracket by knots, then bisect psi(v) = u
        double vlo = seg.v_lo, vhi = seg.v_hi;
        if (!seg.knots.empty()) {
            auto it = std::lower_bound(seg.knots.begin(), seg.knots.end(), u,
                                       [](const std::pair<double, double>& k, double uu) {
                                           return k.second < uu;
                                       });
            if (it == seg.knots.end()) return seg.v_hi;
            vhi = it->first;
            if (it != seg.knots.begin()) vlo = std::prev(it)->first;
        }
        if (seg.psi(vlo) >= u) return vlo;
        if (seg.psi(vhi) <= u) return vhi;
        for (int i = 0; i < 100 && vhi - vlo > 1e-12 * std::max(1.0, vhi); ++i) {
            double mid = 0.5 * (vlo + vhi);
            if (seg.psi(mid) <= u)
                vlo = mid;
            else
                vhi = mid;
        }
        return 0.5 * (vlo + vhi);
    }

    std::vector<Segment> segments_;
    double cap_ = 0.0;
    double value_floor_ = 1.0;
    double value_ceiling_ = 1.0;
};

// Pseudo-utility maximization step shared by all three algorithms: allocate up
// to the inversion point, capped by the agent rate and the remaining domain.
// Picks the maximal element of the argmax set at flat segments.
inline double allocation_step(const PiecewiseThreshold& th, double u_prev, double v, double cap) {
    if (cap <= 0.0) return 0.0;
    double remaining = th.domain_cap() - u_prev;
    if (remaining <= 0.0) return 0.0;
    if (v < th.eval(u_prev)) return 0.0;
    double x = th.invert(v) - u_prev;
    x = std::min(x, std::min(cap, remaining));
    return std::max(x, 0.0);
}

// Builds the threshold as the inverse of a utilization function. The domain is
// extended by a constant segment on [0, psi(v_lo)] when psi(v_lo) > 0; when
// psi(v_lo) < 0 the threshold simply starts above v_lo at u = 0.
inline PiecewiseThreshold from_utilization(const UtilizationFn& f) {
    constexpr int kKnots = 1024;
    if (!(f.v_hi >= f.v_lo)) raise(errc::bad_spec, "utilization range is empty");
    std::vector<std::pair<double, double>> knots;
    knots.reserve(kKnots);
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kKnots; ++i) {
        double v = f.v_lo + (f.v_hi - f.v_lo) * double(i) / double(kKnots - 1);
        double u = f.psi(v);
        if (u < prev - 1e-9 * std::max(1.0, std::abs(prev)))
            raise(errc::non_monotone, "utilization function decreases near v=" + std::to_string(v));
        prev = std::max(prev, u);
        knots.emplace_back(v, u);
    }
    double u_start = knots.front().second;
    double u_end = knots.back().second;
    if (u_end <= 1e-15) {
        // degenerate: zero-length domain
        std::vector<PiecewiseThreshold::Segment> segs{
            PiecewiseThreshold::constant(0.0, 0.0, f.v_hi)};
        return PiecewiseThreshold::from_segments(std::move(segs), f.v_lo, f.v_hi);
    }
    std::vector<PiecewiseThreshold::Segment> segs;
    double numeric_lo = 0.0;
    if (u_start > 1e-15) {
        segs.push_back(PiecewiseThreshold::constant(0.0, u_start, f.v_lo));
        numeric_lo = u_start;
    }
    PiecewiseThreshold::Segment seg;
    seg.kind = PiecewiseThreshold::Kind::numeric_inverse;
    seg.u_lo = numeric_lo;
    seg.u_hi = u_end;
    seg.psi = f.psi;
    seg.v_lo = u_start > 1e-15 ? f.v_lo : [&] {
        // threshold starts above v_lo: find v0 with psi(v0) = 0
        double lo = f.v_lo, hi = f.v_hi;
        for (int i = 0; i < 100 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
            double mid = 0.5 * (lo + hi);
            if (f.psi(mid) <= 0.0)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    }();
    seg.v_hi = f.v_hi;
    seg.knots = std::move(knots);
    segs.push_back(std::move(seg));
    return PiecewiseThreshold::from_segments(std::move(segs), f.v_lo, f.v_hi);
}

} // namespace mcora

#pragma once
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "zollfrei/ode.hpp"

namespace zollfrei {

struct ClosureReport {
    bool closed = false;
    double period = 0.0;          // parameter of the first phase-space return
    double phase_residual = 0.0;  // phase distance at the detected return (or best miss)
    int loops_examined = 0;       // candidate returns that were refined
};

namespace detail {

template <std::size_t K>
struct PhasePoint {
    std::array<double, K> pos;
    std::array<double, K> vel;
};

template <std::size_t K>
inline double phase_dist2(const PhasePoint<K>& a, const PhasePoint<K>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        const double dp = a.pos[i] - b.pos[i], dv = a.vel[i] - b.vel[i];
        d += dp * dp + dv * dv;
    }
    return d;
}

}  // namespace detail

/// Finds the first s* > s_min at which the phase point returns to its initial
/// value within tol (Euclidean distance on ambient position + velocity).
/// Candidate local minima of the distance along the dense output are refined
/// by a Poincare-section crossing (root of <pos(s)-pos0, vel0>), falling back
/// to golden-section minimization when the section is not crossed.
template <std::size_t K, std::size_t N, class PhaseFn>
ClosureReport closure_detect_phase(const Trajectory<N>& traj, PhaseFn&& phase, double tol, double s_min) {
    if (traj.samples.size() < 4 || traj.s_end() - traj.s_begin() <= s_min)
        throw std::invalid_argument("closure_detect: trajectory shorter than the exclusion window");

    const double s0 = traj.s_begin();
    const detail::PhasePoint<K> p0 = phase(traj.samples.front().y);

    auto at = [&](double s) { return phase(traj.eval(s)); };
    auto d2 = [&](double s) { return detail::phase_dist2(at(s), p0); };
    auto section = [&](double s) {
        const auto p = at(s);
        double g = 0.0;
        for (std::size_t i = 0; i < K; ++i) g += (p.pos[i] - p0.pos[i]) * p0.vel[i];
        return g;
    };

    // sample the distance at accepted steps and segment midpoints
    std::vector<double> ss, dd;
    ss.reserve(2 * traj.samples.size());
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        const double a = traj.samples[i].s, b = traj.samples[i + 1].s;
        for (double s : {a, 0.5 * (a + b)}) {
            if (s - s0 <= s_min) continue;
            ss.push_back(s);
            dd.push_back(d2(s));
        }
    }
    ss.push_back(traj.s_end());
    dd.push_back(d2(traj.s_end()));

    ClosureReport rep;
    double best = std::sqrt(dd.empty() ? 0.0 : dd[0]);
    for (std::size_t i = 1; i < ss.size(); ++i) {
        const bool interior_min = i + 1 < ss.size() && dd[i] <= dd[i - 1] && dd[i] <= dd[i + 1];
        const bool boundary_min = i + 1 == ss.size() && dd[i] <= dd[i - 1];
        if (!interior_min && !boundary_min) continue;
        ++rep.loops_examined;
        double sa = ss[i - 1], sb = i + 1 < ss.size() ? ss[i + 1] : ss[i], sstar;
        const double ga = section(sa), gb = section(sb);
        if (ga == 0.0) {
            sstar = sa;
        } else if (ga * gb < 0.0) {
            // bisection on the dense output; evaluations are cheap
            double lo = sa, hi = sb, glo = ga;
            for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
                const double mid = 0.5 * (lo + hi), gm = section(mid);
                if (gm == 0.0) { lo = hi = mid; break; }
                if (glo * gm < 0.0) hi = mid;
                else { lo = mid; glo = gm; }
            }
            sstar = 0.5 * (lo + hi);
        } else {
            // golden-section minimization of the phase distance
            const double gr = 0.6180339887498949;
            double a = sa, b = sb;
            double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
            double f1 = d2(c1), f2 = d2(c2);
            for (int it = 0; it < 160 && b - a > 1e-13 * std::max(1.0, std::abs(b)); ++it) {
                if (f1 < f2) { b = c2; c2 = c1; f2 = f1; c1 = b - gr * (b - a); f1 = d2(c1); }
                else { a = c1; c1 = c2; f1 = f2; c2 = a + gr * (b - a); f2 = d2(c2); }
            }
            sstar = 0.5 * (a + b);
        }
        const double res = std::sqrt(d2(sstar));
        best = std::min(best, res);
        if (res < tol) {
            rep.closed = true;
            rep.period = sstar - s0;
            rep.phase_residual = res;
            return rep;
        }
    }
    rep.phase_residual = best;
    return rep;
}

}  // namespace zollfrei

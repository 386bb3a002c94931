#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zollfrei/berger.hpp"
#include "zollfrei/closure.hpp"
#include "zollfrei/rng.hpp"

namespace zollfrei {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Rational {
    long p = 0;
    long q = 1;

    double value() const { return double(p) / double(q); }
};

/// Best rational approximation of the second kind (minimal |q x - p|) with
/// denominator bounded by q_max: the last continued-fraction convergent that
/// fits. Result is reduced and lies in [0, 1) for x in [0, 1).
inline Rational rational_approx(double x, long q_max) {
    if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("rational_approx: x outside [0,1)");
    if (q_max < 1) throw std::invalid_argument("rational_approx: q_max must be >= 1");
    long p_prev = 1, q_prev = 0;  // convergent k-2
    long p_cur = 0, q_cur = 1;    // convergent k-1, starts at floor(x) = 0
    double frac = x;
    for (int it = 0; it < 64; ++it) {
        if (std::abs(frac) < 1e-15) break;
        frac = 1.0 / frac;
        const double af = std::floor(frac);
        if (af > 1e18) break;
        const long a = long(af);
        const long p_next = a * p_cur + p_prev;
        const long q_next = a * q_cur + q_prev;
        if (q_next > q_max) break;
        p_prev = p_cur;
        q_prev = q_cur;
        p_cur = p_next;
        q_cur = q_next;
        frac -= af;
    }
    if (p_cur == q_cur) return {0, 1};  // x near 1: same circle representative as 0/1
    return {p_cur, q_cur};
}

/// min over q <= q_max of |x - p/q| (first-kind distance), by direct sweep.
inline double min_rational_distance(double x, long q_max) {
    double best = 1e300;
    for (long q = 1; q <= q_max; ++q) {
        const double p = std::round(x * double(q));
        best = std::min(best, std::abs(x - p / double(q)));
    }
    return best;
}

inline double wrap_two_pi(double a) {
    a = std::fmod(a, kTwoPi);
    return a < 0.0 ? a + kTwoPi : a;
}

inline double wrap_pi(double a) {
    a = wrap_two_pi(a);
    return a >= kPi ? a - kTwoPi : a;
}

struct ShiftOptions {
    double tol = 1e-10;
    double base_tol = 1e-8;
    double loops = 1.6;  // integration span in units of the base loop scale
    Quat q0{1.0, 0.0, 0.0, 0.0};
    double psi = 0.0;
};

/// Fiber shift of the canonical lightlike orbit at parameter phi.
/// Deterministic; independent of the starting point and cone angle.
inline double measured_shift(double phi, const ShiftOptions& opt = {}) {
    const BergerParams par(phi);
    const LightlikeState st0 = lightcone_sample(opt.q0, phi, opt.psi);
    const double base_scale = kPi * std::sin(phi);  // loop length of the unit-speed projection
    const BundleTrajectory traj = integrate_lightlike(par, st0, opt.loops * base_scale, opt.tol);
    if (traj.stats.diverged) throw std::runtime_error("measured_shift: integration failed: " + traj.stats.diagnostic);
    return fiber_shift(par, traj, opt.base_tol).delta;
}

/// Closed-form candidate for the closure obstruction: the latitude
/// functional with unweighted length, (pi/2)(4 tan(phi) - 1)/sqrt(1 + 4 tan^2(phi)).
/// Reported next to the measured shift, never used as ground truth.
inline double unweighted_closure_form(double phi) {
    if (!(phi > 0.0 && phi < kPi / 2)) throw std::invalid_argument("unweighted_closure_form: phi outside (0, pi/2)");
    const double t = std::tan(phi);
    return (kPi / 2.0) * (4.0 * t - 1.0) / std::sqrt(1.0 + 4.0 * t * t);
}

/// Variant with the length term weighted by tan(phi):
/// (pi/2)(4 tan^2(phi) - 1)/sqrt(1 + 4 tan^2(phi)).
inline double weighted_closure_form(double phi) {
    if (!(phi > 0.0 && phi < kPi / 2)) throw std::invalid_argument("weighted_closure_form: phi outside (0, pi/2)");
    const double t = std::tan(phi);
    return (kPi / 2.0) * (4.0 * t * t - 1.0) / std::sqrt(1.0 + 4.0 * t * t);
}

struct RationalityCertificate {
    double phi = 0.0;
    double delta = 0.0;  // measured shift in [0, 2pi)
    Rational best;       // best q<=q_max approximation of delta/2pi
    double approx_error = 0.0;
    double unweighted_form = 0.0;  // the closed form above, for comparison
};

inline RationalityCertificate rationality_certificate(double phi, long q_max = 64, const ShiftOptions& opt = {}) {
    RationalityCertificate cert;
    cert.phi = phi;
    cert.delta = measured_shift(phi, opt);
    cert.best = rational_approx(cert.delta / kTwoPi, q_max);
    cert.approx_error = std::abs(cert.delta / kTwoPi - cert.best.value());
    cert.unweighted_form = unweighted_closure_form(phi);
    return cert;
}

/// Machine-readable comparison of the measured shift with both closed forms.
struct ShiftComparison {
    double phi = 0.0;
    double delta = 0.0;
    Rational best;
    double rational_error = 0.0;
    double unweighted_form = 0.0;
    double unweighted_form_mod = 0.0;
    double unweighted_residual = 0.0;  // circle distance between delta and the closed form
    double weighted_value = 0.0;
    double weighted_value_mod = 0.0;
    double weighted_residual = 0.0;
};

inline ShiftComparison shift_report(double phi, long q_max = 64, const ShiftOptions& opt = {}) {
    ShiftComparison rep;
    rep.phi = phi;
    rep.delta = measured_shift(phi, opt);
    rep.best = rational_approx(rep.delta / kTwoPi, q_max);
    rep.rational_error = std::abs(rep.delta / kTwoPi - rep.best.value());
    rep.unweighted_form = unweighted_closure_form(phi);
    rep.unweighted_form_mod = wrap_two_pi(rep.unweighted_form);
    rep.unweighted_residual = std::abs(wrap_pi(rep.delta - rep.unweighted_form));
    rep.weighted_value = weighted_closure_form(phi);
    rep.weighted_value_mod = wrap_two_pi(rep.weighted_value);
    rep.weighted_residual = std::abs(wrap_pi(rep.delta - rep.weighted_value));
    return rep;
}

/// Root of unweighted_closure_form(phi) = target in (0, pi/2), if any.
inline std::optional<double> closure_form_root(double target) {
    double lo = 1e-5, hi = kPi / 2 - 1e-5;
    auto f = [target](double phi) { return unweighted_closure_form(phi) - target; };
    if (f(lo) * f(hi) > 0.0) return std::nullopt;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(lo) * f(mid) <= 0.0) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

struct FindPhiResult {
    double phi_star = 0.0;
    double delta = 0.0;          // measured shift at phi_star
    double target = 0.0;         // 2 pi p/q
    double residual = 0.0;       // circle distance |delta - target|
    std::optional<double> form_root;      // where the closed form hits the target
    double delta_at_form_root = 0.0;      // measured shift there, for the discrepancy record
};

/// Solves measured_shift(phi) = 2 pi p/q for phi in [lo, hi] by bisection on
/// the principal angle difference. The bracket must produce a sign change
/// (the shift wraps on the circle, so brackets are the caller's knowledge).
inline FindPhiResult find_phi(const Rational& target, double lo, double hi, const ShiftOptions& opt = {}) {
    FindPhiResult out;
    out.target = kTwoPi * target.value();
    auto f = [&](double phi) { return wrap_pi(measured_shift(phi, opt) - out.target); };
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) { out.phi_star = lo; }
    else if (fhi == 0.0) { out.phi_star = hi; }
    else if (flo * fhi > 0.0) {
        throw std::domain_error("find_phi: no sign change of the shift across the bracket");
    } else {
        double a = lo, b = hi, fa = flo;
        for (int it = 0; it < 80 && b - a > 1e-13; ++it) {
            const double mid = 0.5 * (a + b);
            const double fm = f(mid);
            if (fm == 0.0) { a = b = mid; break; }
            if (fa * fm < 0.0) { b = mid; }
            else { a = mid; fa = fm; }
        }
        out.phi_star = 0.5 * (a + b);
    }
    out.delta = measured_shift(out.phi_star, opt);
    out.residual = std::abs(wrap_pi(out.delta - out.target));
    out.form_root = closure_form_root(wrap_two_pi(out.target) < kPi ? wrap_two_pi(out.target)
                                                                   : wrap_two_pi(out.target) - kTwoPi);
    if (out.form_root) out.delta_at_form_root = measured_shift(*out.form_root, opt);
    return out;
}

struct OrbitRecord {
    int point_index = 0;
    int dir_index = 0;
    bool integration_ok = true;
    ClosureReport closure;
    IntegratorStats stats;
};

struct ScanReport {
    double phi = 0.0;
    int n_points = 0;
    int n_dirs = 0;
    int loop_budget = 64;
    std::uint64_t seed = 0;
    std::vector<Quat> points;  // sampled base quaternions
    std::vector<double> psis;  // sampled cone angles
    std::vector<OrbitRecord> orbits;
    bool all_closed = false;
    bool none_closed = false;
    bool inconclusive = false;  // an integration failed; verdict withheld
    double common_period = 0.0;
    double period_spread = 0.0;
    int closed_count = 0;
};

struct ScanOptions {
    double tol = 1e-10;
    double phase_tol = 1e-6;
    double period_spread_rel = 1e-5;
};

/// Integrates n_points x n_dirs lightlike orbits and reports per-orbit
/// closure, the common period, and the all-or-none verdict. Orbits run
/// concurrently; aggregation order is (point, direction).
inline ScanReport zollfrei_scan(double phi, int n_points, int n_dirs, int loop_budget, std::uint64_t seed,
                                const ScanOptions& opt = {}) {
    if (n_points < 1 || n_dirs < 1 || loop_budget < 1)
        throw std::invalid_argument("zollfrei_scan: counts must be positive");
    const BergerParams par(phi);
    const double base_scale = kPi * std::sin(phi);

    Rng rng(seed);
    std::vector<Quat> points;
    points.reserve(n_points);
    for (int i = 0; i < n_points; ++i) points.push_back(rng.unit_quaternion());

    auto run_orbit = [&](int pi_idx, int di_idx) {
        OrbitRecord rec;
        rec.point_index = pi_idx;
        rec.dir_index = di_idx;
        const double psi = kTwoPi * di_idx / n_dirs;
        try {
            const LightlikeState st0 = lightcone_sample(points[pi_idx], phi, psi);
            // fast path: most closures happen within a few base loops
            for (double span : {2.5 * base_scale, loop_budget * base_scale * 1.02}) {
                const BundleTrajectory traj = integrate_lightlike(par, st0, span, opt.tol);
                rec.stats = traj.stats;
                if (traj.stats.diverged) {
                    rec.integration_ok = false;
                    return rec;
                }
                rec.closure = bundle_closure_detect(traj, opt.phase_tol, 1e-3 * base_scale);
                if (rec.closure.closed) break;
            }
        } catch (const std::exception&) {
            rec.integration_ok = false;
        }
        return rec;
    };

    ScanReport rep;
    rep.phi = phi;
    rep.n_points = n_points;
    rep.n_dirs = n_dirs;
    rep.loop_budget = loop_budget;
    rep.seed = seed;
    rep.points = points;
    for (int j = 0; j < n_dirs; ++j) rep.psis.push_back(kTwoPi * j / n_dirs);

    std::vector<std::future<OrbitRecord>> jobs;
    jobs.reserve(std::size_t(n_points) * n_dirs);
    for (int i = 0; i < n_points; ++i)
        for (int j = 0; j < n_dirs; ++j)
            jobs.push_back(std::async(std::launch::async | std::launch::deferred, run_orbit, i, j));
    for (auto& jb : jobs) rep.orbits.push_back(jb.get());

    std::vector<double> periods;
    for (const auto& rec : rep.orbits) {
        if (!rec.integration_ok) rep.inconclusive = true;
        if (rec.closure.closed) {
            ++rep.closed_count;
            periods.push_back(rec.closure.period);
        }
    }
    if (!periods.empty()) {
        const double mean = std::accumulate(periods.begin(), periods.end(), 0.0) / periods.size();
        double spread = 0.0;
        for (double p : periods) spread = std::max(spread, std::abs(p - mean));
        rep.common_period = mean;
        rep.period_spread = spread;
    }
    const int total = n_points * n_dirs;
    if (!rep.inconclusive) {
        rep.all_closed = rep.closed_count == total && rep.period_spread < opt.period_spread_rel * rep.common_period;
        rep.none_closed = rep.closed_count == 0;
    }
    return rep;
}

}  // namespace zollfrei

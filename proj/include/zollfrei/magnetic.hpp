#pragma once
#include <cmath>
#include <stdexcept>

#include "zollfrei/closure.hpp"
#include "zollfrei/ode.hpp"
#include "zollfrei/quadrature.hpp"
#include "zollfrei/surface.hpp"

namespace zollfrei {

/// Charged-particle system on a model surface: extremals of
/// length_weight * L(gamma) + integral of the potential of
/// omega = flux_const * dvol.
struct MagneticSystem {
    ModelSurface surface;
    double length_weight = 1.0;  // multiplies the length term
    double flux_const = -1.0;    // omega = flux_const * dvol

    MagneticSystem(ModelSurface surf, double lw, double c) : surface(surf), length_weight(lw), flux_const(c) {
        if (!(lw > 0.0)) throw std::invalid_argument("MagneticSystem: length weight must be positive");
    }
};

struct ExtremalState {
    SurfacePoint point;
    Vec3 velocity;
};

using BaseTrajectory = Trajectory<6>;  // state (p, v) in ambient coordinates

inline ExtremalState canonical_state(const ModelSurface& surf, const ExtremalState& st) {
    auto [p, tv] = canonicalize(surf, st.point, {st.point, st.velocity});
    return {p, tv.v};
}

/// Covariant acceleration of the extremal flow:
///   nabla_v v = -(|v|_g / length_weight) * flux_const * J v.
/// Orthogonal to v, so the g-speed is a first integral.
inline Vec3 magnetic_rhs(const MagneticSystem& sys, const ExtremalState& st) {
    const double sp = speed(sys.surface, st.point, st.velocity);
    if (!(sp > 0.0)) throw std::invalid_argument("magnetic_rhs: zero velocity");
    const Vec3 jv = rot90(sys.surface, {st.point, st.velocity}).v;
    return (-sp * sys.flux_const / sys.length_weight) * jv;
}

namespace detail {

inline State<6> pack(const ExtremalState& st) {
    return {st.point.x.x, st.point.x.y, st.point.x.z, st.velocity.x, st.velocity.y, st.velocity.z};
}

inline ExtremalState unpack(const State<6>& y) {
    return {{{y[0], y[1], y[2]}}, {y[3], y[4], y[5]}};
}

}  // namespace detail

inline ExtremalState trajectory_state(const BaseTrajectory& traj, double s) {
    return detail::unpack(traj.eval(s));
}

/// Integrates the ambient form of the extremal equation
///   x'' = nabla_v v + normal curvature term,
/// with constraint projection after every accepted step.
inline BaseTrajectory integrate_extremal(const MagneticSystem& sys, const ExtremalState& st0, double s_max,
                                         double tol) {
    if (!(tol >= 1e-13 && tol <= 1e-6)) throw std::invalid_argument("integrate_extremal: tol outside [1e-13,1e-6]");
    const ExtremalState c0 = canonical_state(sys.surface, st0);
    if (!(speed(sys.surface, c0.point, c0.velocity) > 0.0))
        throw std::invalid_argument("integrate_extremal: zero velocity");

    auto rhs = [&sys](double, const State<6>& y) -> State<6> {
        const ExtremalState st = detail::unpack(y);
        const Vec3 acc = magnetic_rhs(sys, st) + normal_curvature_term(sys.surface, st.point, st.velocity);
        return {st.velocity.x, st.velocity.y, st.velocity.z, acc.x, acc.y, acc.z};
    };
    auto project = [&sys](State<6>& y) {
        const ExtremalState st = canonical_state(sys.surface, detail::unpack(y));
        y = detail::pack(st);
    };
    return integrate_adaptive<6>(rhs, detail::pack(c0), 0.0, s_max, tol, project);
}

/// Largest deviation of the g-speed from its initial value, per unit of
/// parameter; the accuracy monitor for a base trajectory.
inline double speed_drift_rate(const ModelSurface& surf, const BaseTrajectory& traj) {
    const ExtremalState st0 = detail::unpack(traj.samples.front().y);
    const double v0 = speed(surf, st0.point, st0.velocity);
    double rate = 0.0;
    for (const auto& smp : traj.samples) {
        const ExtremalState st = detail::unpack(smp.y);
        const double ds = smp.s - traj.s_begin();
        if (ds <= 0.0) continue;
        rate = std::max(rate, std::abs(speed(surf, st.point, st.velocity) - v0) / std::max(ds, 1.0));
    }
    return rate;
}

/// First phase-space return of a base trajectory. s_min excludes the trivial
/// match at the start; callers use 1e-3 * length_weight.
inline ClosureReport closure_detect(const BaseTrajectory& traj, double tol, double s_min) {
    auto phase = [](const State<6>& y) {
        detail::PhasePoint<3> p;
        p.pos = {y[0], y[1], y[2]};
        p.vel = {y[3], y[4], y[5]};
        return p;
    };
    return closure_detect_phase<3>(traj, phase, tol, s_min);
}

/// Latitude of the stationary circular extremal on a sphere of radius r:
/// cot(theta) = r |c| / length_weight, theta in (0, pi/2).
inline double predicted_latitude(double r, double length_weight, double c) {
    if (!(r > 0.0) || !(length_weight > 0.0)) throw std::invalid_argument("predicted_latitude: r, weight > 0");
    if (c == 0.0) throw std::invalid_argument("predicted_latitude: no latitude extremal without flux");
    return std::atan2(length_weight, r * std::abs(c));
}

/// Unit-speed state on the latitude circle, traversed so that the magnetic
/// force points toward the +z pole when flux_const < 0.
inline ExtremalState latitude_state(const MagneticSystem& sys, double theta, double psi = 0.0) {
    if (sys.surface.kind != SurfaceKind::Sphere) throw std::invalid_argument("latitude_state: sphere only");
    const SurfacePoint p = polar_to_ambient(sys.surface, {theta, psi});
    const double dir = sys.flux_const < 0.0 ? 1.0 : -1.0;
    const Vec3 v = dir * Vec3{-std::sin(psi), std::cos(psi), 0.0};
    return {p, v};
}

/// Unit-speed period of the circular extremal: 2*pi / sqrt(kappa^2 + K),
/// kappa = |c| / length_weight. Requires kappa^2 + K > 0.
inline double expected_period(const MagneticSystem& sys) {
    const double kappa = std::abs(sys.flux_const) / sys.length_weight;
    const double disc = kappa * kappa + sys.surface.gaussian_curvature();
    if (!(disc > 0.0)) throw std::invalid_argument("expected_period: extremals are not closed");
    return 2.0 * 3.14159265358979323846 / std::sqrt(disc);
}

struct CpComponents {
    double weighted_length = 0.0;  // tan(phi) * g-length of the latitude
    double sigma_integral = 0.0;   // line integral of -(cos(theta)/4) dpsi
    double cap_flux = 0.0;         // integral of flux_const * dvol over the polar cap
};

/// Closed-form functional pieces for the latitude circle at polar angle
/// theta on the radius-1/2 sphere, each evaluated by quadrature.
inline CpComponents cp_components(double phi, double theta, double flux_const = -1.0) {
    constexpr double pi = 3.14159265358979323846;
    if (!(theta > 0.0 && theta < pi) || !(phi > 0.0 && phi < pi / 2))
        throw std::invalid_argument("cp_components: angles out of range");
    const ModelSurface surf = ModelSurface::sphere(0.5);
    CpComponents out;

    // g-length of the latitude: integral of |d/dpsi P(theta,psi)|_g
    auto speed_of_psi = [&](double psi) {
        auto [dth, dps] = polar_basis(surf, {theta, psi});
        (void)dth;
        return std::sqrt(metric(surf, dps, dps));
    };
    out.weighted_length = std::tan(phi) * integrate_gk(speed_of_psi, 0.0, 2.0 * pi, 1e-13).value;

    // sigma = -(cos(theta)/4) dpsi pulled back to the latitude
    auto sigma_of_psi = [&](double psi) {
        (void)psi;
        return -std::cos(theta) / 4.0;
    };
    out.sigma_integral = integrate_gk(sigma_of_psi, 0.0, 2.0 * pi, 1e-13).value;

    // flux through the cap bounded by the latitude, oriented by dvol
    auto ring = [&](double th) { return flux_const * 2.0 * pi * (std::sin(th) / 4.0); };
    out.cap_flux = integrate_gk(ring, 0.0, theta, 1e-13).value;
    return out;
}

enum class Dichotomy { AllClosed, NoneClosed };

/// Closure prediction for constant-curvature systems: every extremal of a
/// given system is closed or none is. Spheres and the plane close for any
/// nonzero flux; the hyperbolic plane closes iff |c| / length_weight > 1.
inline Dichotomy dichotomy_predict(const MagneticSystem& sys) {
    const double kappa = std::abs(sys.flux_const) / sys.length_weight;
    switch (sys.surface.kind) {
        case SurfaceKind::Sphere: return Dichotomy::AllClosed;
        case SurfaceKind::Euclidean: return kappa > 0.0 ? Dichotomy::AllClosed : Dichotomy::NoneClosed;
        case SurfaceKind::Hyperbolic: return kappa > 1.0 ? Dichotomy::AllClosed : Dichotomy::NoneClosed;
    }
    return Dichotomy::NoneClosed;
}

}  // namespace zollfrei

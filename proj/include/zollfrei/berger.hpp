#pragma once
#include <cmath>
#include <stdexcept>
#include <vector>

#include "zollfrei/closure.hpp"
#include "zollfrei/magnetic.hpp"
#include "zollfrei/ode.hpp"
#include "zollfrei/quaternion.hpp"
#include "zollfrei/rng.hpp"
#include "zollfrei/surface.hpp"

namespace zollfrei {

/// The Lorentzian metric on the 3-sphere with fiber coefficient -cot^2(phi):
/// round metric minus (1/sin^2 phi) alpha (x) alpha, where alpha is dual to
/// the fiber direction i*q. Frame inertia (I1, I2, I3) = (-cot^2 phi, 1, 1).
struct BergerParams {
    double phi;

    explicit BergerParams(double phi_) : phi(phi_) {
        constexpr double pi = 3.14159265358979323846;
        if (!(phi > 1e-6 && phi < pi / 2 - 1e-6))
            throw std::invalid_argument("BergerParams: phi must lie in (1e-6, pi/2 - 1e-6)");
    }

    double fiber_coefficient() const {  // I1
        const double c = 1.0 / std::tan(phi);
        return -c * c;
    }
};

/// Tangent components in the invariant frame (i*q, j*q, k*q).
struct FrameVelocity {
    double o1 = 0.0, o2 = 0.0, o3 = 0.0;

    Vec3 as_vec3() const { return {o1, o2, o3}; }
};

struct LightlikeState {
    Quat q;
    FrameVelocity omega;
};

inline const Quat kQuatI{0.0, 1.0, 0.0, 0.0};

/// Ambient tangent vector of the frame velocity: (o1 i + o2 j + o3 k) q.
inline Quat ambient_velocity(const Quat& q, const FrameVelocity& om) {
    return Quat::pure(om.as_vec3()) * q;
}

inline FrameVelocity frame_components(const Quat& q, const Quat& v) {
    return {dot(kQuatI * q, v), dot(Quat{0, 0, 1, 0} * q, v), dot(Quat{0, 0, 0, 1} * q, v)};
}

/// Metric value h_phi(v, w) at q for ambient tangent vectors.
inline double berger_eval(const BergerParams& par, const Quat& q, const Quat& v, const Quat& w) {
    const double s = std::sin(par.phi);
    const Quat iq = kQuatI * q;
    return dot(v, w) - dot(iq, v) * dot(iq, w) / (s * s);
}

inline double berger_norm2_frame(const BergerParams& par, const FrameVelocity& om) {
    return par.fiber_coefficient() * om.o1 * om.o1 + om.o2 * om.o2 + om.o3 * om.o3;
}

/// Bundle projection onto the radius-1/2 sphere: p = (1/2) q^-1 i q.
/// Invariant under q -> e^{it} q.
inline SurfacePoint hopf_project(const Quat& q) {
    const Quat r = conj(q) * kQuatI * q;
    return {0.5 * r.imag()};
}

/// Differential of the projection at q applied to an ambient tangent v.
inline Vec3 hopf_differential(const Quat& q, const Quat& v) {
    const Quat r = conj(v) * (kQuatI * q) + conj(q) * (kQuatI * v);
    return 0.5 * r.imag();
}

/// Connection form: alpha(v) = <i q, v>; alpha of the fiber direction is 1.
inline double alpha_eval(const Quat& q, const Quat& v) {
    if (std::abs(dot(q, v)) > 1e-6 * std::max(1.0, norm(v)))
        throw std::invalid_argument("alpha_eval: vector is not tangent to the sphere");
    return dot(kQuatI * q, v);
}

/// d(alpha) at q on tangent vectors, from central differences of the ambient
/// extension x -> <i x, .> with constant vector fields.
inline double alpha_exterior_derivative(const Quat& q, const Quat& u, const Quat& v, double h = 1e-6) {
    auto bar = [](const Quat& x, const Quat& w) { return dot(kQuatI * x, w); };
    const double du = (bar(q + h * u, v) - bar(q + (-h) * u, v)) / (2.0 * h);
    const double dv = (bar(q + h * v, u) - bar(q + (-h) * v, u)) / (2.0 * h);
    return du - dv;
}

struct CurvatureEstimate {
    double value = 0.0;
    double spread = 0.0;  // max - min over the sampled ratios
    int samples = 0;
};

/// Constant c with d(alpha) = c * (pullback of the base area form of the
/// radius-1/2 sphere), measured at random points and frames.
inline CurvatureEstimate curvature_factor_detailed(int n_samples = 24) {
    const ModelSurface base = ModelSurface::sphere(0.5);
    Rng rng(0x5eedULL);
    double lo = 1e300, hi = -1e300, sum = 0.0;
    int n = 0;
    while (n < n_samples) {
        const Quat q = rng.unit_quaternion();
        Quat u{rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian()};
        Quat v{rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian()};
        u = u - dot(u, q) * q;
        v = v - dot(v, q) * q;
        const SurfacePoint p = hopf_project(q);
        const double area = dvol(base, p, hopf_differential(q, u), hopf_differential(q, v));
        if (std::abs(area) < 0.05 * norm(u) * norm(v)) continue;
        const double ratio = alpha_exterior_derivative(q, u, v) / area;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        sum += ratio;
        ++n;
    }
    if (hi - lo >= 1e-6) throw std::logic_error("curvature_factor: ratio is not constant");
    return {sum / n, hi - lo, n};
}

inline double curvature_factor() { return curvature_factor_detailed().value; }

/// Future lightlike frame velocity (tan phi, cos psi, sin psi); the cone
/// condition -cot^2(phi) tan^2(phi) + 1 = 0 holds in closed form.
inline LightlikeState lightcone_sample(const Quat& q, double phi, double psi) {
    constexpr double pi = 3.14159265358979323846;
    if (!(phi > 0.0 && phi < pi / 2)) throw std::invalid_argument("lightcone_sample: phi outside (0, pi/2)");
    return {normalized(q), {std::tan(phi), std::cos(psi), std::sin(psi)}};
}

using BundleTrajectory = Trajectory<7>;  // state (q0..q3, o1..o3)

namespace detail {

inline State<7> pack(const LightlikeState& st) {
    return {st.q.w, st.q.x, st.q.y, st.q.z, st.omega.o1, st.omega.o2, st.omega.o3};
}

inline LightlikeState unpack7(const State<7>& y) {
    return {{y[0], y[1], y[2], y[3]}, {y[4], y[5], y[6]}};
}

}  // namespace detail

inline LightlikeState bundle_state(const BundleTrajectory& traj, double s) {
    return detail::unpack7(traj.eval(s));
}

/// Geodesic flow of the invariant metric, reduced to the frame:
///   o1' = 0,   (o2 + i o3)' = i mu (o2 + i o3),   mu = 2 o1 / sin^2(phi),
/// with reconstruction q' = (o1 i + o2 j + o3 k) q. The derivation is worked
/// out in docs/frame_geodesics.md; the finite-difference chart integrator is
/// the independent check. Each accepted step renormalizes q and projects the
/// frame velocity back onto the light cone (o1 is untouched: it is the
/// conserved charge of the fiber symmetry).
inline BundleTrajectory integrate_lightlike(const BergerParams& par, const LightlikeState& st0, double T,
                                            double tol) {
    const double s2 = std::sin(par.phi) * std::sin(par.phi);
    const double cotphi = std::cos(par.phi) / std::sin(par.phi);

    const double omega_scale = norm(st0.omega.as_vec3());
    if (!(omega_scale > 0.0)) throw std::invalid_argument("integrate_lightlike: zero velocity");
    if (!(st0.omega.o1 > 0.0)) throw std::invalid_argument("integrate_lightlike: not future pointing (o1 <= 0)");
    if (std::abs(berger_norm2_frame(par, st0.omega)) > 1e-11 * omega_scale * omega_scale)
        throw std::invalid_argument("integrate_lightlike: initial velocity is not lightlike");

    auto rhs = [s2](double, const State<7>& y) -> State<7> {
        const Quat q{y[0], y[1], y[2], y[3]};
        const Quat qdot = Quat::pure({y[4], y[5], y[6]}) * q;
        const double mu = 2.0 * y[4] / s2;
        return {qdot.w, qdot.x, qdot.y, qdot.z, 0.0, -mu * y[6], mu * y[5]};
    };
    auto project = [cotphi](State<7>& y) {
        const double n = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3]);
        for (int i = 0; i < 4; ++i) y[i] /= n;
        const double rho = std::hypot(y[5], y[6]);
        if (rho > 0.0) {
            const double target = cotphi * y[4];
            y[5] *= target / rho;
            y[6] *= target / rho;
        }
    };
    return integrate_adaptive<7>(rhs, detail::pack(st0), 0.0, T, tol, project);
}

/// Projection of a bundle trajectory to a base trajectory on the radius-1/2
/// sphere; sample derivatives are exact pushforwards, so the dense output of
/// the result matches the projected dense output of the input.
inline BaseTrajectory project_to_base(const BundleTrajectory& btraj) {
    BaseTrajectory out;
    out.stats = btraj.stats;
    out.samples.reserve(btraj.samples.size());
    for (const auto& smp : btraj.samples) {
        const LightlikeState st = detail::unpack7(smp.y);
        const Quat q = st.q;
        const Quat w = Quat::pure(st.omega.as_vec3());
        const Quat qdot = w * q;
        const Quat wdot = Quat::pure({smp.f[4], smp.f[5], smp.f[6]});
        const Quat qddot = (wdot + w * w) * q;

        const Vec3 x = hopf_project(q).x;
        const Vec3 v = hopf_differential(q, qdot);
        // second derivative of (1/2) conj(q) i q
        const Quat iq = kQuatI * q;
        const Quat acc = conj(qddot) * iq + 2.0 * (conj(qdot) * (kQuatI * qdot)) + conj(q) * (kQuatI * qddot);
        const Vec3 a = 0.5 * acc.imag();

        OdeSample<6> s6;
        s6.s = smp.s;
        s6.y = {x.x, x.y, x.z, v.x, v.y, v.z};
        s6.f = {v.x, v.y, v.z, a.x, a.y, a.z};
        out.samples.push_back(s6);
    }
    return out;
}

struct FiberShift {
    double delta = 0.0;                // in [0, 2pi)
    double base_loop_parameter = 0.0;  // first phase return of the projection
    double residual = 0.0;             // |q(T_b) - e^{i delta} q(0)|
};

/// Fiber rotation accumulated over the first closed loop of the projected
/// curve: the unique delta in [0, 2pi) with q(T_b) = e^{i delta} q(0).
inline FiberShift fiber_shift(const BergerParams& par, const BundleTrajectory& btraj, double base_tol = 1e-8,
                              double s_min = 1e-3) {
    (void)par;
    const BaseTrajectory base = project_to_base(btraj);
    const ClosureReport rep = closure_detect(base, base_tol, s_min);
    if (!rep.closed) throw std::domain_error("fiber_shift: base projection does not close in the trajectory");

    const Quat q0 = detail::unpack7(btraj.samples.front().y).q;
    const Quat qT = normalized(detail::unpack7(btraj.eval(rep.period)).q);
    const Quat w = qT * conj(q0);  // should be cos(delta) + sin(delta) i
    double delta = std::atan2(w.x, w.w);
    constexpr double two_pi = 2.0 * 3.14159265358979323846;
    if (delta < 0.0) delta += two_pi;
    const Quat ideal{std::cos(delta), std::sin(delta), 0.0, 0.0};
    const double residual = norm(w - ideal);
    if (residual > 1e-7) throw std::domain_error("fiber_shift: holonomy is not a fiber rotation");
    return {delta, rep.period, residual};
}

/// Phase-space return of the bundle flow itself, with the phase metric on
/// ambient position and velocity (q, q').
inline ClosureReport bundle_closure_detect(const BundleTrajectory& traj, double tol, double s_min) {
    auto phase = [](const State<7>& y) {
        const LightlikeState st = detail::unpack7(y);
        const Quat qdot = ambient_velocity(st.q, st.omega);
        detail::PhasePoint<4> p;
        p.pos = {st.q.w, st.q.x, st.q.y, st.q.z};
        p.vel = {qdot.w, qdot.x, qdot.y, qdot.z};
        return p;
    };
    return closure_detect_phase<4>(traj, phase, tol, s_min);
}

}  // namespace zollfrei

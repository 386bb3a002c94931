#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zollfrei/berger.hpp"
#include "zollfrei/magnetic.hpp"
#include "zollfrei/quadrature.hpp"
#include "zollfrei/quaternion.hpp"
#include "zollfrei/surface.hpp"

namespace zollfrei {

/// Local data of a standard stationary splitting over a chart of the base:
/// metric g0, drift field delta, positive lapse beta, all as callbacks. The
/// associated Fermat functional is
///   F(x, v) = sqrt(gt[v,v] + gt[delta,v]^2) + gt[delta,v],  gt = g0 / beta.
struct StationaryChart {
    ModelSurface base;
    std::function<bool(const SurfacePoint&)> in_domain;
    std::function<double(const SurfacePoint&, const Vec3&, const Vec3&)> g0;
    std::function<Vec3(const SurfacePoint&)> delta;
    std::function<double(const SurfacePoint&)> beta;

    // Reduced form carried by bundle-derived charts:
    //   F(x, v) = lambda * sqrt(g(v,v)) - alpha_pull(x, v).
    struct ReducedForm {
        double lambda = 0.0;
        std::function<double(const SurfacePoint&, const Vec3&)> alpha_pull;
    };
    std::optional<ReducedForm> reduced;
};

inline double fermat_eval(const StationaryChart& chart, const SurfacePoint& p_in, const Vec3& v_in) {
    // inputs may come from dense interpolation; restore the surface
    // constraint before evaluating the chart callbacks
    const auto [p, tv] = canonicalize(chart.base, p_in, {p_in, v_in});
    const Vec3 v = tv.v;
    if (!chart.in_domain(p)) throw std::domain_error("fermat_eval: point outside the chart domain");
    const double b = chart.beta(p);
    if (!(b > 0.0)) throw std::domain_error("fermat_eval: lapse must be positive");
    const Vec3 d = chart.delta(p);
    const double gt_vv = chart.g0(p, v, v) / b;
    const double gt_dv = chart.g0(p, d, v) / b;
    const double rad = gt_vv + gt_dv * gt_dv;
    if (!(rad >= 0.0)) throw std::domain_error("fermat_eval: section data is not spacelike");
    const double value = std::sqrt(rad) + gt_dv;
    const double vnorm = std::sqrt(std::max(0.0, metric(chart.base, p, v, v)));
    if (vnorm > 0.0 && !(value > 0.0)) throw std::domain_error("fermat_eval: section data is not spacelike");

    if (chart.reduced) {
        const double red = chart.reduced->lambda * vnorm - chart.reduced->alpha_pull(p, v);
        if (std::abs(red - value) > 1e-12 * std::max(1.0, std::abs(value)))
            throw std::logic_error("fermat_eval: generic and reduced forms disagree");
    }
    return value;
}

namespace detail {

inline void check_in_domain(const StationaryChart& chart, const BaseTrajectory& traj, double s0, double s1) {
    for (const auto& smp : traj.samples) {
        if (smp.s < s0 || smp.s > s1) continue;
        if (!chart.in_domain({{smp.y[0], smp.y[1], smp.y[2]}}))
            throw std::domain_error("curve exits the chart domain at s=" + std::to_string(smp.s));
    }
}

}  // namespace detail

/// Time accumulated by the lightlike lift of a base curve: the quadrature of
/// the Fermat functional along the curve. Additive under concatenation.
inline double arrival_time(const StationaryChart& chart, const BaseTrajectory& traj, double s0, double s1,
                           double tol = 1e-12) {
    detail::check_in_domain(chart, traj, s0, s1);
    auto integrand = [&](double s) {
        const auto y = traj.eval(s);
        const SurfacePoint p{{y[0], y[1], y[2]}};
        const Vec3 v{y[3], y[4], y[5]};
        if (!chart.in_domain(p)) throw std::domain_error("curve exits the chart domain at s=" + std::to_string(s));
        return fermat_eval(chart, p, v);
    };
    return integrate_gk(integrand, s0, s1, tol).value;
}

struct LiftSample {
    double s;
    Vec3 x;
    double t;
    double lightlike_residual;  // |gt[x',x'] + 2 gt[delta,x'] t' - t'^2|
};

struct LiftedCurve {
    std::vector<LiftSample> samples;
    double max_lightlike_residual = 0.0;
};

/// Lifts a base curve to the spacetime chart: (x(s), t(s)) with t from the
/// arrival-time quadrature; the lift velocity is lightlike for g/beta.
inline LiftedCurve lift_curve(const StationaryChart& chart, const BaseTrajectory& traj, double s0, double s1,
                              double tol = 1e-12) {
    detail::check_in_domain(chart, traj, s0, s1);
    LiftedCurve out;
    double t = 0.0;
    double prev_s = s0;
    for (const auto& smp : traj.samples) {
        if (smp.s < s0 || smp.s > s1) continue;
        if (smp.s > prev_s) t += arrival_time(chart, traj, prev_s, smp.s, tol);
        prev_s = smp.s;
        const SurfacePoint p{{smp.y[0], smp.y[1], smp.y[2]}};
        const Vec3 v{smp.y[3], smp.y[4], smp.y[5]};
        const double b = chart.beta(p);
        const Vec3 d = chart.delta(p);
        const double gt_vv = chart.g0(p, v, v) / b;
        const double gt_dv = chart.g0(p, d, v) / b;
        const double tdot = fermat_eval(chart, p, v);
        const double res = std::abs(gt_vv + 2.0 * gt_dv * tdot - tdot * tdot);
        out.samples.push_back({smp.s, p.x, t, res});
        out.max_lightlike_residual = std::max(out.max_lightlike_residual, res);
    }
    if (out.samples.size() < 2) throw std::invalid_argument("lift_curve: fewer than two samples in [s0, s1]");
    for (std::size_t i = 1; i < out.samples.size(); ++i)
        if (!(out.samples[i].t > out.samples[i - 1].t))
            throw std::logic_error("lift_curve: arrival time is not increasing");
    return out;
}

/// Section of the bundle over the cap of angular radius cap_angle about
/// axis (a unit vector): the standard section rotated so its center sits at
/// axis. Spacelike iff cap_angle < 2 phi; checked on a sample grid.
class HopfSection {
public:
    explicit HopfSection(const Vec3& axis) : axis_(normalized(axis)) {
        const Vec3 iv{1.0, 0.0, 0.0};
        if (norm(iv + axis_) < 1e-8)
            throw std::invalid_argument("HopfSection: axis opposite to the reference pole");
        w_ = Quat::pure(normalized(iv + axis_));
    }

    // I(p) with pi(I(p)) = p, for |p| = 1/2.
    Quat value(const SurfacePoint& p) const {
        const Vec3 pp = rotate_back(p.x);
        return std_section(pp) * w_;
    }

    Quat differential(const SurfacePoint& p, const Vec3& v) const {
        const Vec3 pp = rotate_back(p.x);
        const Vec3 vv = rotate_back(v);
        return std_differential(pp, vv) * w_;
    }

    const Vec3& axis() const { return axis_; }

private:
    // conjugation sending the chart's working pole back to the i-axis
    Vec3 rotate_back(const Vec3& x) const { return (w_ * Quat::pure(x) * conj(w_)).imag(); }

    static Quat std_section(const Vec3& p) {
        const Vec3 n{1.0 + 2.0 * p.x, 2.0 * p.y, 2.0 * p.z};  // i + 2p
        const double nn = norm(n);
        if (nn < 1e-8) throw std::domain_error("HopfSection: point at the excluded pole");
        return Quat::pure(n / nn);
    }

    static Quat std_differential(const Vec3& p, const Vec3& v) {
        const Vec3 n{1.0 + 2.0 * p.x, 2.0 * p.y, 2.0 * p.z};
        const Vec3 dn = 2.0 * v;
        const double nn = norm(n);
        const Vec3 d = dn / nn - (dot(n, dn) / (nn * nn * nn)) * n;
        return Quat::pure(d);
    }

    Vec3 axis_;
    Quat w_;
};

/// Stationary chart of the Berger sphere over a polar cap, derived from the
/// spacelike bundle section above:
///   beta = cot^2 phi,  g0 = pullback of h_phi,  gt[delta, .] = -pullback of alpha.
inline StationaryChart hopf_chart(double phi, const Vec3& axis, double cap_angle) {
    constexpr double pi = 3.14159265358979323846;
    if (!(phi > 1e-6 && phi < pi / 2 - 1e-6)) throw std::invalid_argument("hopf_chart: phi out of range");
    if (!(cap_angle > 0.0 && cap_angle < pi)) throw std::invalid_argument("hopf_chart: cap angle out of range");

    const BergerParams par(phi);
    auto section = std::make_shared<HopfSection>(axis);
    const double beta_val = 1.0 / (std::tan(phi) * std::tan(phi));
    const double lambda = std::tan(phi);
    const ModelSurface base = ModelSurface::sphere(0.5);
    const Vec3 ax = section->axis();

    StationaryChart chart;
    chart.base = base;
    chart.in_domain = [ax, cap_angle](const SurfacePoint& p) {
        const double c = dot(normalized(p.x), ax);
        return std::acos(std::clamp(c, -1.0, 1.0)) <= cap_angle + 1e-9;
    };
    chart.g0 = [section, par](const SurfacePoint& p, const Vec3& v, const Vec3& w) {
        const Quat q = section->value(p);
        return berger_eval(par, q, section->differential(p, v), section->differential(p, w));
    };
    chart.beta = [beta_val](const SurfacePoint&) { return beta_val; };

    auto alpha_pull = [section](const SurfacePoint& p, const Vec3& v) {
        const Quat q = section->value(p);
        return alpha_eval(q, section->differential(p, v));
    };
    // delta is the gt-dual of -alpha_pull, solved on a tangent basis
    auto g0_fn = chart.g0;
    chart.delta = [g0_fn, alpha_pull, beta_val, base](const SurfacePoint& p) {
        auto [e1, e2] = tangent_basis(base, p);
        const double a11 = g0_fn(p, e1, e1) / beta_val, a12 = g0_fn(p, e1, e2) / beta_val;
        const double a22 = g0_fn(p, e2, e2) / beta_val;
        const double b1 = -alpha_pull(p, e1), b2 = -alpha_pull(p, e2);
        const double det = a11 * a22 - a12 * a12;
        if (std::abs(det) < 1e-14) throw std::domain_error("hopf_chart: degenerate chart metric");
        const double d1 = (b1 * a22 - b2 * a12) / det;
        const double d2 = (a11 * b2 - a12 * b1) / det;
        return d1 * e1 + d2 * e2;
    };
    chart.reduced = StationaryChart::ReducedForm{lambda, alpha_pull};

    // spacelikeness check over the cap: F > 0 on a direction sweep
    for (int i = 0; i <= 8; ++i) {
        const double th = cap_angle * i / 8.0;
        for (int j = 0; j < 8; ++j) {
            const double ps = 2.0 * pi * j / 8.0;
            // cap coordinates about the axis
            auto [e1, e2] = tangent_basis(base, {0.5 * ax});
            const Vec3 dir3 = std::cos(ps) * e1 + std::sin(ps) * e2;
            Vec3 x = 0.5 * (std::cos(th) * ax + std::sin(th) * dir3);
            auto [pp, tv] = canonicalize(base, {x}, {{x}, {}});
            auto [f1, f2] = tangent_basis(base, pp);
            for (int k = 0; k < 8; ++k) {
                const double a = 2.0 * pi * k / 8.0;
                const Vec3 v = std::cos(a) * f1 + std::sin(a) * f2;
                const double F = fermat_eval(chart, pp, v);
                if (!(F > 0.0)) throw std::domain_error("hopf_chart: section is not spacelike on this cap");
            }
            (void)tv;
            if (th == 0.0) break;
        }
    }
    return chart;
}

}  // namespace zollfrei

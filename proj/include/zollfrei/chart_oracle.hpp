#pragma once
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zollfrei/berger.hpp"
#include "zollfrei/ode.hpp"
#include "zollfrei/quaternion.hpp"

namespace zollfrei {

/// Symmetric bilinear form on tangent spaces of the 3-sphere, given in
/// ambient form: (q, v, w) -> h_q(v, w).
using AmbientMetric = std::function<double(const Quat&, const Quat&, const Quat&)>;

inline AmbientMetric berger_metric(const BergerParams& par) {
    return [par](const Quat& q, const Quat& v, const Quat& w) { return berger_eval(par, q, v, w); };
}

inline AmbientMetric round_metric() {
    return [](const Quat&, const Quat& v, const Quat& w) { return dot(v, w); };
}

inline AmbientMetric conformal_scale(AmbientMetric m, std::function<double(const Quat&)> f) {
    return [m = std::move(m), f = std::move(f)](const Quat& q, const Quat& v, const Quat& w) {
        return std::exp(f(q)) * m(q, v, w);
    };
}

namespace chart {

// Two stereographic charts on the 3-sphere from the antipodal points -1 and
// +1; the transition map both ways is the coordinate inversion u -> u/|u|^2.
//   chart 0: u = (q1,q2,q3)/(1+q0), defined away from q0 = -1
//   chart 1: u = (q1,q2,q3)/(1-q0), defined away from q0 = +1

inline std::array<double, 3> to_chart(int id, const Quat& q) {
    const double d = id == 0 ? 1.0 + q.w : 1.0 - q.w;
    if (std::abs(d) < 1e-12) throw std::domain_error("stereographic chart: point at the projection pole");
    return {q.x / d, q.y / d, q.z / d};
}

inline Quat from_chart(int id, const std::array<double, 3>& u) {
    const double u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    const double D = 1.0 + u2;
    const double q0 = id == 0 ? (1.0 - u2) / D : (u2 - 1.0) / D;
    return {q0, 2.0 * u[0] / D, 2.0 * u[1] / D, 2.0 * u[2] / D};
}

/// Columns of dq/du at u (each a 4-vector tangent to the sphere).
inline std::array<Quat, 3> jacobian(int id, const std::array<double, 3>& u) {
    const double u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    const double D = 1.0 + u2;
    const double sgn = id == 0 ? -1.0 : 1.0;
    std::array<Quat, 3> J;
    for (int a = 0; a < 3; ++a) {
        Quat col;
        col.w = sgn * 4.0 * u[a] / (D * D);
        double* v = &col.x;
        for (int b = 0; b < 3; ++b) v[b] = (a == b ? 2.0 / D : 0.0) - 4.0 * u[a] * u[b] / (D * D);
        J[a] = col;
    }
    return J;
}

inline std::array<double, 3> velocity_to_chart(int id, const Quat& q, const Quat& qdot) {
    //   chart 0: u = v/(1+q0)  =>  u' = v'/(1+q0) - v q0'/(1+q0)^2
    const double sgn = id == 0 ? 1.0 : -1.0;
    const double d = id == 0 ? 1.0 + q.w : 1.0 - q.w;
    std::array<double, 3> udot;
    const double* v = &q.x;
    const double* vd = &qdot.x;
    for (int a = 0; a < 3; ++a) udot[a] = vd[a] / d - sgn * v[a] * qdot.w / (d * d);
    return udot;
}

inline std::array<double, 3> invert_point(const std::array<double, 3>& u) {
    const double u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    return {u[0] / u2, u[1] / u2, u[2] / u2};
}

inline std::array<double, 3> invert_velocity(const std::array<double, 3>& u, const std::array<double, 3>& ud) {
    const double u2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    const double uud = u[0] * ud[0] + u[1] * ud[1] + u[2] * ud[2];
    std::array<double, 3> r;
    for (int a = 0; a < 3; ++a) r[a] = ud[a] / u2 - 2.0 * u[a] * uud / (u2 * u2);
    return r;
}

using Mat3x3 = std::array<std::array<double, 3>, 3>;

inline Mat3x3 metric_in_chart(const AmbientMetric& h, int id, const std::array<double, 3>& u) {
    const Quat q = from_chart(id, u);
    const auto J = jacobian(id, u);
    Mat3x3 G;
    for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) G[a][b] = G[b][a] = h(q, J[a], J[b]);
    return G;
}

inline Mat3x3 invert3(const Mat3x3& G) {
    const double det = G[0][0] * (G[1][1] * G[2][2] - G[1][2] * G[2][1]) -
                       G[0][1] * (G[1][0] * G[2][2] - G[1][2] * G[2][0]) +
                       G[0][2] * (G[1][0] * G[2][1] - G[1][1] * G[2][0]);
    if (std::abs(det) < 1e-14) throw std::domain_error("chart oracle: degenerate metric");
    Mat3x3 inv;
    inv[0][0] = (G[1][1] * G[2][2] - G[1][2] * G[2][1]) / det;
    inv[0][1] = (G[0][2] * G[2][1] - G[0][1] * G[2][2]) / det;
    inv[0][2] = (G[0][1] * G[1][2] - G[0][2] * G[1][1]) / det;
    inv[1][0] = (G[1][2] * G[2][0] - G[1][0] * G[2][2]) / det;
    inv[1][1] = (G[0][0] * G[2][2] - G[0][2] * G[2][0]) / det;
    inv[1][2] = (G[0][2] * G[1][0] - G[0][0] * G[1][2]) / det;
    inv[2][0] = (G[1][0] * G[2][1] - G[1][1] * G[2][0]) / det;
    inv[2][1] = (G[0][1] * G[2][0] - G[0][0] * G[2][1]) / det;
    inv[2][2] = (G[0][0] * G[1][1] - G[0][1] * G[1][0]) / det;
    return inv;
}

}  // namespace chart

struct OracleSample {
    double s;
    Quat q;
    Quat qdot;
};

struct OracleResult {
    std::vector<OracleSample> samples;
    IntegratorStats stats;
    int chart_switches = 0;
};

/// Cubic Hermite evaluation of an oracle path in ambient coordinates.
class OracleDense {
public:
    explicit OracleDense(const std::vector<OracleSample>& samples) : s_(samples) {
        if (s_.size() < 2) throw std::invalid_argument("OracleDense: too few samples");
    }

    double s_end() const { return s_.back().s; }

    Quat position(double s) const { return eval(s).first; }
    Quat velocity(double s) const { return eval(s).second; }

    std::pair<Quat, Quat> eval(double s) const {
        std::size_t lo = 0, hi = s_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (s_[mid].s <= s ? lo : hi) = mid;
        }
        const auto& a = s_[lo];
        const auto& b = s_[lo + 1];
        const double h = b.s - a.s;
        const double t = (s - a.s) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        const double d00 = (6 * t2 - 6 * t) / h, d10 = (3 * t2 - 4 * t + 1) / h;
        const double d01 = (-6 * t2 + 6 * t) / h, d11 = (3 * t2 - 2 * t) / h;
        Quat q, qd;
        const double* pa = &a.q.w;
        const double* pb = &b.q.w;
        const double* va = &a.qdot.w;
        const double* vb = &b.qdot.w;
        double* pq = &q.w;
        double* pv = &qd.w;
        for (int i = 0; i < 4; ++i) {
            pq[i] = h00 * pa[i] + h10 * h * va[i] + h01 * pb[i] + h11 * h * vb[i];
            pv[i] = d00 * pa[i] + d10 * h * va[i] + d01 * pb[i] + d11 * h * vb[i];
        }
        return {q, qd};
    }

private:
    const std::vector<OracleSample>& s_;
};

/// Geodesics of an arbitrary metric on the 3-sphere, integrated in
/// stereographic charts with Christoffel symbols obtained by central finite
/// differences of the chart metric (step fd_step). Entirely independent of
/// the frame-based flow: no symmetry, no conserved quantity, no constraint
/// projection is used.
/// First return of the projected position of an oracle path to its start,
/// refined by a transversal section crossing on the dense output.
inline double oracle_base_loop(const OracleDense& dense, double s_min) {
    const Quat q0 = dense.position(0.0);
    const Vec3 x0 = hopf_project(q0).x;
    const Vec3 v0 = hopf_differential(q0, dense.velocity(0.0));
    auto xpos = [&](double s) { return hopf_project(normalized(dense.position(s))).x; };
    auto dist2 = [&](double s) {
        const Vec3 d = xpos(s) - x0;
        return dot(d, d);
    };
    auto section = [&](double s) { return dot(xpos(s) - x0, v0); };

    const int n = 4000;
    const double s_end = dense.s_end();
    double prev2 = 1e300, prev1 = 1e300, sprev1 = 0.0, sprev2 = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double s = s_min + (s_end - s_min) * i / n;
        const double d = dist2(s);
        if (prev1 <= prev2 && prev1 <= d && prev1 < 1e-4) {
            double lo = sprev2, hi = s, glo = section(lo);
            if (glo * section(hi) <= 0.0) {
                for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double gm = section(mid);
                    if (glo * gm <= 0.0) hi = mid;
                    else { lo = mid; glo = gm; }
                }
                return 0.5 * (lo + hi);
            }
        }
        prev2 = prev1;
        sprev2 = sprev1;
        prev1 = d;
        sprev1 = s;
    }
    throw std::domain_error("oracle_base_loop: projected curve does not close in the integrated span");
}

inline std::vector<Vec4> oracle_fine_positions(const OracleDense& dense, double s0, double s1, int n) {
    std::vector<Vec4> out;
    out.reserve(n + 1);
    for (int k = 0; k <= n; ++k) out.push_back(dense.position(s0 + (s1 - s0) * k / n).as_vec4());
    return out;
}

inline OracleResult chart_geodesic_oracle(const AmbientMetric& h, const Quat& q0, const Quat& qdot0, double T,
                                          double tol, double fd_step = 1e-5) {
    int id = q0.w >= 0.0 ? 0 : 1;
    std::array<double, 3> u = chart::to_chart(id, normalized(q0));
    std::array<double, 3> ud = chart::velocity_to_chart(id, normalized(q0), qdot0);

    auto gamma_accel = [&h, &id, fd_step](const std::array<double, 3>& uu, const std::array<double, 3>& uud) {
        // dG[a][b][c] = d_a G_bc by central differences
        double dG[3][3][3];
        for (int a = 0; a < 3; ++a) {
            std::array<double, 3> up = uu, um = uu;
            up[a] += fd_step;
            um[a] -= fd_step;
            const auto Gp = chart::metric_in_chart(h, id, up);
            const auto Gm = chart::metric_in_chart(h, id, um);
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) dG[a][b][c] = (Gp[b][c] - Gm[b][c]) / (2.0 * fd_step);
        }
        const auto Ginv = chart::invert3(chart::metric_in_chart(h, id, uu));
        std::array<double, 3> acc{};
        for (int a = 0; a < 3; ++a) {
            double s = 0.0;
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) {
                    double gamma_l = 0.0;  // Gamma_{d,bc} summed against G^{ad}
                    for (int d = 0; d < 3; ++d)
                        gamma_l += Ginv[a][d] * 0.5 * (dG[b][d][c] + dG[c][d][b] - dG[d][b][c]);
                    s += gamma_l * uud[b] * uud[c];
                }
            acc[a] = -s;
        }
        return acc;
    };

    auto rhs = [&gamma_accel](double, const State<6>& y) -> State<6> {
        const std::array<double, 3> uu{y[0], y[1], y[2]}, uud{y[3], y[4], y[5]};
        const auto acc = gamma_accel(uu, uud);
        return {y[3], y[4], y[5], acc[0], acc[1], acc[2]};
    };

    OracleResult out;
    out.stats.tol = tol;
    Dopri5<6, decltype(rhs)&> stepper(rhs, tol);

    double s = 0.0;
    State<6> y{u[0], u[1], u[2], ud[0], ud[1], ud[2]};
    State<6> f = stepper.eval_rhs(s, y);
    auto record = [&](double ss, const State<6>& yy) {
        const std::array<double, 3> uu{yy[0], yy[1], yy[2]}, uud{yy[3], yy[4], yy[5]};
        const Quat q = chart::from_chart(id, uu);
        const auto J = chart::jacobian(id, uu);
        Quat qd{0, 0, 0, 0};
        for (int a = 0; a < 3; ++a) qd = qd + uud[a] * J[a];
        out.samples.push_back({ss, q, qd});
    };
    record(s, y);

    double hstep = std::min(stepper.initial_step(s, y, f), T);
    while (s < T) {
        hstep = std::min(hstep, T - s);
        if (hstep < 1e-14 * std::max(1.0, s)) {
            out.stats.diverged = true;
            out.stats.diagnostic = "step size underflow at s=" + std::to_string(s);
            break;
        }
        StepOutcome step = stepper.try_step(s, y, f, hstep);
        if (step.accepted) {
            ++out.stats.n_accepted;
            const double u2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
            if (u2 > 3.0) {  // hand over to the antipodal chart
                const std::array<double, 3> uu{y[0], y[1], y[2]}, uud{y[3], y[4], y[5]};
                const auto nu = chart::invert_point(uu);
                const auto nud = chart::invert_velocity(uu, uud);
                y = {nu[0], nu[1], nu[2], nud[0], nud[1], nud[2]};
                id = 1 - id;
                ++out.chart_switches;
                f = stepper.eval_rhs(s, y);
            }
            record(s, y);
        } else {
            ++out.stats.n_rejected;
        }
        hstep = step.h_next;
        if (out.stats.n_accepted + out.stats.n_rejected > 20'000'000) {
            out.stats.diverged = true;
            out.stats.diagnostic = "step budget exhausted";
            break;
        }
    }
    out.stats.n_rhs = stepper.n_rhs();
    return out;
}

}  // namespace zollfrei

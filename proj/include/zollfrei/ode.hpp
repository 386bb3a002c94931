#pragma once
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace zollfrei {

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
inline State<N> axpy(const State<N>& y, double a, const State<N>& d) {
    State<N> r;
    for (std::size_t i = 0; i < N; ++i) r[i] = y[i] + a * d[i];
    return r;
}

template <std::size_t N>
struct OdeSample {
    double s;
    State<N> y;
    State<N> f;  // derivative at y, evaluated after any post-step normalization
};

struct IntegratorStats {
    double tol = 0.0;
    long n_accepted = 0;
    long n_rejected = 0;
    long n_rhs = 0;
    bool diverged = false;
    std::string diagnostic;
};

/// Sampled solution of an ODE with cubic Hermite dense output between the
/// accepted steps. Samples are strictly increasing in s.
template <std::size_t N>
class Trajectory {
public:
    std::vector<OdeSample<N>> samples;
    IntegratorStats stats;

    double s_begin() const { return samples.front().s; }
    double s_end() const { return samples.back().s; }

    /// Dense value by cubic Hermite interpolation on the enclosing segment.
    State<N> eval(double s) const { return eval_pair(s).first; }

    /// Value and derivative of the interpolant at s.
    std::pair<State<N>, State<N>> eval_pair(double s) const {
        if (samples.size() < 2) return {samples.front().y, samples.front().f};
        const std::size_t k = segment_index(s);
        const OdeSample<N>& a = samples[k];
        const OdeSample<N>& b = samples[k + 1];
        const double h = b.s - a.s;
        const double t = (s - a.s) / h;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        const double d00 = (6 * t2 - 6 * t) / h, d10 = (3 * t2 - 4 * t + 1) / h;
        const double d01 = (-6 * t2 + 6 * t) / h, d11 = (3 * t2 - 2 * t) / h;
        State<N> y, dy;
        for (std::size_t i = 0; i < N; ++i) {
            y[i] = h00 * a.y[i] + h10 * h * a.f[i] + h01 * b.y[i] + h11 * h * b.f[i];
            dy[i] = d00 * a.y[i] + d10 * h * a.f[i] + d01 * b.y[i] + d11 * h * b.f[i];
        }
        return {y, dy};
    }

private:
    std::size_t segment_index(double s) const {
        auto it = std::upper_bound(samples.begin(), samples.end(), s,
                                   [](double v, const OdeSample<N>& smp) { return v < smp.s; });
        std::size_t k = (it == samples.begin()) ? 0 : std::size_t(it - samples.begin() - 1);
        return std::min(k, samples.size() - 2);
    }
};

struct StepOutcome {
    bool accepted = false;
    double err = 0.0;     // scaled error estimate, accept iff <= 1
    double h_next = 0.0;  // suggested next step
};

/// Embedded Dormand-Prince 5(4) pair, FSAL.
template <std::size_t N, class Rhs>
class Dopri5 {
public:
    Dopri5(Rhs rhs, double tol) : rhs_(std::forward<Rhs>(rhs)), tol_(tol) {
        if (!(tol >= 1e-15 && tol <= 1e-2)) throw std::invalid_argument("Dopri5: tolerance out of range");
    }

    long n_rhs() const { return n_rhs_; }

    State<N> eval_rhs(double s, const State<N>& y) {
        ++n_rhs_;
        return rhs_(s, y);
    }

    /// One trial step from (s, y) with derivative f = rhs(s, y).
    /// On acceptance y, f, s are advanced in place (FSAL reuses the last stage).
    StepOutcome try_step(double& s, State<N>& y, State<N>& f, double h) {
        constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        const State<N>& k1 = f;
        State<N> k2 = eval_rhs(s + c2 * h, axpy(y, h * (1.0 / 5), k1));
        State<N> k3 = eval_rhs(s + c3 * h, stage<2>(y, h, {3.0 / 40, 9.0 / 40}, {&k1, &k2}));
        State<N> k4 = eval_rhs(s + c4 * h, stage<3>(y, h, {44.0 / 45, -56.0 / 15, 32.0 / 9}, {&k1, &k2, &k3}));
        State<N> k5 = eval_rhs(s + c5 * h,
                               stage<4>(y, h, {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
                                        {&k1, &k2, &k3, &k4}));
        State<N> k6 = eval_rhs(s + h,
                               stage<5>(y, h,
                                        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
                                        {&k1, &k2, &k3, &k4, &k5}));
        State<N> y5 = stage<6>(y, h, {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
                               {&k1, &k2, &k3, &k4, &k5, &k6});
        State<N> k7 = eval_rhs(s + h, y5);

        // 4th-order comparison solution for the error estimate
        static constexpr std::array<double, 7> b4 = {5179.0 / 57600, 0.0,           7571.0 / 16695, 393.0 / 640,
                                                     -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
        double err2 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double e = h * ((35.0 / 384 - b4[0]) * k1[i] + (500.0 / 1113 - b4[2]) * k3[i] +
                                  (125.0 / 192 - b4[3]) * k4[i] + (-2187.0 / 6784 - b4[4]) * k5[i] +
                                  (11.0 / 84 - b4[5]) * k6[i] + (0.0 - b4[6]) * k7[i]);
            const double sc = tol_ * (1.0 + std::max(std::abs(y[i]), std::abs(y5[i])));
            err2 += (e / sc) * (e / sc);
        }
        const double err = std::sqrt(err2 / N);

        StepOutcome out;
        out.err = err;
        const double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        out.h_next = h * std::clamp(fac, 0.2, 5.0);
        if (err <= 1.0) {
            out.accepted = true;
            s += h;
            y = y5;
            f = k7;
        }
        return out;
    }

    double initial_step(double s0, const State<N>& y0, const State<N>& f0) const {
        double dy = 0.0, df = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            dy = std::max(dy, std::abs(y0[i]));
            df = std::max(df, std::abs(f0[i]));
        }
        (void)s0;
        double h = 0.01 * (1.0 + dy) / (1.0 + df);
        return std::min(h, 0.1);
    }

private:
    template <std::size_t M>
    static State<N> stage(const State<N>& y, double h, const std::array<double, M>& a,
                          const std::array<const State<N>*, M>& ks) {
        State<N> r = y;
        for (std::size_t j = 0; j < M; ++j)
            for (std::size_t i = 0; i < N; ++i) r[i] += h * a[j] * (*ks[j])[i];
        return r;
    }

    Rhs rhs_;
    double tol_;
    long n_rhs_ = 0;
};

/// Adaptive integration over [s0, s1] recording every accepted step.
/// post_step can renormalize the state (constraint projection); the stored
/// derivative is re-evaluated after it so dense output stays consistent.
template <std::size_t N, class Rhs, class PostStep>
Trajectory<N> integrate_adaptive(Rhs&& rhs, const State<N>& y0, double s0, double s1, double tol,
                                 PostStep&& post_step, long max_steps = 40'000'000) {
    Trajectory<N> traj;
    traj.stats.tol = tol;
    Dopri5<N, Rhs&> stepper(rhs, tol);

    double s = s0;
    State<N> y = y0;
    post_step(y);
    State<N> f = stepper.eval_rhs(s, y);
    traj.samples.push_back({s, y, f});

    double h = stepper.initial_step(s, y, f);
    h = std::min(h, s1 - s0);

    while (s < s1) {
        h = std::min(h, s1 - s);
        const double h_floor = 1e-14 * std::max(1.0, std::abs(s));
        if (h < h_floor) {
            traj.stats.diverged = true;
            traj.stats.diagnostic = "step size underflow at s=" + std::to_string(s);
            break;
        }
        StepOutcome out;
        try {
            out = stepper.try_step(s, y, f, h);
        } catch (const std::exception& e) {
            // the state left the numerically representable regime; keep what
            // was integrated so far
            traj.stats.diverged = true;
            traj.stats.diagnostic = std::string(e.what()) + " at s=" + std::to_string(s);
            break;
        }
        if (out.accepted) {
            post_step(y);
            f = stepper.eval_rhs(s, y);
            traj.samples.push_back({s, y, f});
            ++traj.stats.n_accepted;
        } else {
            ++traj.stats.n_rejected;
        }
        h = out.h_next;
        if (traj.stats.n_accepted + traj.stats.n_rejected > max_steps) {
            traj.stats.diverged = true;
            traj.stats.diagnostic = "step budget exhausted";
            break;
        }
    }
    traj.stats.n_rhs = stepper.n_rhs();
    return traj;
}

template <std::size_t N, class Rhs>
Trajectory<N> integrate_adaptive(Rhs&& rhs, const State<N>& y0, double s0, double s1, double tol) {
    return integrate_adaptive<N>(rhs, y0, s0, s1, tol, [](State<N>&) {});
}

}  // namespace zollfrei

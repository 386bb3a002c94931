#pragma once
#include <array>
#include <cmath>
#include <stdexcept>

namespace zollfrei {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  // accumulated error estimate
    int subdivisions = 0;
};

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights on [-1,1] (positive half; symmetric).
// Odd-indexed nodes are the embedded Gauss-7 points.
inline constexpr std::array<double, 8> gk_nodes = {
    0.991455371120812639207, 0.949107912342758524526, 0.864864423359769072790, 0.741531185599394439864,
    0.586087235467691130294, 0.405845151377397166907, 0.207784955007898467601, 0.0};
inline constexpr std::array<double, 8> gk_wk = {
    0.022935322010529224964, 0.063092092629978553291, 0.104790010322250183840, 0.140653259715525918745,
    0.169004726639267902827, 0.190350578064785409913, 0.204432940075298892414, 0.209482141084727828013};
inline constexpr std::array<double, 4> gk_wg = {
    0.129484966168869693271, 0.279705391489276667901, 0.381830050505118944950, 0.417959183673469387755};

template <class F>
inline void gk15(F&& f, double a, double b, double& value, double& err) {
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    double resk = gk_wk[7] * f(c);
    double resg = gk_wg[3] * f(c);
    for (int i = 0; i < 7; ++i) {
        const double fa = f(c - hw * gk_nodes[i]);
        const double fb = f(c + hw * gk_nodes[i]);
        resk += gk_wk[i] * (fa + fb);
        if (i % 2 == 1) resg += gk_wg[i / 2] * (fa + fb);
    }
    value = resk * hw;
    err = std::abs((resk - resg) * hw);
}

template <class F>
inline void gk_adaptive(F&& f, double a, double b, double tol, int depth, QuadResult& acc) {
    double v, e;
    gk15(f, a, b, v, e);
    if (e <= tol || depth >= 48) {
        acc.value += v;
        acc.error += e;
        return;
    }
    const double m = 0.5 * (a + b);
    ++acc.subdivisions;
    gk_adaptive(f, a, m, 0.5 * tol, depth + 1, acc);
    gk_adaptive(f, m, b, 0.5 * tol, depth + 1, acc);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod quadrature of f over [a, b].
template <class F>
QuadResult integrate_gk(F&& f, double a, double b, double tol = 1e-12) {
    if (!(b >= a)) throw std::invalid_argument("integrate_gk: reversed interval");
    QuadResult acc;
    if (a == b) return acc;
    detail::gk_adaptive(f, a, b, tol, 0, acc);
    return acc;
}

}  // namespace zollfrei

#pragma once
#include <cmath>
#include <functional>
#include <stdexcept>

#include "zollfrei/berger.hpp"
#include "zollfrei/chart_oracle.hpp"
#include "zollfrei/trace.hpp"

namespace zollfrei {

/// Hausdorff distance between the trace of the lightlike geodesic of the
/// invariant metric (frame flow) and the trace of the lightlike geodesic of
/// e^f times the metric (chart oracle), both truncated at their own first
/// base-loop closure and started with the same initial velocity. T bounds
/// the frame-side integration span and must cover at least one base loop.
inline double conformal_compare(const BergerParams& par, const std::function<double(const Quat&)>& f,
                                const LightlikeState& st0, double T, double tol = 1e-11) {
    const BundleTrajectory bt = integrate_lightlike(par, st0, T, tol);
    if (bt.stats.diverged) throw std::runtime_error("conformal_compare: frame integration failed");
    const BaseTrajectory base = project_to_base(bt);
    const ClosureReport repA = closure_detect(base, 1e-6, 1e-3 * T);
    if (!repA.closed) throw std::domain_error("conformal_compare: no base loop within T; increase T");
    const double T_A = repA.period;

    // conformal side: affine span stretches by at most exp(max f - min f)
    double fmax = 0.0;
    for (const auto& smp : bt.samples) {
        const LightlikeState st = detail::unpack7(smp.y);
        fmax = std::max(fmax, std::abs(f(st.q) - f(detail::unpack7(bt.samples.front().y).q)));
    }
    const double span_B = T_A * std::exp(fmax) * 1.5 + 0.5;
    const Quat q0 = detail::unpack7(bt.samples.front().y).q;
    const Quat qd0 = ambient_velocity(q0, detail::unpack7(bt.samples.front().y).omega);
    const OracleResult orc = chart_geodesic_oracle(conformal_scale(berger_metric(par), f), q0, qd0, span_B, tol);
    if (orc.stats.diverged) throw std::runtime_error("conformal_compare: oracle integration failed");
    const OracleDense dense(orc.samples);
    const double T_B = oracle_base_loop(dense, 0.2 * T_A);

    const int n_fine = 60000;
    const auto fineA = arclength_resample(resample_positions(bt, 0.0, T_A, n_fine), n_fine);
    const auto fineB = arclength_resample(oracle_fine_positions(dense, 0.0, T_B, n_fine), n_fine);
    return windowed_hausdorff(fineA, fineB, 60, 0.02);
}

}  // namespace zollfrei

#pragma once
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "zollfrei/berger.hpp"
#include "zollfrei/chart_oracle.hpp"
#include "zollfrei/ode.hpp"
#include "zollfrei/vec.hpp"

namespace zollfrei {

inline double point_segment_dist2(const Vec4& p, const Vec4& a, const Vec4& b) {
    const Vec4 ab = b - a;
    const double den = dot(ab, ab);
    double t = den > 0.0 ? dot(p - a, ab) / den : 0.0;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    const Vec4 c = a + t * ab;
    return dot(p - c, p - c);
}

inline double directed_hausdorff(const std::vector<Vec4>& from, const std::vector<Vec4>& to) {
    if (from.empty() || to.size() < 2) throw std::invalid_argument("hausdorff: empty polyline");
    double worst = 0.0;
    for (const Vec4& p : from) {
        double best = 1e300;
        for (std::size_t i = 0; i + 1 < to.size(); ++i)
            best = std::min(best, point_segment_dist2(p, to[i], to[i + 1]));
        worst = std::max(worst, best);
    }
    return std::sqrt(worst);
}

/// Symmetric Hausdorff distance between polylines (point-to-segment).
inline double hausdorff_distance(const std::vector<Vec4>& a, const std::vector<Vec4>& b) {
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

inline std::vector<Vec4> resample_positions(const BundleTrajectory& traj, double s0, double s1, int n) {
    std::vector<Vec4> out;
    out.reserve(n + 1);
    for (int k = 0; k <= n; ++k) {
        const double s = s0 + (s1 - s0) * k / n;
        const auto y = traj.eval(s);
        out.push_back({y[0], y[1], y[2], y[3]});
    }
    return out;
}

inline std::vector<Vec4> resample_positions(const std::vector<OracleSample>& samples, double s0, double s1,
                                            int n) {
    // linear interpolation on the recorded steps; adequate for trace metrics
    std::vector<Vec4> out;
    out.reserve(n + 1);
    std::size_t j = 0;
    for (int k = 0; k <= n; ++k) {
        const double s = s0 + (s1 - s0) * k / n;
        while (j + 2 < samples.size() && samples[j + 1].s < s) ++j;
        const auto& a = samples[j];
        const auto& b = samples[j + 1];
        const double t = (s - a.s) / (b.s - a.s);
        const Quat q = a.q + t * (b.q - a.q);
        out.push_back(q.as_vec4());
    }
    return out;
}

inline std::vector<Vec4> embed3(const std::vector<Vec3>& pts) {
    std::vector<Vec4> out;
    out.reserve(pts.size());
    for (const Vec3& p : pts) out.push_back({p.x, p.y, p.z, 0.0});
    return out;
}

/// Resamples a polyline at n_out points equally spaced in cumulative chord
/// length. Removes parameterization differences before windowed comparisons.
inline std::vector<Vec4> arclength_resample(const std::vector<Vec4>& pts, int n_out) {
    if (pts.size() < 2) throw std::invalid_argument("arclength_resample: too few points");
    std::vector<double> cum(pts.size(), 0.0);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const Vec4 d = pts[i] - pts[i - 1];
        cum[i] = cum[i - 1] + std::sqrt(dot(d, d));
    }
    const double total = cum.back();
    std::vector<Vec4> out;
    out.reserve(n_out + 1);
    std::size_t j = 0;
    for (int k = 0; k <= n_out; ++k) {
        const double target = total * k / n_out;
        while (j + 2 < cum.size() && cum[j + 1] < target) ++j;
        const double seg = cum[j + 1] - cum[j];
        const double t = seg > 0.0 ? (target - cum[j]) / seg : 0.0;
        out.push_back(pts[j] + t * (pts[j + 1] - pts[j]));
    }
    return out;
}

/// Hausdorff distance between two finely sampled arcs of the same geometric
/// curve, using parameter-fraction windows to localize the nearest-segment
/// search. Both polylines must traverse the curve in the same direction.
inline double windowed_hausdorff(const std::vector<Vec4>& a, const std::vector<Vec4>& b, int stride = 50,
                                 double window = 0.04) {
    if (a.size() < 4 || b.size() < 4) throw std::invalid_argument("windowed_hausdorff: too few samples");
    auto directed = [&](const std::vector<Vec4>& from, const std::vector<Vec4>& to) {
        double worst = 0.0;
        const int w = std::max(4, int(window * to.size()));
        for (std::size_t k = 0; k < from.size(); k += stride) {
            const double frac = double(k) / double(from.size() - 1);
            const long center = long(frac * double(to.size() - 1));
            const long lo = std::max(0L, center - w);
            const long hi = std::min(long(to.size()) - 2, center + w);
            double best = 1e300;
            for (long i = lo; i <= hi; ++i) best = std::min(best, point_segment_dist2(from[k], to[i], to[i + 1]));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::sqrt(std::max(directed(a, b), directed(b, a)));
}

struct LatitudeFit {
    Vec3 axis;            // unit vector toward the cap the loop encircles
    double theta_mean;    // mean polar angle of the samples from the axis
    double theta_spread;  // max deviation from the mean
};

/// Fits a latitude circle to an ordered loop of points on a sphere about the
/// origin. The axis is the area vector of the inscribed polygon (exact for
/// points on a circle, whatever their spacing), oriented toward the smaller
/// cap.
inline LatitudeFit fit_latitude(const std::vector<Vec3>& pts) {
    if (pts.size() < 8) throw std::invalid_argument("fit_latitude: too few points");
    Vec3 area{};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) area += cross(pts[i], pts[i + 1]);
    area += cross(pts.back(), pts.front());
    if (norm(area) < 1e-12 * pts.size()) throw std::domain_error("fit_latitude: samples enclose no area");
    Vec3 axis = normalized(area);

    auto mean_angle = [&](const Vec3& ax) {
        double sum = 0.0;
        for (const Vec3& p : pts) sum += std::acos(std::clamp(dot(normalized(p), ax), -1.0, 1.0));
        return sum / pts.size();
    };
    double mean = mean_angle(axis);
    if (mean > 1.57079632679489662) {  // orient toward the enclosed cap
        axis = -axis;
        mean = mean_angle(axis);
    }
    double spread = 0.0;
    for (const Vec3& p : pts)
        spread = std::max(spread, std::abs(std::acos(std::clamp(dot(normalized(p), axis), -1.0, 1.0)) - mean));
    return {axis, mean, spread};
}

}  // namespace zollfrei

#pragma once
#include <cmath>
#include <stdexcept>
#include <utility>

#include "zollfrei/vec.hpp"

namespace zollfrei {

enum class SurfaceKind { Sphere, Euclidean, Hyperbolic };

/// Constant-curvature model surface, embedded:
///   Sphere     {|x| = r} in Euclidean R^3,
///   Euclidean  the plane {x0 = 0} (coordinates x1, x2),
///   Hyperbolic the sheet {<x,x> = -1, x0 >= 1} of the hyperboloid in
///              Minkowski signature (-,+,+).
struct ModelSurface {
    SurfaceKind kind = SurfaceKind::Sphere;
    double radius = 1.0;  // sphere only

    static ModelSurface sphere(double r) {
        if (!(r > 0.0)) throw std::invalid_argument("sphere radius must be positive");
        return {SurfaceKind::Sphere, r};
    }
    static ModelSurface euclidean() { return {SurfaceKind::Euclidean, 1.0}; }
    static ModelSurface hyperbolic() { return {SurfaceKind::Hyperbolic, 1.0}; }

    double gaussian_curvature() const {
        switch (kind) {
            case SurfaceKind::Sphere: return 1.0 / (radius * radius);
            case SurfaceKind::Euclidean: return 0.0;
            case SurfaceKind::Hyperbolic: return -1.0;
        }
        return 0.0;
    }
};

struct SurfacePoint {
    Vec3 x;
};

struct TangentVec {
    SurfacePoint base;
    Vec3 v;
};

/// Polar chart on the sphere: theta in (0,pi) from the +z pole, psi in [0,2pi).
struct PolarCoords {
    double theta = 0.0;
    double psi = 0.0;
};

inline constexpr double kPoleCutoff = 1e-8;

/// Signed constraint residual: |x|^2 - r^2, x0, or <x,x> + 1.
inline double constraint_residual(const ModelSurface& surf, const Vec3& p) {
    switch (surf.kind) {
        case SurfaceKind::Sphere: return dot(p, p) - surf.radius * surf.radius;
        case SurfaceKind::Euclidean: return p.x;
        case SurfaceKind::Hyperbolic: return mdot(p, p) + 1.0;
    }
    return 0.0;
}

/// Ambient vector N(p) with dvol(u, v) = det[N, u, v]; unit normal for the
/// sphere and the plane, the position vector for the hyperboloid.
inline Vec3 orientation_normal(const ModelSurface& surf, const SurfacePoint& p) {
    switch (surf.kind) {
        case SurfaceKind::Sphere: return p.x / surf.radius;
        case SurfaceKind::Euclidean: return {1.0, 0.0, 0.0};
        case SurfaceKind::Hyperbolic: return p.x;
    }
    return {};
}

inline Vec3 tangential_project(const ModelSurface& surf, const SurfacePoint& p, const Vec3& w) {
    switch (surf.kind) {
        case SurfaceKind::Sphere: {
            const Vec3 n = p.x / norm(p.x);
            return w - dot(w, n) * n;
        }
        case SurfaceKind::Euclidean: return {0.0, w.y, w.z};
        case SurfaceKind::Hyperbolic:
            // <p,p> = -1, so the projection along p is w + <w,p> p.
            return w + mdot(w, p.x) * p.x;
    }
    return {};
}

/// Projects a nearby point onto the surface and its vector onto the tangent
/// plane. Idempotent; rejects points farther than 1e-3 from the surface.
/// The achievable residual is 1e-12 for O(1) points and degrades with the
/// square of the coordinate size (floating point cancellation far out on the
/// hyperboloid).
inline std::pair<SurfacePoint, TangentVec> canonicalize(const ModelSurface& surf, const SurfacePoint& p,
                                                        const TangentVec& tv) {
    SurfacePoint q = p;
    const double scale = std::max(1.0, dot(p.x, p.x));
    if (std::abs(constraint_residual(surf, p.x)) > 1e-3 * scale)
        throw std::invalid_argument("canonicalize: point too far from the surface");
    switch (surf.kind) {
        case SurfaceKind::Sphere:
            q.x = (surf.radius / norm(p.x)) * p.x;
            break;
        case SurfaceKind::Euclidean:
            q.x = {0.0, p.x.y, p.x.z};
            break;
        case SurfaceKind::Hyperbolic: {
            const double s = mdot(p.x, p.x);
            if (!(s < 0.0) || !(p.x.x > 0.0))
                throw std::invalid_argument("canonicalize: not on the x>0 hyperboloid sheet");
            q.x = (1.0 / std::sqrt(-s)) * p.x;
            break;
        }
    }
    TangentVec tw{q, tangential_project(surf, q, tv.v)};
    return {q, tw};
}

/// Induced metric on tangent vectors sharing a base point.
inline double metric(const ModelSurface& surf, const TangentVec& v, const TangentVec& w) {
    if (norm(v.base.x - w.base.x) > 1e-9)
        throw std::invalid_argument("metric: tangent vectors at different base points");
    switch (surf.kind) {
        case SurfaceKind::Sphere:
        case SurfaceKind::Euclidean: return dot(v.v, w.v);
        case SurfaceKind::Hyperbolic: return mdot(v.v, w.v);
    }
    return 0.0;
}

inline double metric(const ModelSurface& surf, const SurfacePoint&, const Vec3& v, const Vec3& w) {
    return surf.kind == SurfaceKind::Hyperbolic ? mdot(v, w) : dot(v, w);
}

inline double speed(const ModelSurface& surf, const SurfacePoint& p, const Vec3& v) {
    return std::sqrt(std::max(0.0, metric(surf, p, v, v)));
}

inline double dvol(const ModelSurface& surf, const SurfacePoint& p, const Vec3& u, const Vec3& v) {
    return det3(orientation_normal(surf, p), u, v);
}

/// Rotation by +90 degrees in the tangent plane: g(Jv, Jv) = g(v, v),
/// J∘J = -Id, and dvol(v, Jv) = g(v, v) fixes the orientation.
inline TangentVec rot90(const ModelSurface& surf, const TangentVec& tv) {
    const Vec3 n = orientation_normal(surf, tv.base);
    Vec3 jv = cross(n, tv.v);
    if (surf.kind == SurfaceKind::Hyperbolic) jv = {-jv.x, jv.y, jv.z};  // raise with diag(-1,1,1)
    return {tv.base, jv};
}

inline SurfacePoint polar_to_ambient(const ModelSurface& surf, const PolarCoords& pc) {
    if (surf.kind != SurfaceKind::Sphere) throw std::invalid_argument("polar chart: sphere only");
    const double st = std::sin(pc.theta), ct = std::cos(pc.theta);
    return {{surf.radius * st * std::cos(pc.psi), surf.radius * st * std::sin(pc.psi), surf.radius * ct}};
}

inline PolarCoords ambient_to_polar(const ModelSurface& surf, const SurfacePoint& p) {
    if (surf.kind != SurfaceKind::Sphere) throw std::invalid_argument("polar chart: sphere only");
    const Vec3 u = p.x / surf.radius;
    const double st = std::hypot(u.x, u.y);
    if (st < kPoleCutoff) throw std::domain_error("ambient_to_polar: point too close to a pole");
    double psi = std::atan2(u.y, u.x);
    if (psi < 0.0) psi += 2.0 * 3.14159265358979323846;
    return {std::atan2(st, u.z), psi};
}

/// Coordinate basis of the polar chart, pushed to ambient vectors.
inline std::pair<TangentVec, TangentVec> polar_basis(const ModelSurface& surf, const PolarCoords& pc) {
    const double st = std::sin(pc.theta), ct = std::cos(pc.theta);
    const double sp = std::sin(pc.psi), cp = std::cos(pc.psi);
    SurfacePoint p = polar_to_ambient(surf, pc);
    TangentVec dtheta{p, {surf.radius * ct * cp, surf.radius * ct * sp, -surf.radius * st}};
    TangentVec dpsi{p, {-surf.radius * st * sp, surf.radius * st * cp, 0.0}};
    return {dtheta, dpsi};
}

/// Christoffel symbols (Gamma^psi_{psi psi}, Gamma^theta_{psi psi}) of the
/// round metric in the polar chart; chart-level reference values only, the
/// integrators use ambient tangential projection.
inline std::pair<double, double> polar_christoffel(double theta) {
    if (!(theta > 0.0 && theta < 3.14159265358979323846))
        throw std::invalid_argument("polar_christoffel: theta outside (0,pi)");
    return {0.0, -std::sin(theta) * std::cos(theta)};
}

/// g-orthonormal basis of the tangent plane at p.
inline std::pair<Vec3, Vec3> tangent_basis(const ModelSurface& surf, const SurfacePoint& p) {
    Vec3 seed{0.0, 1.0, 0.0};
    Vec3 e1 = tangential_project(surf, p, seed);
    if (metric(surf, p, e1, e1) < 1e-12) {
        seed = {0.0, 0.0, 1.0};
        e1 = tangential_project(surf, p, seed);
    }
    e1 = e1 / speed(surf, p, e1);
    const Vec3 e2v = rot90(surf, {p, e1}).v;
    return {e1, e2v};
}

/// Normal component of the ambient acceleration keeping the solution on the
/// surface: x'' = (covariant acceleration) + normal_curvature_term.
inline Vec3 normal_curvature_term(const ModelSurface& surf, const SurfacePoint& p, const Vec3& v) {
    switch (surf.kind) {
        case SurfaceKind::Sphere: return (-dot(v, v) / (surf.radius * surf.radius)) * p.x;
        case SurfaceKind::Euclidean: return {};
        case SurfaceKind::Hyperbolic: return mdot(v, v) * p.x;
    }
    return {};
}

}  // namespace zollfrei

#pragma once
#include <cmath>
#include <ostream>

#include "zollfrei/vec.hpp"

namespace zollfrei {

/// Quaternion w + x*i + y*j + z*k. Unit quaternions model points of the
/// 3-sphere; pure imaginary ones model vectors of R^3.
struct Quat {
    double w = 0.0, x = 0.0, y = 0.0, z = 0.0;

    static Quat pure(const Vec3& v) { return {0.0, v.x, v.y, v.z}; }
    Vec3 imag() const { return {x, y, z}; }
    Vec4 as_vec4() const { return {w, x, y, z}; }
    static Quat from_vec4(const Vec4& v) { return {v.w, v.x, v.y, v.z}; }
};

inline Quat operator+(const Quat& a, const Quat& b) { return {a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Quat operator-(const Quat& a, const Quat& b) { return {a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Quat operator*(double s, const Quat& a) { return {s * a.w, s * a.x, s * a.y, s * a.z}; }
inline Quat operator-(const Quat& a) { return {-a.w, -a.x, -a.y, -a.z}; }

inline Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Quat conj(const Quat& a) { return {a.w, -a.x, -a.y, -a.z}; }
inline double dot(const Quat& a, const Quat& b) { return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Quat& a) { return std::sqrt(dot(a, a)); }
inline Quat normalized(const Quat& a) {
    const double n = norm(a);
    return {a.w / n, a.x / n, a.y / n, a.z / n};
}

/// exp of a pure imaginary quaternion: cos|v| + sin|v| * v/|v|.
inline Quat exp_pure(const Vec3& v) {
    const double t = norm(v);
    if (t < 1e-300) return {1.0, v.x, v.y, v.z};
    const double s = std::sin(t) / t;
    return {std::cos(t), s * v.x, s * v.y, s * v.z};
}

inline std::ostream& operator<<(std::ostream& os, const Quat& q) {
    return os << "(" << q.w << " + " << q.x << "i + " << q.y << "j + " << q.z << "k)";
}

}  // namespace zollfrei

#pragma once
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "zollfrei/ode.hpp"
#include "zollfrei/verify.hpp"

namespace zollfrei {

using Json = nlohmann::ordered_json;

/// Writes content to path atomically: temp file in the same directory, then
/// rename over the target.
inline void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.good()) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

inline std::string format_sig17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

/// Trajectory CSV: header s,x0,..,v0,.. with 17 significant digits.
template <std::size_t N>
std::string trajectory_csv(const Trajectory<N>& traj) {
    static_assert(N % 2 == 0);
    constexpr std::size_t half = N / 2;
    std::ostringstream os;
    os << "s";
    for (std::size_t i = 0; i < half; ++i) os << ",x" << i;
    for (std::size_t i = 0; i < half; ++i) os << ",v" << i;
    os << "\n";
    for (const auto& smp : traj.samples) {
        os << format_sig17(smp.s);
        for (std::size_t i = 0; i < N; ++i) os << "," << format_sig17(smp.y[i]);
        os << "\n";
    }
    return os.str();
}

/// Bundle trajectory CSV (position quaternion + ambient velocity).
inline std::string bundle_csv(const BundleTrajectory& traj) {
    std::ostringstream os;
    os << "s,x0,x1,x2,x3,v0,v1,v2,v3\n";
    for (const auto& smp : traj.samples) {
        const LightlikeState st = detail::unpack7(smp.y);
        const Quat qd = ambient_velocity(st.q, st.omega);
        os << format_sig17(smp.s);
        for (double v : {st.q.w, st.q.x, st.q.y, st.q.z, qd.w, qd.x, qd.y, qd.z}) os << "," << format_sig17(v);
        os << "\n";
    }
    return os.str();
}

/// Single-polyline SVG of the (x1, x2) chart projection of 2D points; file
/// coordinates are chart units (viewBox covers the data).
inline std::string svg_polyline(const std::vector<std::pair<double, double>>& pts) {
    if (pts.empty()) throw std::invalid_argument("svg_polyline: no points");
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (auto& [x, y] : pts) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    const double margin = 0.05 * std::max({xmax - xmin, ymax - ymin, 1e-6});
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << format_sig17(xmin - margin) << " "
       << format_sig17(ymin - margin) << " " << format_sig17(xmax - xmin + 2 * margin) << " "
       << format_sig17(ymax - ymin + 2 * margin) << "\">\n";
    os << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"" << format_sig17(margin / 10) << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) os << " ";
        os << format_sig17(pts[i].first) << "," << format_sig17(pts[i].second);
    }
    os << "\"/>\n</svg>\n";
    return os.str();
}

inline Json stats_json(const IntegratorStats& st) {
    Json j;
    j["tol"] = st.tol;
    j["accepted_steps"] = st.n_accepted;
    j["rejected_steps"] = st.n_rejected;
    j["rhs_evaluations"] = st.n_rhs;
    j["diverged"] = st.diverged;
    if (!st.diagnostic.empty()) j["diagnostic"] = st.diagnostic;
    return j;
}

inline Json closure_json(const ClosureReport& rep) {
    Json j;
    j["closed"] = rep.closed;
    j["period"] = rep.period;
    j["phase_residual"] = rep.phase_residual;
    j["loops_examined"] = rep.loops_examined;
    return j;
}

inline Json rational_json(const Rational& r) {
    Json j;
    j["p"] = r.p;
    j["q"] = r.q;
    j["value"] = r.value();
    return j;
}

inline Json shift_comparison_json(const ShiftComparison& c) {
    Json j;
    j["phi"] = c.phi;
    j["measured_shift"] = c.delta;
    j["measured_over_two_pi"] = c.delta / kTwoPi;
    j["best_rational"] = rational_json(c.best);
    j["rational_error"] = c.rational_error;
    j["unweighted_closed_form"] = c.unweighted_form;
    j["unweighted_closed_form_mod_two_pi"] = c.unweighted_form_mod;
    j["unweighted_residual"] = c.unweighted_residual;
    j["weighted_closed_form"] = c.weighted_value;
    j["weighted_closed_form_mod_two_pi"] = c.weighted_value_mod;
    j["weighted_residual"] = c.weighted_residual;
    return j;
}

inline Json scan_json(const ScanReport& rep) {
    Json j;
    j["phi"] = rep.phi;
    j["points"] = rep.n_points;
    j["dirs"] = rep.n_dirs;
    j["loop_budget"] = rep.loop_budget;
    j["seed"] = rep.seed;
    j["all_closed"] = rep.all_closed;
    j["none_closed"] = rep.none_closed;
    j["inconclusive"] = rep.inconclusive;
    j["closed_count"] = rep.closed_count;
    j["common_period"] = rep.common_period;
    j["period_spread"] = rep.period_spread;
    Json grid = Json::array();
    for (const Quat& q : rep.points) grid.push_back(Json::array({q.w, q.x, q.y, q.z}));
    j["base_points"] = grid;
    j["cone_angles"] = rep.psis;
    Json orbits = Json::array();
    long accepted = 0, rejected = 0, rhs = 0;
    for (const auto& rec : rep.orbits) {
        Json o;
        o["point"] = rec.point_index;
        o["dir"] = rec.dir_index;
        o["integration_ok"] = rec.integration_ok;
        o["closure"] = closure_json(rec.closure);
        orbits.push_back(o);
        accepted += rec.stats.n_accepted;
        rejected += rec.stats.n_rejected;
        rhs += rec.stats.n_rhs;
    }
    j["orbits"] = orbits;
    j["integrator_totals"] =
        Json{{"accepted_steps", accepted}, {"rejected_steps", rejected}, {"rhs_evaluations", rhs}};
    return j;
}

/// Top-level report envelope shared by every subcommand.
inline Json report_envelope(const std::string& command, Json config, Json results, Json tolerances) {
    Json j;
    j["command"] = command;
    j["config"] = std::move(config);
    j["results"] = std::move(results);
    j["tolerances"] = std::move(tolerances);
    j["versions"] = Json{{"zollfrei", "0.1.0"}, {"report_format", 1}};
    return j;
}

/// Angle grammar for the CLI: plain decimal, `pi/x`, `a/b`, optionally
/// wrapped in `tan:` or `atan:` (so `atan:1/4` and `tan:pi/8` are exact).
inline double parse_angle_expr(const std::string& s) {
    auto parse_plain = [](const std::string& t) -> double {
        constexpr double pi = 3.14159265358979323846;
        const auto slash = t.find('/');
        if (slash != std::string::npos) {
            const std::string num = t.substr(0, slash), den = t.substr(slash + 1);
            const double a = num == "pi" ? pi : std::stod(num);
            const double b = std::stod(den);
            if (b == 0.0) throw std::invalid_argument("angle expression divides by zero");
            return a / b;
        }
        if (t == "pi") return pi;
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument("bad angle expression: " + t);
        return v;
    };
    if (s.rfind("tan:", 0) == 0) return std::tan(parse_angle_expr(s.substr(4)));
    if (s.rfind("atan:", 0) == 0) return std::atan(parse_angle_expr(s.substr(5)));
    return parse_plain(s);
}

/// Parses "p/q" into a rational target.
inline Rational parse_fraction(const std::string& s) {
    const auto slash = s.find('/');
    if (slash == std::string::npos) throw std::invalid_argument("expected p/q: " + s);
    Rational r;
    r.p = std::stol(s.substr(0, slash));
    r.q = std::stol(s.substr(slash + 1));
    if (r.q <= 0) throw std::invalid_argument("denominator must be positive: " + s);
    return r;
}

}  // namespace zollfrei

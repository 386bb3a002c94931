// Command-line front end for the Zollfrei metric laboratory: extremal and
// lightlike flows, fiber-shift measurement, parameter search, closure scans,
// and the oracle / conformal cross-checks. Reports are JSON envelopes
// {command, config, results, tolerances, versions}; trajectories go to CSV
// and optionally to an SVG polyline of a 2D chart projection.
#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "zollfrei/zollfrei.hpp"

namespace zf = zollfrei;
using zf::Json;

namespace {

struct CommonOpts {
    double tol = 1e-10;
    std::uint64_t seed = 0;
};

int write_report(const std::string& path, const Json& report) {
    if (path.empty()) {
        std::cout << report.dump(2) << "\n";
        return 0;
    }
    zf::atomic_write(path, report.dump(2) + "\n");
    return 0;
}

zf::ModelSurface make_surface(const std::string& kind, double radius) {
    if (kind == "sphere") return zf::ModelSurface::sphere(radius);
    if (kind == "euclidean") return zf::ModelSurface::euclidean();
    if (kind == "hyperbolic") return zf::ModelSurface::hyperbolic();
    throw CLI::ValidationError("--surface must be sphere, euclidean or hyperbolic");
}

std::vector<std::pair<double, double>> chart_projection(const zf::BaseTrajectory& traj, double s_end) {
    std::vector<std::pair<double, double>> pts;
    const int n = 800;
    for (int k = 0; k <= n; ++k) {
        const auto y = traj.eval(traj.s_begin() + (s_end - traj.s_begin()) * k / n);
        pts.emplace_back(y[1], y[2]);  // drop the constrained coordinate
    }
    return pts;
}

int cmd_extremal(const CommonOpts& common, const std::string& surface, double radius,
                 const std::string& lambda_expr, double flux, const std::string& theta_expr, double loops,
                 const std::string& csv, const std::string& json_path, const std::string& svg,
                 bool expect_closed) {
    const double lambda = zf::parse_angle_expr(lambda_expr);
    const zf::MagneticSystem sys(make_surface(surface, radius), lambda, flux);

    zf::ExtremalState st0;
    double theta0 = 0.0;
    bool latitude_mode = false;
    if (sys.surface.kind == zf::SurfaceKind::Sphere && flux != 0.0) {
        theta0 = theta_expr.empty() ? zf::predicted_latitude(radius, lambda, flux) : zf::parse_angle_expr(theta_expr);
        st0 = zf::latitude_state(sys, theta0);
        latitude_mode = theta_expr.empty();
    } else if (sys.surface.kind == zf::SurfaceKind::Sphere) {
        st0 = zf::latitude_state(sys, theta_expr.empty() ? 1.5707963267948966 : zf::parse_angle_expr(theta_expr));
    } else if (sys.surface.kind == zf::SurfaceKind::Euclidean) {
        st0 = {{{0.0, 0.0, 0.0}}, {0.0, 1.0, 0.0}};
    } else {
        st0 = {{{1.0, 0.0, 0.0}}, {0.0, 1.0, 0.0}};
    }

    double span_unit;
    try {
        span_unit = zf::expected_period(sys);
    } catch (const std::exception&) {
        span_unit = 2.0 * zf::kPi * std::max(1.0, sys.surface.radius);  // open flows: a length scale
    }
    const double s_max = loops * span_unit;
    const auto traj = zf::integrate_extremal(sys, st0, s_max, common.tol);

    zf::ClosureReport closure;
    bool closure_valid = true;
    try {
        closure = zf::closure_detect(traj, 1e-6, 1e-3 * lambda);
    } catch (const std::exception&) {
        closure_valid = false;
    }

    Json results;
    results["diverged"] = traj.stats.diverged;
    results["speed_drift_per_unit_s"] = zf::speed_drift_rate(sys.surface, traj);
    if (closure_valid) results["closure"] = zf::closure_json(closure);
    if (latitude_mode) {
        double worst = 0.0;
        for (const auto& smp : traj.samples) {
            const double theta = std::acos(std::clamp(smp.y[2] / radius, -1.0, 1.0));
            worst = std::max(worst, std::abs(theta - theta0));
        }
        results["latitude"] = theta0;
        results["latitude_drift"] = worst;
    }
    results["integrator"] = zf::stats_json(traj.stats);

    if (!csv.empty()) zf::atomic_write(csv, zf::trajectory_csv(traj));
    if (!svg.empty()) {
        const double s_end = closure_valid && closure.closed ? closure.period : traj.s_end();
        zf::atomic_write(svg, zf::svg_polyline(chart_projection(traj, s_end)));
    }

    Json config{{"surface", surface}, {"radius", radius},          {"lambda_l", lambda},
                {"flux", flux},       {"loops", loops},            {"seed", common.seed},
                {"csv", csv},         {"svg", svg}};
    const int rc = write_report(json_path, zf::report_envelope("extremal", config, results,
                                                               Json{{"tol", common.tol}, {"closure_tol", 1e-6}}));
    if (expect_closed && !(closure_valid && closure.closed)) return 1;
    return rc;
}

int cmd_lightlike(const CommonOpts& common, const std::string& phi_expr, const std::string& psi_expr, double T,
                  const std::string& csv, const std::string& json_path) {
    const double phi = zf::parse_angle_expr(phi_expr);
    const double psi = zf::parse_angle_expr(psi_expr);
    const zf::BergerParams par(phi);
    const zf::LightlikeState st0 = zf::lightcone_sample({1, 0, 0, 0}, phi, psi);
    const auto traj = zf::integrate_lightlike(par, st0, T, common.tol);

    double worst_o1 = 0.0, worst_cone = 0.0, worst_norm = 0.0;
    for (const auto& smp : traj.samples) {
        const zf::LightlikeState st = zf::detail::unpack7(smp.y);
        worst_o1 = std::max(worst_o1, std::abs(st.omega.o1 - st0.omega.o1));
        worst_cone = std::max(worst_cone, std::abs(zf::berger_norm2_frame(par, st.omega)));
        worst_norm = std::max(worst_norm, std::abs(zf::norm(st.q) - 1.0));
    }
    const auto base = zf::project_to_base(traj);

    Json results;
    results["fiber_charge_drift"] = worst_o1;
    results["lightlike_residual"] = worst_cone;
    results["quaternion_norm_drift"] = worst_norm;
    results["base_speed_drift_per_unit_s"] = zf::speed_drift_rate(zf::ModelSurface::sphere(0.5), base);
    results["integrator"] = zf::stats_json(traj.stats);
    if (!csv.empty()) zf::atomic_write(csv, zf::bundle_csv(traj));

    Json config{{"phi", phi}, {"psi", psi}, {"time", T}, {"seed", common.seed}, {"csv", csv}};
    return write_report(json_path, zf::report_envelope("lightlike", config, results, Json{{"tol", common.tol}}));
}

int cmd_shift(const CommonOpts& common, const std::vector<std::string>& phis, const std::string& grid,
              long qmax, const std::string& json_path) {
    std::vector<double> values;
    for (const auto& e : phis) values.push_back(zf::parse_angle_expr(e));
    if (!grid.empty()) {
        const auto c1 = grid.find(':');
        const auto c2 = grid.find(':', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw CLI::ValidationError("--phi-grid expects a:b:n");
        const double a = zf::parse_angle_expr(grid.substr(0, c1));
        const double b = zf::parse_angle_expr(grid.substr(c1 + 1, c2 - c1 - 1));
        const int n = std::stoi(grid.substr(c2 + 1));
        for (int i = 0; i <= n; ++i) values.push_back(a + (b - a) * i / std::max(1, n));
    }
    if (values.empty()) throw CLI::ValidationError("shift: give --phi or --phi-grid");

    zf::ShiftOptions opt;
    opt.tol = common.tol;
    Json rows = Json::array();
    for (double phi : values) rows.push_back(zf::shift_comparison_json(zf::shift_report(phi, qmax, opt)));
    Json results{{"comparisons", rows}};
    Json config{{"qmax", qmax}, {"count", values.size()}, {"seed", common.seed}};
    return write_report(json_path, zf::report_envelope("shift", config, results,
                                                       Json{{"tol", common.tol}, {"base_closure_tol", opt.base_tol}}));
}

int cmd_find_phi(const CommonOpts& common, const std::string& target_str, const std::string& bracket,
                 const std::string& json_path) {
    const zf::Rational target = zf::parse_fraction(target_str);
    double lo = 1.1, hi = 1.3;
    if (!bracket.empty()) {
        const auto c = bracket.find(':');
        if (c == std::string::npos) throw CLI::ValidationError("--bracket expects a:b");
        lo = zf::parse_angle_expr(bracket.substr(0, c));
        hi = zf::parse_angle_expr(bracket.substr(c + 1));
    }
    zf::ShiftOptions opt;
    opt.tol = common.tol;
    const zf::FindPhiResult res = zf::find_phi(target, lo, hi, opt);

    Json results;
    results["phi_star"] = res.phi_star;
    results["measured_shift"] = res.delta;
    results["target"] = res.target;
    results["residual"] = res.residual;
    if (res.form_root) {
        results["closure_form_root"] = *res.form_root;
        results["measured_shift_at_form_root"] = res.delta_at_form_root;
    }
    Json config{{"target", target_str}, {"bracket_lo", lo}, {"bracket_hi", hi}, {"seed", common.seed}};
    return write_report(json_path,
                        zf::report_envelope("find-phi", config, results, Json{{"tol", common.tol}, {"residual_tol", 1e-8}}));
}

int cmd_scan(const CommonOpts& common, const std::string& phi_expr, const std::string& from_shift,
             const std::string& bracket, int points, int dirs, int budget, const std::string& json_path,
             bool expect_closed) {
    double phi;
    if (!from_shift.empty()) {
        double lo = 1.1, hi = 1.3;
        if (!bracket.empty()) {
            const auto c = bracket.find(':');
            if (c == std::string::npos) throw CLI::ValidationError("--bracket expects a:b");
            lo = zf::parse_angle_expr(bracket.substr(0, c));
            hi = zf::parse_angle_expr(bracket.substr(c + 1));
        }
        zf::ShiftOptions opt;
        opt.tol = common.tol;
        phi = zf::find_phi(zf::parse_fraction(from_shift), lo, hi, opt).phi_star;
    } else if (!phi_expr.empty()) {
        phi = zf::parse_angle_expr(phi_expr);
    } else {
        throw CLI::ValidationError("scan: give --phi or --phi-from-shift");
    }

    zf::ScanOptions opt;
    opt.tol = common.tol;
    const zf::ScanReport rep = zf::zollfrei_scan(phi, points, dirs, budget, common.seed, opt);
    std::cerr << "scan phi=" << phi << (rep.inconclusive ? " inconclusive" : rep.all_closed ? " all-closed" : rep.none_closed ? " none-closed" : " mixed")
              << " closed=" << rep.closed_count << "/" << points * dirs << "\n";

    Json config{{"phi", phi},     {"phi_from_shift", from_shift}, {"points", points},
                {"dirs", dirs},   {"loop_budget", budget},        {"seed", common.seed}};
    const int rc = write_report(json_path, zf::report_envelope("scan", config, zf::scan_json(rep),
                                                               Json{{"tol", opt.tol},
                                                                    {"phase_tol", opt.phase_tol},
                                                                    {"period_spread_rel", opt.period_spread_rel}}));
    if (expect_closed && !rep.all_closed) return 1;
    if (rep.inconclusive) return 1;
    return rc;
}

int cmd_conformal(const CommonOpts& common, const std::string& phi_expr, double coeff, double max_dist,
                  const std::string& json_path) {
    const double phi = zf::parse_angle_expr(phi_expr);
    const zf::BergerParams par(phi);
    const zf::LightlikeState st0 = zf::lightcone_sample({1, 0, 0, 0}, phi, 0.0);
    const double T = 1.6 * zf::kPi * std::sin(phi);
    const double dist =
        zf::conformal_compare(par, [coeff](const zf::Quat& q) { return coeff * q.w; }, st0, T, common.tol);

    Json results{{"hausdorff_distance", dist}, {"coefficient", coeff}};
    Json config{{"phi", phi}, {"coeff", coeff}, {"seed", common.seed}};
    const int rc = write_report(json_path, zf::report_envelope("conformal-check", config, results,
                                                               Json{{"tol", common.tol}, {"max_dist", max_dist}}));
    if (max_dist > 0.0 && dist > max_dist) return 1;
    return rc;
}

int cmd_oracle(const CommonOpts& common, const std::string& phi_expr, int starts, double T, double max_dist,
               const std::string& json_path) {
    const double phi = zf::parse_angle_expr(phi_expr);
    const zf::BergerParams par(phi);
    zf::Rng rng(common.seed == 0 ? 7u : common.seed);
    double worst = 0.0;
    Json rows = Json::array();
    for (int k = 0; k < starts; ++k) {
        const zf::LightlikeState st0 =
            zf::lightcone_sample(rng.unit_quaternion(), phi, rng.uniform(0.0, 2.0 * zf::kPi));
        const auto bt = zf::integrate_lightlike(par, st0, T, common.tol);
        const auto orc = zf::chart_geodesic_oracle(zf::berger_metric(par), st0.q,
                                                   zf::ambient_velocity(st0.q, st0.omega), T, common.tol);
        if (orc.stats.diverged) return 1;
        const zf::LightlikeState end = zf::bundle_state(bt, T);
        const double d = zf::norm(end.q - orc.samples.back().q) +
                         zf::norm(zf::ambient_velocity(end.q, end.omega) - orc.samples.back().qdot);
        rows.push_back(Json{{"start", k}, {"phase_distance", d}});
        worst = std::max(worst, d);
    }
    Json results{{"per_start", rows}, {"max_phase_distance", worst}};
    Json config{{"phi", phi}, {"starts", starts}, {"time", T}, {"seed", common.seed}};
    const int rc = write_report(json_path, zf::report_envelope("oracle-check", config, results,
                                                               Json{{"tol", common.tol}, {"max_dist", max_dist}}));
    if (max_dist > 0.0 && worst > max_dist) return 1;
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for Lorentzian circle-bundle metrics and magnetic flows"};
    app.fallthrough();  // --tol/--seed may follow the subcommand name
    app.set_config("--config", "", "key=value configuration file (flags take precedence)");

    CommonOpts common;
    app.add_option("--tol", common.tol, "integration tolerance")->capture_default_str();
    app.add_option("--seed", common.seed, "sampling seed")->envname("ZOLLFREI_SEED")->capture_default_str();

    // extremal
    auto* ext = app.add_subcommand("extremal", "integrate a charged-particle extremal on a model surface");
    std::string surface = "sphere", lambda_expr = "1", theta_expr, csv, json_path, svg;
    double radius = 0.5, flux = -1.0, loops = 10.0;
    bool expect_closed = false;
    ext->add_option("--surface", surface, "sphere | euclidean | hyperbolic")->capture_default_str();
    ext->add_option("--radius", radius, "sphere radius")->capture_default_str();
    ext->add_option("--lambda-l", lambda_expr, "length weight (angle expression, e.g. tan:pi/8)")
        ->capture_default_str();
    ext->add_option("--flux", flux, "flux constant c in omega = c dvol")->capture_default_str();
    ext->add_option("--theta0", theta_expr, "starting latitude (sphere; default: stationary latitude)");
    ext->add_option("--loops", loops, "integration span in expected periods")->capture_default_str();
    ext->add_option("--csv", csv, "trajectory CSV path");
    ext->add_option("--json", json_path, "report path (stdout if empty)");
    ext->add_option("--svg", svg, "SVG polyline path");
    ext->add_flag("--expect-closed", expect_closed, "exit 1 unless a closed orbit is detected");

    // lightlike
    auto* ll = app.add_subcommand("lightlike", "integrate a lightlike geodesic of the bundle metric");
    std::string ll_phi = "0.9", ll_psi = "0", ll_csv, ll_json;
    double ll_T = 100.0;
    ll->add_option("--phi", ll_phi, "cone parameter (angle expression)")->capture_default_str();
    ll->add_option("--psi", ll_psi, "cone direction")->capture_default_str();
    ll->add_option("--time", ll_T, "integration span")->capture_default_str();
    ll->add_option("--csv", ll_csv, "bundle trajectory CSV path");
    ll->add_option("--json", ll_json, "report path (stdout if empty)");

    // shift
    auto* sh = app.add_subcommand("shift", "measure the fiber shift and compare with the closed forms");
    std::vector<std::string> sh_phis;
    std::string sh_grid, sh_json;
    long sh_qmax = 64;
    sh->add_option("--phi", sh_phis, "cone parameter (repeatable)");
    sh->add_option("--phi-grid", sh_grid, "a:b:n grid of parameters");
    sh->add_option("--qmax", sh_qmax, "denominator bound for the rational certificate")->capture_default_str();
    sh->add_option("--json,--out", sh_json, "report path (stdout if empty)");

    // find-phi
    auto* fp = app.add_subcommand("find-phi", "solve measured shift = 2 pi p/q for phi");
    std::string fp_target = "0/1", fp_bracket, fp_json;
    fp->add_option("--target", fp_target, "rational target p/q")->capture_default_str();
    fp->add_option("--bracket", fp_bracket, "search bracket a:b (default 1.1:1.3)");
    fp->add_option("--json,--out", fp_json, "report path (stdout if empty)");

    // scan
    auto* sc = app.add_subcommand("scan", "closure scan over sampled lightlike orbits");
    std::string sc_phi, sc_from_shift, sc_bracket, sc_json;
    int sc_points = 8, sc_dirs = 8, sc_budget = 64;
    bool sc_expect_closed = false;
    sc->add_option("--phi", sc_phi, "cone parameter (angle expression)");
    sc->add_option("--phi-from-shift", sc_from_shift, "pick phi by solving the shift for p/q");
    sc->add_option("--bracket", sc_bracket, "bracket for --phi-from-shift");
    sc->add_option("--points", sc_points, "sampled base points")->capture_default_str();
    sc->add_option("--dirs", sc_dirs, "sampled cone directions")->capture_default_str();
    sc->add_option("--budget", sc_budget, "loop budget per orbit")->capture_default_str();
    sc->add_option("--out,--json", sc_json, "report path (stdout if empty)");
    sc->add_flag("--expect-closed", sc_expect_closed, "exit 1 unless the scan is all-closed");

    // conformal-check
    auto* cc = app.add_subcommand("conformal-check", "trace invariance under a conformal rescaling");
    std::string cc_phi = "0.9", cc_json;
    double cc_coeff = 0.3, cc_max = 0.0;
    cc->add_option("--phi", cc_phi, "cone parameter")->capture_default_str();
    cc->add_option("--coeff", cc_coeff, "conformal factor exp(coeff * q0)")->capture_default_str();
    cc->add_option("--max-dist", cc_max, "exit 1 if the Hausdorff distance exceeds this");
    cc->add_option("--json,--out", cc_json, "report path (stdout if empty)");

    // oracle-check
    auto* oc = app.add_subcommand("oracle-check", "frame flow vs finite-difference chart integrator");
    std::string oc_phi = "0.9", oc_json;
    int oc_starts = 5;
    double oc_T = 10.0, oc_max = 0.0;
    oc->add_option("--phi", oc_phi, "cone parameter")->capture_default_str();
    oc->add_option("--starts", oc_starts, "number of random starts")->capture_default_str();
    oc->add_option("--time", oc_T, "integration span")->capture_default_str();
    oc->add_option("--max-dist", oc_max, "exit 1 if the phase distance exceeds this");
    oc->add_option("--json,--out", oc_json, "report path (stdout if empty)");

    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(ext))
            return cmd_extremal(common, surface, radius, lambda_expr, flux, theta_expr, loops, csv, json_path,
                                svg, expect_closed);
        if (app.got_subcommand(ll)) return cmd_lightlike(common, ll_phi, ll_psi, ll_T, ll_csv, ll_json);
        if (app.got_subcommand(sh)) return cmd_shift(common, sh_phis, sh_grid, sh_qmax, sh_json);
        if (app.got_subcommand(fp)) return cmd_find_phi(common, fp_target, fp_bracket, fp_json);
        if (app.got_subcommand(sc))
            return cmd_scan(common, sc_phi, sc_from_shift, sc_bracket, sc_points, sc_dirs, sc_budget, sc_json,
                            sc_expect_closed);
        if (app.got_subcommand(cc)) return cmd_conformal(common, cc_phi, cc_coeff, cc_max, cc_json);
        if (app.got_subcommand(oc)) return cmd_oracle(common, oc_phi, oc_starts, oc_T, oc_max, oc_json);
        std::cerr << app.help() << "\n";
        return 2;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

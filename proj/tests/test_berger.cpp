#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "test_support.hpp"
#include "zollfrei/berger.hpp"
#include "zollfrei/chart_oracle.hpp"
#include "zollfrei/conformal.hpp"
#include "zollfrei/trace.hpp"

using namespace zollfrei;

namespace {
constexpr double kPiT = 3.14159265358979323846;

Quat random_tangent_at(const Quat& q, Rng& rng) {
    Quat v{rng.gaussian(), rng.gaussian(), rng.gaussian(), rng.gaussian()};
    v = v - dot(v, q) * q;
    return v;
}
}  // namespace

TEST_CASE("hopf projection of reference quaternions") {
    const SurfacePoint p1 = hopf_project({1, 0, 0, 0});
    CHECK(norm(p1.x - Vec3{0.5, 0.0, 0.0}) < 1e-15);

    // (1+j)/sqrt(2): conj(q) i q = k by direct quaternion arithmetic
    const Quat q = normalized(Quat{1, 0, 1, 0});
    const SurfacePoint p2 = hopf_project(q);
    CHECK(norm(p2.x - Vec3{0.0, 0.0, 0.5}) < 1e-15);

    Rng rng(31);
    for (int it = 0; it < 30; ++it) {
        const Quat r = rng.unit_quaternion();
        CHECK(norm(hopf_project(r).x) == Catch::Approx(0.5).margin(1e-13));
        // fiber invariance under left multiplication by e^{it}
        const double t = rng.uniform(0.0, 2.0 * kPiT);
        const Quat rot = Quat{std::cos(t), std::sin(t), 0, 0} * r;
        CHECK(norm(hopf_project(rot).x - hopf_project(r).x) < 1e-13);
    }
}

TEST_CASE("hopf differential is an isometry on the horizontal space") {
    Rng rng(32);
    for (int it = 0; it < 30; ++it) {
        const Quat q = rng.unit_quaternion();
        Quat v = random_tangent_at(q, rng);
        const Quat iq = kQuatI * q;
        const Quat vh = v - dot(v, iq) * iq;  // horizontal part
        CHECK(norm(hopf_differential(q, vh)) == Catch::Approx(norm(vh)).epsilon(1e-12));
        // vertical direction is crushed
        CHECK(norm(hopf_differential(q, iq)) < 1e-13);
    }
}

TEST_CASE("connection form values and flow invariance") {
    CHECK(alpha_eval({1, 0, 0, 0}, {0, 1, 0, 0}) == 1.0);
    CHECK(alpha_eval({1, 0, 0, 0}, {0, 0, 1, 0}) == 0.0);

    Rng rng(33);
    for (int it = 0; it < 20; ++it) {
        const Quat q = rng.unit_quaternion();
        CHECK(alpha_eval(q, kQuatI * q) == Catch::Approx(1.0).margin(1e-13));

        // pullback along the fiber flow: alpha(d Phi_t(v)) = alpha(v), checked
        // by finite differences in t
        const Quat v = random_tangent_at(q, rng);
        const double eps = 1e-6;
        const Quat rot{std::cos(eps), std::sin(eps), 0, 0};
        const double pulled = alpha_eval(rot * q, rot * v);
        CHECK(std::abs(pulled - alpha_eval(q, v)) / eps < 1e-8);
    }
    CHECK_THROWS_AS(alpha_eval({1, 0, 0, 0}, {1, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("curvature factor of the connection form is 2") {
    const double c = curvature_factor();
    CHECK(c == Catch::Approx(2.0).margin(1e-9));

    // frame bracket oracle: [J, K](q) = k(jq) - j(kq) = -2 iq, so
    // d(alpha)(Jq, Kq) = -alpha([J, K]) = 2, while the projected area form
    // on the pair is 1
    Rng rng(34);
    const ModelSurface base = ModelSurface::sphere(0.5);
    for (int it = 0; it < 10; ++it) {
        const Quat q = rng.unit_quaternion();
        const Quat jq = Quat{0, 0, 1, 0} * q;
        const Quat kq = Quat{0, 0, 0, 1} * q;
        const Quat bracket = Quat{0, 0, 0, 1} * jq - Quat{0, 0, 1, 0} * kq;
        CHECK(norm(bracket - (-2.0) * (kQuatI * q)) < 1e-13);
        CHECK(alpha_exterior_derivative(q, jq, kq) == Catch::Approx(2.0).margin(1e-9));
        CHECK(dvol(base, hopf_project(q), hopf_differential(q, jq), hopf_differential(q, kq)) ==
              Catch::Approx(1.0).margin(1e-12));

        // antisymmetry and fiber degeneracy of d(alpha)
        const Quat u = random_tangent_at(q, rng);
        const Quat v = random_tangent_at(q, rng);
        CHECK(alpha_exterior_derivative(q, u, v) == Catch::Approx(-alpha_exterior_derivative(q, v, u)).margin(1e-8));
        CHECK(std::abs(alpha_exterior_derivative(q, kQuatI * q, u)) < 1e-8);
    }
}

TEST_CASE("light cone samples satisfy the cone condition exactly") {
    Rng rng(35);
    for (double phi : {0.3, 0.9, 1.4}) {
        const BergerParams par(phi);
        for (int it = 0; it < 10; ++it) {
            const LightlikeState st = lightcone_sample(rng.unit_quaternion(), phi, rng.uniform(0.0, 2 * kPiT));
            CHECK(std::abs(berger_norm2_frame(par, st.omega)) < 1e-13);
        }
        const LightlikeState a = lightcone_sample({1, 0, 0, 0}, phi, 0.4);
        const LightlikeState b = lightcone_sample({1, 0, 0, 0}, phi, 0.4 + 2.0 * kPiT);
        CHECK(std::abs(a.omega.o2 - b.omega.o2) < 1e-15);
        CHECK(std::abs(a.omega.o3 - b.omega.o3) < 1e-15);
    }
}

TEST_CASE("frame flow conserves the fiber charge, the cone and the norm") {
    const double phi = 0.9;
    const BergerParams par(phi);
    const LightlikeState st0 = lightcone_sample({1, 0, 0, 0}, phi, 0.7);
    const auto traj = integrate_lightlike(par, st0, 30.0, 1e-10);
    REQUIRE_FALSE(traj.stats.diverged);
    double worst_o1 = 0.0, worst_cone = 0.0, worst_norm = 0.0;
    for (const auto& smp : traj.samples) {
        const LightlikeState st = detail::unpack7(smp.y);
        worst_o1 = std::max(worst_o1, std::abs(st.omega.o1 - st0.omega.o1));
        worst_cone = std::max(worst_cone, std::abs(berger_norm2_frame(par, st.omega)));
        worst_norm = std::max(worst_norm, std::abs(norm(st.q) - 1.0));
    }
    CHECK(worst_o1 < 1e-9);
    CHECK(worst_cone < 1e-10);
    CHECK(worst_norm < 1e-12);
}

TEST_CASE("frame flow matches the closed-form solution") {
    // q(s) = e^{i a s} e^{s B} q0, a = o1/sin^2, B = -o1 cot^2 i + rho(cos psi0 j + sin psi0 k)
    const double phi = 1.1, psi0 = 0.6;
    const BergerParams par(phi);
    const Quat q0 = normalized(Quat{0.8, -0.1, 0.5, 0.2});
    const LightlikeState st0 = lightcone_sample(q0, phi, psi0);
    const auto traj = integrate_lightlike(par, st0, 12.0, 1e-11);

    const double o1 = st0.omega.o1;
    const double cot = 1.0 / std::tan(phi);
    const double a = o1 / (std::sin(phi) * std::sin(phi));
    const Vec3 B{-o1 * cot * cot, cot * o1 * std::cos(psi0), cot * o1 * std::sin(psi0)};
    for (double s : {1.0, 4.7, 12.0}) {
        const Quat expect = exp_pure({a * s, 0, 0}) * exp_pure(s * B) * q0;
        const LightlikeState got = bundle_state(traj, s);
        CHECK(norm(got.q - expect) < 1e-8);
    }
}

TEST_CASE("projected flow is the charged-particle flow with flux -2") {
    const double phi = 0.8;
    const BergerParams par(phi);
    const Quat q0 = normalized(Quat{1.0, 0.3, -0.2, 0.5});
    const LightlikeState st0 = lightcone_sample(q0, phi, 1.9);
    const double Tb = kPiT * std::sin(phi);
    const auto bt = integrate_lightlike(par, st0, 1.3 * Tb, 1e-11);
    const auto base = project_to_base(bt);

    const MagneticSystem sys(ModelSurface::sphere(0.5), std::tan(phi), -2.0);
    const ExtremalState m0{{{base.samples.front().y[0], base.samples.front().y[1], base.samples.front().y[2]}},
                           {base.samples.front().y[3], base.samples.front().y[4], base.samples.front().y[5]}};
    const auto mt = integrate_extremal(sys, m0, 1.3 * Tb, 1e-11);

    // traces over one loop agree as sets
    std::vector<Vec3> pa, pb;
    for (int k = 0; k <= 400; ++k) {
        const auto ya = base.eval(Tb * k / 400.0);
        const auto yb = mt.eval(Tb * k / 400.0);
        pa.push_back({ya[0], ya[1], ya[2]});
        pb.push_back({yb[0], yb[1], yb[2]});
    }
    CHECK(hausdorff_distance(embed3(pa), embed3(pb)) < 1e-5);

    for (double s : {0.5 * Tb, Tb, 1.2 * Tb}) {
        const auto ya = base.eval(s);
        const auto yb = mt.eval(s);
        double d = 0.0;
        for (int i = 0; i < 6; ++i) d = std::max(d, std::abs(ya[i] - yb[i]));
        CHECK(d < 1e-6);
    }

    // the projected circle sits at polar radius phi from its axis; fit over
    // exactly one loop so the axis estimate is unbiased
    std::vector<Vec3> pts;
    for (const auto& smp : base.samples)
        if (smp.s <= Tb) pts.push_back({smp.y[0], smp.y[1], smp.y[2]});
    const LatitudeFit fit = fit_latitude(pts);
    CHECK(fit.theta_mean == Catch::Approx(phi).margin(1e-7));
    CHECK(fit.theta_spread < 1e-7);
    const double c_dyn = 2.0 * std::tan(phi) / std::tan(fit.theta_mean);
    CHECK(std::abs(c_dyn) == Catch::Approx(2.0).margin(1e-4));
}

TEST_CASE("fiber shift of the canonical orbit") {
    // delta(phi) = pi (1 + sec phi) mod 2pi by the closed-form solution
    for (double phi : {0.5, 1.0}) {
        const BergerParams par(phi);
        const LightlikeState st0 = lightcone_sample({1, 0, 0, 0}, phi, 0.0);
        const auto bt = integrate_lightlike(par, st0, 1.6 * kPiT * std::sin(phi), 1e-11);
        const FiberShift fs = fiber_shift(par, bt);
        const double expect = std::fmod(kPiT * (1.0 + 1.0 / std::cos(phi)), 2.0 * kPiT);
        CHECK(fs.delta == Catch::Approx(expect).margin(1e-7));
        CHECK(fs.base_loop_parameter == Catch::Approx(kPiT * std::sin(phi)).margin(1e-7));
        CHECK(fs.residual < 1e-7);
    }
}

TEST_CASE("fiber shift vanishes when the orbit itself closes") {
    const double phi = std::acos(1.0 / 3.0);  // sec(phi) = 3, shift = 4 pi = 0 mod 2 pi
    const BergerParams par(phi);
    const LightlikeState st0 = lightcone_sample({1, 0, 0, 0}, phi, 0.0);
    const auto bt = integrate_lightlike(par, st0, 1.6 * kPiT * std::sin(phi), 1e-11);
    const FiberShift fs = fiber_shift(par, bt);
    const double dist = std::min(fs.delta, 2.0 * kPiT - fs.delta);
    CHECK(dist < 1e-7);

    const auto rep = bundle_closure_detect(bt, 1e-6, 1e-3);
    REQUIRE(rep.closed);
    CHECK(rep.period == Catch::Approx(kPiT * std::sin(phi)).margin(1e-6));
}

TEST_CASE("chart oracle reproduces round great circles") {
    const Quat q0{1, 0, 0, 0};
    const Quat v0{0, 0, 1, 0};
    const auto orc = chart_geodesic_oracle(round_metric(), q0, v0, 2.0 * kPiT, 1e-10);
    REQUIRE_FALSE(orc.stats.diverged);
    CHECK(orc.chart_switches > 0);  // a great circle must leave either chart's comfort zone
    const OracleDense dense(orc.samples);
    for (double s : {0.9, kPiT, 5.1, 2.0 * kPiT}) {
        const Quat expect{std::cos(s), 0.0, std::sin(s), 0.0};
        CHECK(norm(dense.position(s) - expect) < 1e-6);
    }

    // constant conformal factor: same connection, the great circle is
    // retraced with the same parameterization
    const auto scaled = chart_geodesic_oracle(conformal_scale(round_metric(), [](const Quat&) { return 0.4; }),
                                              q0, v0, 2.0 * kPiT, 1e-10);
    const OracleDense dense2(scaled.samples);
    for (double s : {1.3, 4.0, 2.0 * kPiT}) {
        const Quat expect{std::cos(s), 0.0, std::sin(s), 0.0};
        CHECK(norm(dense2.position(s) - expect) < 1e-6);
    }
}

TEST_CASE("frame flow and chart oracle agree in phase space") {
    Rng rng(36);
    const double phi = 0.95;
    const BergerParams par(phi);
    for (int it = 0; it < 2; ++it) {
        const LightlikeState st0 = lightcone_sample(rng.unit_quaternion(), phi, rng.uniform(0.0, 2 * kPiT));
        const double T = 5.0;
        const auto bt = integrate_lightlike(par, st0, T, 1e-11);
        const auto orc =
            chart_geodesic_oracle(berger_metric(par), st0.q, ambient_velocity(st0.q, st0.omega), T, 1e-11);
        REQUIRE_FALSE(orc.stats.diverged);
        const LightlikeState end = bundle_state(bt, T);
        const Quat qa = end.q;
        const Quat va = ambient_velocity(end.q, end.omega);
        const Quat qb = orc.samples.back().q;
        const Quat vb = orc.samples.back().qdot;
        CHECK(norm(qa - qb) + norm(va - vb) < 1e-6);
    }
}

TEST_CASE("conformal rescaling leaves the lightlike trace invariant") {
    const double phi = 0.9;
    const BergerParams par(phi);
    const LightlikeState st0 = lightcone_sample(normalized(Quat{0.9, 0.1, -0.3, 0.2}), phi, 0.8);
    const double T = 1.6 * kPiT * std::sin(phi);

    const double zero = conformal_compare(par, [](const Quat&) { return 0.0; }, st0, T);
    CHECK(zero < 1e-8);

    const double constant = conformal_compare(par, [](const Quat&) { return 0.4; }, st0, T);
    CHECK(constant < 1e-6);

    const double linear = conformal_compare(par, [](const Quat& q) { return 0.3 * q.w; }, st0, T);
    CHECK(linear < 1e-5);
}

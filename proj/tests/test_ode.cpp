#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "zollfrei/closure.hpp"
#include "zollfrei/ode.hpp"
#include "zollfrei/quadrature.hpp"

using namespace zollfrei;

namespace {
constexpr double kPiT = 3.14159265358979323846;
}

TEST_CASE("dopri5 integrates the exponential to tight accuracy") {
    auto rhs = [](double, const State<1>& y) -> State<1> { return {y[0]}; };
    const auto traj = integrate_adaptive<1>(rhs, {1.0}, 0.0, 1.0, 1e-12);
    REQUIRE_FALSE(traj.stats.diverged);
    CHECK(traj.samples.back().y[0] == Catch::Approx(std::exp(1.0)).epsilon(1e-11));
    CHECK(traj.stats.n_accepted > 10);
}

TEST_CASE("dopri5 tracks the harmonic oscillator over many periods") {
    auto rhs = [](double, const State<2>& y) -> State<2> { return {y[1], -y[0]}; };
    const double T = 20.0 * kPiT;
    const auto traj = integrate_adaptive<2>(rhs, {1.0, 0.0}, 0.0, T, 1e-11);
    CHECK(std::abs(traj.samples.back().y[0] - 1.0) < 1e-7);
    CHECK(std::abs(traj.samples.back().y[1]) < 1e-7);
}

TEST_CASE("global error shrinks with the tolerance") {
    auto rhs = [](double, const State<2>& y) -> State<2> { return {y[1], -y[0]}; };
    auto err_at = [&](double tol) {
        const auto traj = integrate_adaptive<2>(rhs, {1.0, 0.0}, 0.0, 2.0 * kPiT, tol);
        return std::abs(traj.samples.back().y[0] - 1.0) + std::abs(traj.samples.back().y[1]);
    };
    CHECK(err_at(1e-6) > err_at(1e-10));
    CHECK(err_at(1e-10) < 1e-8);
}

TEST_CASE("dense output interpolates between accepted steps") {
    auto rhs = [](double, const State<2>& y) -> State<2> { return {y[1], -y[0]}; };
    const auto traj = integrate_adaptive<2>(rhs, {1.0, 0.0}, 0.0, 3.0, 1e-10);
    for (double s : {0.1234, 0.9, 1.7, 2.45, 2.999}) {
        const auto y = traj.eval(s);
        CHECK(std::abs(y[0] - std::cos(s)) < 5e-8);
        CHECK(std::abs(y[1] + std::sin(s)) < 5e-8);
    }
    const auto [y, dy] = traj.eval_pair(1.3);
    CHECK(std::abs(dy[0] - y[1]) < 1e-6);  // interpolant derivative tracks the state
}

TEST_CASE("samples are strictly increasing in s") {
    auto rhs = [](double, const State<1>& y) -> State<1> { return {-2.0 * y[0]}; };
    const auto traj = integrate_adaptive<1>(rhs, {1.0}, 0.0, 5.0, 1e-9);
    for (std::size_t i = 1; i < traj.samples.size(); ++i)
        REQUIRE(traj.samples[i].s > traj.samples[i - 1].s);
}

TEST_CASE("finite-time blowup is reported as divergence with a partial trajectory") {
    auto rhs = [](double, const State<1>& y) -> State<1> { return {y[0] * y[0]}; };
    const auto traj = integrate_adaptive<1>(rhs, {1.0}, 0.0, 2.0, 1e-10);  // blows up at s=1
    CHECK(traj.stats.diverged);
    CHECK(traj.samples.back().s < 1.001);
    CHECK(traj.samples.size() > 10);
    CHECK_FALSE(traj.stats.diagnostic.empty());
}

TEST_CASE("gauss-kronrod quadrature on smooth integrands") {
    const auto r1 = integrate_gk([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-13);
    CHECK(std::abs(r1.value - (std::exp(1.0) - 1.0)) < 1e-13);
    const auto r2 = integrate_gk([](double x) { return std::sin(x); }, 0.0, kPiT, 1e-13);
    CHECK(std::abs(r2.value - 2.0) < 1e-13);
    const auto r3 = integrate_gk([](double x) { return std::cos(10.0 * x); }, 0.0, 20.0, 1e-12);
    CHECK(std::abs(r3.value - std::sin(200.0) / 10.0) < 1e-11);
}

TEST_CASE("quadrature is additive over subintervals") {
    auto f = [](double x) { return 1.0 / (1.0 + x * x); };
    const double whole = integrate_gk(f, 0.0, 3.0, 1e-13).value;
    const double split = integrate_gk(f, 0.0, 1.3, 1e-13).value + integrate_gk(f, 1.3, 3.0, 1e-13).value;
    CHECK(std::abs(whole - split) < 1e-13);
    CHECK(std::abs(whole - std::atan(3.0)) < 1e-13);
}

TEST_CASE("closure detection finds the period of an analytic circle") {
    // hand-built trajectory of the unit circle in phase space (p, v)
    Trajectory<6> traj;
    const int n = 400;
    for (int i = 0; i <= n; ++i) {
        const double s = 2.6 * kPiT * i / n;
        OdeSample<6> smp;
        smp.s = s;
        smp.y = {std::cos(s), std::sin(s), 0.0, -std::sin(s), std::cos(s), 0.0};
        smp.f = {-std::sin(s), std::cos(s), 0.0, -std::cos(s), -std::sin(s), 0.0};
        traj.samples.push_back(smp);
    }
    auto phase = [](const State<6>& y) {
        detail::PhasePoint<3> p;
        p.pos = {y[0], y[1], y[2]};
        p.vel = {y[3], y[4], y[5]};
        return p;
    };
    const auto rep = closure_detect_phase<3>(traj, phase, 1e-6, 1e-3);
    REQUIRE(rep.closed);
    CHECK(rep.period == Catch::Approx(2.0 * kPiT).margin(1e-8));
    CHECK(rep.phase_residual < 1e-6);
}

TEST_CASE("closure detection rejects too-short trajectories") {
    Trajectory<6> traj;
    for (int i = 0; i < 3; ++i) {
        OdeSample<6> smp;
        smp.s = i * 1e-4;
        smp.y = {1, 0, 0, 0, 1, 0};
        smp.f = {0, 1, 0, 0, 0, 0};
        traj.samples.push_back(smp);
    }
    CHECK_THROWS_AS(closure_detect_phase<3>(
                        traj,
                        [](const State<6>& y) {
                            detail::PhasePoint<3> p;
                            p.pos = {y[0], y[1], y[2]};
                            p.vel = {y[3], y[4], y[5]};
                            return p;
                        },
                        1e-6, 1e-3),
                    std::invalid_argument);
}

#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "zollfrei/io.hpp"
#include "zollfrei/magnetic.hpp"
#include "zollfrei/verify.hpp"

using namespace zollfrei;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

#ifdef ZOLLFREI_CLI_PATH
const char* kCli = ZOLLFREI_CLI_PATH;
#else
const char* kCli = "./zollfrei";
#endif

int run_cli(const std::string& args) {
    const std::string cmd = std::string(kCli) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

fs::path temp_dir() {
    const fs::path d = fs::temp_directory_path() / "zollfrei_cli_test";
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("angle expression grammar") {
    CHECK(parse_angle_expr("0.5") == 0.5);
    CHECK(parse_angle_expr("pi") == Catch::Approx(kPi).margin(1e-16));
    CHECK(parse_angle_expr("pi/8") == Catch::Approx(kPi / 8).margin(1e-16));
    CHECK(parse_angle_expr("tan:pi/8") == Catch::Approx(std::tan(kPi / 8)).margin(1e-16));
    CHECK(parse_angle_expr("atan:1/4") == Catch::Approx(std::atan(0.25)).margin(1e-16));
    CHECK(parse_angle_expr("3/4") == 0.75);
    CHECK_THROWS_AS(parse_angle_expr("frob"), std::exception);
}

TEST_CASE("fraction parsing") {
    const Rational r = parse_fraction("3/7");
    CHECK(r.p == 3);
    CHECK(r.q == 7);
    CHECK_THROWS_AS(parse_fraction("nope"), std::invalid_argument);
    CHECK_THROWS_AS(parse_fraction("1/0"), std::invalid_argument);
}

TEST_CASE("atomic write replaces the target in one step") {
    const fs::path d = temp_dir();
    const fs::path f = d / "out.txt";
    atomic_write(f.string(), "first");
    CHECK(slurp(f) == "first");
    atomic_write(f.string(), "second");
    CHECK(slurp(f) == "second");
    CHECK_FALSE(fs::exists(f.string() + ".tmp"));
}

TEST_CASE("trajectory csv schema and precision") {
    const MagneticSystem sys(ModelSurface::euclidean(), 1.0, -1.0);
    const auto traj = integrate_extremal(sys, {{{0, 0, 0}}, {0, 1, 0}}, 1.0, 1e-10);
    const std::string csv = trajectory_csv(traj);
    CHECK(csv.rfind("s,x0,x1,x2,v0,v1,v2\n", 0) == 0);

    // 17 significant digits: values survive a text round-trip exactly
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    std::getline(is, line);
    std::getline(is, line);  // an interior row
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    const double s = std::stod(cell);
    const auto y = traj.eval(s);
    std::getline(row, cell, ',');
    CHECK(std::stod(cell) == y[0]);
}

TEST_CASE("svg of a closed extremal is a closed polyline") {
    const MagneticSystem sys(ModelSurface::euclidean(), 1.0, -1.0);
    const auto traj = integrate_extremal(sys, {{{0, 0, 0}}, {0, 1, 0}}, 7.0, 1e-11);
    const auto rep = closure_detect(traj, 1e-8, 1e-3);
    REQUIRE(rep.closed);
    std::vector<std::pair<double, double>> pts;
    const int n = 500;
    for (int k = 0; k <= n; ++k) {
        const auto y = traj.eval(rep.period * k / n);
        pts.emplace_back(y[1], y[2]);
    }
    const std::string svg = svg_polyline(pts);
    CHECK(svg.find("<polyline") != std::string::npos);
    const double dx = pts.front().first - pts.back().first;
    const double dy = pts.front().second - pts.back().second;
    CHECK(std::hypot(dx, dy) < 1e-6);
}

TEST_CASE("scan report json round-trips without loss") {
    const ScanReport rep = zollfrei_scan(std::acos(1.0 / 3.0), 1, 2, 6, 3);
    const Json j = scan_json(rep);
    const Json parsed = Json::parse(j.dump());
    CHECK(parsed["phi"].get<double>() == rep.phi);
    CHECK(parsed["all_closed"].get<bool>() == rep.all_closed);
    CHECK(parsed["common_period"].get<double>() == rep.common_period);
    CHECK(parsed["orbits"].size() == rep.orbits.size());
    CHECK(parsed["orbits"][0]["closure"]["period"].get<double>() == rep.orbits[0].closure.period);
}

TEST_CASE("report envelope carries the required fields") {
    const Json j = report_envelope("demo", Json{{"a", 1}}, Json{{"b", 2}}, Json{{"tol", 1e-10}});
    for (const char* key : {"command", "config", "results", "tolerances", "versions"}) CHECK(j.contains(key));
    CHECK(j["versions"].contains("zollfrei"));
}

TEST_CASE("cli: help and usage errors") {
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("extremal --no-such-flag") == 2);
    CHECK(run_cli("scan") == 2);  // needs --phi or --phi-from-shift
}

TEST_CASE("cli: extremal subcommand writes reports and trajectories") {
    const fs::path d = temp_dir();
    const fs::path j = d / "extremal.json";
    const fs::path c = d / "traj.csv";
    const fs::path s = d / "traj.svg";
    const int rc = run_cli("extremal --surface sphere --radius 0.5 --lambda-l tan:pi/8 --flux -1 --loops 10 "
                           "--tol 1e-12 --csv " + c.string() + " --svg " + s.string() + " --json " + j.string());
    CHECK(rc == 0);
    const Json rep = Json::parse(slurp(j));
    CHECK(rep["command"] == "extremal");
    CHECK(rep["results"]["latitude_drift"].get<double>() < 1e-7);
    CHECK(rep["results"]["closure"]["closed"].get<bool>());
    CHECK(slurp(c).rfind("s,x0,x1,x2,v0,v1,v2\n", 0) == 0);
    CHECK(slurp(s).find("<svg") != std::string::npos);
}

TEST_CASE("cli: identical config and seed give byte-identical outputs") {
    const fs::path d = temp_dir();
    const fs::path a = d / "shift_a.json";
    const fs::path b = d / "shift_b.json";
    REQUIRE(run_cli("shift --phi 0.8 --json " + a.string()) == 0);
    REQUIRE(run_cli("shift --phi 0.8 --json " + b.string()) == 0);
    CHECK(slurp(a) == slurp(b));

    const fs::path sa = d / "scan_a.json";
    const fs::path sb = d / "scan_b.json";
    REQUIRE(run_cli("--seed 5 scan --phi 1.23095941734077 --points 1 --dirs 2 --budget 4 --out " + sa.string()) == 0);
    REQUIRE(run_cli("--seed 5 scan --phi 1.23095941734077 --points 1 --dirs 2 --budget 4 --out " + sb.string()) == 0);
    CHECK(slurp(sa) == slurp(sb));
}

TEST_CASE("cli: config file values are overridden by flags") {
    const fs::path d = temp_dir();
    const fs::path cfg = d / "conf.ini";
    atomic_write(cfg.string(), "tol=1e-9\n");
    const fs::path out = d / "ll.json";
    REQUIRE(run_cli("--config " + cfg.string() + " lightlike --time 5 --json " + out.string()) == 0);
    Json rep = Json::parse(slurp(out));
    CHECK(rep["tolerances"]["tol"].get<double>() == 1e-9);
    REQUIRE(run_cli("--config " + cfg.string() + " --tol 1e-11 lightlike --time 5 --json " + out.string()) == 0);
    rep = Json::parse(slurp(out));
    CHECK(rep["tolerances"]["tol"].get<double>() == 1e-11);
}

TEST_CASE("cli: shift grid produces one comparison per sample") {
    const fs::path d = temp_dir();
    const fs::path out = d / "grid.json";
    REQUIRE(run_cli("shift --phi-grid 0.5:0.7:2 --json " + out.string()) == 0);
    const Json rep = Json::parse(slurp(out));
    REQUIRE(rep["results"]["comparisons"].size() == 3);
    for (const auto& row : rep["results"]["comparisons"]) {
        CHECK(row.contains("measured_shift"));
        CHECK(row.contains("unweighted_closed_form"));
        CHECK(row.contains("weighted_closed_form"));
        CHECK(row.contains("best_rational"));
    }
}

TEST_CASE("cli: environment seed matches the explicit flag") {
    const fs::path d = temp_dir();
    const fs::path a = d / "env_a.json";
    const fs::path b = d / "env_b.json";
    const std::string scan = "scan --phi 1.23095941734077 --points 1 --dirs 2 --budget 4 --out ";
    REQUIRE(std::system(("ZOLLFREI_SEED=11 " + std::string(kCli) + " " + scan + a.string() + " >/dev/null 2>&1")
                            .c_str()) == 0);
    REQUIRE(run_cli("--seed 11 " + scan + b.string()) == 0);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("cli: unwritable output path exits with code 1") {
    CHECK(run_cli("shift --phi 0.8 --json /nonexistent-dir/out.json") == 1);
}

TEST_CASE("cli: scan driven by the shift root is all-closed") {
    const fs::path d = temp_dir();
    const fs::path out = d / "report.json";
    const int rc = run_cli("scan --phi-from-shift 0/1 --points 8 --dirs 8 --out " + out.string());
    CHECK(rc == 0);
    const Json rep = Json::parse(slurp(out));
    CHECK(rep["results"]["all_closed"].get<bool>());
    CHECK(rep["results"]["closed_count"].get<int>() == 64);
    CHECK(rep["config"]["phi"].get<double>() == Catch::Approx(std::acos(1.0 / 3.0)).margin(1e-6));
}

TEST_CASE("cli: remaining subcommands run and honor their gates") {
    const fs::path d = temp_dir();
    const fs::path fp = d / "findphi.json";
    REQUIRE(run_cli("find-phi --target 0/1 --json " + fp.string()) == 0);
    const Json rep = Json::parse(slurp(fp));
    CHECK(rep["results"]["phi_star"].get<double>() == Catch::Approx(std::acos(1.0 / 3.0)).margin(1e-6));
    CHECK(rep["results"].contains("closure_form_root"));

    CHECK(run_cli("oracle-check --starts 1 --time 2 --max-dist 1e-6") == 0);
    CHECK(run_cli("conformal-check --phi 0.9 --max-dist 1e-5") == 0);
    CHECK(run_cli("conformal-check --phi 0.9 --max-dist 1e-12") == 1);  // gate failure
}

TEST_CASE("cli: expect-closed gate fails on a generic parameter") {
    const fs::path d = temp_dir();
    const fs::path out = d / "scan_open.json";
    const int rc =
        run_cli("scan --phi 1.0448958194973396 --points 1 --dirs 2 --budget 4 --expect-closed --out " + out.string());
    CHECK(rc == 1);
    const Json rep = Json::parse(slurp(out));
    CHECK(rep["results"]["closed_count"].get<int>() == 0);
}

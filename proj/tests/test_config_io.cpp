#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "curveflow/config.hpp"
#include "curveflow/errors.hpp"
#include "curveflow/experiment.hpp"
#include "curveflow/io.hpp"

using namespace curveflow;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("curveflow_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("config parsing and precedence") {
    const auto dir = temp_dir("cfg");
    const auto file = dir / "exp.cfg";
    write(file,
          "# comment\n"
          "n=2\n"
          "f=sigma:1\n"
          "alpha=-1\n"
          "beta=1\n"
          "t_end=2.0\n");

    // flags win over file values
    auto cfg = resolve_config(file.string(), {{"beta", "0.5"}});
    CHECK(cfg.beta == 0.5);
    CHECK(cfg.alpha == -1.0);

    // the worked flag example: gamma resolves to 2
    cfg = resolve_config(
        "", {{"n", "2"}, {"f", "sigma:1"}, {"alpha", "-1"}, {"beta", "1"}});
    CHECK(cfg.flow_params().gamma == doctest::Approx(2.0).epsilon(1e-15));

    CHECK_THROWS_AS(resolve_config("", {{"f", "pmean:0"}}), RangeError);
    CHECK_THROWS_AS(resolve_config("", {{"nope", "1"}}), ParseError);
    CHECK_THROWS_AS(resolve_config("", {{"t_end", "-1"}}), RangeError);
    CHECK_THROWS_AS(resolve_config("", {{"snapshot_every", "99"}}), RangeError);
    CHECK_THROWS_AS(resolve_config("", {{"n", "1"}, {"grid_n", "8"}}), RangeError);
    CHECK_THROWS_AS(resolve_config("", {{"mode", "sideways"}}), RangeError);

    // parse errors carry the line number
    const auto bad = dir / "bad.cfg";
    write(bad, "alpha=-1\nbeta oops\n");
    try {
        parse_config_file(bad.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }

    // echo round-trips through the parser
    cfg = resolve_config("", {{"name", "echoed"},
                              {"alpha", "-0.5"},
                              {"beta", "0.5"},
                              {"init", "ellipsoid:1.2,1,0.85"},
                              {"filter", "on"}});
    const auto echo_file = dir / "echo.cfg";
    write(echo_file, cfg.echo());
    const auto cfg2 = parse_config_file(echo_file.string());
    CHECK(cfg2.name == "echoed");
    CHECK(cfg2.alpha == cfg.alpha);
    CHECK(cfg2.init == cfg.init);
    CHECK(cfg2.filter == cfg.filter);
    CHECK(cfg2.echo() == cfg.echo());
}

TEST_CASE("init descriptor grammar") {
    ExperimentConfig cfg;
    cfg.n = 2;
    cfg.init = "sphere:2";
    CHECK(cfg.initial_data().kind == InitialData::Kind::sphere);
    CHECK(cfg.initial_data().radius == 2.0);

    cfg.init = "ellipsoid:1.2,1.0,0.85";
    CHECK(cfg.initial_data().semi_axes == std::vector<double>{1.2, 1.0, 0.85});

    cfg.init = "pert:1.5:2,0,0.05;2,2,0.04";
    auto data = cfg.initial_data();
    CHECK(data.modes.size() == 2);
    CHECK(data.modes[1].degree == 2);
    CHECK(data.modes[1].order == 2);
    CHECK(data.modes[1].amplitude == 0.04);

    cfg.n = 1;
    cfg.grid_n = 64;
    cfg.init = "pert:1:2,0.05;3,0.02";
    data = cfg.initial_data();
    CHECK(data.modes.size() == 2);
    CHECK(data.modes[0].degree == 2);
    CHECK(data.modes[0].amplitude == 0.05);

    cfg.init = "ellipsoid:2,1";
    CHECK(cfg.initial_data().semi_axes.size() == 2);
    cfg.init = "ellipsoid:2,1,1";  // wrong count for n=1
    CHECK_THROWS_AS(cfg.initial_data(), RangeError);
    cfg.init = "blob:1";
    CHECK_THROWS_AS(cfg.initial_data(), ParseError);
    cfg.init = "pert:1:2,0,0.05";  // sphere mode triple on a circle
    CHECK_THROWS_AS(cfg.initial_data(), ParseError);
}

TEST_CASE("diagnostics csv layout") {
    std::vector<DiagnosticsRecord> recs(2);
    recs[0].time = 0.0;
    recs[0].u_min = 0.9;
    recs[0].u_max = 1.1;
    recs[0].osc = 0.2;
    recs[0].barrier_defined = true;
    recs[0].barrier_lo = 0.9;
    recs[0].barrier_hi = 1.1;
    recs[0].step_dt = 1e-3;
    recs[1].time = 0.5;
    recs[1].barrier_defined = false;

    const auto csv = diagnostics_csv(recs);
    std::istringstream in(csv);
    std::string header, row0, row1;
    std::getline(in, header);
    std::getline(in, row0);
    std::getline(in, row1);
    CHECK(header ==
          "t,u_min,u_max,osc,dist_to_unit,Q_min,Q_max,grad_ratio,lambda_min,"
          "lambda_max,barrier_lo,barrier_hi,dt");
    CHECK(row0.find("0,0.9,1.1,0.2,") == 0);
    CHECK(row0.find(",0.9,1.1,0.001") != std::string::npos);
    // barrier columns empty when undefined
    CHECK(row1.find(",,,") != std::string::npos);
    const auto commas = std::count(row1.begin(), row1.end(), ',');
    CHECK(commas == 12);
}

TEST_CASE("obj and polyline writers") {
    const auto grid = SphereGrid::lat_long(16, 32);
    const auto u = SupportField::constant(grid, 1.0);
    const auto obj = obj_mesh(u);

    int n_v = 0, n_f = 0;
    std::istringstream in(obj);
    std::string line;
    int max_index = 0;
    while (std::getline(in, line)) {
        if (line.rfind("v ", 0) == 0) ++n_v;
        if (line.rfind("f ", 0) == 0) {
            ++n_f;
            std::istringstream fs(line.substr(2));
            int a, b, c;
            fs >> a >> b >> c;
            CHECK(a >= 1);
            CHECK(b >= 1);
            CHECK(c >= 1);
            max_index = std::max({max_index, a, b, c});
        }
    }
    CHECK(n_v == 16 * 32);
    CHECK(n_f == 2 * 15 * 32);       // quad strip rows, seam closed
    CHECK(max_index == 16 * 32);     // seam faces wrap to column 0

    const auto c = SphereGrid::circle(64);
    const auto uc = SupportField::constant(c, 2.0);
    const auto poly = polyline_csv(uc);
    const auto rows = std::count(poly.begin(), poly.end(), '\n');
    CHECK(rows == 64 + 2);  // header + N + closing repeat

    CHECK_THROWS(obj_mesh(uc));
    CHECK_THROWS(polyline_csv(u));
}

TEST_CASE("run_experiment writes artifacts and is bit-reproducible") {
    const auto root = temp_dir("exp");
    ExperimentConfig cfg;
    cfg.name = "mini";
    cfg.n = 1;
    cfg.grid_n = 64;
    cfg.f = "sigma:1";
    cfg.alpha = -1.0;
    cfg.beta = 1.0;
    cfg.init = "pert:1:2,0.05";
    cfg.t_end = 0.5;
    cfg.snapshot_every = 0.1;

    cfg.out = (root / "a").string();
    const auto first = run_experiment(cfg);
    CHECK(first.exit_code == 0);
    CHECK(fs::exists(first.out_dir / "config.txt"));
    CHECK(fs::exists(first.out_dir / "diagnostics.csv"));
    CHECK(fs::exists(first.out_dir / "summary.json"));
    CHECK(fs::exists(first.out_dir / "snapshot_0000.csv"));
    CHECK(fs::exists(first.out_dir / "snapshot_0000_curve.csv"));
    // no half-written temp files left behind
    for (const auto& e : fs::directory_iterator(first.out_dir)) {
        CHECK(e.path().extension() != ".tmp");
    }

    cfg.out = (root / "b").string();
    const auto second = run_experiment(cfg);
    CHECK(slurp(first.out_dir / "diagnostics.csv") ==
          slurp(second.out_dir / "diagnostics.csv"));
    CHECK(slurp(first.out_dir / "summary.json") ==
          slurp(second.out_dir / "summary.json"));

    // the echoed config + artifacts suffice to re-run: parse the echo and
    // get the same diagnostics again
    auto echoed = parse_config_file((first.out_dir / "config.txt").string());
    echoed.out = (root / "c").string();
    const auto third = run_experiment(echoed);
    CHECK(slurp(first.out_dir / "diagnostics.csv") ==
          slurp(third.out_dir / "diagnostics.csv"));

    // summary.json reports the claimed monitors as pass
    const auto j = nlohmann::json::parse(slurp(first.out_dir / "summary.json"));
    CHECK(j["completed"].get<bool>());
    CHECK(j["invariants"]["extremum_bounds"]["status"] == "pass");
    CHECK(j["exit_code"].get<int>() == 0);
}

TEST_CASE("run_experiment exit codes") {
    const auto root = temp_dir("codes");

    // numerical abort -> 3, partial diagnostics on disk
    ExperimentConfig cfg;
    cfg.name = "unstable";
    cfg.n = 1;
    cfg.grid_n = 64;
    cfg.init = "pert:1:2,0.05;3,0.03";
    cfg.t_end = 20.0;
    cfg.snapshot_every = 0.5;
    cfg.fixed_dt = 0.1;  // far beyond the parabolic bound
    cfg.out = (root / "unstable").string();
    const auto aborted = run_experiment(cfg);
    CHECK(aborted.exit_code == 3);
    CHECK(fs::exists(aborted.out_dir / "diagnostics.csv"));
    const auto j = nlohmann::json::parse(slurp(aborted.out_dir / "summary.json"));
    CHECK_FALSE(j["completed"].get<bool>());
    CHECK(j["abort_time"].get<double>() > 0.0);

    // out-of-range parameters run fine and exit 0 with not_claimed verdicts
    ExperimentConfig oor;
    oor.name = "oor";
    oor.n = 1;
    oor.grid_n = 64;
    oor.alpha = 0.5;
    oor.init = "pert:1:2,0.03";
    oor.t_end = 0.2;
    oor.snapshot_every = 0.05;
    oor.out = (root / "oor").string();
    const auto flagged = run_experiment(oor);
    CHECK(flagged.exit_code == 0);
    const auto j2 = nlohmann::json::parse(slurp(flagged.out_dir / "summary.json"));
    CHECK(j2["claims_checked"].get<bool>() == false);
    CHECK(j2["invariants"]["grad_monotone"]["status"] == "not_claimed");

    // a claimed failure -> exit 2: two gradient modes with very different
    // decay rates put a knee inside the fit window, so the exponential-decay
    // monitor legitimately reports r^2 < 0.95
    ExperimentConfig strict;
    strict.name = "knee";
    strict.n = 1;
    strict.grid_n = 64;
    strict.init = "pert:1:8,0.012;2,0.00001";
    strict.t_end = 0.4;
    strict.snapshot_every = 0.0125;
    strict.out = (root / "knee").string();
    const auto failed = run_experiment(strict);
    CHECK(failed.exit_code == 2);
    const auto j3 = nlohmann::json::parse(slurp(failed.out_dir / "summary.json"));
    CHECK(j3["invariants"]["grad_decay"]["status"] == "fail");
    CHECK(j3["invariants"]["grad_monotone"]["status"] == "pass");
}

TEST_CASE("verify_suite") {
    const auto root = temp_dir("verify");
    const auto matrix = root / "matrix.txt";
    write(matrix,
          "# two tiny circle runs\n"
          "name=a n=1 grid_n=64 init=pert:1:2,0.05 t_end=0.3 snapshot_every=0.05\n"
          "name=b n=1 grid_n=64 init=pert:1:2,0.03 alpha=0 t_end=0.3 "
          "snapshot_every=0.05\n");

    std::ostringstream log;
    const int code = verify_suite(matrix.string(), (root / "out").string(), 1, log);
    CHECK(code == 0);
    CHECK(fs::exists(root / "out" / "report.json"));
    CHECK(fs::exists(root / "out" / "a" / "summary.json"));
    CHECK(fs::exists(root / "out" / "b" / "summary.json"));
    CHECK(log.str().find("a") != std::string::npos);

    // an empty matrix is an error
    const auto empty = root / "empty.txt";
    write(empty, "# nothing\n");
    CHECK_THROWS_AS(verify_suite(empty.string(), (root / "out2").string(), 1, log),
                    InsufficientData);

    // one failing run is isolated; the suite keeps going and exits nonzero
    const auto mixed = root / "mixed.txt";
    write(mixed,
          "name=good n=1 grid_n=64 init=pert:1:2,0.05 t_end=0.3 snapshot_every=0.05\n"
          "name=dies n=1 grid_n=64 init=pert:1:2,0.05 t_end=20 snapshot_every=0.5 "
          "fixed_dt=0.1\n");
    std::ostringstream log2;
    const int code2 =
        verify_suite(mixed.string(), (root / "out3").string(), 1, log2);
    CHECK(code2 == 3);
    CHECK(fs::exists(root / "out3" / "good" / "summary.json"));
    CHECK(log2.str().find("abort") != std::string::npos);

    // inspect prints the stored summary
    std::ostringstream inspect;
    CHECK(inspect_run((root / "out" / "a").string(), 3, inspect) == 0);
    CHECK(inspect.str().find("invariants") != std::string::npos);
}

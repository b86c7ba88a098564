#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "chemrep/expression.hpp"
#include "chemrep/runner.hpp"
#include "test_utils.hpp"

using namespace chemrep;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("expression: evaluation and gradients of the preset forms") {
    const auto u0 = Expression::parse("-10*x*y*(2-x)*(2-y)*exp(-10*(y-1)^2-10*(x-1)^2)+10.0001");
    const auto ref = [](double x, double y) {
        return -10.0 * x * y * (2 - x) * (2 - y) *
                   std::exp(-10.0 * (y - 1) * (y - 1) - 10.0 * (x - 1) * (x - 1)) +
               10.0001;
    };
    std::mt19937 rng(71u);
    std::uniform_real_distribution<double> pt(0.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const double x = pt(rng), y = pt(rng);
        CHECK(u0.eval(x, y) == doctest::Approx(ref(x, y)).epsilon(1e-13));

        // Gradient against central differences.
        const double h = 1e-6;
        const Vec2 g = u0.grad(x, y);
        CHECK(g.x ==
              doctest::Approx((u0.eval(x + h, y) - u0.eval(x - h, y)) / (2 * h)).epsilon(1e-6));
        CHECK(g.y ==
              doctest::Approx((u0.eval(x, y + h) - u0.eval(x, y - h)) / (2 * h)).epsilon(1e-6));
    }

    const auto osc = Expression::parse("5*cos(2*pi*x)*cos(2*pi*y)+5.0001");
    CHECK(osc.eval(1.0, 1.0) == doctest::Approx(10.0001).epsilon(1e-14));
    CHECK(osc.eval(0.25, 0.5) == doctest::Approx(5.0001).epsilon(1e-10));

    CHECK(Expression::parse("2^3^2").eval(0, 0) == doctest::Approx(512.0)); // right-assoc
    CHECK(Expression::parse("-x^2").eval(3, 0) == doctest::Approx(-9.0));
    CHECK(Expression::parse("(-x)^2").eval(3, 0) == doctest::Approx(9.0));
}

TEST_CASE("expression: parse errors carry positions") {
    CHECK_THROWS_AS(Expression::parse("1 +"), ExpressionError);
    CHECK_THROWS_AS(Expression::parse("sin(x)"), ExpressionError);
    CHECK_THROWS_AS(Expression::parse("2*(x"), ExpressionError);
    CHECK_THROWS_AS(Expression::parse("x 2"), ExpressionError);
    try {
        Expression::parse("x + $");
    } catch (const ExpressionError& e) {
        CHECK(e.pos == 4);
        CHECK(std::string(e.what()).find("position") != std::string::npos);
    }
}

TEST_CASE("presets: table and derived configs") {
    CHECK(presets().size() == 5);
    CHECK(find_preset("positivity-5.1") != nullptr);
    CHECK(find_preset("oscillation-5.2") != nullptr);
    CHECK(find_preset("energy-5.3") != nullptr);
    CHECK(find_preset("asymptotic-5.4-test1") != nullptr);
    CHECK(find_preset("asymptotic-5.4-test2") != nullptr);
    CHECK(find_preset("nope") == nullptr);

    const ExperimentConfig c51 = config_from_preset("positivity-5.1", SchemeKind::US_EPS);
    CHECK(c51.k == 1e-5);
    CHECK(c51.mesh.nx == 40); // h = 1/20 on [0,2]
    CHECK(c51.eps == 1e-6);

    const ExperimentConfig c52 = config_from_preset("oscillation-5.2", SchemeKind::US_EPS);
    CHECK(c52.k == 1e-5);
    CHECK(c52.mesh.nx == 50);
    CHECK(c52.eps == 1e-6);
    CHECK(c52.u0_expr.find("5*cos") != std::string::npos);

    const ExperimentConfig c53 = config_from_preset("energy-5.3", SchemeKind::UV);
    CHECK(c53.k == 1e-4);
    CHECK(c53.mesh.nx == 60);

    // Preset initial data takes its stated minimum at the center.
    const Expression u0 = Expression::parse(c51.u0_expr);
    const Expression v0 = Expression::parse(c51.v0_expr);
    CHECK(u0.eval(1.0, 1.0) == doctest::Approx(0.0001).epsilon(1e-10));
    CHECK(v0.eval(1.0, 1.0) == doctest::Approx(100.0001).epsilon(1e-12));
}

TEST_CASE("config file loading: defaults, overrides, rejection") {
    TempDir tmp("chemrep_cfg_test");
    const fs::path cfg_path = tmp.path / "run.json";

    {
        std::ofstream out(cfg_path);
        out << R"({"preset": "positivity-5.1", "scheme": "US_EPS", "n_steps": 7,
                   "mesh": {"nx": 16, "ny": 16}, "eps": 1e-4})";
    }
    const ExperimentConfig cfg = load_config(cfg_path.string());
    CHECK(cfg.scheme == SchemeKind::US_EPS);
    CHECK(cfg.mesh.nx == 16);
    CHECK(cfg.n_steps == 7);
    CHECK(cfg.eps == 1e-4);
    CHECK(cfg.k == 1e-5); // preset default kept

    {
        std::ofstream out(cfg_path);
        out << R"({"preset": "positivity-5.1", "stranger": 1})";
    }
    CHECK_THROWS_WITH_AS(load_config(cfg_path.string()),
                         "load_config: unknown key 'stranger'", std::invalid_argument);

    {
        std::ofstream out(cfg_path);
        out << R"({"preset": "positivity-5.1", "mesh": {"nz": 4}})";
    }
    CHECK_THROWS_AS(load_config(cfg_path.string()), std::invalid_argument);

    {
        std::ofstream out(cfg_path);
        out << R"({"preset": "positivity-5.1", "scheme": "US_EPS", "eps": 1.0})";
    }
    try {
        load_config(cfg_path.string());
        CHECK(false);
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("eps") != std::string::npos);
    }

    {
        std::ofstream out(cfg_path);
        out << R"({"preset": "positivity-5.1", )"; // truncated JSON
    }
    CHECK_THROWS_AS(load_config(cfg_path.string()), std::runtime_error);

    const std::string echo = config_echo(cfg);
    CHECK(echo.find("\"scheme\": \"US_EPS\"") != std::string::npos);
    CHECK(echo.find("\"nx\": 16") != std::string::npos);
}

TEST_CASE("runs write reports and snapshots; reruns are byte-identical") {
    TempDir tmp("chemrep_run_test");

    ExperimentConfig cfg = config_from_preset("positivity-5.1", SchemeKind::UV);
    cfg.mesh.nx = cfg.mesh.ny = 8;
    cfg.n_steps = 3;
    cfg.snapshot_every = 2;
    cfg.compute_rates = false;
    cfg.out_dir = (tmp.path / "a").string();

    const RunReport rep = run(cfg);
    CHECK(!rep.failed);
    CHECK(static_cast<int>(rep.records.size()) == 4); // step 0 + 3 steps
    CHECK(fs::exists(tmp.path / "a" / "report.csv"));
    CHECK(fs::exists(tmp.path / "a" / "config_echo.json"));
    CHECK(fs::exists(tmp.path / "a" / "fields_000000.vtk"));
    CHECK(fs::exists(tmp.path / "a" / "fields_000002.vtk"));
    CHECK(!fs::exists(tmp.path / "a" / "fields_000003.vtk"));

    cfg.out_dir = (tmp.path / "b").string();
    run(cfg);
    CHECK(slurp(tmp.path / "a" / "report.csv") == slurp(tmp.path / "b" / "report.csv"));
    CHECK(slurp(tmp.path / "a" / "fields_000002.vtk") == slurp(tmp.path / "b" / "fields_000002.vtk"));
}

TEST_CASE("constant initial data yields constant diagnostic series") {
    for (const SchemeKind scheme : {SchemeKind::UV, SchemeKind::US, SchemeKind::US_EPS}) {
        ExperimentConfig cfg;
        cfg.scheme = scheme;
        cfg.mesh.nx = cfg.mesh.ny = 8;
        cfg.k = 1e-4;
        cfg.n_steps = 5;
        cfg.eps = 1e-3;
        cfg.u0_expr = "3";
        cfg.v0_expr = "9";
        cfg.compute_rates = false;

        const RunReport rep = run(cfg);
        REQUIRE(!rep.failed);
        const double mass0 = rep.records.front().mass_u;
        for (const auto& r : rep.records) {
            CHECK(std::abs(r.mass_u - mass0) <= 1e-12 * std::abs(mass0));
            CHECK(std::abs(r.energy - rep.records.front().energy) <=
                  1e-12 * std::abs(rep.records.front().energy));
            CHECK(r.uhat_sq <= 1e-20);
        }
    }
}

TEST_CASE("sweep_eps: validation and mechanics") {
    ExperimentConfig cfg = config_from_preset("positivity-5.1", SchemeKind::US_EPS);
    cfg.mesh.nx = cfg.mesh.ny = 8;
    cfg.n_steps = 3;
    cfg.compute_rates = false;

    CHECK_THROWS_AS(sweep_eps(cfg, {1.0}), std::invalid_argument); // eps = 1 excluded
    CHECK_THROWS_AS(sweep_eps(cfg, {}), std::invalid_argument);

    ExperimentConfig uv = cfg;
    uv.scheme = SchemeKind::UV;
    CHECK_THROWS_AS(sweep_eps(uv, {1e-3}), std::invalid_argument);

    const auto rows = sweep_eps(cfg, {1e-2, 1e-3});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].eps == 1e-2);
    CHECK(rows[1].eps == 1e-3);
    CHECK(rows[0].min_u <= 10.1);
}

TEST_CASE("scheme name round trip") {
    for (const SchemeKind s : {SchemeKind::UV, SchemeKind::US, SchemeKind::US_EPS})
        CHECK(scheme_from_name(scheme_name(s)) == s);
    CHECK_THROWS_AS(scheme_from_name("bogus"), std::invalid_argument);
}

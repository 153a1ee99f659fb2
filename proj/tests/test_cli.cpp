#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "oscar/cli.hpp"
#include "oscar/errors.hpp"

using namespace oscar;
using namespace oscar::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("oscar_cli_test_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

RunConfig config(KeyValues kv) { return resolve(kv); }

}  // namespace

TEST_CASE("complex parsing") {
    CHECK(parse_complex("3", "x") == cdouble(3.0, 0.0));
    CHECK(parse_complex("-2.5", "x") == cdouble(-2.5, 0.0));
    CHECK(parse_complex("4i", "x") == cdouble(0.0, 4.0));
    CHECK(parse_complex("i", "x") == cdouble(0.0, 1.0));
    CHECK(parse_complex("-i", "x") == cdouble(0.0, -1.0));
    CHECK(parse_complex("1+2i", "x") == cdouble(1.0, 2.0));
    CHECK(parse_complex("1 - 2i", "x") == cdouble(1.0, -2.0));
    CHECK(parse_complex("1e-3-4.5e2i", "x") == cdouble(1e-3, -450.0));
    CHECK(parse_complex("-1e+2+1e-1i", "x") == cdouble(-100.0, 0.1));
    CHECK(parse_complex("+0.5+i", "x") == cdouble(0.5, 1.0));
    for (const char* bad : {"", "x", "1+", "1+2j", "2ii", "1+2i3", "nan", "inf"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(parse_complex(bad, "beta"), ValidationError);
    }
    try {
        parse_complex("1+x", "beta");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("'beta'") != std::string::npos);
    }
}

TEST_CASE("config text") {
    const auto kv = parse_config_text("# comment\nmode = phase\n  gamma=1e-3   # trailing\n\nbeta = 1+1i\n");
    CHECK(kv.at("mode") == "phase");
    CHECK(kv.at("gamma") == "1e-3");
    CHECK(kv.at("beta") == "1+1i");
    try {
        parse_config_text("mode = phase\nnonsense\n", "run.cfg");
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("run.cfg:2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("colour = red\n"), ValidationError);
}

TEST_CASE("resolution rules") {
    SUBCASE("time scale is mandatory") {
        CHECK_THROWS_AS(config({{"mode", "phase"}, {"times", "1"}}), ValidationError);
        CHECK_THROWS_AS(config({{"mode", "phase"}}), ValidationError);
        CHECK_THROWS_AS(config({{"mode", "fig2"}, {"times", "8"}}), ValidationError);
        const auto c = config({{"mode", "phase"}, {"times", "1,2"}, {"time_scale", "t"}});
        REQUIRE(c.time_points().size() == 2);
        CHECK(c.time_points()[1].scale == TimeScale::t);
        CHECK(c.time_points()[1].value == 2.0);
    }
    SUBCASE("exactly one parameter block") {
        CHECK_THROWS_AS(config({{"mode", "params"}, {"omega_c", "1e4"}, {"gamma", "1e-3"}}), ValidationError);
        CHECK_THROWS_AS(config({{"mode", "params"}, {"omega_c", "1e4"}}), ValidationError);  // incomplete
        const auto c = config({{"mode", "params"},
                               {"omega_c", "34557.5"},
                               {"omega_r", "1.2e15"},
                               {"k_c", "1.1e-4"},
                               {"B1", "1.57e-4"},
                               {"dBz_dz", "8.6e4"},
                               {"L", "1e-3"},
                               {"T", "0.3"},
                               {"Q", "1e4"}});
        REQUIRE(c.physical);
        CHECK(c.params.epsilon == doctest::Approx(800.0).epsilon(0.01));
        CHECK(to_json(c)["parameter_block"] == "physical");
    }
    SUBCASE("figure presets and overrides") {
        const auto c = config({{"mode", "fig2"}});
        CHECK(c.times == std::vector<double>{0.0, 8e4});
        CHECK(c.time_scale == TimeScale::tau);
        CHECK(c.N_values == std::vector<double>{100.0, 1e4});
        CHECK(c.chi_values == std::vector<double>{0.0, 0.5});
        CHECK(c.spin == SpinPrep::superposition);
        CHECK(c.alpha == cdouble(0.0, 4.0));
        const auto n = config({{"mode", "fig2"}, {"N", "100"}});
        CHECK(n.N_values == std::vector<double>{100.0});
        CHECK(config({{"mode", "fig1"}}).spin == SpinPrep::g);
        CHECK(config({{"mode", "fig3"}}).kappa_over_gamma_values == std::vector<double>{0.04, 0.08, 0.12});
    }
    SUBCASE("bad values name their key") {
        for (auto [k, v] : std::vector<std::pair<std::string, std::string>>{
                 {"grid", "10"}, {"grid", "x"}, {"gamma", "-1"}, {"spin", "up"}, {"method", "euler"},
                 {"n_max", "-3"}, {"sweep_param", "beta"}, {"d_c", "1"}, {"pairs", "1-2"}}) {
            CAPTURE(k);
            try {
                config({{"mode", "phase"}, {"times", "1"}, {"time_scale", "tau"}, {k, v}});
                FAIL("expected an error");
            } catch (const ValidationError& e) {
                CHECK(std::string(e.what()).find("'" + k + "'") != std::string::npos);
            }
        }
        CHECK_THROWS_AS(config({{"mode", "dance"}}), ValidationError);
    }
    SUBCASE("sweep values") {
        SweepSpec s{"chi", 0.1, 0.4, 4, false};
        CHECK(s.values() == std::vector<double>{0.1, 0.2, 0.30000000000000004, 0.4});
        s = {"N", 1.0, 100.0, 3, true};
        CHECK(s.values()[1] == doctest::Approx(10.0));
    }
}

TEST_CASE("resolved config echoes defaults") {
    const auto j = to_json(config({{"mode", "phase"}, {"times", "1"}, {"time_scale", "tau"}}));
    CHECK(j["mode"] == "phase");
    CHECK(j["grid"] == 512);
    CHECK(j["n_max"] == "auto");
    CHECK(j["method"] == "automatic");
    CHECK(j["time_scale"] == "tau");
    CHECK(j["params"]["gamma"] == 1e-4);
    CHECK(j["state"]["spin"] == "superposition");
}

TEST_CASE("phase mode: deterministic output, sidecar, empty peak table for beta = 0") {
    TempDir a, b;
    std::ostringstream log;
    KeyValues kv{{"mode", "phase"}, {"times", "0.5,2"}, {"time_scale", "tau"}, {"gamma", "0.01"}, {"grid", "128"}};
    kv["out"] = a.path.string();
    run(resolve(kv), log);
    kv["out"] = b.path.string();
    run(resolve(kv), log);
    const auto csv = slurp(a.path / "phase_tau2.csv");
    CHECK(csv == slurp(b.path / "phase_tau2.csv"));
    CHECK(csv.rfind("theta,P\n", 0) == 0);
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 129);
    const auto side = json::parse(slurp(a.path / "phase_tau2.json"));
    CHECK(side["config"]["grid"] == 128);
    CHECK(side["meta"]["n_max"] == 43);
    CHECK(side.contains("peaks"));

    kv["beta"] = "0";
    kv["out"] = a.path.string();
    run(resolve(kv), log);
    const auto flat = json::parse(slurp(a.path / "phase_tau2.json"));
    CHECK(flat["peaks"].empty());
    CHECK(flat["n_peaks"] == 0);
}

TEST_CASE("fig2 at N = 100 lists two peaks") {
    TempDir dir;
    std::ostringstream log;
    run(resolve({{"mode", "fig2"}, {"N", "100"}, {"chi", "0.5"}, {"out", dir.path.string()}}), log);
    const auto side = json::parse(slurp(dir.path / "fig2_N100_chi0.5_tau80000.json"));
    CHECK(side["n_peaks"] == 2);
    CHECK(side["peaks"].size() == 2);
    CHECK(side["distinguishability"].get<double>() > 1.0);
    CHECK(fs::exists(dir.path / "fig2_N100_chi0.5_tau80000.csv"));
    CHECK(fs::exists(dir.path / "fig2_summary.json"));
}

TEST_CASE("other modes write their artifacts") {
    TempDir dir;
    std::ostringstream log;
    const std::string out = dir.path.string();
    run(resolve({{"mode", "params"}, {"times", "8"}, {"time_scale", "tau"}, {"out", out}}), log);
    const auto params = json::parse(slurp(dir.path / "params.json"));
    CHECK(params["conditions"][0]["distinguishability_ratio"].get<double>() == doctest::Approx(4e4));

    run(resolve({{"mode", "evolve"}, {"times", "0,0.25"}, {"time_scale", "tau"}, {"gamma", "0.01"}, {"out", out}}),
        log);
    CHECK(slurp(dir.path / "coefficients.csv").rfind("tau,branch,n,m,", 0) == 0);
    CHECK(fs::exists(dir.path / "coefficients.json"));
    CHECK_THROWS_AS(run(resolve({{"mode", "evolve"},
                                 {"times", "1"},
                                 {"time_scale", "tau"},
                                 {"method", "closed_form"},
                                 {"out", out}}),
                        log),
                    ValidationError);

    run(resolve({{"mode", "sweep"},
                 {"sweep_param", "chi"},
                 {"sweep_from", "0"},
                 {"sweep_to", "0.5"},
                 {"sweep_count", "3"},
                 {"grid", "128"},
                 {"out", out}}),
        log);
    const auto sweep = slurp(dir.path / "sweep.csv");
    CHECK(sweep.rfind("value,time,n_peaks,distinguishability,peak1_theta,peak2_theta,integral\n", 0) == 0);
    CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 4);

    run(resolve({{"mode", "oracle-compare"},
                 {"d_c", "24"},
                 {"d_r", "8"},
                 {"N", "0.1"},
                 {"beta", "0.5"},
                 {"alpha", "0.5i"},
                 {"times", "1,2"},
                 {"time_scale", "t"},
                 {"out", out}}),
        log);
    const auto report = json::parse(slurp(dir.path / "oracle_compare.json"));
    CHECK(report["pass"] == true);
    CHECK(fs::exists(dir.path / "oracle_compare_trajectory.csv"));
    CHECK(fs::exists(dir.path / "oracle_compare_trajectory.json"));
}

TEST_CASE("exit codes and thread cap") {
    CHECK(exit_code_for(ValidationError("cli", "x")) == 2);
    CHECK(exit_code_for(IntegrationError("gaussian_dynamics", "x")) == 3);
    CHECK(exit_code_for(LeakageError("oracle", "x")) == 3);
    CHECK(exit_code_for(std::runtime_error("x")) == 3);

    ::setenv("OSCAR_SIM_THREADS", "3", 1);
    CHECK(thread_cap() == 3);
    ::setenv("OSCAR_SIM_THREADS", "0", 1);
    CHECK_THROWS_AS(thread_cap(), ValidationError);
    ::setenv("OSCAR_SIM_THREADS", "many", 1);
    CHECK_THROWS_AS(thread_cap(), ValidationError);
    ::unsetenv("OSCAR_SIM_THREADS");
    CHECK(thread_cap() >= 1);
}

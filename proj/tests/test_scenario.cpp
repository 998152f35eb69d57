#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mrb/errors.hpp"
#include "mrb/scenario.hpp"
#include "mrb/verify.hpp"

using namespace mrb;
namespace fs = std::filesystem;

namespace {

const fs::path kSource{MRB_SOURCE_DIR};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::string scenario_text(const std::string& name) { return slurp(kSource / "scenarios" / (name + ".ini")); }

// Replaces the value of one key in INI text.
std::string with_value(std::string text, const std::string& key, const std::string& value) {
    const std::regex line("(^|\\n)" + key + " = [^\\n]*");
    return std::regex_replace(text, line, "$1" + key + " = " + value, std::regex_constants::format_first_only);
}

// The bundled scenario cut down to a few milliseconds.
std::string short_run(const std::string& name) {
    std::string t = with_value(scenario_text(name), "duration_s", "0.01");
    return with_value(t, "windows_s", "0.005:0.01");
}

ScenarioConfig parse(const std::string& text) {
    std::istringstream is(text);
    return parse_scenario(is);
}

std::string error_field(const std::string& text) {
    try {
        validate(parse(text));
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(MRBSIM_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("mrb_test_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("bundled scenarios parse and validate") {
    for (const char* name : {"scenario1", "scenario2"}) {
        const auto cfg = load_scenario(kSource / "scenarios" / (std::string(name) + ".ini"));
        CHECK_NOTHROW(validate(cfg));
        CHECK(cfg.topology.module_count() == 9);
        CHECK(cfg.metric_windows.size() == 4);
    }
    const auto s1 = load_scenario(kSource / "scenarios" / "scenario1.ini");
    CHECK(s1.control.mode == ControlMode::Symmetric);
    CHECK(std::get<NonIsolatedParams>(s1.topology.ports[0].params).c_dc1 == doctest::Approx(50e-6));
    CHECK(std::get<IsolatedParams>(s1.topology.ports[1].params).c_dc3 == doctest::Approx(9.6e-3));
    CHECK(s1.schedule.v_dc1_ref.at(0.5) == 600.0);
    const auto s2 = load_scenario(kSource / "scenarios" / "scenario2.ini");
    CHECK(s2.control.mode == ControlMode::Asymmetric);
    CHECK(s2.control.coupling == CouplingMode::DcConsistent);
    CHECK(s2.topology.ports[1].span.count == 2);
}

TEST_CASE("validation names the offending field") {
    const std::string base = scenario_text("scenario1");
    CHECK(error_field(base) == "");
    CHECK(error_field(with_value(base, "dt_s", "3e-7")) == "simulation.dt_s");
    CHECK(error_field(with_value(base, "windows_s", "1.5:1.7")) == "metrics.windows_s");
    CHECK(error_field(with_value(base, "v_dc1_V", "0:900")) == "references.v_dc1_V");
    CHECK(error_field(with_value(base, "v_dc1_V", "0:400, 0.5:500, 0.2:450")) == "references.v_dc1_V");
    CHECK(error_field(with_value(base, "mode", "asymmetric")) == "control.mode");
    CHECK(error_field(with_value(base, "f_sw_Hz", "fast")) == "modulation.f_sw_Hz");
    CHECK(error_field(with_value(base, "module_count", "0")) == "topology");
    CHECK(error_field(base + "\n[simulation]\nbogus_s = 1\n") != "");
    CHECK(error_field(with_value(base, "candidate_form", "other")) == "control.candidate_form");
}

TEST_CASE("unknown keys and missing required keys are rejected") {
    const std::string base = scenario_text("scenario2");
    CHECK_THROWS_AS(parse(std::regex_replace(base, std::regex("C_dc1_uF"), "C_dc1_F")), ConfigError);
    try {
        (void)parse(std::regex_replace(base, std::regex("\\nv_module_V = 96"), ""));
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "string.v_module_V");
    }
}

TEST_CASE("units in key names are converted to SI") {
    const auto cfg = parse(scenario_text("scenario2"));
    const auto& iso = std::get<IsolatedParams>(cfg.topology.ports[1].params);
    CHECK(iso.l_m == doctest::Approx(5e-3));
    CHECK(iso.c_dc2 == doctest::Approx(225e-6));
    CHECK(iso.diode_resistance == doctest::Approx(1e-3));
    CHECK(cfg.topology.modules[0].r_int == doctest::Approx(1e-3));
    const auto inf = parse(with_value(scenario_text("scenario2"), "L_m_mH", "inf"));
    CHECK(std::isinf(std::get<IsolatedParams>(inf.topology.ports[1].params).l_m));
}

TEST_CASE("manifest round trip reproduces a bit-identical time series") {
    TempDir dir;
    for (const char* name : {"scenario1", "scenario2"}) {
        const auto cfg = parse(short_run(name));
        const fs::path first = dir.path / (std::string(name) + "_a");
        const fs::path second = dir.path / (std::string(name) + "_b");
        (void)simulate_to(cfg, first);
        const auto again = load_scenario(first / cfg.outputs.manifest);
        (void)simulate_to(again, second);
        const std::string a = slurp(first / cfg.outputs.timeseries);
        CHECK(a.size() > 1000);
        CHECK(a == slurp(second / again.outputs.timeseries));
        CHECK(slurp(first / cfg.outputs.manifest) == slurp(second / again.outputs.manifest));
    }
}

TEST_CASE("metrics JSON carries a schema version and every window") {
    TempDir dir;
    const auto cfg = parse(short_run("scenario1"));
    (void)simulate_to(cfg, dir.path);
    const auto j = nlohmann::json::parse(slurp(dir.path / cfg.outputs.metrics));
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("windows").size() == 1);
    CHECK(j.at("summary").contains("v_dc2_steady_state_error_pct"));
    const std::string csv = slurp(dir.path / cfg.outputs.timeseries);
    CHECK(csv.rfind("# schema_version=1\n", 0) == 0);
}

TEST_CASE("open-loop scenario") {
    std::string t = with_value(short_run("scenario1"), "mode", "open_loop");
    t = std::regex_replace(t, std::regex("\\[control\\]\\n"), "[control]\nopen_loop_m = 0.5\n");
    const auto cfg = parse(t);
    const auto r = run_scenario(cfg);
    REQUIRE_FALSE(r.series.samples.empty());
    CHECK(r.series.samples.back().m_1 == 0.5);
    CHECK(error_field(with_value(t, "open_loop_m", "0.5, 0.4")) == "control.open_loop_m");
}

TEST_CASE("verify runner") {
    VerifyOptions opt;
    opt.n_c_max = 6;
    opt.les_points = 0;
    SUBCASE("default grid passes and lists divergences") {
        const auto r = run_verify(opt);
        CHECK(r.passed());
        CHECK(r.failures.empty());
        CHECK_FALSE(r.divergences.empty());
        REQUIRE(r.coupling.size() == 2);
        CHECK_FALSE(r.coupling[0].holds);
        CHECK(r.coupling[1].holds);
    }
    SUBCASE("symmetric-only grid lists no divergences") {
        opt.symmetric_only = true;
        const auto r = run_verify(opt);
        CHECK(r.passed());
        CHECK(r.divergences.empty());
    }
    SUBCASE("branch boundaries without exclusion produce witnesses") {
        opt.exclude_boundaries = false;
        const auto r = run_verify(opt);
        CHECK_FALSE(r.passed());
        REQUIRE_FALSE(r.failures.empty());
        std::ostringstream os;
        write_verify_report(os, r, 3);
        CHECK(os.str().find("witnesses") != std::string::npos);
        CHECK(os.str().find("FAIL") != std::string::npos);
    }
}

TEST_CASE("command line") {
    TempDir dir;
    const fs::path log = dir.path / "log.txt";

    SUBCASE("characterize") {
        CHECK(run_cli("characterize --m 0.35 --n-c 9 --L 9", log) == 0);
        const std::string out = slurp(log);
        CHECK(out.find("layout=symmetric") != std::string::npos);
        CHECK(std::regex_search(out, std::regex("\\nD +0\\.15 +0\\.15 ")));
        CHECK(run_cli("characterize --m 0.5 --n-c 9 --L 2", log) == 0);
        CHECK(std::regex_search(slurp(log), std::regex("\\nV_p\\+ +96 +96 +0\\n")));
        CHECK(run_cli("characterize --m 0 --n-c 9 --L 2", log) == 0);
        CHECK(std::regex_search(slurp(log), std::regex("\\nV_dc +0 +0 +0\\n")));
        CHECK(run_cli("characterize --m 1.5 --n-c 9 --L 2", log) != 0);
    }
    SUBCASE("gain-profile flags divisor ports as symmetric") {
        const fs::path csv = dir.path / "g.csv";
        CHECK(run_cli("gain-profile --n-c 9 --L 3 --step 0.01 -o " + csv.string(), log) == 0);
        CHECK(slurp(csv).find("layout=Symmetric") != std::string::npos);
        CHECK(run_cli("gain-profile --n-c 9 --L 2 --step 0.01 -o " + csv.string(), log) == 0);
        CHECK(slurp(csv).find("layout=Asymmetric") != std::string::npos);
    }
    SUBCASE("verify exit status") {
        CHECK(run_cli("verify --n-c-max 5 --les-points 0", log) == 0);
        CHECK(run_cli("verify --n-c-max 5 --les-points 0 --include-boundaries", log) != 0);
        CHECK(slurp(log).find("witnesses") != std::string::npos);
    }
    SUBCASE("simulate rejects an invalid config with the field name") {
        const fs::path bad = dir.path / "bad.ini";
        std::ofstream(bad) << with_value(scenario_text("scenario1"), "dt_s", "1e-6");
        CHECK(run_cli("simulate -c " + bad.string() + " -o " + dir.path.string(), log) != 0);
        CHECK(slurp(log).find("simulation.dt_s") != std::string::npos);
    }
    SUBCASE("simulate writes all three artifacts") {
        const fs::path ini = dir.path / "short.ini";
        std::ofstream(ini) << short_run("scenario2");
        CHECK(run_cli("simulate -c " + ini.string() + " -o " + dir.path.string() + " --mode literal", log) == 0);
        CHECK(fs::exists(dir.path / "scenario2_timeseries.csv"));
        CHECK(fs::exists(dir.path / "scenario2_metrics.json"));
        CHECK(slurp(dir.path / "scenario2_manifest.ini").find("coupling = literal") != std::string::npos);
    }
}

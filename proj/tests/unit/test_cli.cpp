#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "jqfsim/cli.hpp"
#include "jqfsim/config.hpp"
#include "jqfsim/errors.hpp"
#include "jqfsim/output.hpp"
#include "jqfsim/units.hpp"

using namespace jqfsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("jqfsim_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const std::string& text) {
    try {
        check_schema(parse_config_text(text, "cfg.json"), "cfg.json");
        resolve_config(merge_config(default_config(), parse_config_text(text, "cfg.json")));
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "jqfsim");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    auto* old_out = std::cout.rdbuf(out.rdbuf());
    auto* old_err = std::cerr.rdbuf(err.rdbuf());
    const int code = run_cli(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("empty configuration yields the measured device") {
    const fs::path dir = scratch_dir("empty");
    const RunConfig c = parse_config(write_file(dir / "empty.json", "").string());
    CHECK(c.device.qubit.omega == doctest::Approx(angular(8.002e9)));
    CHECK(c.device.qubit.gamma_ex == doctest::Approx(angular(123e3)));
    CHECK(c.device.qubit.n_th == doctest::Approx(0.29));
    REQUIRE(c.device.jqf);
    CHECK(c.device.jqf->gamma_ex == doctest::Approx(angular(113e6)));
    CHECK(c.device.qubit.levels == 3);
    CHECK(c.device.jqf->levels == 4);
    CHECK(c.device.geometry.d_frac == doctest::Approx(0.526));
    REQUIRE(c.device.resonator);
    CHECK(c.device.resonator->chi == doctest::Approx(angular(0.935e6)));
    CHECK(parse_config_text("  \n", "x").empty());
}

TEST_CASE("invalid values name the offending field") {
    const std::string msg = config_error(R"({"device": {"jqf": {"gamma_ex_hz": -1}}})");
    CHECK(msg.find("jqf") != std::string::npos);
    CHECK(msg.find("gamma_ex") != std::string::npos);
    CHECK(config_error(R"({"device": {"qubit": {"levels": "three"}}})").find("levels") != std::string::npos);
    CHECK(config_error(R"({"schema_version": 2})").find("schema_version") != std::string::npos);
}

TEST_CASE("unknown keys are rejected with a suggestion") {
    const std::string msg = config_error(R"({"device": {"qubit": {"gama_ex": 1}}})");
    CHECK(msg.find("gama_ex") != std::string::npos);
    CHECK(msg.find("did you mean device.qubit.gamma_ex_hz") != std::string::npos);
    CHECK(config_error(R"({"zzzzzzzz": 1})").find("did you mean") == std::string::npos);
    CHECK(levenshtein("kitten", "sitting") == 3);
}

TEST_CASE("parse errors carry line and column") {
    const std::string msg = config_error("{\n  \"seed\": 1,\n  oops\n}");
    CHECK(msg.find("cfg.json:3:") != std::string::npos);
}

TEST_CASE("profiles") {
    const json s1 = load_profile("table_s1");
    CHECK(merge_config(default_config(), s1)["device"] == default_config()["device"]);
    const RunConfig s4 = resolve_config(std::nullopt, std::string("fig_s4"));
    REQUIRE(s4.device.jqf);
    CHECK(s4.device.jqf->gamma_ex == doctest::Approx(angular(100e6)));
    CHECK(!s4.device.resonator);
    CHECK_THROWS_AS(load_profile("no_such_profile"), ConfigError);

    const fs::path dir = scratch_dir("profiles");
    write_file(dir / "custom.json", R"({"seed": 42})");
    setenv("JQFSIM_PROFILE_DIR", dir.c_str(), 1);
    const RunConfig custom = resolve_config(std::nullopt, std::string("custom"));
    unsetenv("JQFSIM_PROFILE_DIR");
    CHECK(custom.seed == 42);
}

TEST_CASE("merge order: defaults, profile, file") {
    const fs::path dir = scratch_dir("merge");
    write_file(dir / "c.json", R"({"device": {"qubit": {"levels": 2}}, "seed": 5})");
    const RunConfig c = resolve_config((dir / "c.json").string(), std::string("fig_s4"));
    CHECK(c.device.qubit.levels == 2);
    CHECK(c.device.jqf->levels == 4);
    CHECK(c.seed == 5);
    CHECK(c.device.qubit.alpha == 0.0);
}

TEST_CASE("doubles round-trip through CSV text") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e12, 1e12);
    for (int k = 0; k < 1000; ++k) {
        const double x = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
    }
    CHECK(format_double(NAN) == "nan");

    const fs::path dir = scratch_dir("csv");
    CsvTable t;
    t.columns = {"a", "b_hz"};
    t.rows = {{1.0 / 3.0, -2.5e-17}, {NAN, 7.0}};
    write_csv(dir / "t.csv", t);
    const CsvTable r = read_csv(dir / "t.csv");
    CHECK(r.columns == t.columns);
    CHECK(r.rows[0] == t.rows[0]);
    CHECK(std::isnan(r.rows[1][0]));
}

TEST_CASE("commands write outputs deterministically") {
    const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
    RunConfig c = resolve_config(default_config());
    run("t1", c, a);
    run("t1", c, b);
    CHECK(fs::exists(a / "t1.csv"));
    CHECK(fs::exists(a / "t1.json"));
    CHECK(fs::exists(a / "resolved_config.json"));
    CHECK(read_file(a / "t1.csv") == read_file(b / "t1.csv"));
    const json summary = json::parse(read_file(a / "t1.json"));
    CHECK(summary["t1_s"].get<double>() == doctest::Approx(1.1e-6).epsilon(0.1));
    CHECK(json::parse(read_file(a / "resolved_config.json")) == c.resolved);
}

TEST_CASE("resonator spectrum round-trips through the fit command") {
    const fs::path dir = scratch_dir("roundtrip");
    RunConfig c = resolve_config(default_config());
    run("spectrum-resonator", c, dir);
    json patch = {{"fit", {{"input", (dir / "spectrum-resonator.csv").string()}, {"model", "resonator"}}}};
    RunConfig guarded = resolve_config(merge_config(default_config(), patch));
    CHECK_THROWS_AS(run_command("fit", guarded), InvalidArgument);
    patch["fit"]["enforce_identifiability"] = false;
    const RunConfig f = resolve_config(merge_config(default_config(), patch));
    const CommandOutput out = run_command("fit", f);
    const json& v = out.summary["values"];
    CHECK(v["omega_r_hz"].get<double>() == doctest::Approx(10.1564e9).epsilon(1e-6));
    CHECK(v["kappa_ex_hz"].get<double>() == doctest::Approx(2.152e6).epsilon(1e-6));
    CHECK(v["kappa_in_hz"].get<double>() == doctest::Approx(0.015e6).epsilon(1e-6));
    CHECK(v["chi_hz"].get<double>() == doctest::Approx(0.935e6).epsilon(1e-6));
    CHECK(v["p_th"].get<double>() == doctest::Approx(0.028).epsilon(1e-6));
}

TEST_CASE("command line entry point") {
    const fs::path dir = scratch_dir("cli");
    const CliRun ok = cli({"spectrum-resonator", "--out", dir.string()});
    CHECK(ok.code == 0);
    CHECK(fs::exists(dir / "spectrum-resonator.csv"));

    const CliRun bad = cli({"no-such-command"});
    CHECK(bad.code == 2);
    CHECK(json::parse(bad.err)["error"]["kind"] == "usage");

    write_file(dir / "bad.json", R"({"device": {"qubit": {"gama_ex": 1}}})");
    const CliRun cfg = cli({"t1", "--config", (dir / "bad.json").string(), "--out", dir.string()});
    CHECK(cfg.code == 2);
    const json err = json::parse(cfg.err);
    CHECK(err["error"]["kind"] == "config-error");
    CHECK(err["error"]["message"].get<std::string>().find("gamma_ex_hz") != std::string::npos);

    const CliRun fit = cli({"fit", "--model", "exponential", "--input", (dir / "missing.csv").string(), "--out",
                            dir.string()});
    CHECK(fit.code != 0);
    CHECK(json::parse(fit.err).contains("error"));
    CHECK(command_names().size() == 13);
}

TEST_CASE("fit result serialization") {
    FitResult f;
    f.model = "exponential";
    f.names = {"A", "T", "C"};
    f.values = {1.0, 2e-6, 0.0};
    f.errors = {0.01, 1e-8, 0.001};
    f.converged = true;
    f.iterations = 7;
    const json j = fit_to_json(f);
    CHECK(j["model"] == "exponential");
    CHECK(j["values"][1].get<double>() == 2e-6);
    CHECK(j["stderr"][0].get<double>() == 0.01);
    CHECK(j["converged"] == true);
    CHECK(j["iterations"] == 7);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pdhj/report_io.hpp"
#include "pdhj/runner.hpp"

using namespace pdhj;
using nlohmann::ordered_json;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "pdhj_runner_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("defaults fill in and echo into the effective config") {
    const RunConfig cfg = load_run_config(default_config_document());
    CHECK(cfg.problem.name == "bang-linear");
    CHECK(cfg.grid->interval_count() == 8);
    CHECK(cfg.level == 1.0);
    CHECK(cfg.zset.size() == 5);
    CHECK(cfg.anchors.size() == 1);
    CHECK(cfg.effective.at("seed").get<std::uint64_t>() == 20240804);
    CHECK(cfg.effective.at("bundle").at("L").get<double>() == 1.0);
    CHECK(cfg.effective.at("psi").at("pairs").get<std::size_t>() == 1000);
}

TEST_CASE("preset resolution and overrides") {
    ordered_json doc = default_config_document();
    doc["problem"]["preset"] = "switch";
    doc["grid"]["N"] = 16;
    doc["bundle"]["L"] = 2.0;
    const RunConfig cfg = load_run_config(doc, std::uint64_t{7}, std::string("elsewhere"));
    CHECK(cfg.problem.name == "switch");
    CHECK(cfg.problem.c_f == 2.0);
    CHECK(cfg.level == 2.0);
    CHECK(cfg.seed == 7);
    CHECK(cfg.out_dir == "elsewhere");
}

TEST_CASE("delay preset defaults its anchor history to 1") {
    ordered_json doc = default_config_document();
    doc["problem"]["preset"] = "delay-drag";
    doc.erase("anchors");
    const RunConfig cfg = load_run_config(doc);
    CHECK(cfg.anchors.at(0).history.at1(0) == 1.0);
}

TEST_CASE("inline problems build from the coefficient schema") {
    ordered_json doc = default_config_document();
    doc["problem"] = {{"inline",
                       {{"T", 2.0},
                        {"atoms", {-1.0, 0.0, 1.0}},
                        {"lambda", 0.25},
                        {"h_state", 1.0},
                        {"C_f", 1.0},
                        {"C_lambda", 0.25}}}};
    const RunConfig cfg = load_run_config(doc);
    CHECK(cfg.problem.horizon == 2.0);
    CHECK(cfg.problem.atoms.size() == 3);
    CHECK(cfg.problem.c_lambda == 0.25);
    CHECK(cfg.problem.affine_cost);  // no quadratic running cost
    CHECK(cfg.grid->horizon() == 2.0);
}

TEST_CASE("schema violations raise invalid_argument") {
    ordered_json doc = default_config_document();
    doc["problem"] = {{"neither", 1}};
    CHECK_THROWS_AS(load_run_config(doc), std::invalid_argument);

    doc = default_config_document();
    doc["anchors"] = ordered_json::array({{{"s0", 0.37}}});  // not a grid node
    CHECK_THROWS_AS(load_run_config(doc), std::invalid_argument);

    doc = default_config_document();
    doc["zset"] = ordered_json::array();
    CHECK_THROWS_AS(load_run_config(doc), std::invalid_argument);

    CHECK_THROWS_AS(load_run_config(default_config_document()).check_config().grid == nullptr
                        ? throw std::invalid_argument("unreachable")
                        : preset_by_name("no-such-preset"),
                    std::invalid_argument);
}

TEST_CASE("value subcommand writes the fixed-format table") {
    ordered_json doc = default_config_document();
    const auto dir = fresh_dir("value");
    doc["out_dir"] = dir.string();
    const RunConfig cfg = load_run_config(doc);
    CHECK(run_subcommand("value", cfg, true) == 0);

    const std::string csv = slurp(dir / "value.csv");
    CHECK(csv.rfind("anchor,s0,v,argmin\n", 0) == 0);
    CHECK(csv.find("-0.60653065971263342") != std::string::npos);
    CHECK(csv.find("00000000") != std::string::npos);

    const auto report = ordered_json::parse(slurp(dir / "report.json"));
    CHECK(report.at("pass").get<bool>());
    CHECK(report.at("subcommand") == "value");
    CHECK(report.at("config").contains("tolerances"));
}

TEST_CASE("psi subcommand: invariants hold and the bounds table is emitted") {
    ordered_json doc = default_config_document();
    doc["psi"] = {{"pairs", 200}};
    const auto dir = fresh_dir("psi");
    doc["out_dir"] = dir.string();
    const RunConfig cfg = load_run_config(doc);
    CHECK(run_subcommand("psi", cfg, true) == 0);
    const std::string csv = slurp(dir / "psi_bounds.csv");
    CHECK(csv.rfind("s,psi,lower_bound,upper_bound,grad_norm,grad_bound,violated_lower,"
                    "violated_upper\n",
                    0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 201);
}

TEST_CASE("subcommand reports are byte-identical across runs with one seed") {
    for (const std::string sub : {"psi", "audit", "perron"}) {
        ordered_json doc = default_config_document();
        doc["psi"] = {{"pairs", 50}};
        doc["audit"] = {{"samples", 200}};
        doc["zset"] = {0.0, 1.0};
        const auto dir_a = fresh_dir(sub + "_a");
        const auto dir_b = fresh_dir(sub + "_b");

        doc["out_dir"] = dir_a.string();
        run_subcommand(sub, load_run_config(doc), true);
        doc["out_dir"] = dir_b.string();
        run_subcommand(sub, load_run_config(doc), true);

        for (const auto& entry : std::filesystem::directory_iterator(dir_a)) {
            const auto name = entry.path().filename();
            INFO(sub << "/" << name.string());
            std::string a = slurp(entry.path());
            std::string b = slurp(dir_b / name);
            // report.json echoes out_dir; neutralize the one intended difference
            const auto scrub = [](std::string s, const std::string& from) {
                for (std::size_t pos = s.find(from); pos != std::string::npos;
                     pos = s.find(from, pos))
                    s.erase(pos, from.size());
                return s;
            };
            a = scrub(std::move(a), dir_a.string());
            b = scrub(std::move(b), dir_b.string());
            CHECK(a == b);
        }
    }
}

TEST_CASE("unknown subcommand throws") {
    const RunConfig cfg = load_run_config(default_config_document());
    CHECK_THROWS_AS(run_subcommand("frobnicate", cfg, true), std::invalid_argument);
}

#ifdef PDHJ_CLI_PATH
namespace {

int cli_exit(const std::string& args) {
    const std::string cmd = std::string(PDHJ_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("CLI exit codes: 0 on success, 2 on config errors, 3 on budget") {
    const auto dir = fresh_dir("cli");

    CHECK(cli_exit("value --out " + (dir / "ok").string() + " --quiet") == 0);

    const auto bad = dir / "bad.json";
    write_text_file(bad, "{not json");
    CHECK(cli_exit("value --config " + bad.string() + " --quiet") == 2);

    ordered_json unknown = default_config_document();
    unknown["problem"]["preset"] = "no-such-preset";
    const auto unknown_path = dir / "unknown.json";
    write_text_file(unknown_path, unknown.dump());
    CHECK(cli_exit("value --config " + unknown_path.string() + " --quiet") == 2);

    // running-cost at N = 20: |A|^20 signals exceed the budget and the cost
    // is not affine, so the value subcommand must signal the budget error.
    ordered_json over = default_config_document();
    over["problem"]["preset"] = "running-cost";
    over["grid"]["N"] = 20;
    const auto over_path = dir / "over.json";
    write_text_file(over_path, over.dump());
    CHECK(cli_exit("value --config " + over_path.string() + " --out " +
                   (dir / "over").string() + " --quiet") == 3);
}
#endif

TEST_CASE("float formatting round-trips exactly") {
    for (double v : {0.0, -0.60653065971263342, 1.0421906, 1e-17, -3.5e200}) {
        CHECK(std::stod(fmt(v)) == v);
    }
}

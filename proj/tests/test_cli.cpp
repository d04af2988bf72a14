#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "itrp/cli.hpp"
#include "itrp/errors.hpp"
#include "itrp/report.hpp"

using namespace itrp;

namespace {

const std::string kModels = ITRP_MODELS_DIR;
const std::string kAbc = kModels + "/abc.json";
const std::string kAbcCsv = kModels + "/abc.csv";
const std::string kRel = kModels + "/abc_rel.json";
const std::string kRelCsv = kModels + "/abc_rel.csv";

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string tmp_path(const std::string& stem) { return "/tmp/itrp_test_" + stem; }

ReportNode run_and_parse(const std::vector<std::string>& args, const std::string& out,
                         int expected_exit) {
    std::vector<std::string> full = args;
    full.push_back("--out");
    full.push_back(out);
    CHECK(run_cli(full) == expected_exit);
    return ReportNode::parse(slurp(out));
}

const std::vector<std::string> kSkipTimings{"timings"};

}  // namespace

TEST_CASE("format_real round-trips doubles bit for bit") {
    for (const double x : {0.1, 1.0 / 3.0, -2.5e17, 1e-300, 4.7476561196336675, 0.0, -0.0,
                           2.2250738585072014e-308, 1.7976931348623157e308, -1.0}) {
        const std::string s = format_real(x);
        CHECK(std::strtod(s.c_str(), nullptr) == x);
    }
}

TEST_CASE("report trees write, parse, and look up") {
    ReportNode root;
    root.set("command", "demo");
    auto& cfg = root.section("config");
    cfg.set("seed", 7);
    cfg.set("tol", 1e-6);
    cfg.set("flag", true);
    auto& inner = cfg.section("inner");
    inner.set("name", "abc");

    const std::string text = root.to_string();
    ReportNode back = ReportNode::parse(text);
    REQUIRE(back.find("config.inner.name") != nullptr);
    CHECK(back.find("config.inner.name")->value() == "abc");
    CHECK(back.find("config.seed")->value() == "7");
    CHECK(back.find("config.flag")->value() == "true");
    CHECK(back.find("missing") == nullptr);
    CHECK(back.find("config.inner.missing") == nullptr);
    CHECK(back.to_string() == text);
}

TEST_CASE("report parsing rejects broken indentation") {
    CHECK_THROWS_AS(ReportNode::parse("a\n   b: 1\n"), ParseError);
    CHECK_THROWS_AS(ReportNode::parse("a: 1\n    b: 2\n"), ParseError);
    CHECK_THROWS_AS(ReportNode::parse("a\n    b: 1\n"), ParseError);
}

TEST_CASE("report comparison respects tolerance and skip keys") {
    ReportNode a;
    a.set("x", 1.0);
    a.section("timings").set("seconds", 0.5);
    a.set("name", "run");

    ReportNode b;
    b.set("x", 1.0 + 1e-13);
    b.section("timings").set("seconds", 99.0);
    b.set("name", "run");

    CHECK(compare_reports(a, b, 1e-12, kSkipTimings).equal);
    CHECK_FALSE(compare_reports(a, b, 1e-12, {}).equal);
    CHECK_FALSE(compare_reports(a, b, 1e-15, kSkipTimings).equal);

    ReportNode c;
    c.set("x", 1.0);
    c.section("timings").set("seconds", 0.5);
    c.set("name", "other");
    ReportDiff diff = compare_reports(a, c, 1e-12, kSkipTimings);
    CHECK_FALSE(diff.equal);
    CHECK(!diff.message.empty());

    ReportNode d;
    d.set("y", 1.0);
    CHECK_FALSE(compare_reports(a, d, 1e-12, kSkipTimings).equal);
}

TEST_CASE("simulate-data is reproducible byte for byte") {
    const std::string out1 = tmp_path("sim1.csv");
    const std::string out2 = tmp_path("sim2.csv");
    CHECK(run_cli({"simulate-data", "--model", kAbc, "--out", out1, "--seed", "12"}) == 0);
    CHECK(run_cli({"simulate-data", "--model", kAbc, "--out", out2, "--seed", "12"}) == 0);
    CHECK(slurp(out1) == slurp(out2));
    CHECK(slurp(out1) == slurp(kAbcCsv));  // the shipped dataset, seed 12

    const std::string out3 = tmp_path("sim3.csv");
    CHECK(run_cli({"simulate-data", "--model", kAbc, "--out", out3, "--seed", "13"}) == 0);
    CHECK(slurp(out1) != slurp(out3));
}

TEST_CASE("fit reports the known optimum") {
    ReportNode rep = run_and_parse({"fit", "--model", kAbc, "--data", kAbcCsv},
                                   tmp_path("fit.txt"), 0);
    REQUIRE(rep.find("fit.v_data") != nullptr);
    const double v = std::strtod(rep.find("fit.v_data")->value().c_str(), nullptr);
    CHECK(v == doctest::Approx(4.7476561196336675).epsilon(1e-9));
    CHECK(rep.find("config.seed")->value() == "0");
    CHECK(rep.find("fit.theta_hat.est.k1") != nullptr);
    CHECK(rep.find("fit.theta_hat.natural.A0") != nullptr);
}

TEST_CASE("itrp exit codes follow the verdict") {
    ReportNode abc = run_and_parse({"itrp", "--model", kAbc, "--data", kAbcCsv},
                                   tmp_path("itrp_abc.txt"), 0);
    CHECK(abc.find("itrp.verdict")->value() == "identifiable");

    ReportNode rel = run_and_parse({"itrp", "--model", kRel, "--data", kRelCsv},
                                   tmp_path("itrp_rel.txt"), 10);
    CHECK(rel.find("itrp.verdict")->value() == "non-identifiable");
    const std::string least = rel.find("itrp.least_identifiable")->value();
    CHECK((least == "A0" || least == "s"));
    const double dv = std::strtod(rel.find("itrp.delta_v")->value().c_str(), nullptr);
    CHECK(std::abs(dv) < 1e-3);
}

TEST_CASE("reruns with one seed are identical up to timings") {
    ReportNode a = run_and_parse({"itrp", "--model", kRel, "--data", kRelCsv},
                                 tmp_path("det_a.txt"), 10);
    ReportNode b = run_and_parse({"itrp", "--model", kRel, "--data", kRelCsv},
                                 tmp_path("det_b.txt"), 10);
    ReportDiff diff = compare_reports(a, b, 1e-12, kSkipTimings);
    INFO(diff.message);
    CHECK(diff.equal);
}

TEST_CASE("the thread count changes no reported value") {
    ReportNode a = run_and_parse({"itrp", "--model", kRel, "--data", kRelCsv, "--jobs", "1"},
                                 tmp_path("jobs1.txt"), 10);
    ReportNode b = run_and_parse({"itrp", "--model", kRel, "--data", kRelCsv, "--jobs", "4"},
                                 tmp_path("jobs4.txt"), 10);
    ReportDiff diff = compare_reports(a, b, 1e-12, kSkipTimings);
    INFO(diff.message);
    CHECK(diff.equal);
}

TEST_CASE("subset flags reach the penalty") {
    ReportNode rep = run_and_parse(
        {"itrp", "--model", kRel, "--data", kRelCsv, "--subset", "k1,k2"},
        tmp_path("subset.txt"), 0);
    CHECK(rep.find("itrp.verdict")->value() == "identifiable");
    CHECK(rep.find("itrp.penalty_subset")->value() == "k1,k2");
}

TEST_CASE("iterate fixes one parameter on abc_rel and exits by the final verdict") {
    ReportNode rep = run_and_parse({"iterate", "--model", kRel, "--data", kRelCsv},
                                   tmp_path("iter.txt"), 0);
    CHECK(rep.find("iterate.n_fixed")->value() == "1");
    CHECK(rep.find("iterate.final_verdict")->value() == "identifiable");
}

TEST_CASE("profile writes the oracle curves") {
    const std::string out = tmp_path("pl.txt");
    ReportNode rep = run_and_parse({"profile", "--model", kRel, "--data", kRelCsv},
                                   out, 10);
    CHECK(rep.find("profiles.verdict")->value() == "non-identifiable");
    const std::string csv = slurp(out + ".pl.csv");
    CHECK(csv.rfind("parameter,p,value\n", 0) == 0);
    CHECK(csv.find("A0") != std::string::npos);
}

TEST_CASE("radial-profile writes the path csv") {
    const std::string out = tmp_path("rad.txt");
    ReportNode rep = run_and_parse(
        {"radial-profile", "--model", kAbc, "--data", kAbcCsv, "--rgrid", "0.5:1.5:3"},
        out, 0);
    CHECK(rep.find("radial_profile.verdict")->value() == "identifiable");
    const std::string csv = slurp(out + ".path.csv");
    CHECK(csv.rfind("radius,v_tot,delta_v", 0) == 0);
}

TEST_CASE("math mode runs end to end") {
    ReportNode rep = run_and_parse(
        {"itrp", "--model", kAbc, "--data", kAbcCsv, "--math-mode", "--nsim", "50"},
        tmp_path("math.txt"), 0);
    CHECK(rep.find("itrp.verdict")->value() == "identifiable");
    CHECK(rep.find("config.math_mode")->value() == "true");
}

TEST_CASE("positive control rewrites the parameter set") {
    ReportNode rep = run_and_parse(
        {"itrp", "--model", kAbc, "--data", kAbcCsv, "--positive-control", "k1"},
        tmp_path("pc.txt"), 10);
    CHECK(rep.find("itrp.verdict")->value() == "non-identifiable");
    const std::string least = rep.find("itrp.least_identifiable")->value();
    CHECK((least == "k1a" || least == "k1b"));
}

TEST_CASE("errors exit with code 1") {
    CHECK(run_cli({"itrp", "--model", "/nonexistent.json", "--data", kAbcCsv}) == 1);
    CHECK(run_cli({"itrp", "--model", kAbc, "--data", "/nonexistent.csv"}) == 1);
    CHECK(run_cli({"itrp", "--model", kAbc, "--data", kAbcCsv, "--subset", "nope"}) == 1);
    CHECK(run_cli({"itrp", "--model", kAbc, "--data", kAbcCsv, "--radius", "-1"}) == 1);
    CHECK(run_cli({"nonsense"}) != 0);
    CHECK(run_cli({"fit", "--model", kAbc}) != 0);  // missing --data
    CHECK(run_cli({"simulate-data", "--model", kAbc, "--out", tmp_path("bad.csv"),
                   "--times", "5:1:0"}) == 1);
    CHECK(run_cli({"itrp", "--model", kAbc, "--data", kAbcCsv, "--no-such-flag"}) != 0);
}

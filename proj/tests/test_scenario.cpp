#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <perturbex/scenario.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace perturbex;
using nlohmann::json;

namespace {

json fix_a_config(int order = 3) {
    json j;
    j["schema"] = 1;
    j["kind"] = "shift-perturbation";
    j["name"] = "fix-a";
    j["order"] = order;
    j["depth"] = 1;
    j["shift"] = {{"transition", {{1, 1}, {1, 1}}}};
    json base = {{"0", 0.0}, {"1", 0.0}};
    json coeffs = json::array();
    coeffs.push_back({{"0", 1.0}, {"1", 0.0}});
    for (int k = 2; k <= order; ++k) coeffs.push_back({{"0", 0.0}, {"1", 0.0}});
    j["potential"] = {{"base", base}, {"coefficients", coeffs}};
    j["epsilon_grid"] = {{"start", 0.1}, {"ratio", 0.1}, {"count", 4}};
    j["observables"] = json::array({{{"name", "cyl0"}, {"cylinder", "0"}}});
    return j;
}

json fix_c_config() {
    json j;
    j["schema"] = 1;
    j["kind"] = "gdms";
    j["name"] = "fix-c";
    j["order"] = 2;
    j["depth"] = 2;
    j["graph"] = {{"vertices", json::array({{{"interval", {0.0, 1.0}}}})},
                  {"edges", json::array({{{"from", 0},
                                          {"to", 0},
                                          {"map", "affine"},
                                          {"ratio", {1.0 / 3.0, 1.0}},
                                          {"offset", {0.0}}},
                                         {{"from", 0},
                                          {"to", 0},
                                          {"map", "affine"},
                                          {"ratio", {1.0 / 3.0, 1.0}},
                                          {"offset", {2.0 / 3.0, -1.0}}}})}};
    j["epsilon_grid"] = {{"start", 0.1}, {"ratio", 0.1}, {"count", 4}};
    j["observables"] = json::array({{{"name", "edge0"}, {"cylinder", "0"}}});
    return j;
}

double coefficient_value(const std::string& text, const std::string& key) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto pos = line.find('=');
        if (pos != std::string::npos && line.substr(0, pos) == key) return std::stod(line.substr(pos + 1));
    }
    FAIL("coefficient not found: " << key);
    return 0.0;
}

}  // namespace

TEST_CASE("FIX-A scenario reproduces the oracle coefficients") {
    auto sc = parse_scenario(fix_a_config());
    RunOptions opt;
    auto res = run_scenario(sc, opt);
    REQUIRE(res.exit_code == 0);
    CHECK(coefficient_value(res.coefficients, "lambda_1") == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(coefficient_value(res.coefficients, "lambda_2") == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(coefficient_value(res.coefficients, "lambda_3") == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
    CHECK(coefficient_value(res.coefficients, "p_1") == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(coefficient_value(res.coefficients, "mu_1(cyl0)") == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(res.verdicts.at("all_vanishing").get<bool>());

    // CSV has the agreed header and quantity rows
    CHECK(res.remainders_csv.rfind("epsilon,order,quantity,direct,formula,abs_diff\n", 0) == 0);
    CHECK(res.remainders_csv.find("lambda") != std::string::npos);
    CHECK(res.remainders_csv.find("kappa:cyl0") != std::string::npos);
    CHECK(res.remainders_csv.find(",p,") != std::string::npos);
}

TEST_CASE("FIX-C scenario reproduces the dimension expansion") {
    auto sc = parse_scenario(fix_c_config());
    RunOptions opt;
    auto res = run_scenario(sc, opt);
    REQUIRE(res.exit_code == 0);
    CHECK(coefficient_value(res.coefficients, "s_0") ==
          doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-10));
    CHECK(coefficient_value(res.coefficients, "s_1") ==
          doctest::Approx(3.0 * std::log(2.0) / std::pow(std::log(3.0), 2)).epsilon(1e-6));
    CHECK(coefficient_value(res.coefficients, "mu_0(edge0)") == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(res.verdicts.at("condition_audit_pass").get<bool>());
}

TEST_CASE("determinism: identical outputs for identical seeds") {
    auto sc = parse_scenario(fix_a_config(2));
    RunOptions opt;
    opt.seed = 42;
    auto a = run_scenario(sc, opt);
    auto b = run_scenario(sc, opt);
    CHECK(a.coefficients == b.coefficients);
    CHECK(a.remainders_csv == b.remainders_csv);
    CHECK(a.verdicts == b.verdicts);
}

TEST_CASE("schema violations") {
    auto j = fix_a_config();
    j["epsilon_grid"]["count"] = 2;
    CHECK_THROWS_WITH_AS(parse_scenario(j), "grid count >= 4 required", SchemaError);

    j = fix_a_config();
    j["kind"] = "unknown";
    CHECK_THROWS_AS(parse_scenario(j), SchemaError);

    j = fix_a_config();
    j.erase("order");
    CHECK_THROWS_AS(parse_scenario(j), SchemaError);

    j = fix_a_config();
    j["schema"] = 2;
    CHECK_THROWS_AS(parse_scenario(j), SchemaError);

    j = fix_a_config();
    j["order"] = 9;
    CHECK_THROWS_AS(parse_scenario(j), SchemaError);

    j = fix_a_config();
    j["potential"]["base"].erase("1");
    CHECK_THROWS_AS(parse_scenario(j), SchemaError);

    // inadmissible cylinder on the golden-mean shift
    j = fix_a_config(1);
    j["shift"] = {{"transition", {{1, 1}, {1, 0}}}};
    j["depth"] = 2;
    j["potential"]["base"] = {{"00", 0.0}, {"01", 0.0}, {"10", 0.0}};
    j["potential"]["coefficients"] = json::array({{{"00", 1.0}, {"01", 0.0}, {"10", 0.0}}});
    j["observables"] = json::array({{{"name", "bad"}, {"cylinder", "11"}}});
    CHECK_THROWS_AS(parse_scenario(j), SchemaError);
}

TEST_CASE("config round trip") {
    auto j = fix_a_config();
    auto sc = parse_scenario(j);
    auto sc2 = parse_scenario(sc.raw);
    CHECK(sc.raw == sc2.raw);
    RunOptions opt;
    auto a = run_scenario(sc, opt);
    auto b = run_scenario(sc2, opt);
    CHECK(a.coefficients == b.coefficients);
}

TEST_CASE("gap-audit scenario emits the audit verdicts") {
    auto j = fix_a_config(2);
    j["kind"] = "gap-audit";
    j["theta_schedule"] = {{"family", "one-minus-power"}};
    auto sc = parse_scenario(j);
    RunOptions opt;
    auto res = run_scenario(sc, opt);
    REQUIRE(res.exit_code == 0);
    const auto& audit = res.verdicts.at("gap_audit");
    CHECK(audit.at("b1_pass").get<bool>());
    CHECK(audit.at("bounds_dominate").get<bool>());
    CHECK(audit.at("agree").get<bool>());

    // without a schedule the gap-audit config is invalid
    j.erase("theta_schedule");
    CHECK_THROWS_AS(parse_scenario(j), SchemaError);
}

TEST_CASE("strict mode fails on a stagnant family") {
    auto j = fix_a_config(1);
    j["potential"]["coefficients"] = json::array({{{"0", 0.0}, {"1", 0.0}}});
    j["potential"]["remainder"] = {{"family", "power"}, {"exponent", -0.5}, {"values", {{"0", 0.5}, {"1", 0.1}}}};
    auto sc = parse_scenario(j);
    RunOptions opt;
    opt.strict = true;
    auto res = run_scenario(sc, opt);
    CHECK(res.exit_code == 1);
    CHECK(!res.verdicts.at("all_vanishing").get<bool>());

    opt.strict = false;
    CHECK(run_scenario(sc, opt).exit_code == 0);
}

TEST_CASE("reports are written atomically to the output directory") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "perturbex_test_out";
    fs::remove_all(dir);
    auto sc = parse_scenario(fix_a_config(1));
    RunOptions opt;
    opt.out_dir = dir.string();
    auto res = run_scenario(sc, opt);
    REQUIRE(res.exit_code == 0);
    CHECK(fs::exists(dir / "coefficients.txt"));
    CHECK(fs::exists(dir / "remainders.csv"));
    CHECK(fs::exists(dir / "verdicts.json"));
    CHECK(!fs::exists(dir / "remainders.csv.tmp"));

    std::ifstream in(dir / "remainders.csv");
    std::string first_line;
    std::getline(in, first_line);
    CHECK(first_line == "epsilon,order,quantity,direct,formula,abs_diff");
    fs::remove_all(dir);
}

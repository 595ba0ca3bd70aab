#include "doctest.h"

#include <cmath>

#include "blp/expr.hpp"
#include "blp/runner.hpp"
#include "blp/scenario.hpp"

using namespace blp;

TEST_CASE("expression evaluator") {
    CHECK(eval_expression("ln(2)") == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(eval_expression("1e-3") == doctest::Approx(1e-3));
    CHECK(eval_expression("2^10") == doctest::Approx(1024.0));
    CHECK(eval_expression("-(3+4)*2") == doctest::Approx(-14.0));
    CHECK(eval_expression(" sqrt(2) ") == doctest::Approx(std::sqrt(2.0)));
    CHECK(eval_expression("exp(1)") == doctest::Approx(std::exp(1.0)));
    CHECK(eval_expression("inf") == kInf);
    CHECK(eval_expression("2*pi") == doctest::Approx(6.283185307179586));
    CHECK_THROWS_AS(eval_expression("foo(1)"), std::invalid_argument);
    CHECK_THROWS_AS(eval_expression("1+"), std::invalid_argument);
    CHECK_THROWS_AS(eval_expression("(1"), std::invalid_argument);
}

TEST_CASE("minimal config gets defaults filled") {
    nlohmann::json j = nlohmann::json::parse(R"({
      "name": "mini",
      "measure": {"family": "finite", "atoms": [{"rate": "1", "config": ["0", "0"]}]}
    })");
    Scenario s = parse_scenario_json(j);
    CHECK(s.theta == 1.0);
    CHECK(s.sigma2 == 0.0);
    CHECK(s.replicas == 1000);
    CHECK(s.caps.max_particles == 200000);
    CHECK(s.doc.contains("seed"));
    CHECK(s.doc.contains("horizon"));
}

TEST_CASE("validation collects every error") {
    nlohmann::json j = nlohmann::json::parse(R"({
      "name": "bad",
      "sigma2": "-1",
      "theta": "-0.5",
      "measure": {"family": "nonsense"},
      "experiments": ["lp_moment"]
    })");
    try {
        parse_scenario_json(j);
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        std::string all;
        for (const auto& msg : e.errors) all += msg + "\n";
        CHECK(all.find("sigma2 must be >= 0") != std::string::npos);
        CHECK(all.find("theta must be >= 0") != std::string::npos);
        CHECK(all.find("unknown measure family") != std::string::npos);
        CHECK(all.find("lp") != std::string::npos);
        CHECK(e.errors.size() >= 4);
    }
}

TEST_CASE("fragmentation admissibility is validated") {
    nlohmann::json j = nlohmann::json::parse(R"({
      "name": "frag-bad",
      "theta": "0.3",
      "measure": {"family": "fragmentation", "alpha": "0.5"}
    })");
    try {
        parse_scenario_json(j);
        FAIL("expected ScenarioError");
    } catch (const ScenarioError& e) {
        bool found = false;
        for (const auto& msg : e.errors)
            if (msg.find("theta must exceed alpha") != std::string::npos) found = true;
        CHECK(found);
    }
}

TEST_CASE("negative rates are rejected") {
    nlohmann::json j = nlohmann::json::parse(R"({
      "name": "neg",
      "measure": {"family": "finite", "atoms": [{"rate": "-2", "config": ["0", "0"]}]}
    })");
    CHECK_THROWS_AS(parse_scenario_json(j), ScenarioError);
}

TEST_CASE("expression strings survive the round trip exactly") {
    nlohmann::json j = nlohmann::json::parse(R"json({
      "name": "rt",
      "theta": "1",
      "measure": {"family": "finite", "atoms": [{"rate": "1", "config": ["ln(2)"]}]},
      "horizon": "2", "query_times": ["1", "2"]
    })json");
    Scenario s = parse_scenario_json(j);
    const auto* fd = s.measure.as_finite();
    REQUIRE(fd != nullptr);
    CHECK(fd->atoms[0].config.x1() == std::log(2.0));  // bit-exact
    CHECK(s.doc["measure"]["atoms"][0]["config"][0] == "ln(2)");

    Scenario rt = parse_scenario_json(s.doc);
    CHECK(rt.canonical_text() == s.canonical_text());
    CHECK(rt.hash() == s.hash());
}

TEST_CASE("built-in registry parses completely") {
    for (const auto& name : builtin_scenario_names()) {
        Scenario s = builtin_scenario(name);
        CHECK(s.name == name);
        Scenario rt = parse_scenario_json(s.doc);
        CHECK(rt.canonical_text() == s.canonical_text());
    }
    CHECK_THROWS_AS(builtin_scenario("nope"), ScenarioError);
}

TEST_CASE("criteria command emits the full report") {
    RunOptions opt;
    RunResult res = run_command("criteria", builtin_scenario("bbm-ui"), opt);
    CHECK(res.exit_code == 0);
    CHECK(res.report["criteria"]["verdict"] == "UI");
    CHECK(res.report["criteria"]["kappa_theta"].get<double>() == doctest::Approx(1.5));
    CHECK(res.report["tail_integral_dichotomy"].size() == 3);
}

TEST_CASE("simulate command flags tiny caps with a warning, exit 0") {
    Scenario s = builtin_scenario("yule");
    s.replicas = 3;
    s.doc["replicas"] = 3;
    s.caps.max_particles = 1;
    s.doc["caps"]["max_particles"] = 1;
    RunOptions opt;
    RunResult res = run_command("simulate", s, opt);
    CHECK(res.exit_code == 0);
    CHECK_FALSE(res.warnings.empty());
    CHECK(res.report["overflowed"].get<int>() == 3);
}

TEST_CASE("unknown command exits with a configuration error") {
    RunResult res = run_command("bogus", builtin_scenario("pure-drift"), RunOptions{});
    CHECK(res.exit_code == 2);
}

#include <doctest.h>

#include <algorithm>

#include "kvn/scenario.hpp"

using namespace kvn;

namespace {

bool has_issue(const std::vector<ConfigIssue>& issues, const std::string& path, const std::string& fragment = "")
{
    return std::any_of(issues.begin(), issues.end(), [&](const ConfigIssue& i) {
        return i.path == path && i.message.find(fragment) != std::string::npos;
    });
}

}  // namespace

TEST_CASE("minimal free-streaming config gets defaults")
{
    const auto r = parse_config(R"({"method": "flow"})");
    REQUIRE(r.ok());
    CHECK(r.errors.empty());
    const auto& c = *r.config;
    CHECK(c.method == Method::flow);
    CHECK(c.seed == 1);
    CHECK(c.final_time == 1.0);
    CHECK(c.problem.mass == 1.0);
    CHECK(std::holds_alternative<FreePotential>(c.problem.external));
    CHECK(std::holds_alternative<NoPairPotential>(c.problem.pair));
    CHECK(c.grid.q == GridAxis{-8.0, 8.0, 64, false});
    CHECK(c.grid.p == GridAxis{-8.0, 8.0, 64, false});
    CHECK(c.flow.settings.dt == FlowSettings{}.dt);
    CHECK(c.flow.points.size() == 1);
    CHECK(c.output_directory == "kvn_runs");
}

TEST_CASE("negative coupling is rejected at its key")
{
    const auto r = parse_config(R"({"method": "vlasov",
        "problem": {"pair": {"type": "gaussian", "strength": -0.1, "width": 1}}})");
    CHECK_FALSE(r.ok());
    CHECK(has_issue(r.errors, "problem.pair.strength", "strength must be >= 0"));
}

TEST_CASE("grids need at least four cells per axis")
{
    const auto r = parse_config(R"({"method": "vlasov", "grid": {"q": {"cells": 2}}})");
    CHECK_FALSE(r.ok());
    CHECK(has_issue(r.errors, "grid.q.cells", "4"));
    CHECK(r.errors.size() == 1);
}

TEST_CASE("unknown keys: errors when strict, warnings otherwise")
{
    const std::string text = R"({"method": "flow", "flow": {"dt": 0.01, "stepsize": 2}})";
    const auto strict = parse_config(text, true);
    CHECK_FALSE(strict.ok());
    CHECK(has_issue(strict.errors, "flow.stepsize", "unknown"));

    const auto lenient = parse_config(text, false);
    REQUIRE(lenient.ok());
    CHECK(has_issue(lenient.warnings, "flow.stepsize", "unknown"));
    CHECK(lenient.config->flow.settings.dt == 0.01);
}

TEST_CASE("all errors are reported together")
{
    const auto r = parse_config(R"({
        "method": "vlasov",
        "problem": {"mass": -1},
        "grid": {"p": {"lower": 2, "upper": 1}},
        "time": {"final": "soon"},
        "vlasov": {"interpolation": "quintic"}})");
    CHECK_FALSE(r.ok());
    CHECK(has_issue(r.errors, "problem.mass"));
    CHECK(has_issue(r.errors, "time.final"));
    CHECK(has_issue(r.errors, "vlasov.interpolation"));
    CHECK(std::any_of(r.errors.begin(), r.errors.end(),
                      [](const ConfigIssue& i) { return i.path.rfind("grid.p", 0) == 0; }));
}

TEST_CASE("method is required and must be known")
{
    CHECK(has_issue(parse_config("{}").errors, "method"));
    CHECK(has_issue(parse_config(R"({"method": "magic"})").errors, "method"));
    CHECK(has_issue(parse_config("[1, 2]").errors, "<root>"));
    CHECK(has_issue(parse_config("{not json").errors, "<root>"));
}

TEST_CASE("method-specific constraints")
{
    CHECK_FALSE(parse_config(R"({"method": "fock"})").ok());
    CHECK(parse_config(R"({"method": "fock",
        "grid": {"q": {"cells": 4, "periodic": true}, "p": {"cells": 4, "periodic": true}}})")
              .ok());
    CHECK_FALSE(parse_config(R"({"method": "compare", "compare": {"methods": ["vlasov", "perturbation"]}})").ok());
    const auto snap = parse_config(R"({"method": "vlasov", "time": {"final": 1, "snapshots": [0.5, 2]}})");
    CHECK(has_issue(snap.errors, "time.snapshots[1]"));
}

TEST_CASE("canonical json re-parses to itself")
{
    const auto r = parse_config(R"({"method": "ensemble", "seed": 7,
        "problem": {"pair": {"type": "gaussian", "strength": 0.5, "width": 1}},
        "ensemble": {"particles_per_system": 10, "n_samples": 100}})");
    REQUIRE(r.ok());
    const auto text = to_json(*r.config);
    const auto again = parse_config(text);
    REQUIRE(again.ok());
    CHECK(to_json(*again.config) == text);
    CHECK(again.config->seed == 7);
    CHECK(again.config->ensemble.settings.particles_per_system == 10);
}

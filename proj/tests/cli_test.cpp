#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "prostar/cli/recipes.hpp"
#include "prostar/cli/runner.hpp"

using namespace prostar;
using namespace prostar::cli;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Scenario load(const std::string& name) { return parse_scenario(parse_json_text(slurp(fs::path(PROSTAR_SCENARIO_DIR) / name))); }

RunReport run(const Scenario& s, unsigned jobs = 0) {
  RunOptions o;
  o.scenario_name = "test";
  o.jobs = jobs;
  return run_scenario(s, o);
}

const TaskReport& task(const RunReport& r, const std::string& name) {
  for (const auto& t : r.tasks)
    if (t.name == name) return t;
  throw std::runtime_error("no task " + name);
}

std::vector<long long> list(const TaskReport& t, const std::string& key) {
  for (const auto& [k, v] : t.lists)
    if (k == key) return v;
  return {};
}

double metric(const TaskReport& t, const std::string& key) {
  for (const auto& [k, v] : t.metrics)
    if (k == key) return v;
  return std::nan("");
}

int shell(const std::string& args) {
  const std::string cmd = std::string(PROSTAR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ParseError parse_failure(const std::string& text) {
  try {
    parse_scenario(parse_json_text(text));
  } catch (const ParseError& e) {
    return e;
  }
  throw std::runtime_error("scenario parsed: " + text);
}

}  // namespace

TEST(Recipes, EveryRecipeParsesAndPasses) {
  for (const auto& name : recipe_names()) {
    const auto s = parse_scenario(generate_example(name, 42));
    const auto r = run(s);
    EXPECT_EQ(r.exit_code(), 0) << name;
    EXPECT_FALSE(r.tasks.empty()) << name;
  }
  EXPECT_THROW(generate_example("no-such-recipe", 0), UnknownRecipe);
}

TEST(Recipes, DeterministicInTheSeed) {
  EXPECT_EQ(generate_example("random-covariant-cp", 42).dump(2), generate_example("random-covariant-cp", 42).dump(2));
  EXPECT_NE(generate_example("random-covariant-cp", 42).dump(), generate_example("random-covariant-cp", 43).dump());
}

TEST(Recipes, GeneratedMapsAreCovariant) {
  for (std::uint64_t seed : {0u, 1u, 42u}) {
    const auto s = parse_scenario(generate_example("random-covariant-cp", seed));
    const auto& rho = s.cp_maps.front().second;
    EXPECT_TRUE(check_covariance(rho, *s.actions.front().second, s.representations.front().second).passed()) << seed;
  }
}

TEST(Recipes, GoldenBlockSizes) {
  const auto sw = run(parse_scenario(generate_example("z2-swap-crossed", 0)));
  EXPECT_EQ(list(task(sw, "swap-crossed-product"), "block_sizes"), (std::vector<long long>{2}));
  EXPECT_EQ(list(task(sw, "group-algebra-z2"), "block_sizes"), (std::vector<long long>{1, 1}));
  const auto s3 = run(parse_scenario(generate_example("s3-group-algebra", 0)));
  EXPECT_EQ(list(task(s3, "group-algebra-s3"), "block_sizes"), (std::vector<long long>{1, 1, 2}));
  const auto tg = run(parse_scenario(generate_example("trivial-group", 5)));
  EXPECT_TRUE(task(tg, "phi-equals-rho").verification.find("phi = rho on delta_e (x) A")->pass);
}

TEST(Scenarios, Z2M2DilationReportsDimensions) {
  const auto r = run(load("z2-m2-dilation.json"));
  EXPECT_EQ(r.exit_code(), 0);
  const auto& t = task(r, "identity-dilation");
  // rho = id on C^2: E_rho = C^2, spanning set 4 * 2 = 8, null space 6.
  const auto dims = to_json(t)["dimensions"];
  EXPECT_EQ(dims["dilation_dimension"], 2);
  EXPECT_EQ(dims["null_space"], 6);
  EXPECT_FALSE(t.verification.residuals.empty());
}

TEST(Scenarios, TransposeFailsWithChoiWitness) {
  const auto r = run(load("transpose-not-cp.json"));
  EXPECT_EQ(r.exit_code(), 1);
  const auto& t = task(r, "transpose-dilation");
  EXPECT_EQ(t.status, Status::fail);
  EXPECT_NEAR(metric(t, "choi_min_eigenvalue"), -1.0, 1e-10);
  ASSERT_TRUE(t.verification.witness.has_value());
  EXPECT_NE(t.verification.witness->find("-1"), std::string::npos);
}

TEST(Scenarios, EmptyTaskListPasses) {
  const auto r = run(load("empty.json"));
  EXPECT_EQ(r.exit_code(), 0);
  const auto j = to_json(r);
  EXPECT_TRUE(j["tasks"].empty());
  EXPECT_EQ(j["summary"]["exit_code"], 0);
}

TEST(Scenarios, OverflowIsANumericalError) {
  const auto r = run(load("overflow-numerical.json"));
  EXPECT_EQ(r.exit_code(), 3);
  EXPECT_EQ(task(r, "overflow-dilation").error_kind, "numerical");
  EXPECT_NE(task(r, "overflow-dilation").message.find("overflow-dilation"), std::string::npos);
}

TEST(Scenarios, TowerChainPasses) {
  const auto r = run(load("tower-chain.json"));
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_EQ(list(task(r, "coherence"), "level_dilation_dimensions").size(), 3u);
}

TEST(Report, DeterministicModuloTimingAndJobs) {
  const auto s = load("random-covariant-cp.json");
  const auto a = to_json(run(s, 1), false), b = to_json(run(s, 4), false), c = to_json(run(s, 1), false);
  EXPECT_EQ(a.dump(), c.dump());
  EXPECT_EQ(a["tasks"].dump(), b["tasks"].dump());
}

TEST(Report, ConfigurationEchoAndPrecedence) {
  auto s = load("z2-m2-dilation.json");
  RunOptions o;
  const auto from_file = run_scenario(s, o);
  EXPECT_EQ(from_file.config.seed, 7u);
  EXPECT_EQ(from_file.config.tolerance, 1e-10);
  o.seed = 11;
  o.tolerance = 1e-9;
  const auto overridden = run_scenario(s, o);
  EXPECT_EQ(overridden.config.seed, 11u);
  EXPECT_EQ(overridden.config.tolerance, 1e-9);
  const auto j = to_json(overridden);
  EXPECT_EQ(j["schema"], kReportSchema);
  EXPECT_EQ(j["config"]["seed"], 11);
  EXPECT_TRUE(j.contains("version"));
  // every pass/fail is backed by a residual and a threshold
  for (const auto& t : j["tasks"])
    for (const auto& res : t["residuals"]) {
      EXPECT_TRUE(res.contains("value"));
      EXPECT_TRUE(res.contains("threshold"));
    }
}

TEST(Report, TextUsesSeventeenDigits) {
  const auto r = run(load("transpose-not-cp.json"));
  const std::string text = to_text(r, false);
  EXPECT_NE(text.find("-0.99999999999999978"), std::string::npos);
  EXPECT_EQ(text.find("\033["), std::string::npos);
  EXPECT_NE(to_text(r, true).find("\033["), std::string::npos);
}

TEST(Parse, ErrorsCarryLocations) {
  EXPECT_EQ(parse_failure(R"({"schema": "other", "tasks": []})").where(), "/schema");
  EXPECT_EQ(parse_failure(R"({"schema": "prostar-scenario-v1", "tasks": [{"name": "x", "type": "dilate", "cp": "nope"}]})").where(),
            "/tasks/0/cp");
  EXPECT_EQ(parse_failure(R"({"schema": "prostar-scenario-v1", "algebras": {"A": [0]}, "tasks": []})").where(), "/algebras/A");
  EXPECT_EQ(parse_failure(R"({"schema": "prostar-scenario-v1", "tasks": [{"name": "x", "type": "bake"}]})").where(), "/tasks/0/type");
  EXPECT_EQ(parse_failure(R"({"schema": "prostar-scenario-v1", "surprise": 1, "tasks": []})").where(), "/surprise");
  const auto syntax = parse_failure("{\"schema\": \"prostar-scenario-v1\",\n \"tasks\": [ }");
  EXPECT_EQ(syntax.where().rfind("line 2", 0), 0u) << syntax.where();
}

TEST(Parse, ComplexNumbersAndMatrices) {
  const auto s = parse_scenario(parse_json_text(R"({
    "schema": "prostar-scenario-v1",
    "algebras": {"A": [2]},
    "groups": {"G": "Z2"},
    "actions": {"a": {"group": "G", "algebra": "A", "type": "inner",
                      "unitaries": [[[1, 0], [0, 1]], [[0, [0, 1]], [[0, -1], 0]]]}},
    "tasks": [{"name": "xp", "type": "crossed-product", "action": "a", "expect_blocks": [2, 2]}]
  })"));
  EXPECT_EQ(s.tasks.size(), 1u);
  EXPECT_EQ(run(s).exit_code(), 0);
}

TEST(Binary, ExitCodesFollowTheContract) {
  const std::string dir = PROSTAR_SCENARIO_DIR;
  EXPECT_EQ(shell("run --scenario " + dir + "/trivial-group.json"), 0);
  EXPECT_EQ(shell("run --scenario " + dir + "/transpose-not-cp.json"), 1);
  EXPECT_EQ(shell("run --scenario " + dir + "/empty.json"), 0);
  EXPECT_EQ(shell("run --scenario " + dir + "/overflow-numerical.json"), 3);
  EXPECT_EQ(shell("run --scenario /nonexistent.json"), 2);
  EXPECT_EQ(shell("validate --scenario " + dir + "/tower-chain.json"), 0);
  EXPECT_EQ(shell("run"), 2);
  EXPECT_EQ(shell("run --scenario " + dir + "/empty.json --format yaml"), 2);
  EXPECT_EQ(shell("example no-such-recipe"), 2);
  EXPECT_EQ(shell("--help"), 0);
}

TEST(Binary, BothFormatsWrittenNextToOutput) {
  const fs::path out = fs::temp_directory_path() / ("prostar-cli-test-" + std::to_string(::getpid()));
  fs::create_directories(out);
  const std::string base = (out / "report").string();
  EXPECT_EQ(shell("run --scenario " + std::string(PROSTAR_SCENARIO_DIR) + "/z2-swap-crossed.json --format both --output " + base), 0);
  ASSERT_TRUE(fs::exists(base + ".json"));
  ASSERT_TRUE(fs::exists(base + ".txt"));
  const auto j = Json::parse(slurp(base + ".json"));
  EXPECT_EQ(j["summary"]["exit_code"], 0);
  EXPECT_NE(slurp(base + ".txt").find("block_sizes = [2]"), std::string::npos);
  const std::string ex = (out / "ex.json").string();
  EXPECT_EQ(shell("example random-covariant-cp --seed 42 --output " + ex), 0);
  EXPECT_EQ(Json::parse(slurp(ex)).dump(), generate_example("random-covariant-cp", 42).dump());
  fs::remove_all(out);
}

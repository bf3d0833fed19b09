#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "CLI11.hpp"
#include "prostar/cli/recipes.hpp"
#include "prostar/cli/runner.hpp"

namespace cli = prostar::cli;

namespace {

constexpr int kUsage = 2;

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream s;
  s << in.rdbuf();
  out = s.str();
  return true;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

// Parses and resolves; prints the located error and returns nullopt on failure.
std::optional<cli::Scenario> load(const std::string& path) {
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << "error: cannot read scenario " << path << "\n";
    return std::nullopt;
  }
  try {
    return cli::parse_scenario(cli::parse_json_text(text));
  } catch (const cli::ParseError& e) {
    std::cerr << path << ": parse error at " << e.what() << "\n";
    return std::nullopt;
  }
}

std::string sibling(const std::string& path, const std::string& ext) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return path.substr(0, dot) + ext;
  return path + ext;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prostar: covariant completely positive maps, KSGNS dilations and crossed products"};
  app.require_subcommand(1);

  std::string scenario, output, format = "text";
  double tolerance = prostar::kDefaultTolerance;
  std::uint64_t seed = 0;
  unsigned jobs = 0;

  auto* run = app.add_subcommand("run", "run every task of a scenario and report");
  run->add_option("--scenario", scenario, "scenario file (JSON)")->required();
  run->add_option("--output", output, "report path");
  auto* tol_opt = run->add_option("--tolerance", tolerance, "verification tolerance")->check(CLI::PositiveNumber);
  auto* seed_opt = run->add_option("--seed", seed, "random seed");
  run->add_option("--jobs", jobs, "worker threads (default: one per task)");
  run->add_option("--format", format, "report format")->check(CLI::IsMember({"text", "json", "both"}));

  auto* validate = app.add_subcommand("validate", "parse and type-check a scenario without running it");
  validate->add_option("--scenario", scenario, "scenario file (JSON)")->required();

  std::string recipe;
  auto* example = app.add_subcommand("example", "print a generated example scenario");
  example->add_option("recipe", recipe, "recipe name")->required();
  example->add_option("--seed", seed, "random seed");
  example->add_option("--output", output, "write the scenario here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*example) {
    try {
      const std::string text = cli::generate_example(recipe, seed).dump(2) + "\n";
      if (output.empty()) std::cout << text;
      else if (!write_file(output, text)) {
        std::cerr << "error: cannot write " << output << "\n";
        return kUsage;
      }
      return 0;
    } catch (const cli::UnknownRecipe& e) {
      std::cerr << "error: " << e.what() << "; known recipes:";
      for (const auto& n : cli::recipe_names()) std::cerr << " " << n;
      std::cerr << "\n";
      return kUsage;
    }
  }

  const auto s = load(scenario);
  if (!s) return kUsage;
  if (*validate) {
    std::cout << scenario << ": ok (" << s->tasks.size() << " tasks)\n";
    return 0;
  }

  cli::RunOptions opt;
  opt.scenario_name = scenario;
  if (tol_opt->count()) opt.tolerance = tolerance;
  if (seed_opt->count()) opt.seed = seed;
  opt.jobs = jobs;
  const auto rep = cli::run_scenario(*s, opt);

  const bool color = std::getenv("NO_COLOR") == nullptr && isatty(STDOUT_FILENO);
  const std::string json = cli::to_json(rep).dump(2) + "\n";
  if (format == "text" || format == "both") std::cout << cli::to_text(rep, color && output.empty());
  if (format == "json" && output.empty()) std::cout << json;
  if (!output.empty()) {
    bool ok = true;
    if (format == "json") ok = write_file(output, json);
    else if (format == "text") ok = write_file(output, cli::to_text(rep, false));
    else ok = write_file(sibling(output, ".json"), json) && write_file(sibling(output, ".txt"), cli::to_text(rep, false));
    if (!ok) {
      std::cerr << "error: cannot write report to " << output << "\n";
      return kUsage;
    }
  }
  for (const auto& t : rep.tasks)
    if (t.status == cli::Status::error && t.error_kind == "numerical") std::cerr << "numerical failure in " << t.message << "\n";
  return rep.exit_code();
}

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ndde/cli.hpp"

namespace {

std::vector<std::string> split_ids(const std::vector<std::string>& raw) {
  std::vector<std::string> ids;
  for (const auto& item : raw) {
    std::stringstream ss(item);
    std::string id;
    while (std::getline(ss, id, ',')) {
      if (!id.empty()) ids.push_back(id);
    }
  }
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oscillation analysis of neutral delay differential equations"};
  app.require_subcommand(1);

  std::string config;
  std::string report;
  std::string trajectory;
  double margin = 0.0;
  double omega_slack = 0.0;
  int m_max = 0;
  std::vector<std::string> assert_slow;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "run configuration (JSON)")->required();
    sub->add_option("--report", report, "write the report here instead of stdout");
    sub->add_option("--trajectory", trajectory, "write the trajectory (t x z) here");
    sub->add_option("--margin", margin, "strictness buffer above thresholds");
    sub->add_option("--m-max", m_max, "largest m in the constant-delay sweep");
    sub->add_option("--omega-slack", omega_slack, "distance of omega below the Omega infimum");
    sub->add_option("--assert-slow", assert_slow,
                    "criterion ids (comma separated) to treat as slowly varying");
  };
  CLI::App* analyze = app.add_subcommand("analyze", "evaluate every oscillation criterion");
  CLI::App* simulate = app.add_subcommand("simulate", "integrate the equation from a history");
  CLI::App* all = app.add_subcommand("all", "analyze and simulate");
  for (CLI::App* sub : {analyze, simulate, all}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  CLI::App* chosen = app.get_subcommands().front();
  ndde::cli::Overrides ov;
  if (chosen->count("--report") > 0) ov.report = report;
  if (chosen->count("--trajectory") > 0) ov.trajectory = trajectory;
  if (chosen->count("--margin") > 0) ov.margin = margin;
  if (chosen->count("--m-max") > 0) ov.m_max = m_max;
  if (chosen->count("--omega-slack") > 0) ov.omega_slack = omega_slack;
  ov.assert_slow = split_ids(assert_slow);

  ndde::cli::Subcommand sub = ndde::cli::Subcommand::Analyze;
  if (chosen == simulate) sub = ndde::cli::Subcommand::Simulate;
  if (chosen == all) sub = ndde::cli::Subcommand::All;
  return ndde::cli::run(config, sub, ov, std::cout, std::cerr);
}

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "steereval/config.hpp"
#include "steereval/errors.hpp"
#include "steereval/report.hpp"
#include "steereval/runner.hpp"
#include "steereval/scenario.hpp"

namespace fs = std::filesystem;
using namespace steereval;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string workspace_override;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::size_t> workers_override;
  std::string backend_override;
  bool force_mock = false;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  cmd->add_option("--config", args.config_path, "run configuration file")
      ->required(config_required);
  cmd->add_option("--workspace", args.workspace_override, "workspace directory");
  cmd->add_option("--seed", args.seed_override, "override the global seed");
  cmd->add_option("--workers", args.workers_override, "scenario worker count");
  cmd->add_option("--backend", args.backend_override,
                  "override the default generation backend id");
  cmd->add_flag("--mock", args.force_mock, "force the deterministic mock backends");
}

RunConfig load_effective_config(const CommonArgs& args) {
  RunConfig config = load_config(args.config_path);
  if (!args.workspace_override.empty()) config.workspace = args.workspace_override;
  if (args.seed_override) config.seed = *args.seed_override;
  if (args.workers_override) config.workers = *args.workers_override;
  if (!args.backend_override.empty()) config.generation_backend = args.backend_override;
  if (args.force_mock) config.force_mock = true;
  return config;
}

int cmd_ingest(const CommonArgs& args) {
  const RunConfig config = load_effective_config(args);
  const Datasets datasets = ingest_datasets(config);
  fs::create_directories(config.workspace);
  save_datasets(datasets, config.workspace);

  std::size_t genre_tags = 0;
  std::size_t trigger_tags = 0;
  for (const TagSpec& tag : datasets.tags) {
    if (tag.group == TagGroup::Genre) ++genre_tags;
    else ++trigger_tags;
  }
  fmt::print("items={} users={} genre_tags={} trigger_tags={}\n",
             datasets.catalog.size(), datasets.ratings.user_count(), genre_tags,
             trigger_tags);
  fmt::print("tags included={} excluded={}\n", datasets.exclusions.included,
             datasets.exclusions.excluded);
  for (const std::string& tag : datasets.exclusions.unknown_tags) {
    std::cerr << fmt::format("warning: exclusion list names unknown tag '{}'\n", tag);
  }
  return 0;
}

RunPlan build_plan(const RunConfig& config, const Datasets& datasets) {
  const PlanParams params = plan_params_from(config);
  const std::vector<std::string> users =
      sample_users(datasets.ratings, config.min_reviews, config.n_users, config.seed);
  return plan_run(params, datasets.catalog, datasets.tags, datasets.ratings, users);
}

int cmd_plan(const CommonArgs& args) {
  const RunConfig config = load_effective_config(args);
  const Datasets datasets = ingest_datasets(config);
  const RunPlan plan = build_plan(config, datasets);
  fs::create_directories(config.workspace);
  const std::string path = (fs::path(config.workspace) / "plan.json").string();
  save_run_plan(plan, path);
  fmt::print("plan: {} scenarios, {} skipped -> {}\n", plan.scenarios.size(),
             plan.skipped.size(), path);
  return plan.skipped.empty() ? 0 : 1;
}

int cmd_run(const CommonArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig config = load_effective_config(args);
  const Datasets datasets = ingest_datasets(config);
  fs::create_directories(config.workspace);
  save_datasets(datasets, config.workspace);

  const RunPlan plan = build_plan(config, datasets);
  save_run_plan(plan, (fs::path(config.workspace) / "plan.json").string());

  std::unique_ptr<Gateway> gateway = build_gateway(config, datasets);
  EventLog log(config.log_file);
  const RunOutcome outcome = execute_run(config, datasets, plan, *gateway, log);

  const double wall_sec = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
  write_run_outputs(config, outcome, config.workspace, wall_sec);

  for (const ConditionOutcome& condition : outcome.conditions) {
    fmt::print("{}: completed={} skipped={} refused={} of {}\n",
               condition.condition.id(), condition.totals.completed,
               condition.totals.skipped, condition.totals.refused,
               condition.totals.planned);
  }
  fmt::print("results -> {}/results (manifest.json, plan.json alongside)\n",
             config.workspace);
  return outcome.exit_code;
}

int cmd_report(const CommonArgs& args, const std::vector<std::string>& tables,
               std::size_t top_k) {
  const RunConfig config = load_effective_config(args);
  const RunResults results = load_run_results(config.workspace);
  ReportOptions options;
  options.tables = tables;
  options.alpha = config.alpha;
  options.top_k = top_k;
  const RenderedReport report = render_report(results, options);

  const fs::path dir = fs::path(config.workspace) / "report";
  fs::create_directories(dir);
  std::ofstream(dir / "report.txt", std::ios::binary) << report.text;
  std::ofstream(dir / "report.json", std::ios::binary) << report.json;
  std::cout << report.text;
  return 0;
}

int cmd_replicate(const std::string& out_path) {
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + out_path);
  out << replicate_config_text();
  fmt::print("full experiment-matrix config -> {}\n", out_path);
  fmt::print("edit the data paths, then: steereval run --config {}\n", out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steerability evaluation harness for natural-language-profile "
               "recommenders"};
  app.require_subcommand(1);

  CommonArgs ingest_args, plan_args, run_args, report_args;
  std::vector<std::string> report_tables;
  std::size_t report_top_k = 3;
  std::string replicate_out = "replicate_config.json";

  CLI::App* ingest = app.add_subcommand("ingest", "validate datasets and write "
                                                  "canonical workspace stores");
  add_common_flags(ingest, ingest_args);

  CLI::App* plan = app.add_subcommand("plan", "sample users and build the "
                                              "steering scenario plan");
  add_common_flags(plan, plan_args);

  CLI::App* run = app.add_subcommand("run", "execute the full scenario matrix "
                                            "and write results");
  add_common_flags(run, run_args);

  CLI::App* report = app.add_subcommand("report", "render comparison tables "
                                                  "from a finished run");
  add_common_flags(report, report_args);
  report->add_option("--tables", report_tables,
                     "tables to render (default: all with data)")
      ->delimiter(',');
  report->add_option("--topk", report_top_k, "entries per most/least listing");

  CLI::App* replicate = app.add_subcommand(
      "replicate", "emit the full experiment-matrix config for real datasets");
  replicate->add_option("--out", replicate_out, "output config path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) return cmd_ingest(ingest_args);
    if (plan->parsed()) return cmd_plan(plan_args);
    if (run->parsed()) return cmd_run(run_args);
    if (report->parsed()) return cmd_report(report_args, report_tables, report_top_k);
    if (replicate->parsed()) return cmd_replicate(replicate_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

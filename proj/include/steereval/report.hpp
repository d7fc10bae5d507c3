#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steereval/config.hpp"
#include "steereval/metrics.hpp"

namespace steereval {

struct ConditionResults {
  Condition condition;
  std::vector<ScenarioResult> results;
};

// Everything the reporter needs, reloaded from a finished workspace.
struct RunResults {
  std::string config_hash;
  std::vector<ConditionResults> conditions;  // manifest order; first is default
};

RunResults load_run_results(const std::string& workspace);

struct ReportOptions {
  std::vector<std::string> tables;  // empty -> every table with data
  double alpha = 0.05;
  std::size_t top_k = 3;
};

struct RenderedReport {
  std::string text;           // aligned tables for the terminal
  std::string json;           // machine-readable mirror
};

// Builds the comparison tables (ranker / profile / intervention / emphasis /
// tag-group / oracle / top-bottom tags / rank-set accuracy). Explicitly
// requested tables whose conditions were never run raise MissingResults.
RenderedReport render_report(const RunResults& results, const ReportOptions& options);

const std::vector<std::string>& known_report_tables();

}  // namespace steereval

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "steereval/config.hpp"
#include "steereval/corpus.hpp"
#include "steereval/gateway.hpp"
#include "steereval/log.hpp"
#include "steereval/metrics.hpp"
#include "steereval/scenario.hpp"

namespace steereval {

struct Datasets {
  Catalog catalog;
  RatingsStore ratings;
  std::vector<TagSpec> tags;
  ExclusionReport exclusions;
};

// Ingests and validates everything the config points at.
Datasets ingest_datasets(const RunConfig& config);

// Writes the canonical workspace copies (corpus/ under the workspace).
void save_datasets(const Datasets& datasets, const std::string& workspace);

// Builds the gateway with every backend the config registers; --mock style
// forcing swaps in the deterministic mock backends.
std::unique_ptr<Gateway> build_gateway(const RunConfig& config,
                                       const Datasets& datasets);

// Ids of the generation/embedding backends a run should use, after mock
// forcing is applied.
std::string effective_generation_backend(const RunConfig& config);
std::string effective_embedding_backend(const RunConfig& config);

struct ConditionTotals {
  std::size_t planned = 0;
  std::size_t completed = 0;
  std::size_t skipped = 0;
  std::size_t refused = 0;
  std::size_t malformed_appends = 0;
};

struct ConditionOutcome {
  Condition condition;
  ConditionTotals totals;
  std::vector<ScenarioResult> results;  // completed scenarios, sorted by id
  std::vector<std::pair<std::string, std::string>> skipped_scenarios;  // (id, reason)
};

struct RunOutcome {
  RunPlan plan;
  std::vector<ConditionOutcome> conditions;
  // tag_id -> (refused, planned) across all conditions
  std::map<std::string, std::pair<std::size_t, std::size_t>> tag_refusals;
  int exit_code = 0;
};

// Executes the scenario matrix for every expanded condition with a worker
// pool. Per-scenario failures are recorded and excluded, never fatal.
RunOutcome execute_run(const RunConfig& config, const Datasets& datasets,
                       const RunPlan& plan, Gateway& gateway, EventLog& log);

// Persists per-scenario CSVs, aggregate reports and the run manifest under
// the workspace. Everything written here is byte-deterministic; wall-clock
// stats go to a separate timings.json.
void write_run_outputs(const RunConfig& config, const RunOutcome& outcome,
                       const std::string& workspace, double wall_clock_sec);

std::string scenarios_csv_path(const std::string& workspace,
                               const std::string& condition_id);
std::string manifest_path(const std::string& workspace);

}  // namespace steereval

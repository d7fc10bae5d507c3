#include "steereval/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/core.h>
#include <json.hpp>

#include "steereval/csv.hpp"
#include "steereval/errors.hpp"
#include "steereval/hash.hpp"
#include "steereval/mock_backends.hpp"
#include "steereval/ranking.hpp"
#include "steereval/steering.hpp"
#include "steereval/strings.hpp"

namespace steereval {

namespace fs = std::filesystem;

Datasets ingest_datasets(const RunConfig& config) {
  Datasets datasets;
  datasets.catalog = ingest_catalog(config.items_path);
  datasets.ratings = ingest_ratings(config.ratings_path, datasets.catalog);
  if (!config.genre_links_path.empty()) {
    for (TagSpec& tag : ingest_genre_tags(config.genre_links_path, datasets.catalog)) {
      datasets.tags.push_back(std::move(tag));
    }
  }
  if (!config.trigger_votes_path.empty()) {
    for (TagSpec& tag : ingest_trigger_tags(config.trigger_votes_path,
                                            config.trigger_threshold,
                                            datasets.catalog)) {
      datasets.tags.push_back(std::move(tag));
    }
  }
  if (!config.tag_exclusions_path.empty()) {
    datasets.exclusions = apply_tag_exclusions(datasets.tags, config.tag_exclusions_path);
  } else {
    for (const TagSpec& tag : datasets.tags) {
      if (tag.excluded) ++datasets.exclusions.excluded;
      else ++datasets.exclusions.included;
    }
  }
  return datasets;
}

void save_datasets(const Datasets& datasets, const std::string& workspace) {
  const fs::path dir = fs::path(workspace) / "corpus";
  fs::create_directories(dir);
  save_catalog(datasets.catalog, (dir / "items.jsonl").string());
  save_ratings(datasets.ratings, (dir / "ratings.csv").string());
  save_tags(datasets.tags, (dir / "tags.json").string());
}

namespace {

std::string env_or_empty(const char* name) {
  const char* value = std::getenv(name);
  return value ? value : "";
}

std::string resolve_base_url(const std::string& configured) {
  std::string value = configured;
  if (value.size() >= 4 && value.rfind("${", 0) == 0 && value.back() == '}') {
    value = env_or_empty(value.substr(2, value.size() - 3).c_str());
  }
  if (value.empty()) value = env_or_empty("STEEREVAL_API_BASE");
  if (value.empty()) {
    throw Error(Errc::config_error,
                "no base_url configured and STEEREVAL_API_BASE unset");
  }
  return value;
}

constexpr const char* kMockGenerationId = "mock-oracle";
constexpr const char* kMockEmbeddingId = "mock-embed";

}  // namespace

std::string effective_generation_backend(const RunConfig& config) {
  if (config.force_mock || config.generation_backend.empty()) return kMockGenerationId;
  return config.generation_backend;
}

std::string effective_embedding_backend(const RunConfig& config) {
  if (config.force_mock || config.embedding_backend.empty()) return kMockEmbeddingId;
  return config.embedding_backend;
}

std::unique_ptr<Gateway> build_gateway(const RunConfig& config,
                                       const Datasets& datasets) {
  GatewayOptions options;
  options.cache_dir = (fs::path(config.workspace) / "cache").string();
  options.max_in_flight = config.max_in_flight;
  if (!config.refusal_patterns.empty()) {
    options.refusal_patterns = config.refusal_patterns;
  }
  auto gateway = std::make_unique<Gateway>(std::move(options));

  MockOracleConfig mock;
  mock.base_score_min = config.mock.base_score_min;
  mock.base_score_span = config.mock.base_score_span;
  mock.delta = config.mock.delta;
  mock.oracle_bonus = config.mock.oracle_bonus;
  mock.appendix_trigger_decrease = config.templates.appendix_trigger_decrease;
  gateway->register_generation(
      kMockGenerationId,
      make_mock_oracle_backend(datasets.catalog, datasets.tags, mock));
  gateway->register_embedding(
      kMockEmbeddingId,
      make_mock_tag_embedder(datasets.catalog, datasets.tags, config.mock.embed_dim));

  if (!config.force_mock) {
    for (const auto& [id, backend] : config.backends) {
      if (backend.kind == "http-chat") {
        HttpBackendOptions http;
        http.base_url = resolve_base_url(backend.base_url);
        http.model = backend.model;
        http.api_key = backend.api_key.empty() ? env_or_empty("STEEREVAL_API_KEY")
                                               : backend.api_key;
        gateway->register_generation(id, make_http_chat_backend(std::move(http)));
      } else if (backend.kind == "http-embed") {
        HttpBackendOptions http;
        http.base_url = resolve_base_url(backend.base_url);
        http.model = backend.model;
        http.api_key = backend.api_key.empty() ? env_or_empty("STEEREVAL_API_KEY")
                                               : backend.api_key;
        if (backend.dim == 0) {
          throw Error(Errc::config_error,
                      "embedding backend '" + id + "' needs a dim");
        }
        gateway->register_embedding(
            id, make_http_embedding_backend(std::move(http), backend.dim));
      } else if (backend.kind == "mock-oracle" || backend.kind == "mock-embed") {
        // Registered above under the fixed mock ids; nothing further.
      } else {
        throw Error(Errc::config_error,
                    "unknown backend kind '" + backend.kind + "'");
      }
    }
  }
  return gateway;
}

namespace {

enum class ScenarioStatus { Completed, Refused, Skipped };

struct ScenarioOutcome {
  ScenarioStatus status = ScenarioStatus::Skipped;
  std::string reason;
  bool malformed_append = false;
  ScenarioResult result;
};

struct ProfileMemo {
  std::mutex mutex;
  std::map<std::pair<std::string, ProfileVariant>, ProfileRecord> profiles;
};

const TagSpec& tag_by_id(const std::vector<TagSpec>& tags, const std::string& tag_id) {
  for (const TagSpec& tag : tags) {
    if (tag.tag_id == tag_id) return tag;
  }
  throw Error(Errc::unknown_tag, tag_id);
}

ScenarioOutcome run_scenario(const RunConfig& config, const Datasets& datasets,
                             const Condition& condition, const Scenario& scenario,
                             Gateway& gateway, ProfileMemo& memo, EventLog& log) {
  ScenarioOutcome outcome;
  const std::string condition_id = condition.id();
  log.emit("scenario_start",
           {{"scenario_id", scenario.scenario_id}, {"condition", condition_id}});
  try {
    const TagSpec& tag = tag_by_id(datasets.tags, scenario.tag_id);

    SteeringOptions steering_options;
    steering_options.generation_backend_id = effective_generation_backend(config);
    steering_options.templates = config.templates;

    ProfileRecord original;
    {
      const auto key = std::make_pair(scenario.user_id, condition.profile);
      std::unique_lock lock(memo.mutex);
      auto it = memo.profiles.find(key);
      if (it != memo.profiles.end()) {
        original = it->second;
      } else {
        lock.unlock();
        const UserHistory history =
            build_history(datasets.ratings, scenario.user_id, config.history_length);
        ProfileRecord fresh = generate_profile(history, condition.profile,
                                               datasets.catalog, gateway,
                                               steering_options);
        lock.lock();
        original = memo.profiles.emplace(key, std::move(fresh)).first->second;
      }
    }
    if (original.refusal) {
      log.emit("refusal", {{"scenario_id", scenario.scenario_id},
                           {"condition", condition_id},
                           {"stage", "profile"},
                           {"pattern", original.refusal_pattern}});
      outcome.status = ScenarioStatus::Refused;
      outcome.reason = "profile refusal";
      return outcome;
    }

    SteeringAction action;
    action.tag = &tag;
    action.direction = scenario.direction;
    action.method = condition.intervention;
    action.emphasis = condition.emphasis;
    const SteeredProfile steered =
        steer_profile(original, action, gateway, steering_options);
    outcome.malformed_append = steered.malformed_append;
    if (steered.refusal) {
      log.emit("refusal", {{"scenario_id", scenario.scenario_id},
                           {"condition", condition_id},
                           {"stage", "steered"},
                           {"pattern", steered.refusal_pattern}});
      outcome.status = ScenarioStatus::Refused;
      outcome.reason = "steered profile refusal";
      return outcome;
    }

    RankerOptions ranker_options;
    ranker_options.generation_backend_id = effective_generation_backend(config);
    ranker_options.embedding_backend_id = effective_embedding_backend(config);
    ranker_options.oracle = condition.oracle;
    ranker_options.blurb = config.blurb;

    const std::string seed_text = fmt::format("{}", scenario.seed);
    const auto rank_stage = [&](const std::string& profile_text,
                                ProfileStage stage) {
      const std::uint64_t tie_seed = stable_hash(
          {seed_text, condition_id, profile_stage_name(stage)});
      Ranking ranking =
          condition.ranker == RankerKind::LlmScore
              ? rank_by_llm_score(profile_text, scenario.candidates,
                                  datasets.catalog, tag, gateway, tie_seed,
                                  ranker_options)
              : rank_by_embedding(profile_text, scenario.candidates,
                                  datasets.catalog, tag, gateway, tie_seed,
                                  ranker_options);
      ranking.scenario_id = scenario.scenario_id;
      ranking.stage = stage;
      return ranking;
    };
    const Ranking rank_original = rank_stage(original.text, ProfileStage::Original);
    const Ranking rank_steered = rank_stage(steered.text, ProfileStage::Steered);

    const LabelMap labels = labels_from_candidates(scenario.candidates);
    ScenarioResult& r = outcome.result;
    r.scenario_id = scenario.scenario_id;
    r.tag_id = scenario.tag_id;
    r.group = tag.group;
    r.direction = scenario.direction;
    r.auc_original = auc_tag(rank_original, labels);
    r.auc_steered = auc_tag(rank_steered, labels);
    r.delta_auc = r.auc_steered - r.auc_original;
    r.rank_set_original = rank_set(rank_original, labels, scenario.next_item);
    r.rank_set_steered = rank_set(rank_steered, labels, scenario.next_item);
    for (std::size_t k : config.k_list) {
      r.coverage_original[k] = coverage_at_k(rank_original, labels, k);
      r.coverage_steered[k] = coverage_at_k(rank_steered, labels, k);
      r.ndcg_original[k] = ndcg_at_k(rank_original, labels, k);
      r.ndcg_steered[k] = ndcg_at_k(rank_steered, labels, k);
    }
    r.next_item_relevant = labels.at(scenario.next_item);
    outcome.status = ScenarioStatus::Completed;
  } catch (const std::exception& e) {
    outcome.status = ScenarioStatus::Skipped;
    outcome.reason = e.what();
  }
  log.emit("scenario_done",
           {{"scenario_id", scenario.scenario_id},
            {"condition", condition_id},
            {"status", outcome.status == ScenarioStatus::Completed ? "completed"
                       : outcome.status == ScenarioStatus::Refused ? "refused"
                                                                   : "skipped"},
            {"reason", outcome.reason}});
  return outcome;
}

}  // namespace

RunOutcome execute_run(const RunConfig& config, const Datasets& datasets,
                       const RunPlan& plan, Gateway& gateway, EventLog& log) {
  RunOutcome outcome;
  outcome.plan = plan;
  ProfileMemo memo;

  for (const Condition& condition : expand_conditions(config.matrix)) {
    ConditionOutcome condition_outcome;
    condition_outcome.condition = condition;
    condition_outcome.totals.planned = plan.scenarios.size();

    std::vector<ScenarioOutcome> outcomes(plan.scenarios.size());
    std::atomic<std::size_t> next_index{0};
    const std::size_t worker_count =
        std::max<std::size_t>(1, std::min(config.workers, plan.scenarios.size()));
    std::vector<std::thread> workers;
    workers.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) {
      workers.emplace_back([&] {
        for (;;) {
          const std::size_t i = next_index.fetch_add(1);
          if (i >= plan.scenarios.size()) return;
          outcomes[i] = run_scenario(config, datasets, condition, plan.scenarios[i],
                                     gateway, memo, log);
        }
      });
    }
    for (std::thread& worker : workers) worker.join();

    for (std::size_t i = 0; i < plan.scenarios.size(); ++i) {
      const Scenario& scenario = plan.scenarios[i];
      ScenarioOutcome& scenario_outcome = outcomes[i];
      auto& tag_entry = outcome.tag_refusals[scenario.tag_id];
      ++tag_entry.second;
      if (scenario_outcome.malformed_append) {
        ++condition_outcome.totals.malformed_appends;
      }
      switch (scenario_outcome.status) {
        case ScenarioStatus::Completed:
          ++condition_outcome.totals.completed;
          condition_outcome.results.push_back(std::move(scenario_outcome.result));
          break;
        case ScenarioStatus::Refused:
          ++condition_outcome.totals.refused;
          ++tag_entry.first;
          break;
        case ScenarioStatus::Skipped:
          ++condition_outcome.totals.skipped;
          condition_outcome.skipped_scenarios.emplace_back(scenario.scenario_id,
                                                           scenario_outcome.reason);
          break;
      }
    }
    std::sort(condition_outcome.results.begin(), condition_outcome.results.end(),
              [](const ScenarioResult& a, const ScenarioResult& b) {
                return a.scenario_id < b.scenario_id;
              });
    std::sort(condition_outcome.skipped_scenarios.begin(),
              condition_outcome.skipped_scenarios.end());
    outcome.conditions.push_back(std::move(condition_outcome));
  }

  bool partial = !plan.skipped.empty();
  for (const ConditionOutcome& c : outcome.conditions) {
    if (c.totals.skipped > 0 || c.totals.refused > 0) partial = true;
  }
  outcome.exit_code = partial ? 1 : 0;
  return outcome;
}

std::string scenarios_csv_path(const std::string& workspace,
                               const std::string& condition_id) {
  return (fs::path(workspace) / "results" / condition_id / "scenarios.csv").string();
}

std::string manifest_path(const std::string& workspace) {
  return (fs::path(workspace) / "manifest.json").string();
}

namespace {

std::string fixed6(double value) { return fmt::format("{:.6f}", value); }

void write_scenarios_csv(const RunConfig& config, const ConditionOutcome& condition,
                         const std::string& path) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path);

  std::vector<std::string> header = {"scenario_id", "tag_id",       "group",
                                     "direction",   "auc_original", "auc_steered",
                                     "delta_auc",   "rank_set_original",
                                     "rank_set_steered"};
  for (std::size_t k : config.k_list) {
    header.push_back(fmt::format("coverage{}_original", k));
    header.push_back(fmt::format("coverage{}_steered", k));
  }
  for (std::size_t k : config.k_list) {
    header.push_back(fmt::format("ndcg{}_original", k));
    header.push_back(fmt::format("ndcg{}_steered", k));
  }
  header.push_back("next_item_relevant");
  write_csv_row(out, header);

  for (const ScenarioResult& r : condition.results) {
    std::vector<std::string> row = {r.scenario_id,
                                    r.tag_id,
                                    tag_group_name(r.group),
                                    direction_name(r.direction),
                                    fixed6(r.auc_original),
                                    fixed6(r.auc_steered),
                                    fixed6(r.delta_auc),
                                    fmt::format("{}", r.rank_set_original),
                                    fmt::format("{}", r.rank_set_steered)};
    for (std::size_t k : config.k_list) {
      row.push_back(fixed6(r.coverage_original.at(k)));
      row.push_back(fixed6(r.coverage_steered.at(k)));
    }
    for (std::size_t k : config.k_list) {
      row.push_back(fixed6(r.ndcg_original.at(k)));
      row.push_back(fixed6(r.ndcg_steered.at(k)));
    }
    row.push_back(r.next_item_relevant ? "true" : "false");
    write_csv_row(out, row);
  }
}

nlohmann::json aggregate_row_json(const AggregateRow& row) {
  nlohmann::json doc;
  doc["group_by"] = group_by_name(row.grouping);
  doc["key"] = row.key;
  doc["direction"] = direction_name(row.direction);
  doc["n"] = row.n;
  doc["mean_delta_auc"] = fixed6(row.mean_delta_auc);
  doc["t_stat"] = row.t_stat ? nlohmann::json(fmt::format("{:.6g}", *row.t_stat))
                             : nlohmann::json(nullptr);
  doc["p_value"] = row.p_value ? nlohmann::json(fmt::format("{:.6g}", *row.p_value))
                               : nlohmann::json(nullptr);
  doc["significant"] = row.significant;
  doc["success"] = row.success;
  return doc;
}

void write_aggregates(const RunConfig& config, const ConditionOutcome& condition,
                      const fs::path& dir) {
  std::vector<AggregateRow> rows;
  if (!condition.results.empty()) {
    for (GroupBy grouping : {GroupBy::Overall, GroupBy::TagGroup, GroupBy::Tag}) {
      for (AggregateRow& row : aggregate(condition.results, grouping, config.alpha)) {
        rows.push_back(std::move(row));
      }
    }
  }

  std::ofstream csv(dir / "aggregate.csv", std::ios::binary);
  if (!csv) throw Error(Errc::io_error, "cannot write aggregate.csv");
  write_csv_row(csv, {"group_by", "key", "direction", "n", "mean_delta_auc",
                      "t_stat", "p_value", "significant", "success"});
  nlohmann::json json_rows = nlohmann::json::array();
  for (const AggregateRow& row : rows) {
    write_csv_row(csv,
                  {group_by_name(row.grouping), row.key, direction_name(row.direction),
                   fmt::format("{}", row.n), fixed6(row.mean_delta_auc),
                   row.t_stat ? fmt::format("{:.6g}", *row.t_stat) : "",
                   row.p_value ? fmt::format("{:.6g}", *row.p_value) : "",
                   row.significant ? "true" : "false", row.success ? "true" : "false"});
    json_rows.push_back(aggregate_row_json(row));
  }
  std::ofstream json_out(dir / "aggregate.json", std::ios::binary);
  if (!json_out) throw Error(Errc::io_error, "cannot write aggregate.json");
  json_out << json_rows.dump(2) << '\n';
}

}  // namespace

void write_run_outputs(const RunConfig& config, const RunOutcome& outcome,
                       const std::string& workspace, double wall_clock_sec) {
  const fs::path results_dir = fs::path(workspace) / "results";
  fs::create_directories(results_dir);

  nlohmann::json manifest;
  manifest["config_hash"] = config_hash(config);
  manifest["planned_scenarios"] = outcome.plan.scenarios.size();
  manifest["plan_skipped"] = outcome.plan.skipped.size();

  nlohmann::json conditions = nlohmann::json::array();
  for (const ConditionOutcome& condition : outcome.conditions) {
    const std::string condition_id = condition.condition.id();
    const fs::path dir = results_dir / condition_id;
    fs::create_directories(dir);
    write_scenarios_csv(config, condition, (dir / "scenarios.csv").string());
    write_aggregates(config, condition, dir);

    nlohmann::json record;
    record["condition_id"] = condition_id;
    record["profile"] = profile_variant_name(condition.condition.profile);
    record["intervention"] = intervention_name(condition.condition.intervention);
    record["emphasis"] = emphasis_name(condition.condition.emphasis);
    record["ranker"] = ranker_name(condition.condition.ranker);
    record["oracle"] = condition.condition.oracle;
    record["planned"] = condition.totals.planned;
    record["completed"] = condition.totals.completed;
    record["skipped"] = condition.totals.skipped;
    record["refused"] = condition.totals.refused;
    record["malformed_appends"] = condition.totals.malformed_appends;
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& [scenario_id, reason] : condition.skipped_scenarios) {
      skipped.push_back({{"scenario_id", scenario_id}, {"reason", reason}});
    }
    record["skipped_scenarios"] = skipped;
    conditions.push_back(std::move(record));
  }
  manifest["conditions"] = conditions;

  nlohmann::json tag_refusals = nlohmann::json::array();
  for (const auto& [tag_id, counts] : outcome.tag_refusals) {
    const double rate = counts.second == 0
                            ? 0.0
                            : static_cast<double>(counts.first) /
                                  static_cast<double>(counts.second);
    tag_refusals.push_back({{"tag_id", tag_id},
                            {"refused", counts.first},
                            {"planned", counts.second},
                            {"rate", fixed6(rate)},
                            {"over_quarter", rate > 0.25}});
  }
  manifest["per_tag_refusal"] = tag_refusals;

  std::ofstream manifest_out(manifest_path(workspace), std::ios::binary);
  if (!manifest_out) throw Error(Errc::io_error, "cannot write manifest");
  manifest_out << manifest.dump(2) << '\n';

  // Wall-clock stats are real measurements and so deliberately live outside
  // the deterministic manifest.
  nlohmann::json timings;
  timings["wall_clock_sec"] = wall_clock_sec;
  std::ofstream timings_out(fs::path(workspace) / "timings.json", std::ios::binary);
  timings_out << timings.dump(2) << '\n';
}

}  // namespace steereval

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steereval/prompts.hpp"
#include "steereval/ranking.hpp"
#include "steereval/scenario.hpp"
#include "steereval/steering.hpp"

namespace steereval {

struct BackendConfig {
  std::string id;
  std::string kind;  // http-chat | http-embed | mock-oracle | mock-embed | scripted
  std::string base_url;
  std::string model;
  std::string api_key;  // after env interpolation
  std::size_t dim = 0;  // embedding backends
  int max_tokens = 512;
  double temperature = 0.0;
};

// One fully specified pipeline condition.
struct Condition {
  ProfileVariant profile = ProfileVariant::Paragraph;
  InterventionMethod intervention = InterventionMethod::TemplateAppend;
  Emphasis emphasis = Emphasis::Default;
  RankerKind ranker = RankerKind::LlmScore;
  bool oracle = false;

  std::string id() const;
};

struct MatrixConfig {
  std::vector<ProfileVariant> profile_variants = {ProfileVariant::Paragraph};
  std::vector<InterventionMethod> interventions = {InterventionMethod::TemplateAppend};
  std::vector<Emphasis> emphasis = {Emphasis::Default};
  std::vector<RankerKind> rankers = {RankerKind::LlmScore};
  std::vector<bool> oracle = {false};
  std::vector<Direction> directions = {Direction::Increase, Direction::Decrease};
};

struct MockConfig {
  double base_score_min = 2.5;
  double base_score_span = 1.0;
  double delta = 1.0;
  double oracle_bonus = 0.5;
  std::size_t embed_dim = 64;
};

struct RunConfig {
  // data
  std::string items_path;
  std::string ratings_path;
  std::string genre_links_path;
  std::string trigger_votes_path;
  std::string tag_exclusions_path;  // optional
  std::string trigger_threshold = "0.75";

  // sampling
  std::size_t n_users = 10;
  std::size_t min_reviews = 100;
  std::size_t history_length = 50;
  std::size_t pool_size = 100;
  std::size_t relevant_count = 50;
  bool allow_unbalanced_pool = false;

  // pipeline
  MatrixConfig matrix;
  TemplateOptions templates;
  BlurbOptions blurb;
  std::vector<std::string> refusal_patterns;  // empty -> defaults
  std::vector<std::size_t> k_list = {10, 20};

  // execution
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::size_t workers = 4;
  std::size_t max_in_flight = 4;
  std::string workspace = "workspace";
  std::string log_file;  // empty -> stderr

  // backends
  std::map<std::string, BackendConfig> backends;
  std::string generation_backend;
  std::string embedding_backend;
  bool force_mock = false;
  MockConfig mock;
};

// Loads and validates the declarative config file. "${VAR}" in api_key
// fields is replaced from the environment (secrets only; other fields are
// taken literally).
RunConfig load_config(const std::string& path);
RunConfig parse_config_json(const std::string& json_text);

// Canonical JSON rendering; load(dump(c)) == c and hash input for the
// manifest's config_hash.
std::string dump_config(const RunConfig& config);
std::string config_hash(const RunConfig& config);

// Condition expansion: the first entry of every matrix axis is the default
// pipeline; each additional entry yields one condition that differs from
// the default on that axis alone. Non-default emphasis pairs only with the
// template intervention.
std::vector<Condition> expand_conditions(const MatrixConfig& matrix);

PlanParams plan_params_from(const RunConfig& config);

// The full experiment-matrix config (all comparison axes populated) with
// placeholder dataset paths, for users with the real datasets and models.
std::string replicate_config_text();

}  // namespace steereval

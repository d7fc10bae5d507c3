#include "steereval/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

#include "steereval/errors.hpp"
#include "steereval/hash.hpp"
#include "steereval/strings.hpp"

namespace steereval {

namespace {

using nlohmann::json;

std::string interpolate_env(const std::string& value) {
  if (value.size() >= 4 && value.rfind("${", 0) == 0 && value.back() == '}') {
    const std::string name = value.substr(2, value.size() - 3);
    const char* env = std::getenv(name.c_str());
    return env ? env : "";
  }
  return value;
}

template <typename T, typename Fn>
std::vector<T> parse_list(const json& array, Fn parse_one) {
  std::vector<T> out;
  for (const auto& entry : array) out.push_back(parse_one(entry.get<std::string>()));
  return out;
}

}  // namespace

std::string Condition::id() const {
  std::string id = fmt::format("{}_{}_{}_{}", profile_variant_name(profile),
                               intervention_name(intervention),
                               emphasis_name(emphasis), ranker_name(ranker));
  if (oracle) id += "_oracle";
  return id;
}

RunConfig parse_config_json(const std::string& json_text) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(Errc::config_error, "config is not a JSON object");
  }
  RunConfig config;
  try {
    const json& data = doc.at("data");
    config.items_path = data.at("items").get<std::string>();
    config.ratings_path = data.at("ratings").get<std::string>();
    config.genre_links_path = data.value("genre_links", "");
    config.trigger_votes_path = data.value("trigger_votes", "");
    config.tag_exclusions_path = data.value("tag_exclusions", "");
    if (data.contains("trigger_threshold")) {
      const json& th = data["trigger_threshold"];
      config.trigger_threshold = th.is_string() ? th.get<std::string>() : th.dump();
    }

    if (doc.contains("sampling")) {
      const json& sampling = doc["sampling"];
      config.n_users = sampling.value("n_users", config.n_users);
      config.min_reviews = sampling.value("min_reviews", config.min_reviews);
      config.history_length = sampling.value("history_length", config.history_length);
      config.pool_size = sampling.value("pool_size", config.pool_size);
      config.relevant_count = sampling.value("relevant_count", config.relevant_count);
      config.allow_unbalanced_pool =
          sampling.value("allow_unbalanced_pool", config.allow_unbalanced_pool);
    }

    if (doc.contains("matrix")) {
      const json& matrix = doc["matrix"];
      if (matrix.contains("profile_variants")) {
        config.matrix.profile_variants = parse_list<ProfileVariant>(
            matrix["profile_variants"], profile_variant_from_name);
      }
      if (matrix.contains("interventions")) {
        config.matrix.interventions = parse_list<InterventionMethod>(
            matrix["interventions"], intervention_from_name);
      }
      if (matrix.contains("emphasis")) {
        config.matrix.emphasis =
            parse_list<Emphasis>(matrix["emphasis"], emphasis_from_name);
      }
      if (matrix.contains("rankers")) {
        config.matrix.rankers =
            parse_list<RankerKind>(matrix["rankers"], ranker_from_name);
      }
      if (matrix.contains("oracle")) {
        config.matrix.oracle = matrix["oracle"].get<std::vector<bool>>();
      }
      if (matrix.contains("directions")) {
        config.matrix.directions =
            parse_list<Direction>(matrix["directions"], direction_from_name);
      }
    }

    if (doc.contains("templates")) {
      config.templates.appendix_trigger_decrease =
          doc["templates"].value("appendix_trigger_decrease", false);
      if (doc["templates"].contains("oracle_match_note")) {
        config.blurb.match_note =
            doc["templates"]["oracle_match_note"].get<std::string>();
      }
      if (doc["templates"].contains("oracle_no_match_note")) {
        config.blurb.no_match_note =
            doc["templates"]["oracle_no_match_note"].get<std::string>();
      }
    }
    if (doc.contains("refusal_patterns")) {
      config.refusal_patterns = doc["refusal_patterns"].get<std::vector<std::string>>();
    }
    if (doc.contains("metrics") && doc["metrics"].contains("k_list")) {
      config.k_list = doc["metrics"]["k_list"].get<std::vector<std::size_t>>();
    }

    config.seed = doc.value("seed", config.seed);
    config.alpha = doc.value("alpha", config.alpha);
    config.workers = doc.value("workers", config.workers);
    config.max_in_flight = doc.value("max_in_flight", config.max_in_flight);
    config.workspace = doc.value("workspace", config.workspace);
    config.log_file = doc.value("log_file", config.log_file);

    if (doc.contains("backends")) {
      const json& backends = doc["backends"];
      if (backends.contains("registry")) {
        for (const auto& [id, spec] : backends["registry"].items()) {
          BackendConfig backend;
          backend.id = id;
          backend.kind = spec.at("kind").get<std::string>();
          backend.base_url = spec.value("base_url", "");
          backend.model = spec.value("model", "");
          backend.api_key = interpolate_env(spec.value("api_key", ""));
          backend.dim = spec.value("dim", static_cast<std::size_t>(0));
          backend.max_tokens = spec.value("max_tokens", 512);
          backend.temperature = spec.value("temperature", 0.0);
          config.backends[id] = std::move(backend);
        }
      }
      config.generation_backend = backends.value("generation", "");
      config.embedding_backend = backends.value("embedding", "");
    }
    config.force_mock = doc.value("mock_backends", false);

    if (doc.contains("mock")) {
      const json& mock = doc["mock"];
      config.mock.base_score_min = mock.value("base_score_min", config.mock.base_score_min);
      config.mock.base_score_span = mock.value("base_score_span", config.mock.base_score_span);
      config.mock.delta = mock.value("delta", config.mock.delta);
      config.mock.oracle_bonus = mock.value("oracle_bonus", config.mock.oracle_bonus);
      config.mock.embed_dim = mock.value("embed_dim", config.mock.embed_dim);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, e.what());
  }

  // validation
  if (config.min_reviews < config.history_length + 1) {
    throw Error(Errc::config_error,
                fmt::format("min_reviews {} must be >= history_length + 1 = {}",
                            config.min_reviews, config.history_length + 1));
  }
  if (config.relevant_count * 2 != config.pool_size && !config.allow_unbalanced_pool) {
    throw Error(Errc::config_error,
                fmt::format("relevant_count {} must be half of pool_size {} "
                            "(set allow_unbalanced_pool to override)",
                            config.relevant_count, config.pool_size));
  }
  if (config.matrix.profile_variants.empty() || config.matrix.interventions.empty() ||
      config.matrix.emphasis.empty() || config.matrix.rankers.empty() ||
      config.matrix.oracle.empty() || config.matrix.directions.empty()) {
    throw Error(Errc::config_error, "matrix axes must be non-empty");
  }
  if (config.matrix.emphasis.front() != Emphasis::Default) {
    throw Error(Errc::config_error, "first emphasis entry must be 'default'");
  }
  if (config.k_list.empty()) {
    throw Error(Errc::config_error, "metrics.k_list must be non-empty");
  }
  for (std::size_t k : config.k_list) {
    if (k < 1 || k > config.pool_size) {
      throw Error(Errc::config_error,
                  fmt::format("k={} outside [1, pool_size={}]", k, config.pool_size));
    }
  }
  rational_from_decimal(config.trigger_threshold);  // must parse
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::config_error, "cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_json(buffer.str());
}

std::string dump_config(const RunConfig& config) {
  json doc;
  doc["data"] = {{"items", config.items_path},
                 {"ratings", config.ratings_path},
                 {"genre_links", config.genre_links_path},
                 {"trigger_votes", config.trigger_votes_path},
                 {"tag_exclusions", config.tag_exclusions_path},
                 {"trigger_threshold", config.trigger_threshold}};
  doc["sampling"] = {{"n_users", config.n_users},
                     {"min_reviews", config.min_reviews},
                     {"history_length", config.history_length},
                     {"pool_size", config.pool_size},
                     {"relevant_count", config.relevant_count},
                     {"allow_unbalanced_pool", config.allow_unbalanced_pool}};

  json matrix;
  json profiles = json::array();
  for (auto v : config.matrix.profile_variants) profiles.push_back(profile_variant_name(v));
  matrix["profile_variants"] = profiles;
  json interventions = json::array();
  for (auto v : config.matrix.interventions) interventions.push_back(intervention_name(v));
  matrix["interventions"] = interventions;
  json emphasis = json::array();
  for (auto v : config.matrix.emphasis) emphasis.push_back(emphasis_name(v));
  matrix["emphasis"] = emphasis;
  json rankers = json::array();
  for (auto v : config.matrix.rankers) rankers.push_back(ranker_name(v));
  matrix["rankers"] = rankers;
  matrix["oracle"] = config.matrix.oracle;
  json directions = json::array();
  for (auto v : config.matrix.directions) directions.push_back(direction_name(v));
  matrix["directions"] = directions;
  doc["matrix"] = matrix;

  doc["templates"] = {
      {"appendix_trigger_decrease", config.templates.appendix_trigger_decrease},
      {"oracle_match_note", config.blurb.match_note},
      {"oracle_no_match_note", config.blurb.no_match_note}};
  doc["refusal_patterns"] = config.refusal_patterns;
  doc["metrics"] = {{"k_list", config.k_list}};

  doc["seed"] = config.seed;
  doc["alpha"] = config.alpha;
  doc["workers"] = config.workers;
  doc["max_in_flight"] = config.max_in_flight;
  doc["workspace"] = config.workspace;
  doc["log_file"] = config.log_file;
  doc["mock_backends"] = config.force_mock;

  json registry = json::object();
  for (const auto& [id, backend] : config.backends) {
    registry[id] = {{"kind", backend.kind},       {"base_url", backend.base_url},
                    {"model", backend.model},     {"api_key", backend.api_key},
                    {"dim", backend.dim},         {"max_tokens", backend.max_tokens},
                    {"temperature", backend.temperature}};
  }
  doc["backends"] = {{"registry", registry},
                     {"generation", config.generation_backend},
                     {"embedding", config.embedding_backend}};
  doc["mock"] = {{"base_score_min", config.mock.base_score_min},
                 {"base_score_span", config.mock.base_score_span},
                 {"delta", config.mock.delta},
                 {"oracle_bonus", config.mock.oracle_bonus},
                 {"embed_dim", config.mock.embed_dim}};
  return doc.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
  // Identifies the experiment, not the machine: where the workspace lives
  // and where logs go must not change the hash, or clean-workspace reruns
  // could never be byte-identical.
  RunConfig normalized = config;
  normalized.workspace.clear();
  normalized.log_file.clear();
  return hash_hex(stable_hash({dump_config(normalized)}));
}

std::vector<Condition> expand_conditions(const MatrixConfig& matrix) {
  Condition base;
  base.profile = matrix.profile_variants.front();
  base.intervention = matrix.interventions.front();
  base.emphasis = Emphasis::Default;
  base.ranker = matrix.rankers.front();
  base.oracle = matrix.oracle.front();

  std::vector<Condition> conditions = {base};
  std::set<std::string> seen = {base.id()};
  auto add = [&](Condition c) {
    if (seen.insert(c.id()).second) conditions.push_back(c);
  };

  for (std::size_t i = 1; i < matrix.profile_variants.size(); ++i) {
    Condition c = base;
    c.profile = matrix.profile_variants[i];
    add(c);
  }
  for (std::size_t i = 1; i < matrix.interventions.size(); ++i) {
    Condition c = base;
    c.intervention = matrix.interventions[i];
    add(c);
  }
  for (std::size_t i = 1; i < matrix.emphasis.size(); ++i) {
    // Emphasis variants only exist for the template intervention.
    Condition c = base;
    c.intervention = InterventionMethod::TemplateAppend;
    c.emphasis = matrix.emphasis[i];
    add(c);
  }
  for (std::size_t i = 1; i < matrix.rankers.size(); ++i) {
    Condition c = base;
    c.ranker = matrix.rankers[i];
    add(c);
  }
  for (std::size_t i = 1; i < matrix.oracle.size(); ++i) {
    Condition c = base;
    c.oracle = matrix.oracle[i];
    add(c);
  }
  return conditions;
}

PlanParams plan_params_from(const RunConfig& config) {
  PlanParams params;
  params.global_seed = config.seed;
  params.n_users = config.n_users;
  params.min_reviews = config.min_reviews;
  params.history_length = config.history_length;
  params.pool_size = config.pool_size;
  params.relevant_count = config.relevant_count;
  params.directions = config.matrix.directions;
  return params;
}

std::string replicate_config_text() {
  json doc;
  doc["data"] = {{"items", "data/items.jsonl"},
                 {"ratings", "data/ratings.csv"},
                 {"genre_links", "data/genre_links.csv"},
                 {"trigger_votes", "data/trigger_votes.csv"},
                 {"tag_exclusions", "data/tag_exclusions.txt"},
                 {"trigger_threshold", "0.75"}};
  doc["sampling"] = {{"n_users", 10},
                     {"min_reviews", 100},
                     {"history_length", 50},
                     {"pool_size", 100},
                     {"relevant_count", 50}};
  doc["matrix"] = {
      {"profile_variants", {"paragraph", "sentence"}},
      {"interventions", {"template", "llm_append", "llm_rewrite"}},
      {"emphasis", {"default", "stronger", "weaker"}},
      {"rankers", {"llm_score", "embedding"}},
      {"oracle", {false, true}},
      {"directions", {"increase", "decrease"}}};
  doc["metrics"] = {{"k_list", {10, 20}}};
  doc["seed"] = 20240601;
  doc["alpha"] = 0.05;
  doc["workers"] = 4;
  doc["max_in_flight"] = 4;
  doc["workspace"] = "workspace";
  doc["backends"] = {
      {"registry",
       {{"llama",
         {{"kind", "http-chat"},
          {"base_url", "${STEEREVAL_API_BASE}"},
          {"model", "meta-llama/Llama-3.1-8B-Instruct"},
          {"api_key", "${STEEREVAL_API_KEY}"},
          {"max_tokens", 512},
          {"temperature", 0.0}}},
        {"mxbai",
         {{"kind", "http-embed"},
          {"base_url", "${STEEREVAL_API_BASE}"},
          {"model", "mixedbread-ai/mxbai-embed-large-v1"},
          {"api_key", "${STEEREVAL_API_KEY}"},
          {"dim", 1024}}}}},
      {"generation", "llama"},
      {"embedding", "mxbai"}};
  return doc.dump(2) + "\n";
}

}  // namespace steereval

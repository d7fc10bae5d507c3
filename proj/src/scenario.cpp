#include "steereval/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/core.h>
#include <json.hpp>

#include "steereval/errors.hpp"
#include "steereval/hash.hpp"
#include "steereval/rng.hpp"

namespace steereval {

const char* direction_name(Direction direction) {
  return direction == Direction::Increase ? "increase" : "decrease";
}

Direction direction_from_name(const std::string& name) {
  if (name == "increase") return Direction::Increase;
  if (name == "decrease") return Direction::Decrease;
  throw Error(Errc::config_error, "unknown direction '" + name + "'");
}

std::uint64_t scenario_seed(std::uint64_t global_seed, const std::string& user_id,
                            const std::string& tag_id, Direction direction) {
  return stable_hash({fmt::format("{}", global_seed), user_id, tag_id,
                      direction_name(direction)});
}

std::uint64_t candidate_seed(std::uint64_t global_seed, const std::string& user_id,
                             const std::string& tag_id) {
  // No direction: both direction tasks share one candidate set.
  return stable_hash({fmt::format("{}", global_seed), user_id, tag_id, "candidates"});
}

std::vector<std::string> sample_users(const RatingsStore& ratings,
                                      std::size_t min_reviews, std::size_t n_users,
                                      std::uint64_t seed) {
  std::vector<std::string> eligible;
  for (const auto& [user, events] : ratings.by_user()) {
    if (events.size() >= min_reviews) eligible.push_back(user);
  }
  if (eligible.size() < n_users) {
    throw Error(Errc::not_enough_eligible_users,
                fmt::format("found {} eligible users, requested {}",
                            eligible.size(), n_users));
  }
  seeded_shuffle(eligible, stable_hash({fmt::format("{}", seed), "sample_users"}));
  eligible.resize(n_users);
  return eligible;
}

UserHistory build_history(const RatingsStore& ratings, const std::string& user_id,
                          std::size_t history_length) {
  const std::vector<RatingEvent>* events = ratings.find_user(user_id);
  if (events == nullptr) {
    throw Error(Errc::insufficient_history, "no ratings for user " + user_id);
  }
  UserHistory history;
  history.user_id = user_id;
  std::set<std::string> watched_ids;
  for (const RatingEvent& event : *events) {
    if (watched_ids.count(event.item_id)) continue;
    if (history.watched.size() < history_length) {
      history.watched.emplace_back(event.item_id, event.rating);
      watched_ids.insert(event.item_id);
    } else {
      history.next_item = event.item_id;
      break;
    }
  }
  if (history.watched.size() < history_length || history.next_item.empty()) {
    throw Error(Errc::insufficient_history,
                fmt::format("user {} has {} usable ratings, need {}", user_id,
                            history.watched.size(), history_length + 1));
  }
  return history;
}

namespace {

// Nearest-popularity picks from one relevance pool. The per-pool greedy
// choice is globally optimal because the two pools have fixed quotas.
std::vector<std::string> pick_nearest(const Catalog& catalog,
                                      std::vector<std::string> pool,
                                      double target_popularity, std::size_t need) {
  std::sort(pool.begin(), pool.end(),
            [&](const std::string& a, const std::string& b) {
              const double da = std::abs(catalog.at(a).popularity - target_popularity);
              const double db = std::abs(catalog.at(b).popularity - target_popularity);
              if (da != db) return da < db;
              return a < b;
            });
  pool.resize(need);
  return pool;
}

}  // namespace

std::vector<Candidate> build_candidates(const Catalog& catalog, const TagSpec& tag,
                                        const std::string& next_item,
                                        std::size_t pool_size,
                                        std::size_t relevant_count,
                                        std::uint64_t seed) {
  if (pool_size == 0 || relevant_count == 0 || relevant_count >= pool_size) {
    throw Error(Errc::config_error,
                fmt::format("bad pool shape {}/{}", relevant_count, pool_size));
  }
  const bool next_relevant = tag.relevant_items.count(next_item) > 0;
  const std::size_t irrelevant_count = pool_size - relevant_count;

  std::vector<std::string> relevant_pool;
  std::vector<std::string> irrelevant_pool;
  for (const Item& item : catalog.items()) {
    if (item.item_id == next_item) continue;
    if (tag.relevant_items.count(item.item_id)) relevant_pool.push_back(item.item_id);
    else irrelevant_pool.push_back(item.item_id);
  }

  const std::size_t need_relevant = relevant_count - (next_relevant ? 1 : 0);
  const std::size_t need_irrelevant = irrelevant_count - (next_relevant ? 0 : 1);
  if (relevant_pool.size() < need_relevant || irrelevant_pool.size() < need_irrelevant) {
    throw Error(Errc::insufficient_pool,
                fmt::format("need {} relevant and {} irrelevant, have {} and {}",
                            need_relevant, need_irrelevant, relevant_pool.size(),
                            irrelevant_pool.size()));
  }

  const double target = catalog.at(next_item).popularity;
  std::vector<Candidate> candidates;
  candidates.reserve(pool_size);
  candidates.push_back({next_item, next_relevant});
  for (std::string& id : pick_nearest(catalog, std::move(relevant_pool), target,
                                      need_relevant)) {
    candidates.push_back({std::move(id), true});
  }
  for (std::string& id : pick_nearest(catalog, std::move(irrelevant_pool), target,
                                      need_irrelevant)) {
    candidates.push_back({std::move(id), false});
  }
  // Presentation order must not leak relevance.
  seeded_shuffle(candidates, seed);
  return candidates;
}

RunPlan plan_run(const PlanParams& params, const Catalog& catalog,
                 const std::vector<TagSpec>& tags, const RatingsStore& ratings,
                 const std::vector<std::string>& users) {
  RunPlan plan;
  plan.params = params;
  plan.users = users;

  std::vector<const TagSpec*> included;
  for (const TagSpec& tag : tags) {
    if (!tag.excluded) included.push_back(&tag);
  }
  std::sort(included.begin(), included.end(),
            [](const TagSpec* a, const TagSpec* b) { return a->tag_id < b->tag_id; });

  std::vector<std::string> sorted_users = users;
  std::sort(sorted_users.begin(), sorted_users.end());

  for (const TagSpec* tag : included) {
    for (const std::string& user : sorted_users) {
      UserHistory history;
      try {
        history = build_history(ratings, user, params.history_length);
      } catch (const Error& e) {
        for (Direction direction : params.directions) {
          plan.skipped.push_back({user, tag->tag_id, direction_name(direction),
                                  e.what()});
        }
        continue;
      }
      std::vector<Candidate> candidates;
      try {
        candidates = build_candidates(catalog, *tag, history.next_item,
                                      params.pool_size, params.relevant_count,
                                      candidate_seed(params.global_seed, user,
                                                     tag->tag_id));
      } catch (const Error& e) {
        for (Direction direction : params.directions) {
          plan.skipped.push_back({user, tag->tag_id, direction_name(direction),
                                  e.what()});
        }
        continue;
      }
      for (Direction direction : params.directions) {
        Scenario scenario;
        scenario.scenario_id = fmt::format("{}__{}__{}", tag->tag_id, user,
                                           direction_name(direction));
        scenario.user_id = user;
        scenario.tag_id = tag->tag_id;
        scenario.direction = direction;
        scenario.candidates = candidates;
        scenario.next_item = history.next_item;
        scenario.seed = scenario_seed(params.global_seed, user, tag->tag_id,
                                      direction);
        plan.scenarios.push_back(std::move(scenario));
      }
    }
  }
  std::sort(plan.scenarios.begin(), plan.scenarios.end(),
            [](const Scenario& a, const Scenario& b) {
              return std::tie(a.tag_id, a.user_id, a.direction) <
                     std::tie(b.tag_id, b.user_id, b.direction);
            });
  return plan;
}

std::string serialize_run_plan(const RunPlan& plan) {
  nlohmann::json doc;
  nlohmann::json config;
  config["global_seed"] = plan.params.global_seed;
  config["n_users"] = plan.params.n_users;
  config["min_reviews"] = plan.params.min_reviews;
  config["history_length"] = plan.params.history_length;
  config["pool_size"] = plan.params.pool_size;
  config["relevant_count"] = plan.params.relevant_count;
  nlohmann::json directions = nlohmann::json::array();
  for (Direction d : plan.params.directions) directions.push_back(direction_name(d));
  config["directions"] = directions;
  doc["config"] = config;
  doc["users"] = plan.users;

  nlohmann::json skipped = nlohmann::json::array();
  for (const SkippedScenario& s : plan.skipped) {
    skipped.push_back({{"user_id", s.user_id},
                       {"tag_id", s.tag_id},
                       {"direction", s.direction},
                       {"reason", s.reason}});
  }
  doc["skipped"] = skipped;

  nlohmann::json scenarios = nlohmann::json::array();
  for (const Scenario& s : plan.scenarios) {
    nlohmann::json record;
    record["scenario_id"] = s.scenario_id;
    record["user_id"] = s.user_id;
    record["tag_id"] = s.tag_id;
    record["direction"] = direction_name(s.direction);
    record["next_item"] = s.next_item;
    record["seed"] = s.seed;
    nlohmann::json candidates = nlohmann::json::array();
    for (const Candidate& c : s.candidates) {
      candidates.push_back({{"item_id", c.item_id}, {"relevant", c.relevant}});
    }
    record["candidates"] = candidates;
    scenarios.push_back(std::move(record));
  }
  doc["scenarios"] = scenarios;
  return doc.dump(2) + "\n";
}

void save_run_plan(const RunPlan& plan, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path);
  out << serialize_run_plan(plan);
}

RunPlan load_run_plan(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(Errc::malformed_record, path + ": bad JSON");

  RunPlan plan;
  const auto& config = doc.at("config");
  plan.params.global_seed = config.at("global_seed").get<std::uint64_t>();
  plan.params.n_users = config.at("n_users").get<std::size_t>();
  plan.params.min_reviews = config.at("min_reviews").get<std::size_t>();
  plan.params.history_length = config.at("history_length").get<std::size_t>();
  plan.params.pool_size = config.at("pool_size").get<std::size_t>();
  plan.params.relevant_count = config.at("relevant_count").get<std::size_t>();
  plan.params.directions.clear();
  for (const auto& d : config.at("directions")) {
    plan.params.directions.push_back(direction_from_name(d.get<std::string>()));
  }
  plan.users = doc.at("users").get<std::vector<std::string>>();
  for (const auto& s : doc.at("skipped")) {
    plan.skipped.push_back({s.at("user_id").get<std::string>(),
                            s.at("tag_id").get<std::string>(),
                            s.at("direction").get<std::string>(),
                            s.at("reason").get<std::string>()});
  }
  for (const auto& record : doc.at("scenarios")) {
    Scenario s;
    s.scenario_id = record.at("scenario_id").get<std::string>();
    s.user_id = record.at("user_id").get<std::string>();
    s.tag_id = record.at("tag_id").get<std::string>();
    s.direction = direction_from_name(record.at("direction").get<std::string>());
    s.next_item = record.at("next_item").get<std::string>();
    s.seed = record.at("seed").get<std::uint64_t>();
    for (const auto& c : record.at("candidates")) {
      s.candidates.push_back({c.at("item_id").get<std::string>(),
                              c.at("relevant").get<bool>()});
    }
    plan.scenarios.push_back(std::move(s));
  }
  return plan;
}

}  // namespace steereval

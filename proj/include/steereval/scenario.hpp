#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "steereval/corpus.hpp"

namespace steereval {

enum class Direction { Increase, Decrease };

const char* direction_name(Direction direction);
Direction direction_from_name(const std::string& name);

struct Candidate {
  std::string item_id;
  bool relevant = false;
};

struct Scenario {
  std::string scenario_id;
  std::string user_id;
  std::string tag_id;
  Direction direction = Direction::Increase;
  std::vector<Candidate> candidates;  // presentation order
  std::string next_item;
  std::uint64_t seed = 0;
};

struct SkippedScenario {
  std::string user_id;
  std::string tag_id;
  std::string direction;
  std::string reason;
};

struct PlanParams {
  std::uint64_t global_seed = 0;
  std::size_t n_users = 10;
  std::size_t min_reviews = 100;
  std::size_t history_length = 50;
  std::size_t pool_size = 100;
  std::size_t relevant_count = 50;
  std::vector<Direction> directions = {Direction::Increase, Direction::Decrease};
};

struct RunPlan {
  PlanParams params;
  std::vector<std::string> users;  // sampled order
  std::vector<Scenario> scenarios;  // sorted by (tag_id, user_id, direction)
  std::vector<SkippedScenario> skipped;
};

// Deterministic sample: eligible users shuffled by seed, first n taken.
std::vector<std::string> sample_users(const RatingsStore& ratings,
                                      std::size_t min_reviews, std::size_t n_users,
                                      std::uint64_t seed);

// First history_length catalog items in (timestamp, item_id) order; the
// following item becomes next_item. Repeat events for an already-watched
// item are skipped so next_item never appears in the window.
UserHistory build_history(const RatingsStore& ratings, const std::string& user_id,
                          std::size_t history_length);

// Popularity-matched candidate pool around next_item. Within each relevance
// pool the non-next picks minimize |popularity - popularity(next_item)| with
// item_id as tie-break; the returned order is a seeded shuffle.
std::vector<Candidate> build_candidates(const Catalog& catalog, const TagSpec& tag,
                                        const std::string& next_item,
                                        std::size_t pool_size,
                                        std::size_t relevant_count,
                                        std::uint64_t seed);

// Cartesian product of included tags x sampled users x directions.
// Scenario construction failures are recorded in plan.skipped, not thrown.
RunPlan plan_run(const PlanParams& params, const Catalog& catalog,
                 const std::vector<TagSpec>& tags, const RatingsStore& ratings,
                 const std::vector<std::string>& users);

std::string serialize_run_plan(const RunPlan& plan);
void save_run_plan(const RunPlan& plan, const std::string& path);
RunPlan load_run_plan(const std::string& path);

// Seed derivations, all rooted in the one global seed.
std::uint64_t scenario_seed(std::uint64_t global_seed, const std::string& user_id,
                            const std::string& tag_id, Direction direction);
std::uint64_t candidate_seed(std::uint64_t global_seed, const std::string& user_id,
                             const std::string& tag_id);

}  // namespace steereval

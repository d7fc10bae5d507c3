#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "steereval/corpus.hpp"
#include "steereval/gateway.hpp"
#include "steereval/prompts.hpp"
#include "steereval/scenario.hpp"

namespace steereval {

enum class RankerKind { LlmScore, Embedding };

const char* ranker_name(RankerKind kind);
RankerKind ranker_from_name(const std::string& name);

enum class ProfileStage { Original, Steered };
const char* profile_stage_name(ProfileStage stage);

struct RankedItem {
  std::string item_id;
  double score = 0.0;
};

struct Ranking {
  std::string scenario_id;
  ProfileStage stage = ProfileStage::Original;
  std::vector<RankedItem> items;  // scores non-increasing
  std::uint64_t tie_seed = 0;
};

struct BlurbOptions {
  // Oracle tag-note wording; {clause} is substituted.
  std::string match_note = "Tag note: this movie matches '{clause}'.";
  std::string no_match_note = "Tag note: this movie does not match '{clause}'.";
};

// Item metadata text, optionally augmented with the true-relevance note.
std::string make_blurb(const Item& item, bool oracle, const TagSpec* tag,
                       const BlurbOptions& options = {});

struct RankerOptions {
  std::string generation_backend_id;
  std::string embedding_backend_id;
  int max_tokens = 64;
  double temperature = 0.0;
  bool oracle = false;
  BlurbOptions blurb;
};

// Cosine similarity between the profile embedding and each blurb embedding.
Ranking rank_by_embedding(const std::string& profile_text,
                          const std::vector<Candidate>& candidates,
                          const Catalog& catalog, const TagSpec& tag,
                          Gateway& gateway, std::uint64_t tie_seed,
                          const RankerOptions& options);

// One score-prediction prompt per candidate; parse_score on each completion.
Ranking rank_by_llm_score(const std::string& profile_text,
                          const std::vector<Candidate>& candidates,
                          const Catalog& catalog, const TagSpec& tag,
                          Gateway& gateway, std::uint64_t tie_seed,
                          const RankerOptions& options);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Shared ordering rule: seeded shuffle then stable sort on descending score,
// so exact ties land in a reproducible random order.
std::vector<RankedItem> order_by_score(std::vector<RankedItem> items,
                                       std::uint64_t tie_seed);

}  // namespace steereval

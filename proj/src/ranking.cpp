#include "steereval/ranking.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "steereval/errors.hpp"
#include "steereval/rng.hpp"
#include "steereval/strings.hpp"

namespace steereval {

const char* ranker_name(RankerKind kind) {
  return kind == RankerKind::LlmScore ? "llm_score" : "embedding";
}

RankerKind ranker_from_name(const std::string& name) {
  if (name == "llm_score") return RankerKind::LlmScore;
  if (name == "embedding") return RankerKind::Embedding;
  throw Error(Errc::config_error, "unknown ranker '" + name + "'");
}

const char* profile_stage_name(ProfileStage stage) {
  return stage == ProfileStage::Original ? "original" : "steered";
}

std::string make_blurb(const Item& item, bool oracle, const TagSpec* tag,
                       const BlurbOptions& options) {
  std::string blurb = item_blurb_text(item);
  if (!oracle) return blurb;
  if (tag == nullptr) {
    throw Error(Errc::config_error, "oracle blurb requested without a tag");
  }
  const bool relevant = tag->relevant_items.count(item.item_id) > 0;
  const std::string& note = relevant ? options.match_note : options.no_match_note;
  blurb += "\n" + replace_all(note, "{clause}", tag->clause);
  return blurb;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::dimension_mismatch,
                fmt::format("cosine over dims {} and {}", a.size(), b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw Error(Errc::zero_vector, "zero-norm embedding in cosine similarity");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<RankedItem> order_by_score(std::vector<RankedItem> items,
                                       std::uint64_t tie_seed) {
  seeded_shuffle(items, tie_seed);
  std::stable_sort(items.begin(), items.end(),
                   [](const RankedItem& a, const RankedItem& b) {
                     return a.score > b.score;
                   });
  return items;
}

Ranking rank_by_embedding(const std::string& profile_text,
                          const std::vector<Candidate>& candidates,
                          const Catalog& catalog, const TagSpec& tag,
                          Gateway& gateway, std::uint64_t tie_seed,
                          const RankerOptions& options) {
  if (candidates.empty()) {
    throw Error(Errc::config_error, "empty candidate list");
  }
  const EmbeddingVector profile_vec =
      gateway.embed(options.embedding_backend_id, profile_text);

  std::vector<RankedItem> items;
  items.reserve(candidates.size());
  for (const Candidate& candidate : candidates) {
    const Item& item = catalog.at(candidate.item_id);
    const std::string blurb =
        make_blurb(item, options.oracle, options.oracle ? &tag : nullptr,
                   options.blurb);
    const EmbeddingVector blurb_vec =
        gateway.embed(options.embedding_backend_id, blurb);
    items.push_back({candidate.item_id,
                     cosine_similarity(profile_vec.values, blurb_vec.values)});
  }

  Ranking ranking;
  ranking.stage = ProfileStage::Original;
  ranking.items = order_by_score(std::move(items), tie_seed);
  ranking.tie_seed = tie_seed;
  return ranking;
}

Ranking rank_by_llm_score(const std::string& profile_text,
                          const std::vector<Candidate>& candidates,
                          const Catalog& catalog, const TagSpec& tag,
                          Gateway& gateway, std::uint64_t tie_seed,
                          const RankerOptions& options) {
  if (candidates.empty()) {
    throw Error(Errc::config_error, "empty candidate list");
  }
  std::vector<RankedItem> items;
  items.reserve(candidates.size());
  for (const Candidate& candidate : candidates) {
    const Item& item = catalog.at(candidate.item_id);
    const std::string blurb =
        make_blurb(item, options.oracle, options.oracle ? &tag : nullptr,
                   options.blurb);
    const std::string prompt = render_score_prompt(profile_text, blurb);
    GenRequest request{options.generation_backend_id, prompt, options.max_tokens,
                       options.temperature};
    const GenResponse response = gateway.generate(request);
    items.push_back({candidate.item_id, parse_score(response.text)});
  }

  Ranking ranking;
  ranking.stage = ProfileStage::Original;
  ranking.items = order_by_score(std::move(items), tie_seed);
  ranking.tie_seed = tie_seed;
  return ranking;
}

}  // namespace steereval

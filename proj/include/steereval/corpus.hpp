#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace steereval {

struct Item {
  std::string item_id;
  std::string title;
  std::string description;
  double popularity = 0.0;
};

// Immutable after construction; items sorted by item_id.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<Item> items);

  const std::vector<Item>& items() const { return items_; }
  bool contains(const std::string& item_id) const;
  const Item& at(const std::string& item_id) const;
  std::size_t size() const { return items_.size(); }

 private:
  std::vector<Item> items_;
  std::map<std::string, std::size_t> index_;
};

struct RatingEvent {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;
  std::int64_t timestamp = 0;
};

// Per-user rating events on catalog items, sorted by (timestamp, item_id).
class RatingsStore {
 public:
  RatingsStore() = default;
  explicit RatingsStore(std::map<std::string, std::vector<RatingEvent>> by_user)
      : by_user_(std::move(by_user)) {}

  const std::map<std::string, std::vector<RatingEvent>>& by_user() const {
    return by_user_;
  }
  const std::vector<RatingEvent>* find_user(const std::string& user_id) const;
  std::size_t user_count() const { return by_user_.size(); }

 private:
  std::map<std::string, std::vector<RatingEvent>> by_user_;
};

enum class TagGroup { Genre, Trigger };

const char* tag_group_name(TagGroup group);
TagGroup tag_group_from_name(const std::string& name);

struct TagSpec {
  std::string tag_id;
  TagGroup group = TagGroup::Genre;
  std::string clause;
  std::set<std::string> relevant_items;
  bool excluded = false;
};

struct UserHistory {
  std::string user_id;
  std::vector<std::pair<std::string, double>> watched;  // (item_id, rating)
  std::string next_item;
};

// items file: one JSON object per line
// {"item_id": str, "title": str, "description": str, "popularity": number}.
// Items with an empty description are dropped; duplicate ids are an error.
Catalog ingest_catalog(const std::string& items_path);

// ratings file: CSV header user_id,item_id,rating,timestamp.
// Events referencing items outside the filtered catalog are dropped
// (the rating history may cover more of the source dataset than the
// description-filtered catalog does).
RatingsStore ingest_ratings(const std::string& ratings_path, const Catalog& catalog);

// genre links file: CSV header item_id,genre. One TagSpec per distinct genre,
// clause = genre name verbatim, tag_id = genre name.
std::vector<TagSpec> ingest_genre_tags(const std::string& links_path,
                                       const Catalog& catalog);

// trigger votes file: CSV header tag_id,clause,item_id,yes_votes,total_votes.
// An item is relevant iff yes/total > threshold, compared exactly via
// cross-multiplication. threshold is a decimal literal such as "0.75".
std::vector<TagSpec> ingest_trigger_tags(const std::string& votes_path,
                                         const std::string& threshold,
                                         const Catalog& catalog);

// Exact relevance predicate shared with ingest_trigger_tags.
bool trigger_vote_relevant(std::int64_t yes_votes, std::int64_t total_votes,
                           std::int64_t threshold_num, std::int64_t threshold_den);

struct ExclusionReport {
  std::size_t excluded = 0;
  std::size_t included = 0;
  std::vector<std::string> unknown_tags;  // warnings, not fatal
};

// exclusion file: one tag_id per line, '#' comments allowed.
ExclusionReport apply_tag_exclusions(std::vector<TagSpec>& tags,
                                     const std::string& exclusion_path);

// Canonical on-disk stores (workspace copies written by `ingest`).
void save_catalog(const Catalog& catalog, const std::string& path);
void save_ratings(const RatingsStore& ratings, const std::string& path);
void save_tags(const std::vector<TagSpec>& tags, const std::string& path);
std::vector<TagSpec> load_tags(const std::string& path);

}  // namespace steereval

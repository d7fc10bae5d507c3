#include "steereval/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <fmt/core.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "steereval/csv.hpp"
#include "steereval/errors.hpp"
#include "steereval/strings.hpp"

namespace steereval {

namespace {

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  return in;
}

void expect_header(CsvReader& reader, const std::string& path,
                   const std::vector<std::string>& expected) {
  std::vector<std::string> fields;
  if (!reader.next(fields) || fields != expected) {
    throw Error(Errc::malformed_record,
                fmt::format("{}:1: expected header '{}'", path,
                            fmt::join(expected, ",")));
  }
}

double parse_real(const std::string& text, const std::string& path,
                  std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(value)) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw Error(Errc::malformed_record,
                fmt::format("{}:{}: bad {} '{}'", path, line, what, text));
  }
}

std::int64_t parse_int(const std::string& text, const std::string& path,
                       std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    const std::int64_t value = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw Error(Errc::malformed_record,
                fmt::format("{}:{}: bad {} '{}'", path, line, what, text));
  }
}

}  // namespace

Catalog::Catalog(std::vector<Item> items) : items_(std::move(items)) {
  std::sort(items_.begin(), items_.end(),
            [](const Item& a, const Item& b) { return a.item_id < b.item_id; });
  for (std::size_t i = 0; i < items_.size(); ++i) index_[items_[i].item_id] = i;
}

bool Catalog::contains(const std::string& item_id) const {
  return index_.count(item_id) > 0;
}

const Item& Catalog::at(const std::string& item_id) const {
  auto it = index_.find(item_id);
  if (it == index_.end()) throw Error(Errc::unknown_item, item_id);
  return items_[it->second];
}

const std::vector<RatingEvent>* RatingsStore::find_user(
    const std::string& user_id) const {
  auto it = by_user_.find(user_id);
  return it == by_user_.end() ? nullptr : &it->second;
}

const char* tag_group_name(TagGroup group) {
  return group == TagGroup::Genre ? "Genre" : "Trigger";
}

TagGroup tag_group_from_name(const std::string& name) {
  if (name == "Genre") return TagGroup::Genre;
  if (name == "Trigger") return TagGroup::Trigger;
  throw Error(Errc::malformed_record, "unknown tag group '" + name + "'");
}

Catalog ingest_catalog(const std::string& items_path) {
  std::ifstream in = open_or_throw(items_path);
  std::vector<Item> kept;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object() ||
        !record.contains("item_id") || !record["item_id"].is_string() ||
        !record.contains("title") || !record["title"].is_string() ||
        !record.contains("description") || !record["description"].is_string() ||
        !record.contains("popularity") || !record["popularity"].is_number()) {
      throw Error(Errc::malformed_record,
                  fmt::format("{}:{}: not a valid item record", items_path, line_no));
    }
    Item item;
    item.item_id = record["item_id"].get<std::string>();
    item.title = record["title"].get<std::string>();
    item.description = record["description"].get<std::string>();
    item.popularity = record["popularity"].get<double>();
    if (item.popularity < 0.0 || !std::isfinite(item.popularity)) {
      throw Error(Errc::malformed_record,
                  fmt::format("{}:{}: negative popularity", items_path, line_no));
    }
    if (!seen.insert(item.item_id).second) {
      throw Error(Errc::duplicate_item, item.item_id);
    }
    if (item.description.empty()) continue;
    kept.push_back(std::move(item));
  }
  return Catalog(std::move(kept));
}

RatingsStore ingest_ratings(const std::string& ratings_path, const Catalog& catalog) {
  std::ifstream in = open_or_throw(ratings_path);
  CsvReader reader(in);
  expect_header(reader, ratings_path, {"user_id", "item_id", "rating", "timestamp"});

  std::map<std::string, std::vector<RatingEvent>> by_user;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // trailing newline
    const std::size_t line = reader.line_number();
    if (fields.size() != 4) {
      throw Error(Errc::malformed_record,
                  fmt::format("{}:{}: expected 4 fields, got {}", ratings_path,
                              line, fields.size()));
    }
    RatingEvent event;
    event.user_id = fields[0];
    event.item_id = fields[1];
    event.rating = parse_real(fields[2], ratings_path, line, "rating");
    event.timestamp = parse_int(fields[3], ratings_path, line, "timestamp");
    if (event.user_id.empty() || event.item_id.empty()) {
      throw Error(Errc::malformed_record,
                  fmt::format("{}:{}: empty user or item id", ratings_path, line));
    }
    if (event.rating < 0.5 || event.rating > 5.0) {
      throw Error(Errc::malformed_record,
                  fmt::format("{}:{}: rating {} outside [0.5, 5.0]", ratings_path,
                              line, fields[2]));
    }
    if (!catalog.contains(event.item_id)) continue;
    by_user[event.user_id].push_back(std::move(event));
  }
  for (auto& [user, events] : by_user) {
    std::stable_sort(events.begin(), events.end(),
                     [](const RatingEvent& a, const RatingEvent& b) {
                       if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                       return a.item_id < b.item_id;
                     });
  }
  return RatingsStore(std::move(by_user));
}

std::vector<TagSpec> ingest_genre_tags(const std::string& links_path,
                                       const Catalog& catalog) {
  std::ifstream in = open_or_throw(links_path);
  CsvReader reader(in);
  expect_header(reader, links_path, {"item_id", "genre"});

  std::map<std::string, std::set<std::string>> by_genre;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    const std::size_t line = reader.line_number();
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw Error(Errc::malformed_record,
                  fmt::format("{}:{}: expected item_id,genre", links_path, line));
    }
    if (!catalog.contains(fields[0])) {
      throw Error(Errc::unknown_item,
                  fmt::format("{}:{}: {}", links_path, line, fields[0]));
    }
    by_genre[fields[1]].insert(fields[0]);
  }

  std::vector<TagSpec> tags;
  for (auto& [genre, items] : by_genre) {
    TagSpec tag;
    tag.tag_id = genre;
    tag.group = TagGroup::Genre;
    tag.clause = genre;
    tag.relevant_items = std::move(items);
    tags.push_back(std::move(tag));
  }
  return tags;
}

bool trigger_vote_relevant(std::int64_t yes_votes, std::int64_t total_votes,
                           std::int64_t threshold_num, std::int64_t threshold_den) {
  // yes/total > num/den  <=>  yes*den > num*total, exactly.
  return yes_votes * threshold_den > threshold_num * total_votes;
}

std::vector<TagSpec> ingest_trigger_tags(const std::string& votes_path,
                                         const std::string& threshold,
                                         const Catalog& catalog) {
  const Rational th = rational_from_decimal(threshold);
  std::ifstream in = open_or_throw(votes_path);
  CsvReader reader(in);
  expect_header(reader, votes_path,
                {"tag_id", "clause", "item_id", "yes_votes", "total_votes"});

  std::map<std::string, TagSpec> by_tag;
  std::set<std::pair<std::string, std::string>> seen_votes;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    const std::size_t line = reader.line_number();
    if (fields.size() != 5 || fields[0].empty() || fields[1].empty() ||
        fields[2].empty()) {
      throw Error(Errc::malformed_record,
                  fmt::format("{}:{}: expected tag_id,clause,item_id,yes_votes,"
                              "total_votes", votes_path, line));
    }
    const std::int64_t yes = parse_int(fields[3], votes_path, line, "yes_votes");
    const std::int64_t total = parse_int(fields[4], votes_path, line, "total_votes");
    if (total < 1 || yes < 0 || yes > total) {
      throw Error(Errc::malformed_record,
                  fmt::format("{}:{}: bad vote counts {}/{}", votes_path, line,
                              fields[3], fields[4]));
    }
    if (!catalog.contains(fields[2])) {
      throw Error(Errc::unknown_item,
                  fmt::format("{}:{}: {}", votes_path, line, fields[2]));
    }
    if (!seen_votes.insert({fields[0], fields[2]}).second) {
      throw Error(Errc::malformed_record,
                  fmt::format("{}:{}: duplicate vote row for tag '{}' item '{}'",
                              votes_path, line, fields[0], fields[2]));
    }
    auto [it, inserted] = by_tag.try_emplace(fields[0]);
    TagSpec& tag = it->second;
    if (inserted) {
      tag.tag_id = fields[0];
      tag.group = TagGroup::Trigger;
      tag.clause = fields[1];
    } else if (tag.clause != fields[1]) {
      throw Error(Errc::malformed_record,
                  fmt::format("{}:{}: tag '{}' has conflicting clauses", votes_path,
                              line, fields[0]));
    }
    if (trigger_vote_relevant(yes, total, th.num, th.den)) {
      tag.relevant_items.insert(fields[2]);
    }
  }

  std::vector<TagSpec> tags;
  tags.reserve(by_tag.size());
  for (auto& [id, tag] : by_tag) tags.push_back(std::move(tag));
  return tags;
}

ExclusionReport apply_tag_exclusions(std::vector<TagSpec>& tags,
                                     const std::string& exclusion_path) {
  std::ifstream in = open_or_throw(exclusion_path);
  std::set<std::string> listed;
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string id = trim(line);
    if (!id.empty()) listed.insert(id);
  }

  ExclusionReport report;
  std::set<std::string> known;
  for (TagSpec& tag : tags) {
    known.insert(tag.tag_id);
    if (listed.count(tag.tag_id)) tag.excluded = true;
    if (tag.excluded) ++report.excluded;
    else ++report.included;
  }
  for (const std::string& id : listed) {
    if (!known.count(id)) report.unknown_tags.push_back(id);
  }
  return report;
}

void save_catalog(const Catalog& catalog, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path);
  for (const Item& item : catalog.items()) {
    nlohmann::json record;
    record["item_id"] = item.item_id;
    record["title"] = item.title;
    record["description"] = item.description;
    record["popularity"] = item.popularity;
    out << record.dump() << '\n';
  }
}

void save_ratings(const RatingsStore& ratings, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path);
  write_csv_row(out, {"user_id", "item_id", "rating", "timestamp"});
  for (const auto& [user, events] : ratings.by_user()) {
    for (const RatingEvent& event : events) {
      write_csv_row(out, {event.user_id, event.item_id,
                          fmt::format("{:g}", event.rating),
                          fmt::format("{}", event.timestamp)});
    }
  }
}

void save_tags(const std::vector<TagSpec>& tags, const std::string& path) {
  nlohmann::json array = nlohmann::json::array();
  std::vector<const TagSpec*> ordered;
  for (const TagSpec& tag : tags) ordered.push_back(&tag);
  std::sort(ordered.begin(), ordered.end(), [](const TagSpec* a, const TagSpec* b) {
    if (a->group != b->group) return a->group < b->group;
    return a->tag_id < b->tag_id;
  });
  for (const TagSpec* tag : ordered) {
    nlohmann::json record;
    record["tag_id"] = tag->tag_id;
    record["group"] = tag_group_name(tag->group);
    record["clause"] = tag->clause;
    record["relevant_items"] = tag->relevant_items;
    record["excluded"] = tag->excluded;
    array.push_back(std::move(record));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path);
  out << array.dump(2) << '\n';
}

std::vector<TagSpec> load_tags(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  nlohmann::json array = nlohmann::json::parse(in, nullptr, false);
  if (array.is_discarded() || !array.is_array()) {
    throw Error(Errc::malformed_record, path + ": not a tag array");
  }
  std::vector<TagSpec> tags;
  for (const auto& record : array) {
    TagSpec tag;
    tag.tag_id = record.at("tag_id").get<std::string>();
    tag.group = tag_group_from_name(record.at("group").get<std::string>());
    tag.clause = record.at("clause").get<std::string>();
    for (const auto& item : record.at("relevant_items")) {
      tag.relevant_items.insert(item.get<std::string>());
    }
    tag.excluded = record.at("excluded").get<bool>();
    tags.push_back(std::move(tag));
  }
  return tags;
}

}  // namespace steereval

#include <doctest.h>

#include <fstream>

#include "oracles.hpp"
#include "steereval/corpus.hpp"
#include "steereval/errors.hpp"
#include "steereval/rng.hpp"
#include "test_support.hpp"

using namespace steereval;
using test_support::TempDir;
using test_support::write_file;

namespace {
const std::string kFixtures = std::string(STEEREVAL_TEST_DATA_DIR) + "/fixtures";
}

TEST_CASE("ingest_catalog filters empty descriptions") {
  const Catalog catalog = ingest_catalog(kFixtures + "/items.jsonl");
  CHECK(catalog.size() == 6);  // m4 has no description
  CHECK_FALSE(catalog.contains("m4"));
  CHECK(catalog.at("m1").title == "The Harbor Light");
  CHECK(catalog.at("m2").popularity == doctest::Approx(30.5));
}

TEST_CASE("ingest_catalog rejects bad records") {
  TempDir dir("catalog");

  SUBCASE("missing popularity") {
    write_file(dir.file("items.jsonl"),
               "{\"item_id\": \"a\", \"title\": \"t\", \"description\": \"d\"}\n");
    CHECK_THROWS_WITH_AS(ingest_catalog(dir.file("items.jsonl")),
                         doctest::Contains("items.jsonl:1"), Error);
  }
  SUBCASE("duplicate item id") {
    write_file(dir.file("items.jsonl"),
               "{\"item_id\": \"m1\", \"title\": \"t\", \"description\": \"d\", "
               "\"popularity\": 1}\n"
               "{\"item_id\": \"m1\", \"title\": \"t2\", \"description\": \"d2\", "
               "\"popularity\": 2}\n");
    try {
      ingest_catalog(dir.file("items.jsonl"));
      FAIL("expected DuplicateItem");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::duplicate_item);
      CHECK(std::string(e.what()).find("m1") != std::string::npos);
    }
  }
  SUBCASE("duplicate is an error even when one copy is filtered") {
    write_file(dir.file("items.jsonl"),
               "{\"item_id\": \"m1\", \"title\": \"t\", \"description\": \"\", "
               "\"popularity\": 1}\n"
               "{\"item_id\": \"m1\", \"title\": \"t2\", \"description\": \"d2\", "
               "\"popularity\": 2}\n");
    CHECK_THROWS_AS(ingest_catalog(dir.file("items.jsonl")), Error);
  }
  SUBCASE("negative popularity") {
    write_file(dir.file("items.jsonl"),
               "{\"item_id\": \"a\", \"title\": \"t\", \"description\": \"d\", "
               "\"popularity\": -1}\n");
    CHECK_THROWS_AS(ingest_catalog(dir.file("items.jsonl")), Error);
  }
}

TEST_CASE("ingest_ratings sorts and validates") {
  const Catalog catalog = ingest_catalog(kFixtures + "/items.jsonl");
  const RatingsStore ratings = ingest_ratings(kFixtures + "/ratings.csv", catalog);
  CHECK(ratings.user_count() == 2);

  // bob rated m2 and m1 at the same timestamp; item_id breaks the tie.
  const auto* bob = ratings.find_user("bob");
  REQUIRE(bob != nullptr);
  CHECK(bob->at(0).item_id == "m1");
  CHECK(bob->at(1).item_id == "m2");

  TempDir dir("ratings");
  SUBCASE("rating out of range") {
    write_file(dir.file("r.csv"), "user_id,item_id,rating,timestamp\nu,m1,5.5,1\n");
    CHECK_THROWS_AS(ingest_ratings(dir.file("r.csv"), catalog), Error);
  }
  SUBCASE("events on unknown items are dropped, not fatal") {
    write_file(dir.file("r.csv"),
               "user_id,item_id,rating,timestamp\nu,m1,4.0,1\nu,zz,4.0,2\n");
    const RatingsStore store = ingest_ratings(dir.file("r.csv"), catalog);
    CHECK(store.find_user("u")->size() == 1);
  }
  SUBCASE("wrong header") {
    write_file(dir.file("r.csv"), "user,item,rating,ts\n");
    CHECK_THROWS_AS(ingest_ratings(dir.file("r.csv"), catalog), Error);
  }
}

TEST_CASE("ingest_genre_tags groups links per genre") {
  const Catalog catalog = ingest_catalog(kFixtures + "/items.jsonl");
  const std::vector<TagSpec> tags =
      ingest_genre_tags(kFixtures + "/genre_links.csv", catalog);
  REQUIRE(tags.size() == 2);
  CHECK(tags[0].tag_id == "Mystery");
  CHECK(tags[0].clause == "Mystery");
  CHECK(tags[0].group == TagGroup::Genre);
  CHECK(tags[0].relevant_items == std::set<std::string>{"m1", "m2"});
  CHECK(tags[1].tag_id == "War");
  CHECK(tags[1].relevant_items == std::set<std::string>{"m3"});

  TempDir dir("genre");
  SUBCASE("empty link file gives empty tag list") {
    write_file(dir.file("links.csv"), "item_id,genre\n");
    CHECK(ingest_genre_tags(dir.file("links.csv"), catalog).empty());
  }
  SUBCASE("unknown item is fatal") {
    write_file(dir.file("links.csv"), "item_id,genre\nnope,Mystery\n");
    try {
      ingest_genre_tags(dir.file("links.csv"), catalog);
      FAIL("expected UnknownItem");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::unknown_item);
    }
  }
}

TEST_CASE("ingest_trigger_tags applies the strict vote threshold") {
  const Catalog catalog = ingest_catalog(kFixtures + "/items.jsonl");
  const std::vector<TagSpec> tags =
      ingest_trigger_tags(kFixtures + "/trigger_votes.csv", "0.75", catalog);
  REQUIRE(tags.size() == 1);
  const TagSpec& tag = tags[0];
  CHECK(tag.group == TagGroup::Trigger);
  CHECK(tag.clause == "the dog dies");
  CHECK(tag.relevant_items.count("m1") == 1);   // 0.76 > 0.75
  CHECK(tag.relevant_items.count("m2") == 0);   // 0.75 is not over 0.75
  CHECK(tag.relevant_items.count("m3") == 0);   // 3/4 = 0.75 exactly
  CHECK(tag.relevant_items.count("m5") == 1);   // 0.90
}

TEST_CASE("trigger predicate matches exact rational arithmetic") {
  // Random vote counts against an independent wide-integer oracle.
  SplitMix64 rng(2024);
  const std::pair<std::int64_t, std::int64_t> thresholds[] = {
      {75, 100}, {3, 4}, {1, 2}, {6, 10}, {999, 1000}};
  for (int trial = 0; trial < 5000; ++trial) {
    const auto [num, den] = thresholds[trial % 5];
    const std::int64_t total = 1 + static_cast<std::int64_t>(rng.below(1000));
    const std::int64_t yes = static_cast<std::int64_t>(rng.below(total + 1));
    CHECK(trigger_vote_relevant(yes, total, num, den) ==
          oracles::vote_exceeds(yes, total, num, den));
  }
}

TEST_CASE("apply_tag_exclusions") {
  const Catalog catalog = ingest_catalog(kFixtures + "/items.jsonl");
  std::vector<TagSpec> tags = ingest_genre_tags(kFixtures + "/genre_links.csv", catalog);
  for (TagSpec& tag : ingest_trigger_tags(kFixtures + "/trigger_votes.csv", "0.75",
                                          catalog)) {
    tags.push_back(std::move(tag));
  }

  const ExclusionReport report =
      apply_tag_exclusions(tags, kFixtures + "/exclusions.txt");
  CHECK(report.excluded == 1);
  CHECK(report.included == 2);
  REQUIRE(report.unknown_tags.size() == 1);
  CHECK(report.unknown_tags[0] == "xyz");  // warning only
  for (const TagSpec& tag : tags) {
    CHECK(tag.excluded == (tag.tag_id == "dog_dies"));
  }

  TempDir dir("excl");
  SUBCASE("empty exclusion file keeps everything") {
    write_file(dir.file("none.txt"), "# nothing listed\n");
    std::vector<TagSpec> fresh =
        ingest_genre_tags(kFixtures + "/genre_links.csv", catalog);
    const ExclusionReport r = apply_tag_exclusions(fresh, dir.file("none.txt"));
    CHECK(r.excluded == 0);
    CHECK(r.included == 2);
    CHECK(r.unknown_tags.empty());
  }
}

TEST_CASE("paper-scale exclusion arithmetic: 128 trigger tags minus 53") {
  TempDir dir("bulk");
  std::string items;
  items +=
      "{\"item_id\": \"x1\", \"title\": \"T\", \"description\": \"d\", "
      "\"popularity\": 1}\n";
  write_file(dir.file("items.jsonl"), items);
  const Catalog catalog = ingest_catalog(dir.file("items.jsonl"));

  std::string votes = "tag_id,clause,item_id,yes_votes,total_votes\n";
  std::string exclusions;
  for (int i = 1; i <= 128; ++i) {
    votes += fmt::format("t{:03},clause {},x1,80,100\n", i, i);
    if (i <= 53) exclusions += fmt::format("t{:03}\n", i);
  }
  write_file(dir.file("votes.csv"), votes);
  write_file(dir.file("excl.txt"), exclusions);

  std::vector<TagSpec> tags =
      ingest_trigger_tags(dir.file("votes.csv"), "0.75", catalog);
  REQUIRE(tags.size() == 128);
  const ExclusionReport report = apply_tag_exclusions(tags, dir.file("excl.txt"));
  CHECK(report.excluded == 53);
  CHECK(report.included == 75);
}

TEST_CASE("ingestion is idempotent and tag items stay inside the catalog") {
  const Catalog a = ingest_catalog(kFixtures + "/items.jsonl");
  const Catalog b = ingest_catalog(kFixtures + "/items.jsonl");
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.items().size(); ++i) {
    CHECK(a.items()[i].item_id == b.items()[i].item_id);
    CHECK(a.items()[i].popularity == b.items()[i].popularity);
  }

  // canonical round trip: save then re-ingest gives the same store
  TempDir dir("canon");
  save_catalog(a, dir.file("items.jsonl"));
  const Catalog c = ingest_catalog(dir.file("items.jsonl"));
  REQUIRE(c.size() == a.size());
  for (std::size_t i = 0; i < a.items().size(); ++i) {
    CHECK(c.items()[i].item_id == a.items()[i].item_id);
    CHECK(c.items()[i].description == a.items()[i].description);
  }

  std::vector<TagSpec> tags = ingest_genre_tags(kFixtures + "/genre_links.csv", a);
  for (TagSpec& tag : ingest_trigger_tags(kFixtures + "/trigger_votes.csv", "0.75", a)) {
    tags.push_back(std::move(tag));
  }
  for (const TagSpec& tag : tags) {
    for (const std::string& item : tag.relevant_items) CHECK(a.contains(item));
  }
  save_tags(tags, dir.file("tags.json"));
  const std::vector<TagSpec> reloaded = load_tags(dir.file("tags.json"));
  REQUIRE(reloaded.size() == tags.size());
  save_tags(reloaded, dir.file("tags2.json"));
  CHECK(test_support::read_file(dir.file("tags.json")) ==
        test_support::read_file(dir.file("tags2.json")));
}

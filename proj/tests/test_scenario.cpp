#include <doctest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "steereval/errors.hpp"
#include "steereval/metrics.hpp"
#include "steereval/rng.hpp"
#include "steereval/scenario.hpp"
#include "test_support.hpp"

using namespace steereval;
using test_support::TempDir;

namespace {

Catalog make_catalog(const std::vector<std::pair<std::string, double>>& pops) {
  std::vector<Item> items;
  for (const auto& [id, pop] : pops) {
    items.push_back({id, "Title " + id, "Description " + id, pop});
  }
  return Catalog(std::move(items));
}

RatingsStore make_ratings(
    const std::map<std::string, std::vector<std::pair<std::string, std::int64_t>>>&
        by_user) {
  std::map<std::string, std::vector<RatingEvent>> events;
  for (const auto& [user, ratings] : by_user) {
    for (const auto& [item, ts] : ratings) {
      events[user].push_back({user, item, 4.0, ts});
    }
    std::stable_sort(events[user].begin(), events[user].end(),
                     [](const RatingEvent& a, const RatingEvent& b) {
                       if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                       return a.item_id < b.item_id;
                     });
  }
  return RatingsStore(std::move(events));
}

}  // namespace

TEST_CASE("sample_users") {
  std::map<std::string, std::vector<std::pair<std::string, std::int64_t>>> data;
  for (const std::string user : {"u1", "u2", "u3"}) {
    for (int i = 0; i < 5; ++i) data[user].push_back({fmt::format("m{}", i), i});
  }
  data["tiny"] = {{"m0", 0}};
  const RatingsStore ratings = make_ratings(data);

  SUBCASE("exhaustive when n equals the eligible count") {
    const auto users = sample_users(ratings, 5, 3, 7);
    CHECK(std::set<std::string>(users.begin(), users.end()) ==
          std::set<std::string>{"u1", "u2", "u3"});
  }
  SUBCASE("too few eligible users") {
    try {
      sample_users(ratings, 5, 5, 7);
      FAIL("expected NotEnoughEligibleUsers");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::not_enough_eligible_users);
      CHECK(std::string(e.what()).find("3") != std::string::npos);
      CHECK(std::string(e.what()).find("5") != std::string::npos);
    }
  }
  SUBCASE("same seed, same order; different seed may differ") {
    CHECK(sample_users(ratings, 5, 3, 7) == sample_users(ratings, 5, 3, 7));
    CHECK(sample_users(ratings, 2, 2, 1) == sample_users(ratings, 2, 2, 1));
  }
}

TEST_CASE("build_history") {
  std::map<std::string, std::vector<std::pair<std::string, std::int64_t>>> data;
  for (int i = 0; i < 51; ++i) data["u"].push_back({fmt::format("m{:02}", i), 100 + i});
  for (int i = 0; i < 50; ++i) data["v"].push_back({fmt::format("m{:02}", i), 100 + i});
  // equal timestamps: item_id ascending decides
  data["w"] = {{"b", 5}, {"a", 5}, {"c", 5}};
  const RatingsStore ratings = make_ratings(data);

  SUBCASE("51 ratings with length 50") {
    const UserHistory history = build_history(ratings, "u", 50);
    CHECK(history.watched.size() == 50);
    CHECK(history.watched.front().first == "m00");
    CHECK(history.next_item == "m50");
  }
  SUBCASE("50 ratings leave no next item") {
    try {
      build_history(ratings, "v", 50);
      FAIL("expected InsufficientHistory");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::insufficient_history);
    }
  }
  SUBCASE("timestamp ties broken by item id") {
    const UserHistory history = build_history(ratings, "w", 2);
    CHECK(history.watched[0].first == "a");
    CHECK(history.watched[1].first == "b");
    CHECK(history.next_item == "c");
  }
}

TEST_CASE("build_candidates picks nearest-popularity items") {
  // relevant pops {A:10, B(next):12, C:30}, irrelevant {X:11, Y:25, Z:13}
  const Catalog catalog = make_catalog(
      {{"A", 10}, {"B", 12}, {"C", 30}, {"X", 11}, {"Y", 25}, {"Z", 13}});
  TagSpec tag;
  tag.tag_id = "t";
  tag.clause = "t";
  tag.relevant_items = {"A", "B", "C"};

  const auto candidates = build_candidates(catalog, tag, "B", 4, 2, 99);
  std::set<std::string> picked;
  int relevant_count = 0;
  for (const Candidate& c : candidates) {
    picked.insert(c.item_id);
    if (c.relevant) ++relevant_count;
    CHECK(c.relevant == (tag.relevant_items.count(c.item_id) > 0));
  }
  CHECK(picked == std::set<std::string>{"B", "A", "X", "Z"});
  CHECK(relevant_count == 2);

  SUBCASE("forced selection when the pool exactly fits") {
    TagSpec narrow;
    narrow.tag_id = "n";
    narrow.clause = "n";
    narrow.relevant_items = {"A", "C"};  // next item B is irrelevant
    const auto forced = build_candidates(catalog, narrow, "B", 5, 2, 1);
    std::set<std::string> ids;
    for (const Candidate& c : forced) ids.insert(c.item_id);
    CHECK(ids.count("A") == 1);
    CHECK(ids.count("C") == 1);  // both relevant items are required
  }
  SUBCASE("insufficient pool") {
    TagSpec narrow;
    narrow.tag_id = "n";
    narrow.clause = "n";
    narrow.relevant_items = {"A"};
    try {
      build_candidates(catalog, narrow, "B", 4, 2, 1);
      FAIL("expected InsufficientPool");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::insufficient_pool);
    }
  }
}

TEST_CASE("greedy candidate selection matches the brute-force optimum") {
  SplitMix64 rng(555);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n_rel = 3 + rng.below(10);   // <= 12 per side
    const std::size_t n_irr = 3 + rng.below(10);
    std::vector<std::pair<std::string, double>> pops;
    std::vector<double> rel_pops, irr_pops;
    for (std::size_t i = 0; i < n_rel; ++i) {
      const double p = static_cast<double>(rng.below(100));
      pops.push_back({fmt::format("r{:02}", i), p});
      rel_pops.push_back(p);
    }
    for (std::size_t i = 0; i < n_irr; ++i) {
      const double p = static_cast<double>(rng.below(100));
      pops.push_back({fmt::format("i{:02}", i), p});
      irr_pops.push_back(p);
    }
    const double next_pop = static_cast<double>(rng.below(100));
    pops.push_back({"next", next_pop});
    const bool next_relevant = rng.below(2) == 1;

    const Catalog catalog = make_catalog(pops);
    TagSpec tag;
    tag.tag_id = "t";
    tag.clause = "t";
    for (std::size_t i = 0; i < n_rel; ++i) tag.relevant_items.insert(fmt::format("r{:02}", i));
    if (next_relevant) tag.relevant_items.insert("next");

    const std::size_t want_rel = 1 + rng.below(std::min<std::size_t>(n_rel, 6));
    const std::size_t want_irr = 1 + rng.below(std::min<std::size_t>(n_irr, 6));
    const std::size_t pool_size = want_rel + want_irr;
    if (want_rel == pool_size) continue;

    std::vector<Candidate> candidates;
    try {
      candidates = build_candidates(catalog, tag, "next", pool_size, want_rel,
                                    trial);
    } catch (const Error&) {
      continue;  // infeasible draw
    }

    double greedy_cost = 0.0;
    std::size_t got_rel = 0;
    for (const Candidate& c : candidates) {
      if (c.item_id == "next") continue;
      greedy_cost += std::abs(catalog.at(c.item_id).popularity - next_pop);
      if (c.relevant) ++got_rel;
    }
    const std::size_t need_rel = want_rel - (next_relevant ? 1 : 0);
    const std::size_t need_irr = (pool_size - want_rel) - (next_relevant ? 0 : 1);
    const double best = oracles::min_subset_cost(rel_pops, next_pop, need_rel) +
                        oracles::min_subset_cost(irr_pops, next_pop, need_irr);
    CHECK(greedy_cost == doctest::Approx(best).epsilon(1e-12));
    CHECK(got_rel + (next_relevant ? 1 : 0) == want_rel);
  }
}

TEST_CASE("presentation order does not leak relevance") {
  std::vector<std::pair<std::string, double>> pops;
  for (int i = 0; i < 30; ++i) pops.push_back({fmt::format("p{:02}", i), 50.0 + i});
  const Catalog catalog = make_catalog(pops);
  TagSpec tag;
  tag.tag_id = "t";
  tag.clause = "t";
  for (int i = 0; i < 15; ++i) tag.relevant_items.insert(fmt::format("p{:02}", i));

  double mean_auc = 0.0;
  const int trials = 400;
  for (int seed = 0; seed < trials; ++seed) {
    const auto candidates = build_candidates(catalog, tag, "p00", 20, 10, seed);
    Ranking presentation;
    double score = static_cast<double>(candidates.size());
    for (const Candidate& c : candidates) {
      presentation.items.push_back({c.item_id, score--});
    }
    mean_auc += auc_tag(presentation, labels_from_candidates(candidates));
  }
  mean_auc /= trials;
  CHECK(mean_auc == doctest::Approx(0.5).epsilon(0.06));  // 0.5 +/- 0.03
}

TEST_CASE("plan_run and the plan file round trip") {
  TempDir dir("plan");
  test_support::write_synthetic_corpus(dir.str());
  const Catalog catalog = ingest_catalog(dir.file("items.jsonl"));
  const RatingsStore ratings = ingest_ratings(dir.file("ratings.csv"), catalog);
  std::vector<TagSpec> tags = ingest_genre_tags(dir.file("genre_links.csv"), catalog);
  for (TagSpec& tag : ingest_trigger_tags(dir.file("trigger_votes.csv"), "0.75",
                                          catalog)) {
    tags.push_back(std::move(tag));
  }

  PlanParams params;
  params.global_seed = 41;
  params.n_users = 4;
  params.min_reviews = 9;
  params.history_length = 8;
  params.pool_size = 20;
  params.relevant_count = 10;

  const auto users = sample_users(ratings, 9, 4, 41);
  const RunPlan plan = plan_run(params, catalog, tags, ratings, users);
  CHECK(plan.scenarios.size() == 2 * 4 * 2);  // tags x users x directions
  CHECK(plan.skipped.empty());

  // both directions of a (tag, user) pair share one candidate set
  std::map<std::pair<std::string, std::string>, std::vector<Candidate>> seen;
  std::set<std::string> ids;
  for (const Scenario& s : plan.scenarios) {
    CHECK(ids.insert(s.scenario_id).second);
    CHECK(s.candidates.size() == 20);
    std::size_t relevant = 0;
    std::set<std::string> distinct;
    bool has_next = false;
    for (const Candidate& c : s.candidates) {
      distinct.insert(c.item_id);
      if (c.relevant) ++relevant;
      if (c.item_id == s.next_item) has_next = true;
    }
    CHECK(distinct.size() == 20);
    CHECK(relevant == 10);
    CHECK(has_next);
    const auto key = std::make_pair(s.tag_id, s.user_id);
    if (seen.count(key)) {
      const auto& other = seen[key];
      REQUIRE(other.size() == s.candidates.size());
      for (std::size_t i = 0; i < other.size(); ++i) {
        CHECK(other[i].item_id == s.candidates[i].item_id);
      }
    } else {
      seen[key] = s.candidates;
    }
  }

  // replanning is byte-identical, and so is save/load/save
  const RunPlan again = plan_run(params, catalog, tags, ratings, users);
  CHECK(serialize_run_plan(plan) == serialize_run_plan(again));
  save_run_plan(plan, dir.file("plan.json"));
  const RunPlan loaded = load_run_plan(dir.file("plan.json"));
  CHECK(serialize_run_plan(loaded) == serialize_run_plan(plan));
}

TEST_CASE("excluded tags never enter scenario generation") {
  TempDir dir("planx");
  test_support::write_synthetic_corpus(dir.str());
  const Catalog catalog = ingest_catalog(dir.file("items.jsonl"));
  const RatingsStore ratings = ingest_ratings(dir.file("ratings.csv"), catalog);
  std::vector<TagSpec> tags = ingest_genre_tags(dir.file("genre_links.csv"), catalog);
  tags[0].excluded = true;

  PlanParams params;
  params.global_seed = 1;
  params.n_users = 2;
  params.min_reviews = 9;
  params.history_length = 8;
  params.pool_size = 20;
  params.relevant_count = 10;
  const RunPlan plan = plan_run(params, catalog, tags, ratings,
                                sample_users(ratings, 9, 2, 1));
  CHECK(plan.scenarios.empty());
}

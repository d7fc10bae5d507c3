// Acceptance suite: runs every gate criterion at its pinned tolerance and
// prints one pass/fail line per criterion. Exit code 0 only if all pass.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <json.hpp>

#include "oracles.hpp"
#include "steereval/config.hpp"
#include "steereval/errors.hpp"
#include "steereval/metrics.hpp"
#include "steereval/mock_backends.hpp"
#include "steereval/prompts.hpp"
#include "steereval/report.hpp"
#include "steereval/rng.hpp"
#include "steereval/runner.hpp"
#include "steereval/stats.hpp"
#include "steereval/steering.hpp"
#include "test_support.hpp"

using namespace steereval;
using test_support::TempDir;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail) {
  fmt::print("criterion {:2}: {} — {} ({})\n", number, ok ? "PASS" : "FAIL", name,
             detail);
  if (!ok) ++g_failures;
}

struct PatternInstance {
  Ranking ranking;
  LabelMap labels;
};

PatternInstance from_labels(const std::vector<bool>& labels) {
  PatternInstance out;
  double score = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string id = fmt::format("m{:03}", i);
    out.ranking.items.push_back({id, score--});
    out.labels[id] = labels[i];
  }
  return out;
}

// --- criterion 1: auc oracle equivalence, exact, < 5 s -----------------------

void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  SplitMix64 rng(1001);
  int checked = 0;
  bool ok = true;
  while (checked < 1000) {
    const std::size_t n = 2 + rng.below(19);  // n <= 20
    std::vector<bool> labels;
    bool has_r = false, has_i = false;
    for (std::size_t i = 0; i < n; ++i) {
      const bool relevant = rng.below(2) == 1;
      labels.push_back(relevant);
      has_r = has_r || relevant;
      has_i = has_i || !relevant;
    }
    if (!has_r || !has_i) continue;
    ++checked;
    const PatternInstance instance = from_labels(labels);
    const double ours = auc_tag(instance.ranking, instance.labels);
    const double reference = oracles::auc_pairwise(labels);
    if (ours != reference) {
      ok = false;
      break;
    }
  }
  const double sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(1, "auc_tag equals exhaustive pair counting on 1000 instances", ok && sec < 5.0,
         fmt::format("exact match on {} instances in {:.2f} s", checked, sec));
}

// --- criterion 2: AUC boundary cases -----------------------------------------

void criterion_2() {
  bool ok = true;
  for (std::size_t n : {4, 10, 100}) {
    std::vector<bool> top(n, false);
    for (std::size_t i = 0; i < n / 2; ++i) top[i] = true;
    const PatternInstance best = from_labels(top);
    std::vector<bool> bottom(n, false);
    for (std::size_t i = n / 2; i < n; ++i) bottom[i] = true;
    const PatternInstance worst = from_labels(bottom);
    ok = ok && auc_tag(best.ranking, best.labels) == 1.0;
    ok = ok && auc_tag(worst.ranking, worst.labels) == 0.0;
  }
  report(2, "AUC is exactly 1 / 0 at the boundary orderings", ok,
         "pool sizes 4, 10, 100");
}

// --- criterion 3: random-ranking calibration ----------------------------------

void criterion_3() {
  double sum = 0.0;
  const int trials = 10000;
  for (int seed = 0; seed < trials; ++seed) {
    std::vector<bool> labels(100, false);
    for (int i = 0; i < 50; ++i) labels[i] = true;
    seeded_shuffle(labels, static_cast<std::uint64_t>(seed) * 2654435761ULL + 1);
    const PatternInstance instance = from_labels(labels);
    sum += auc_tag(instance.ranking, instance.labels);
  }
  const double mean = sum / trials;
  report(3, "mean AUC of 10000 random 50/50 rankings is near 1/2",
         mean >= 0.49 && mean <= 0.51, fmt::format("mean = {:.5f}", mean));
}

// --- criterion 4: t-test numerics ---------------------------------------------

void criterion_4() {
  const TTestResult test = paired_t_one_tail({1, 2, 3, 4, 5}, DesiredSign::Positive);
  bool ok = std::abs(test.t_stat - 4.2426) <= 1e-3;
  ok = ok && std::abs(test.p_value - 0.00660) <= 5e-4;
  const double reference = oracles::t_tail_trapezoid(test.t_stat, 4);
  ok = ok && std::abs(test.p_value - reference) <= 1e-4;

  double worst = 0.0;
  for (int df = 1; df <= 50 && ok; ++df) {
    for (double t : {0.5, 1.5, 2.5, 4.0}) {
      const double mine = student_t_sf(t, df);
      const double integral = oracles::t_tail_trapezoid(t, df);
      worst = std::max(worst, std::abs(mine - integral));
      if (std::abs(mine - integral) > 1e-4) ok = false;
    }
  }
  report(4, "t statistic and one-tail p match the integration oracle", ok,
         fmt::format("t = {:.4f}, p = {:.5f}, df sweep max err = {:.2e}", test.t_stat,
                     test.p_value, worst));
}

// --- criterion 5: NDCG spot value ----------------------------------------------

void criterion_5() {
  const PatternInstance instance = from_labels({true, false, true});
  const double value = ndcg_at_k(instance.ranking, instance.labels, 3);
  const bool ok = std::abs(value - 0.91972) <= 1e-5;
  report(5, "NDCG@3 of [1,0,1] with 2 relevant", ok, fmt::format("value = {:.6f}", value));
}

// --- criterion 6: candidate-set optimality and invariants -----------------------

void criterion_6() {
  SplitMix64 rng(606);
  bool optimal = true;
  int pools_checked = 0;
  while (pools_checked < 200) {
    const std::size_t n_rel = 2 + rng.below(11);  // <= 12 per side
    const std::size_t n_irr = 2 + rng.below(11);
    std::vector<Item> items;
    std::vector<double> rel_pops, irr_pops;
    for (std::size_t i = 0; i < n_rel; ++i) {
      const double pop = static_cast<double>(rng.below(200)) / 2.0;
      items.push_back({fmt::format("r{:02}", i), fmt::format("R{}", i), "d", pop});
      rel_pops.push_back(pop);
    }
    for (std::size_t i = 0; i < n_irr; ++i) {
      const double pop = static_cast<double>(rng.below(200)) / 2.0;
      items.push_back({fmt::format("i{:02}", i), fmt::format("I{}", i), "d", pop});
      irr_pops.push_back(pop);
    }
    const double next_pop = static_cast<double>(rng.below(200)) / 2.0;
    const bool next_relevant = rng.below(2) == 1;
    items.push_back({"next", "Next", "d", next_pop});
    const Catalog catalog(std::move(items));

    TagSpec tag;
    tag.tag_id = "t";
    tag.clause = "t";
    for (std::size_t i = 0; i < n_rel; ++i) {
      tag.relevant_items.insert(fmt::format("r{:02}", i));
    }
    if (next_relevant) tag.relevant_items.insert("next");

    const std::size_t want_rel = 1 + rng.below(std::min<std::size_t>(n_rel, 6));
    const std::size_t want_irr = 1 + rng.below(std::min<std::size_t>(n_irr, 6));
    const std::size_t need_rel = want_rel - (next_relevant ? 1 : 0);
    const std::size_t need_irr = want_irr - (next_relevant ? 0 : 1);
    if (need_rel > n_rel || need_irr > n_irr) continue;
    const std::size_t pool_size = want_rel + want_irr;
    std::vector<Candidate> candidates;
    try {
      candidates = build_candidates(catalog, tag, "next", pool_size, want_rel,
                                    pools_checked);
    } catch (const Error&) {
      continue;
    }
    ++pools_checked;

    double greedy_cost = 0.0;
    for (const Candidate& c : candidates) {
      if (c.item_id == "next") continue;
      greedy_cost += std::abs(catalog.at(c.item_id).popularity - next_pop);
    }
    const std::size_t sel_rel = want_rel - (next_relevant ? 1 : 0);
    const std::size_t sel_irr = (pool_size - want_rel) - (next_relevant ? 0 : 1);
    const double best = oracles::min_subset_cost(rel_pops, next_pop, sel_rel) +
                        oracles::min_subset_cost(irr_pops, next_pop, sel_irr);
    if (std::abs(greedy_cost - best) > 1e-9) {
      optimal = false;
      break;
    }
  }

  // every generated scenario satisfies the pool invariants
  TempDir corpus("acc6");
  test_support::write_synthetic_corpus(corpus.str());
  const Catalog catalog = ingest_catalog(corpus.file("items.jsonl"));
  const RatingsStore ratings = ingest_ratings(corpus.file("ratings.csv"), catalog);
  std::vector<TagSpec> tags = ingest_genre_tags(corpus.file("genre_links.csv"), catalog);
  for (TagSpec& tag : ingest_trigger_tags(corpus.file("trigger_votes.csv"), "0.75",
                                          catalog)) {
    tags.push_back(std::move(tag));
  }
  PlanParams params;
  params.global_seed = 9;
  params.n_users = 4;
  params.min_reviews = 9;
  params.history_length = 8;
  params.pool_size = 20;
  params.relevant_count = 10;
  const RunPlan plan = plan_run(params, catalog, tags, ratings,
                                sample_users(ratings, 9, 4, 9));
  bool invariants = !plan.scenarios.empty();
  for (const Scenario& s : plan.scenarios) {
    std::set<std::string> distinct;
    std::size_t relevant = 0;
    bool has_next = false;
    const TagSpec* tag = nullptr;
    for (const TagSpec& t : tags) {
      if (t.tag_id == s.tag_id) tag = &t;
    }
    for (const Candidate& c : s.candidates) {
      distinct.insert(c.item_id);
      if (c.relevant) ++relevant;
      if (c.item_id == s.next_item) has_next = true;
      invariants = invariants && tag != nullptr &&
                   c.relevant == (tag->relevant_items.count(c.item_id) > 0);
    }
    invariants = invariants && distinct.size() == 20 && relevant == 10 && has_next;
  }

  report(6, "greedy candidate pools are brute-force optimal and well-formed",
         optimal && invariants,
         fmt::format("200 random pools; {} planned scenarios validated",
                     plan.scenarios.size()));
}

// --- criteria 7/8/9: end-to-end mock runs ---------------------------------------

struct EndToEnd {
  TempDir corpus{"acc_corpus"};
  RunConfig config;
  Datasets datasets;
  RunPlan plan;

  explicit EndToEnd(const std::string& workspace,
                    std::vector<RankerKind> rankers = {RankerKind::LlmScore}) {
    test_support::write_synthetic_corpus(corpus.str());
    config = test_support::make_mock_run_config(corpus.str(), workspace);
    config.matrix.rankers = std::move(rankers);
    config.mock.delta = 1.0;
    datasets = ingest_datasets(config);
    const auto users = sample_users(datasets.ratings, config.min_reviews,
                                    config.n_users, config.seed);
    plan = plan_run(plan_params_from(config), datasets.catalog, datasets.tags,
                    datasets.ratings, users);
  }

  RunOutcome run() {
    auto gateway = build_gateway(config, datasets);
    EventLog log(config.log_file);
    RunOutcome outcome = execute_run(config, datasets, plan, *gateway, log);
    write_run_outputs(config, outcome, config.workspace, 0.0);
    save_run_plan(plan, (fs::path(config.workspace) / "plan.json").string());
    return outcome;
  }
};

void criterion_7() {
  const auto start = std::chrono::steady_clock::now();
  TempDir workspace("acc7");
  EndToEnd harness(workspace.str());
  const RunOutcome outcome = harness.run();

  const ConditionOutcome& condition = outcome.conditions.front();
  std::vector<double> increase, decrease;
  for (const ScenarioResult& r : condition.results) {
    (r.direction == Direction::Increase ? increase : decrease).push_back(r.delta_auc);
  }
  double mean_up = 0.0, mean_down = 0.0;
  for (double d : increase) mean_up += d;
  for (double d : decrease) mean_down += d;
  mean_up /= static_cast<double>(increase.size());
  mean_down /= static_cast<double>(decrease.size());
  const TTestResult up = paired_t_one_tail(increase, DesiredSign::Positive);
  const TTestResult down = paired_t_one_tail(decrease, DesiredSign::Negative);
  const double sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const bool ok = condition.totals.completed == condition.totals.planned &&
                  mean_up >= 0.3 && mean_down <= -0.3 && up.p_value < 0.05 &&
                  down.p_value < 0.05 && sec < 30.0;
  report(7, "mock-oracle end-to-end sign test",
         ok,
         fmt::format("increase {:+.3f} (p={:.2e}), decrease {:+.3f} (p={:.2e}), "
                     "{} scenarios in {:.2f} s",
                     mean_up, up.p_value, mean_down, down.p_value,
                     condition.totals.completed, sec));
}

void criterion_8() {
  TempDir workspace("acc8");
  EndToEnd harness(workspace.str(),
                   {RankerKind::LlmScore, RankerKind::Embedding});
  const RunOutcome outcome = harness.run();

  double embed_decrease = 0.0, llm_decrease = 0.0;
  std::size_t embed_n = 0, llm_n = 0;
  for (const ConditionOutcome& condition : outcome.conditions) {
    for (const ScenarioResult& r : condition.results) {
      if (r.direction != Direction::Decrease) continue;
      if (condition.condition.ranker == RankerKind::Embedding) {
        embed_decrease += r.delta_auc;
        ++embed_n;
      } else {
        llm_decrease += r.delta_auc;
        ++llm_n;
      }
    }
  }
  embed_decrease /= static_cast<double>(embed_n);
  llm_decrease /= static_cast<double>(llm_n);

  const bool ok = embed_n > 0 && llm_n > 0 && embed_decrease >= 0.0 &&
                  llm_decrease < 0.0;
  report(8, "embedding ranker reproduces the decrease-task failure direction", ok,
         fmt::format("embedding decrease {:+.3f} (n={}), llm decrease {:+.3f} (n={})",
                     embed_decrease, embed_n, llm_decrease, llm_n));
}

bool same_file_bytes(const fs::path& a, const fs::path& b) {
  return test_support::read_file(a.string()) == test_support::read_file(b.string()) &&
         !test_support::read_file(a.string()).empty();
}

void criterion_9() {
  // two clean workspaces, full matrix, one shared corpus
  TempDir corpus("acc9corpus");
  test_support::write_synthetic_corpus(corpus.str());
  const auto run_matrix = [&](const std::string& workspace,
                              std::shared_ptr<std::atomic<int>> budget) {
    RunConfig config = test_support::make_mock_run_config(corpus.str(), workspace);
    config.matrix.profile_variants = {ProfileVariant::Paragraph,
                                       ProfileVariant::Sentence};
    config.matrix.interventions = {InterventionMethod::TemplateAppend,
                                   InterventionMethod::LlmAppend,
                                   InterventionMethod::LlmRewrite};
    config.matrix.emphasis = {Emphasis::Default, Emphasis::Stronger, Emphasis::Weaker};
    config.matrix.rankers = {RankerKind::LlmScore, RankerKind::Embedding};
    config.matrix.oracle = {false, true};
    const Datasets datasets = ingest_datasets(config);
    const auto users = sample_users(datasets.ratings, config.min_reviews,
                                    config.n_users, config.seed);
    const RunPlan plan = plan_run(plan_params_from(config), datasets.catalog,
                                  datasets.tags, datasets.ratings, users);

    GatewayOptions gw_options;
    gw_options.cache_dir = (fs::path(config.workspace) / "cache").string();
    Gateway gateway(gw_options);
    MockOracleConfig mock;
    mock.base_score_min = config.mock.base_score_min;
    mock.base_score_span = config.mock.base_score_span;
    mock.delta = config.mock.delta;
    mock.oracle_bonus = config.mock.oracle_bonus;
    std::unique_ptr<GenerationBackend> oracle =
        make_mock_oracle_backend(datasets.catalog, datasets.tags, mock);
    if (budget) oracle = make_call_budget_backend(std::move(oracle), budget);
    gateway.register_generation("mock-oracle", std::move(oracle));
    gateway.register_embedding(
        "mock-embed", make_mock_tag_embedder(datasets.catalog, datasets.tags,
                                             config.mock.embed_dim));
    EventLog log(config.log_file);
    const RunOutcome outcome = execute_run(config, datasets, plan, gateway, log);
    write_run_outputs(config, outcome, config.workspace, 0.0);
    save_run_plan(plan, (fs::path(config.workspace) / "plan.json").string());

    const RunResults results = load_run_results(config.workspace);
    const RenderedReport report = render_report(results, ReportOptions{});
    fs::create_directories(fs::path(config.workspace) / "report");
    test_support::write_file((fs::path(config.workspace) / "report/report.txt").string(),
                             report.text);
    test_support::write_file((fs::path(config.workspace) / "report/report.json").string(),
                             report.json);
    return outcome;
  };

  TempDir ws_a("acc9a");
  TempDir ws_b("acc9b");
  TempDir ws_c("acc9r");
  const RunOutcome a = run_matrix(ws_a.str(), nullptr);
  const RunOutcome b = run_matrix(ws_b.str(), nullptr);

  // interrupted run: the backend dies partway, then a clean resume
  auto budget = std::make_shared<std::atomic<int>>(200);
  const RunOutcome interrupted = run_matrix(ws_c.str(), budget);
  bool saw_interruption = false;
  for (const ConditionOutcome& condition : interrupted.conditions) {
    if (condition.totals.skipped > 0) saw_interruption = true;
  }
  const RunOutcome resumed = run_matrix(ws_c.str(), nullptr);
  (void)resumed;

  std::vector<std::string> files = {"plan.json", "manifest.json",
                                    "report/report.txt", "report/report.json"};
  for (const ConditionOutcome& condition : a.conditions) {
    const std::string id = condition.condition.id();
    files.push_back("results/" + id + "/scenarios.csv");
    files.push_back("results/" + id + "/aggregate.csv");
    files.push_back("results/" + id + "/aggregate.json");
  }
  bool identical = a.conditions.size() == 8 && b.conditions.size() == 8;
  bool resume_equal = true;
  for (const std::string& file : files) {
    identical = identical && same_file_bytes(ws_a.path() / file, ws_b.path() / file);
    resume_equal =
        resume_equal && same_file_bytes(ws_a.path() / file, ws_c.path() / file);
  }
  report(9, "clean-workspace determinism and resume equivalence",
         identical && saw_interruption && resume_equal,
         fmt::format("{} files byte-identical across {} conditions; interruption "
                     "observed then healed",
                     files.size(), a.conditions.size()));
}

// --- criterion 10: template golden files -----------------------------------------

void criterion_10() {
  TagSpec mystery;
  mystery.tag_id = "Mystery";
  mystery.group = TagGroup::Genre;
  mystery.clause = "Mystery";
  TagSpec dog;
  dog.tag_id = "dog_dies";
  dog.group = TagGroup::Trigger;
  dog.clause = "the dog dies";

  std::string rendered;
  for (const TagSpec* tag : {&mystery, &dog}) {
    for (Direction direction : {Direction::Increase, Direction::Decrease}) {
      for (Emphasis emphasis :
           {Emphasis::Default, Emphasis::Stronger, Emphasis::Weaker}) {
        rendered += fmt::format("[{}/{}/{}] {}\n", tag_group_name(tag->group),
                                direction_name(direction), emphasis_name(emphasis),
                                render_template(*tag, direction, emphasis));
      }
    }
  }
  TemplateOptions appendix;
  appendix.appendix_trigger_decrease = true;
  rendered += fmt::format(
      "[Trigger/decrease/default appendix] {}\n",
      render_template(dog, Direction::Decrease, Emphasis::Default, appendix));

  const std::string golden = test_support::read_file(
      std::string(STEEREVAL_TEST_DATA_DIR) + "/golden/templates.txt");
  const bool ok = !golden.empty() && rendered == golden;
  report(10, "steering templates match the golden file byte-for-byte", ok,
         fmt::format("{} rendered bytes", rendered.size()));
}

// --- criterion 11: score parsing ---------------------------------------------------

void criterion_11() {
  const std::string completion =
      "3.4\n\nThe movie \"The Stranger\" appears to match the user's profile in "
      "several key aspects.";
  const bool ok = parse_score(completion) == 3.4 &&
                  parse_score("No rating was provided for this title.") == 0.0;
  report(11, "score parsing: leading decimal wins, numberless scores 0", ok,
         fmt::format("parsed {:.1f} and {:.1f}", parse_score(completion),
                     parse_score("No rating was provided for this title.")));
}

// --- criterion 12: rank_set invariance ----------------------------------------------

void criterion_12() {
  SplitMix64 rng(1212);
  bool ok = true;
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    const std::size_t n = 6 + rng.below(14);
    std::vector<bool> labels;
    labels.push_back(true);
    labels.push_back(false);
    for (std::size_t i = 2; i < n; ++i) labels.push_back(rng.below(2) == 1);
    const PatternInstance instance = from_labels(labels);
    const std::string next = fmt::format("m{:03}", rng.below(n));
    const int before = rank_set(instance.ranking, instance.labels, next);

    const bool next_label = instance.labels.at(next);
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < n; ++i) {
      if (instance.labels.at(instance.ranking.items[i].item_id) != next_label) {
        positions.push_back(i);
      }
    }
    std::vector<std::size_t> shuffled = positions;
    seeded_shuffle(shuffled, trial + 77);
    Ranking permuted = instance.ranking;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      permuted.items[positions[i]] = instance.ranking.items[shuffled[i]];
    }
    ok = rank_set(permuted, instance.labels, next) == before;
  }
  report(12, "rank_set unchanged under opposite-label permutations", ok,
         "1000 random trials, exact");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  criterion_12();
  if (g_failures > 0) {
    fmt::print("{} criterion(s) FAILED\n", g_failures);
    return 1;
  }
  fmt::print("all criteria passed\n");
  return 0;
}

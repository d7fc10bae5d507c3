#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steereval/ranking.hpp"
#include "steereval/scenario.hpp"

namespace steereval {

// Per-item relevance labels keyed by item_id.
using LabelMap = std::map<std::string, bool>;

LabelMap labels_from_candidates(const std::vector<Candidate>& candidates);

// Tag-based AUC over post-tie-break positions: the fraction of
// (relevant, irrelevant) pairs ranked in that order. 1 when every relevant
// item precedes every irrelevant one, 0 in the reverse case.
double auc_tag(const Ranking& ranking, const LabelMap& labels);

// auc_tag(steered) - auc_tag(original); positive is desirable on increase
// tasks, negative on decrease tasks.
double delta_auc(const Ranking& original, const Ranking& steered,
                 const LabelMap& labels);

// 1-based position of next_item among only the items sharing its relevance
// label; lower means more visible.
int rank_set(const Ranking& ranking, const LabelMap& labels,
             const std::string& next_item);

// Fraction of the top k that is relevant.
double coverage_at_k(const Ranking& ranking, const LabelMap& labels, std::size_t k);

// Binary-gain NDCG@k against the ideal ordering of the same label multiset.
double ndcg_at_k(const Ranking& ranking, const LabelMap& labels, std::size_t k);

enum class DesiredSign { Positive, Negative };

struct TTestResult {
  double t_stat = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// One-tail paired t-test on the per-scenario deltas; p is the tail
// probability in the desired direction, df = n - 1.
TTestResult paired_t_one_tail(const std::vector<double>& deltas,
                              DesiredSign desired_sign);

struct ScenarioResult {
  std::string scenario_id;
  std::string tag_id;
  TagGroup group = TagGroup::Genre;
  Direction direction = Direction::Increase;
  double auc_original = 0.0;
  double auc_steered = 0.0;
  double delta_auc = 0.0;
  int rank_set_original = 0;
  int rank_set_steered = 0;
  // Keyed by k, in k order.
  std::map<std::size_t, double> coverage_original;
  std::map<std::size_t, double> coverage_steered;
  std::map<std::size_t, double> ndcg_original;
  std::map<std::size_t, double> ndcg_steered;
  bool next_item_relevant = false;
};

enum class GroupBy { Overall, Tag, TagGroup };
const char* group_by_name(GroupBy grouping);

struct AggregateRow {
  GroupBy grouping = GroupBy::Overall;
  std::string key;  // "all", tag_id, or tag group name
  Direction direction = Direction::Increase;
  std::size_t n = 0;
  double mean_delta_auc = 0.0;
  std::optional<double> t_stat;
  std::optional<double> p_value;
  bool significant = false;  // p < alpha in the desired direction
  bool success = false;      // mean has the desired sign
};

// Uniform (unweighted) means per group with a one-tail paired t-test over
// the group's per-scenario delta-AUC values. Results are sorted by
// scenario_id internally so row order cannot affect output.
std::vector<AggregateRow> aggregate(const std::vector<ScenarioResult>& results,
                                    GroupBy grouping, double alpha);

}  // namespace steereval

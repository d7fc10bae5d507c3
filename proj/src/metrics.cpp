#include "steereval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/core.h>

#include "steereval/errors.hpp"
#include "steereval/stats.hpp"

namespace steereval {

LabelMap labels_from_candidates(const std::vector<Candidate>& candidates) {
  LabelMap labels;
  for (const Candidate& c : candidates) labels[c.item_id] = c.relevant;
  return labels;
}

namespace {

bool label_of(const LabelMap& labels, const std::string& item_id) {
  auto it = labels.find(item_id);
  if (it == labels.end()) {
    throw Error(Errc::mismatched_candidates, "no label for item " + item_id);
  }
  return it->second;
}

void check_same_items(const Ranking& a, const Ranking& b) {
  if (a.items.size() != b.items.size()) {
    throw Error(Errc::mismatched_candidates, "rankings differ in size");
  }
  std::set<std::string> ids_a, ids_b;
  for (const RankedItem& item : a.items) ids_a.insert(item.item_id);
  for (const RankedItem& item : b.items) ids_b.insert(item.item_id);
  if (ids_a != ids_b) {
    throw Error(Errc::mismatched_candidates, "rankings cover different item sets");
  }
}

}  // namespace

double auc_tag(const Ranking& ranking, const LabelMap& labels) {
  std::size_t relevant_total = 0;
  for (const RankedItem& item : ranking.items) {
    if (label_of(labels, item.item_id)) ++relevant_total;
  }
  const std::size_t irrelevant_total = ranking.items.size() - relevant_total;
  if (relevant_total == 0 || irrelevant_total == 0) {
    throw Error(Errc::degenerate_labels,
                fmt::format("{} relevant / {} irrelevant", relevant_total,
                            irrelevant_total));
  }
  // Count (relevant, irrelevant) pairs in winning order, exactly.
  std::uint64_t pairs_won = 0;
  std::size_t irrelevant_seen = 0;
  for (const RankedItem& item : ranking.items) {
    if (label_of(labels, item.item_id)) {
      pairs_won += irrelevant_total - irrelevant_seen;
    } else {
      ++irrelevant_seen;
    }
  }
  return static_cast<double>(pairs_won) /
         (static_cast<double>(relevant_total) * static_cast<double>(irrelevant_total));
}

double delta_auc(const Ranking& original, const Ranking& steered,
                 const LabelMap& labels) {
  check_same_items(original, steered);
  return auc_tag(steered, labels) - auc_tag(original, labels);
}

int rank_set(const Ranking& ranking, const LabelMap& labels,
             const std::string& next_item) {
  auto it = labels.find(next_item);
  if (it == labels.end()) {
    throw Error(Errc::next_item_missing, next_item + " has no label");
  }
  const bool next_label = it->second;
  int position = 0;
  for (const RankedItem& item : ranking.items) {
    if (label_of(labels, item.item_id) != next_label) continue;
    ++position;
    if (item.item_id == next_item) return position;
  }
  throw Error(Errc::next_item_missing, next_item + " not present in ranking");
}

double coverage_at_k(const Ranking& ranking, const LabelMap& labels, std::size_t k) {
  if (k < 1 || k > ranking.items.size()) {
    throw Error(Errc::bad_k, fmt::format("k={} for ranking of {}", k,
                                         ranking.items.size()));
  }
  std::size_t relevant = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (label_of(labels, ranking.items[i].item_id)) ++relevant;
  }
  return static_cast<double>(relevant) / static_cast<double>(k);
}

double ndcg_at_k(const Ranking& ranking, const LabelMap& labels, std::size_t k) {
  if (k < 1 || k > ranking.items.size()) {
    throw Error(Errc::bad_k, fmt::format("k={} for ranking of {}", k,
                                         ranking.items.size()));
  }
  std::size_t relevant_total = 0;
  for (const RankedItem& item : ranking.items) {
    if (label_of(labels, item.item_id)) ++relevant_total;
  }
  if (relevant_total == 0) {
    throw Error(Errc::degenerate_labels, "no relevant items for NDCG");
  }
  double dcg = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (label_of(labels, ranking.items[i].item_id)) {
      dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
  }
  double idcg = 0.0;
  const std::size_t ideal_hits = std::min(relevant_total, k);
  for (std::size_t i = 0; i < ideal_hits; ++i) {
    idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

TTestResult paired_t_one_tail(const std::vector<double>& deltas,
                              DesiredSign desired_sign) {
  const std::size_t n = deltas.size();
  if (n < 2) {
    throw Error(Errc::degenerate_sample, fmt::format("n={} < 2", n));
  }
  double mean = 0.0;
  for (double d : deltas) mean += d;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double d : deltas) ss += (d - mean) * (d - mean);
  const double variance = ss / static_cast<double>(n - 1);
  if (variance <= 0.0) {
    throw Error(Errc::degenerate_sample, "zero sample variance");
  }
  const double stderr_mean = std::sqrt(variance / static_cast<double>(n));
  const double t = mean / stderr_mean;
  const double df = static_cast<double>(n - 1);

  TTestResult result;
  result.t_stat = t;
  result.n = n;
  result.p_value = desired_sign == DesiredSign::Positive ? student_t_sf(t, df)
                                                         : student_t_cdf(t, df);
  return result;
}

const char* group_by_name(GroupBy grouping) {
  switch (grouping) {
    case GroupBy::Overall: return "overall";
    case GroupBy::Tag: return "tag";
    case GroupBy::TagGroup: return "tag_group";
  }
  return "overall";
}

std::vector<AggregateRow> aggregate(const std::vector<ScenarioResult>& results,
                                    GroupBy grouping, double alpha) {
  if (results.empty()) {
    throw Error(Errc::empty_group, "no scenario results to aggregate");
  }
  std::vector<const ScenarioResult*> sorted;
  sorted.reserve(results.size());
  for (const ScenarioResult& r : results) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const ScenarioResult* a, const ScenarioResult* b) {
              return a->scenario_id < b->scenario_id;
            });

  std::map<std::pair<std::string, Direction>, std::vector<double>> groups;
  for (const ScenarioResult* r : sorted) {
    std::string key;
    switch (grouping) {
      case GroupBy::Overall: key = "all"; break;
      case GroupBy::Tag: key = r->tag_id; break;
      case GroupBy::TagGroup: key = tag_group_name(r->group); break;
    }
    groups[{key, r->direction}].push_back(r->delta_auc);
  }

  std::vector<AggregateRow> rows;
  for (const auto& [key, deltas] : groups) {
    AggregateRow row;
    row.grouping = grouping;
    row.key = key.first;
    row.direction = key.second;
    row.n = deltas.size();
    double mean = 0.0;
    for (double d : deltas) mean += d;
    row.mean_delta_auc = mean / static_cast<double>(deltas.size());
    const DesiredSign desired = row.direction == Direction::Increase
                                    ? DesiredSign::Positive
                                    : DesiredSign::Negative;
    row.success = desired == DesiredSign::Positive ? row.mean_delta_auc > 0.0
                                                   : row.mean_delta_auc < 0.0;
    try {
      const TTestResult test = paired_t_one_tail(deltas, desired);
      row.t_stat = test.t_stat;
      row.p_value = test.p_value;
      row.significant = test.p_value < alpha;
    } catch (const Error& e) {
      if (e.code() != Errc::degenerate_sample) throw;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace steereval

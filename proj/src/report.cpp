#include "steereval/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include <fmt/core.h>
#include <json.hpp>

#include "steereval/csv.hpp"
#include "steereval/errors.hpp"
#include "steereval/runner.hpp"

namespace steereval {

namespace fs = std::filesystem;

namespace {

std::vector<ScenarioResult> load_scenarios_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_results, "cannot open " + path);
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) {
    throw Error(Errc::missing_results, path + " is empty");
  }
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  const auto need = [&](const char* name) {
    auto it = column.find(name);
    if (it == column.end()) {
      throw Error(Errc::missing_results,
                  fmt::format("{} lacks column {}", path, name));
    }
    return it->second;
  };
  const std::size_t c_id = need("scenario_id");
  const std::size_t c_tag = need("tag_id");
  const std::size_t c_group = need("group");
  const std::size_t c_dir = need("direction");
  const std::size_t c_auc_o = need("auc_original");
  const std::size_t c_auc_s = need("auc_steered");
  const std::size_t c_delta = need("delta_auc");
  const std::size_t c_rank_o = need("rank_set_original");
  const std::size_t c_rank_s = need("rank_set_steered");
  const std::size_t c_next = need("next_item_relevant");

  std::vector<ScenarioResult> results;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    ScenarioResult r;
    r.scenario_id = fields.at(c_id);
    r.tag_id = fields.at(c_tag);
    r.group = tag_group_from_name(fields.at(c_group));
    r.direction = direction_from_name(fields.at(c_dir));
    r.auc_original = std::stod(fields.at(c_auc_o));
    r.auc_steered = std::stod(fields.at(c_auc_s));
    r.delta_auc = std::stod(fields.at(c_delta));
    r.rank_set_original = std::stoi(fields.at(c_rank_o));
    r.rank_set_steered = std::stoi(fields.at(c_rank_s));
    r.next_item_relevant = fields.at(c_next) == "true";
    results.push_back(std::move(r));
  }
  return results;
}

Condition condition_from_manifest(const nlohmann::json& record) {
  Condition condition;
  condition.profile = profile_variant_from_name(record.at("profile").get<std::string>());
  condition.intervention =
      intervention_from_name(record.at("intervention").get<std::string>());
  condition.emphasis = emphasis_from_name(record.at("emphasis").get<std::string>());
  condition.ranker = ranker_from_name(record.at("ranker").get<std::string>());
  condition.oracle = record.at("oracle").get<bool>();
  return condition;
}

}  // namespace

RunResults load_run_results(const std::string& workspace) {
  std::ifstream in(manifest_path(workspace), std::ios::binary);
  if (!in) {
    throw Error(Errc::missing_results, "no manifest under " + workspace);
  }
  nlohmann::json manifest = nlohmann::json::parse(in, nullptr, false);
  if (manifest.is_discarded()) {
    throw Error(Errc::missing_results, "manifest is not valid JSON");
  }
  RunResults results;
  results.config_hash = manifest.value("config_hash", "");
  for (const auto& record : manifest.at("conditions")) {
    ConditionResults condition;
    condition.condition = condition_from_manifest(record);
    condition.results = load_scenarios_csv(
        scenarios_csv_path(workspace, record.at("condition_id").get<std::string>()));
    results.conditions.push_back(std::move(condition));
  }
  if (results.conditions.empty()) {
    throw Error(Errc::missing_results, "manifest lists no conditions");
  }
  return results;
}

namespace {

struct DirectionStats {
  std::size_t n = 0;
  double mean = 0.0;
  bool significant = false;
};

DirectionStats direction_stats(const std::vector<ScenarioResult>& results,
                               Direction direction, double alpha) {
  std::vector<double> deltas;
  for (const ScenarioResult& r : results) {
    if (r.direction == direction) deltas.push_back(r.delta_auc);
  }
  DirectionStats stats;
  stats.n = deltas.size();
  if (deltas.empty()) return stats;
  double sum = 0.0;
  for (double d : deltas) sum += d;
  stats.mean = sum / static_cast<double>(deltas.size());
  if (deltas.size() >= 2) {
    try {
      const TTestResult test = paired_t_one_tail(
          deltas, direction == Direction::Increase ? DesiredSign::Positive
                                                   : DesiredSign::Negative);
      stats.significant = test.p_value < alpha;
    } catch (const Error&) {
      // zero-variance groups stay non-significant
    }
  }
  return stats;
}

std::string cell(const DirectionStats& stats) {
  if (stats.n == 0) return "-";
  return fmt::format("{:+.4f}{}", stats.mean, stats.significant ? " (*)" : "");
}

// Fixed-width text table with a title row.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string render(const std::string& title) const {
    std::vector<std::size_t> widths(header_.size(), 0);
    for (std::size_t i = 0; i < header_.size(); ++i) widths[i] = header_[i].size();
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size() && i < widths.size(); ++i) {
        widths[i] = std::max(widths[i], row[i].size());
      }
    }
    std::string out = title + "\n";
    const auto emit = [&](const std::vector<std::string>& row) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        out += fmt::format("{:<{}}", row[i], widths[i] + (i + 1 < row.size() ? 2 : 0));
      }
      out += "\n";
    };
    emit(header_);
    std::size_t total = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      total += widths[i] + (i + 1 < widths.size() ? 2 : 0);
    }
    out += std::string(total, '-') + "\n";
    for (const auto& row : rows_) emit(row);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct TableBuild {
  std::string text;
  nlohmann::json json;
  bool has_data = false;
};

using ConditionList = std::vector<const ConditionResults*>;

nlohmann::json stats_json(const DirectionStats& incr, const DirectionStats& decr) {
  return {{"increase",
           {{"n", incr.n}, {"mean_delta_auc", incr.mean}, {"significant", incr.significant}}},
          {"decrease",
           {{"n", decr.n}, {"mean_delta_auc", decr.mean}, {"significant", decr.significant}}}};
}

// One row per condition in `variants`, labelled by `label(condition)`.
template <typename LabelFn>
TableBuild axis_table(const std::string& title, const ConditionList& variants,
                      double alpha, LabelFn label) {
  TableBuild build;
  if (variants.size() < 2) return build;
  TextTable table({"condition", "Incr. dAUC", "Decr. dAUC"});
  build.json = nlohmann::json::array();
  for (const ConditionResults* condition : variants) {
    const DirectionStats incr =
        direction_stats(condition->results, Direction::Increase, alpha);
    const DirectionStats decr =
        direction_stats(condition->results, Direction::Decrease, alpha);
    table.add_row({label(condition->condition), cell(incr), cell(decr)});
    nlohmann::json row = stats_json(incr, decr);
    row["condition"] = label(condition->condition);
    build.json.push_back(std::move(row));
  }
  build.text = table.render(title);
  build.has_data = true;
  return build;
}

bool same_except_ranker(const Condition& a, const Condition& b) {
  return a.profile == b.profile && a.intervention == b.intervention &&
         a.emphasis == b.emphasis && a.oracle == b.oracle;
}
bool same_except_profile(const Condition& a, const Condition& b) {
  return a.ranker == b.ranker && a.intervention == b.intervention &&
         a.emphasis == b.emphasis && a.oracle == b.oracle;
}
bool same_except_intervention(const Condition& a, const Condition& b) {
  return a.ranker == b.ranker && a.profile == b.profile &&
         a.emphasis == Emphasis::Default && b.emphasis == Emphasis::Default &&
         a.oracle == b.oracle;
}
bool same_except_emphasis(const Condition& a, const Condition& b) {
  return a.ranker == b.ranker && a.profile == b.profile &&
         a.intervention == InterventionMethod::TemplateAppend &&
         b.intervention == InterventionMethod::TemplateAppend && a.oracle == b.oracle;
}
bool same_except_oracle(const Condition& a, const Condition& b) {
  return a.ranker == b.ranker && a.profile == b.profile &&
         a.intervention == b.intervention && a.emphasis == b.emphasis;
}

}  // namespace

const std::vector<std::string>& known_report_tables() {
  static const std::vector<std::string> tables = {
      "ranker", "profile", "intervention", "emphasis",
      "tag_group", "oracle", "top_tags", "rank_set"};
  return tables;
}

RenderedReport render_report(const RunResults& results, const ReportOptions& options) {
  const ConditionResults& base = results.conditions.front();
  const double alpha = options.alpha;

  std::set<std::string> requested(options.tables.begin(), options.tables.end());
  for (const std::string& name : options.tables) {
    if (std::find(known_report_tables().begin(), known_report_tables().end(), name) ==
        known_report_tables().end()) {
      throw Error(Errc::config_error, "unknown report table '" + name + "'");
    }
  }
  const auto wanted = [&](const char* name) {
    return requested.empty() || requested.count(name) > 0;
  };
  const auto explicit_request = [&](const char* name) {
    return requested.count(name) > 0;
  };

  std::string text;
  nlohmann::json doc;
  doc["config_hash"] = results.config_hash;

  const auto gather = [&](auto same_axis_fn) {
    ConditionList list = {&base};
    for (const ConditionResults& condition : results.conditions) {
      if (&condition == &base) continue;
      if (same_axis_fn(base.condition, condition.condition)) list.push_back(&condition);
    }
    return list;
  };

  struct AxisSpec {
    const char* name;
    const char* title;
    ConditionList list;
    std::function<std::string(const Condition&)> label;
  };
  std::vector<AxisSpec> axes;
  axes.push_back({"ranker", "Ranking method comparison (delta AUC_t)",
                  gather(same_except_ranker),
                  [](const Condition& c) { return std::string(ranker_name(c.ranker)); }});
  axes.push_back({"profile", "Profile generation comparison (delta AUC_t)",
                  gather(same_except_profile),
                  [](const Condition& c) {
                    return std::string(profile_variant_name(c.profile));
                  }});
  axes.push_back({"intervention", "Steering intervention comparison (delta AUC_t)",
                  gather(same_except_intervention),
                  [](const Condition& c) {
                    return std::string(intervention_name(c.intervention));
                  }});
  axes.push_back({"emphasis", "Steering emphasis comparison (delta AUC_t)",
                  gather(same_except_emphasis),
                  [](const Condition& c) { return std::string(emphasis_name(c.emphasis)); }});
  axes.push_back({"oracle", "Oracle metadata comparison (delta AUC_t)",
                  gather(same_except_oracle),
                  [](const Condition& c) {
                    return std::string(c.oracle ? "oracle" : "plain");
                  }});

  for (AxisSpec& axis : axes) {
    if (!wanted(axis.name)) continue;
    TableBuild build = axis_table(axis.title, axis.list, alpha, axis.label);
    if (!build.has_data) {
      if (explicit_request(axis.name)) {
        throw Error(Errc::missing_results,
                    fmt::format("table '{}' needs a comparison condition that was "
                                "never run", axis.name));
      }
      continue;
    }
    text += build.text + "\n";
    doc[axis.name] = std::move(build.json);
  }

  // Tag-group comparison over the default condition.
  if (wanted("tag_group")) {
    TextTable table({"tag source", "n tags", "Incr. dAUC", "Decr. dAUC"});
    nlohmann::json rows = nlohmann::json::array();
    bool any = false;
    for (TagGroup group : {TagGroup::Genre, TagGroup::Trigger}) {
      std::vector<ScenarioResult> subset;
      std::set<std::string> tags;
      for (const ScenarioResult& r : base.results) {
        if (r.group == group) {
          subset.push_back(r);
          tags.insert(r.tag_id);
        }
      }
      if (subset.empty()) continue;
      any = true;
      const DirectionStats incr = direction_stats(subset, Direction::Increase, alpha);
      const DirectionStats decr = direction_stats(subset, Direction::Decrease, alpha);
      table.add_row({fmt::format("{} ({})", tag_group_name(group), tags.size()),
                     fmt::format("{}", tags.size()), cell(incr), cell(decr)});
      nlohmann::json row = stats_json(incr, decr);
      row["tag_group"] = tag_group_name(group);
      row["n_tags"] = tags.size();
      rows.push_back(std::move(row));
    }
    if (any) {
      text += table.render("Tag source comparison (default condition)") + "\n";
      doc["tag_group"] = std::move(rows);
    } else if (explicit_request("tag_group")) {
      throw Error(Errc::missing_results, "no scenario results for the tag_group table");
    }
  }

  // Most / least steerable tags for the default condition.
  if (wanted("top_tags")) {
    if (base.results.empty() && explicit_request("top_tags")) {
      throw Error(Errc::missing_results, "no scenario results for the top_tags table");
    }
    nlohmann::json listing = nlohmann::json::object();
    for (Direction direction : {Direction::Increase, Direction::Decrease}) {
      std::map<std::string, std::vector<double>> per_tag;
      for (const ScenarioResult& r : base.results) {
        if (r.direction == direction) per_tag[r.tag_id].push_back(r.delta_auc);
      }
      if (per_tag.empty()) continue;
      std::vector<std::pair<std::string, double>> means;
      for (const auto& [tag, deltas] : per_tag) {
        double sum = 0.0;
        for (double d : deltas) sum += d;
        means.emplace_back(tag, sum / static_cast<double>(deltas.size()));
      }
      // Desired-direction order: best steering first.
      std::sort(means.begin(), means.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) {
          return direction == Direction::Increase ? a.second > b.second
                                                  : a.second < b.second;
        }
        return a.first < b.first;
      });
      const std::size_t k = std::min(options.top_k, means.size());
      TextTable table({"rank", "tag", "mean dAUC"});
      nlohmann::json best = nlohmann::json::array();
      nlohmann::json worst = nlohmann::json::array();
      for (std::size_t i = 0; i < k; ++i) {
        table.add_row({fmt::format("best {}", i + 1), means[i].first,
                       fmt::format("{:+.4f}", means[i].second)});
        best.push_back({{"tag_id", means[i].first}, {"mean_delta_auc", means[i].second}});
      }
      for (std::size_t i = 0; i < k; ++i) {
        const auto& entry = means[means.size() - 1 - i];
        table.add_row({fmt::format("worst {}", i + 1), entry.first,
                       fmt::format("{:+.4f}", entry.second)});
        worst.push_back({{"tag_id", entry.first}, {"mean_delta_auc", entry.second}});
      }
      text += table.render(fmt::format("Most/least steered tags ({} task)",
                                       direction_name(direction))) +
              "\n";
      listing[direction_name(direction)] = {{"best", best}, {"worst", worst}};
    }
    if (!listing.empty()) doc["top_tags"] = std::move(listing);
  }

  // Accuracy preservation: next-item rank within its own relevance subset.
  if (wanted("rank_set")) {
    if (base.results.empty() && explicit_request("rank_set")) {
      throw Error(Errc::missing_results, "no scenario results for the rank_set table");
    }
    TextTable table({"task", "next item", "n", "orig Rank_set", "delta Rank_set"});
    nlohmann::json rows = nlohmann::json::array();
    bool any = false;
    for (Direction direction : {Direction::Increase, Direction::Decrease}) {
      for (bool relevant : {true, false}) {
        std::size_t n = 0;
        double orig = 0.0;
        double delta = 0.0;
        for (const ScenarioResult& r : base.results) {
          if (r.direction != direction || r.next_item_relevant != relevant) continue;
          ++n;
          orig += r.rank_set_original;
          delta += r.rank_set_steered - r.rank_set_original;
        }
        if (n == 0) continue;
        any = true;
        orig /= static_cast<double>(n);
        delta /= static_cast<double>(n);
        table.add_row({direction_name(direction), relevant ? "Rel." : "Irrel.",
                       fmt::format("{}", n), fmt::format("{:.2f}", orig),
                       fmt::format("{:+.2f}", delta)});
        rows.push_back({{"direction", direction_name(direction)},
                        {"next_item_relevant", relevant},
                        {"n", n},
                        {"mean_rank_set_original", orig},
                        {"mean_delta_rank_set", delta}});
      }
    }
    if (any) {
      text += table.render("Accuracy preservation (Rank_set, default condition)") + "\n";
      doc["rank_set"] = std::move(rows);
    }
  }

  RenderedReport rendered;
  rendered.text = text;
  rendered.json = doc.dump(2) + "\n";
  return rendered;
}

}  // namespace steereval

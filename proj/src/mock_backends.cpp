#include "steereval/mock_backends.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <set>
#include <thread>

#include <fmt/core.h>

#include "steereval/errors.hpp"
#include "steereval/hash.hpp"
#include "steereval/prompts.hpp"
#include "steereval/strings.hpp"

namespace steereval {

namespace {

double hash01(const std::string& text) {
  return static_cast<double>(fnv1a(text) >> 11) * 0x1.0p-53;
}

std::string strip_asterisks(const std::string& text) {
  return replace_all(text, "*", "");
}

// The sentence the mock "writes" when asked to rephrase or rewrite; also a
// marker its scorer recognises afterwards.
std::string canonical_steering_sentence(const TagSpec& tag, Direction direction) {
  const char* verb =
      direction == Direction::Increase ? "wants" : "does not want";
  if (tag.group == TagGroup::Genre) {
    return fmt::format("The user {} to see {} movies.", verb, tag.clause);
  }
  return fmt::format("The user {} to see movies where {}.", verb, tag.clause);
}

struct TagMarkers {
  std::string tag_id;
  std::set<std::string> increase;
  std::set<std::string> decrease;
  std::string match_note;
  std::string no_match_note;
};

std::vector<TagMarkers> build_markers(const std::vector<TagSpec>& tags,
                                      bool appendix_trigger_decrease) {
  std::vector<TagMarkers> markers;
  for (const TagSpec& tag : tags) {
    TagMarkers m;
    m.tag_id = tag.tag_id;
    for (Emphasis emphasis : {Emphasis::Default, Emphasis::Stronger, Emphasis::Weaker}) {
      for (bool appendix : {false, true}) {
        TemplateOptions options;
        options.appendix_trigger_decrease = appendix;
        const std::string inc = render_template(tag, Direction::Increase, emphasis, options);
        const std::string dec = render_template(tag, Direction::Decrease, emphasis, options);
        m.increase.insert(inc);
        m.increase.insert(strip_asterisks(inc));
        m.decrease.insert(dec);
        m.decrease.insert(strip_asterisks(dec));
      }
    }
    m.increase.insert(canonical_steering_sentence(tag, Direction::Increase));
    m.decrease.insert(canonical_steering_sentence(tag, Direction::Decrease));
    m.match_note = fmt::format("Tag note: this movie matches '{}'.", tag.clause);
    m.no_match_note = fmt::format("Tag note: this movie does not match '{}'.", tag.clause);
    markers.push_back(std::move(m));
  }
  (void)appendix_trigger_decrease;
  return markers;
}

class MockOracleBackend final : public GenerationBackend {
 public:
  MockOracleBackend(const Catalog& catalog, const std::vector<TagSpec>& tags,
                    const MockOracleConfig& config)
      : catalog_(catalog),
        tags_(tags),
        config_(config),
        markers_(build_markers(tags, config.appendix_trigger_decrease)) {
    for (const Item& item : catalog.items()) {
      title_to_item_.emplace(item.title, item.item_id);
    }
  }

  std::string generate(const GenRequest& request) override {
    const std::string& prompt = request.prompt;
    if (prompt.rfind(kScorePromptHeader, 0) == 0) return score(prompt);
    if (prompt.rfind(kProfileParagraphHeader, 0) == 0) return paragraph_stub(prompt);
    if (prompt.rfind(kProfileSentenceHeader, 0) == 0) return sentence_stub(prompt);
    if (prompt.rfind(kAppendPromptHeader, 0) == 0) return append_sentence(prompt);
    if (prompt.rfind(kRewritePromptHeader, 0) == 0) return rewrite_profile(prompt);
    throw Error(Errc::unparsable_prompt,
                "prompt matches no known template: " + prompt.substr(0, 80));
  }

 private:
  std::string score(const std::string& prompt) const {
    const std::string profile =
        section(prompt, "USER PROFILE:\n", "\nCANDIDATE MOVIE:\n");
    const std::string blurb = section(prompt, "CANDIDATE MOVIE:\n", "\nSCORE:");
    const std::string title = section(blurb + "\n", "Movie Title: ", "\n");

    auto it = title_to_item_.find(title);
    if (it == title_to_item_.end()) {
      throw Error(Errc::unparsable_prompt, "unknown candidate title '" + title + "'");
    }
    const std::string& item_id = it->second;

    double value = config_.base_score_min + config_.base_score_span * hash01(item_id);
    for (std::size_t i = 0; i < tags_.size(); ++i) {
      const TagSpec& tag = tags_[i];
      const TagMarkers& m = markers_[i];
      const bool relevant = tag.relevant_items.count(item_id) > 0;
      if (!relevant) continue;
      const bool noted = blurb.find(m.match_note) != std::string::npos ||
                         blurb.find(m.no_match_note) != std::string::npos;
      const double shift = config_.delta + (noted ? config_.oracle_bonus : 0.0);
      if (any_marker(profile, m.increase)) value += shift;
      if (any_marker(profile, m.decrease)) value -= shift;
    }
    return fmt::format("{:.4f}", value);
  }

  std::string paragraph_stub(const std::string& prompt) const {
    return fmt::format(
        "This viewer returns to brisk, plot-forward features and rewards them "
        "with steady ratings when the pacing holds. They favor ensemble casts "
        "over lone-hero arcs and settle in happily for longer runtimes. "
        "Stories grounded in a specific place or era hold their attention "
        "best. They will follow a new director on the strength of a single "
        "promising premise. Viewing digest {}.",
        hash_hex(fnv1a(prompt)));
  }

  std::string sentence_stub(const std::string& prompt) const {
    return fmt::format(
        "This viewer favors brisk, character-driven features with steady "
        "pacing and a warm tone, viewing digest {}.",
        hash_hex(fnv1a(prompt)));
  }

  std::string append_sentence(const std::string& prompt) const {
    const std::size_t pos = prompt.rfind("REQUEST: ");
    if (pos == std::string::npos) {
      throw Error(Errc::unparsable_prompt, "append prompt has no REQUEST line");
    }
    const std::string request = trim(prompt.substr(pos + 9));
    for (std::size_t i = 0; i < tags_.size(); ++i) {
      if (markers_[i].increase.count(request)) {
        return canonical_steering_sentence(tags_[i], Direction::Increase);
      }
      if (markers_[i].decrease.count(request)) {
        return canonical_steering_sentence(tags_[i], Direction::Decrease);
      }
    }
    throw Error(Errc::unparsable_prompt, "unrecognised REQUEST: " + request);
  }

  std::string rewrite_profile(const std::string& prompt) const {
    const std::string original =
        section(prompt, "ORIGINAL PROFILE: ", "\nUPDATED PROFILE:");
    const std::string instruction = split(prompt, '\n')[0];
    for (std::size_t i = 0; i < tags_.size(); ++i) {
      const TagSpec& tag = tags_[i];
      if (instruction.find("*wants*") != std::string::npos &&
          instruction.find(tag.clause) != std::string::npos) {
        return original + " " + canonical_steering_sentence(tag, Direction::Increase);
      }
      if (instruction.find("*does not want*") != std::string::npos &&
          instruction.find(tag.clause) != std::string::npos) {
        return original + " " + canonical_steering_sentence(tag, Direction::Decrease);
      }
    }
    throw Error(Errc::unparsable_prompt, "unrecognised rewrite instruction");
  }

  static std::string section(const std::string& text, const std::string& begin,
                             const std::string& end) {
    const std::size_t b = text.find(begin);
    if (b == std::string::npos) {
      throw Error(Errc::unparsable_prompt, "missing section '" + begin + "'");
    }
    const std::size_t start = b + begin.size();
    const std::size_t e = text.find(end, start);
    if (e == std::string::npos) {
      throw Error(Errc::unparsable_prompt, "missing section end '" + end + "'");
    }
    return text.substr(start, e - start);
  }

  static bool any_marker(const std::string& text, const std::set<std::string>& markers) {
    for (const std::string& marker : markers) {
      if (text.find(marker) != std::string::npos) return true;
    }
    return false;
  }

  const Catalog& catalog_;
  std::vector<TagSpec> tags_;
  MockOracleConfig config_;
  std::vector<TagMarkers> markers_;
  std::map<std::string, std::string> title_to_item_;
};

class MockTagEmbedder final : public EmbeddingBackend {
 public:
  MockTagEmbedder(const Catalog& catalog, const std::vector<TagSpec>& tags,
                  std::size_t dim)
      : tags_(tags), dim_(dim) {
    if (dim_ < tags_.size() + 8) {
      throw Error(Errc::config_error,
                  fmt::format("mock embedder dim {} too small for {} tags", dim_,
                              tags_.size()));
    }
    for (const Item& item : catalog.items()) {
      title_to_item_.emplace(item.title, item.item_id);
    }
  }

  std::vector<double> embed(const std::string& text) override {
    std::vector<double> vec(dim_, 0.0);
    const std::size_t content_dims = dim_ - tags_.size();

    // Hashed bag-of-tokens content block, unit-normalised.
    double norm_sq = 0.0;
    std::string token;
    auto flush = [&] {
      if (token.empty()) return;
      const std::uint64_t h = fnv1a(to_lower(token));
      const std::size_t idx = tags_.size() + static_cast<std::size_t>(h % content_dims);
      vec[idx] += (h >> 7) & 1 ? 1.0 : -1.0;
      token.clear();
    };
    for (char c : text) {
      if (std::isalnum(static_cast<unsigned char>(c))) token.push_back(c);
      else flush();
    }
    flush();
    for (std::size_t i = tags_.size(); i < dim_; ++i) norm_sq += vec[i] * vec[i];
    if (norm_sq > 0.0) {
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (std::size_t i = tags_.size(); i < dim_; ++i) vec[i] *= inv;
    }

    // Item blurbs land on the axes of every tag the item is relevant to.
    if (text.rfind("Movie Title: ", 0) == 0) {
      const std::size_t eol = text.find('\n');
      const std::string title = text.substr(13, eol == std::string::npos
                                                    ? std::string::npos
                                                    : eol - 13);
      auto it = title_to_item_.find(title);
      if (it != title_to_item_.end()) {
        for (std::size_t t = 0; t < tags_.size(); ++t) {
          if (tags_[t].relevant_items.count(it->second)) vec[t] += 1.0;
        }
      }
    }

    // Any mention of a clause pulls the text toward that tag's axis,
    // regardless of sentiment.
    for (std::size_t t = 0; t < tags_.size(); ++t) {
      if (contains_ci(text, tags_[t].clause)) vec[t] += 1.0;
    }
    return vec;
  }

  std::size_t dim() const override { return dim_; }

 private:
  std::vector<TagSpec> tags_;
  std::size_t dim_;
  std::map<std::string, std::string> title_to_item_;
};

class CallBudgetBackend final : public GenerationBackend {
 public:
  CallBudgetBackend(std::unique_ptr<GenerationBackend> inner,
                    std::shared_ptr<std::atomic<int>> budget)
      : inner_(std::move(inner)), budget_(std::move(budget)) {}

  std::string generate(const GenRequest& request) override {
    if (budget_->fetch_sub(1) <= 0) {
      throw Error(Errc::backend_unavailable, "call budget exhausted");
    }
    return inner_->generate(request);
  }

 private:
  std::unique_ptr<GenerationBackend> inner_;
  std::shared_ptr<std::atomic<int>> budget_;
};

}  // namespace

std::unique_ptr<GenerationBackend> make_mock_oracle_backend(
    const Catalog& catalog, const std::vector<TagSpec>& tags,
    const MockOracleConfig& config) {
  return std::make_unique<MockOracleBackend>(catalog, tags, config);
}

std::unique_ptr<EmbeddingBackend> make_mock_tag_embedder(
    const Catalog& catalog, const std::vector<TagSpec>& tags, std::size_t dim) {
  return std::make_unique<MockTagEmbedder>(catalog, tags, dim);
}

std::string ScriptedGenerationBackend::generate(const GenRequest& request) {
  calls_.fetch_add(1);
  auto it = responses_.find(request.prompt);
  if (it != responses_.end()) return it->second;
  if (!fallback_.empty()) return fallback_;
  throw Error(Errc::protocol_error, "no scripted response for prompt");
}

std::unique_ptr<GenerationBackend> make_call_budget_backend(
    std::unique_ptr<GenerationBackend> inner,
    std::shared_ptr<std::atomic<int>> budget) {
  return std::make_unique<CallBudgetBackend>(std::move(inner), std::move(budget));
}

std::string ConcurrencyProbeBackend::generate(const GenRequest& request) {
  (void)request;
  calls_.fetch_add(1);
  const int now = active_.fetch_add(1) + 1;
  int prev = peak_.load();
  while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(15));
  active_.fetch_sub(1);
  return "ok";
}

}  // namespace steereval

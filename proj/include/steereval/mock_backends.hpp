#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "steereval/corpus.hpp"
#include "steereval/gateway.hpp"

namespace steereval {

// Deterministic test doubles that let the whole harness run offline.

struct MockOracleConfig {
  double base_score_min = 2.5;   // base scores fall in [min, min + span]
  double base_score_span = 1.0;
  double delta = 1.0;            // steering shift applied to relevant items
  double oracle_bonus = 0.5;     // extra shift when the blurb carries a tag note
  bool appendix_trigger_decrease = false;
};

// Generation backend that understands the harness's own prompt grammar.
// Scoring prompts: looks up the candidate's true tag relevance and shifts
// its base score by +/- delta when the profile carries a steering sentence.
// Profile prompts: emits a fixed stub keyed by a digest of the history.
// Append/rewrite prompts: emits canonical steering sentences the scorer can
// recognise later. Prompts that match no known shape raise UnparsablePrompt,
// which is the signal that a prompt template drifted.
std::unique_ptr<GenerationBackend> make_mock_oracle_backend(
    const Catalog& catalog, const std::vector<TagSpec>& tags,
    const MockOracleConfig& config);

// Embedding backend with one reserved axis per tag plus hashed content dims.
// Any text mentioning a tag clause lands near that tag's items, liked or
// not — the known failure mode of similarity rankers on decrease tasks.
std::unique_ptr<EmbeddingBackend> make_mock_tag_embedder(
    const Catalog& catalog, const std::vector<TagSpec>& tags, std::size_t dim);

// Scripted map from exact prompt to completion; counts calls.
class ScriptedGenerationBackend final : public GenerationBackend {
 public:
  explicit ScriptedGenerationBackend(std::map<std::string, std::string> responses,
                                     std::string fallback = "")
      : responses_(std::move(responses)), fallback_(std::move(fallback)) {}

  std::string generate(const GenRequest& request) override;
  int calls() const { return calls_.load(); }

 private:
  std::map<std::string, std::string> responses_;
  std::string fallback_;
  std::atomic<int> calls_{0};
};

// Wraps a backend and fails every call after the first `budget` succeed.
// Simulates a run interrupted partway for resume tests.
std::unique_ptr<GenerationBackend> make_call_budget_backend(
    std::unique_ptr<GenerationBackend> inner, std::shared_ptr<std::atomic<int>> budget);

// Tracks the peak number of concurrent calls; used to observe the
// gateway's in-flight bound.
class ConcurrencyProbeBackend final : public GenerationBackend {
 public:
  std::string generate(const GenRequest& request) override;
  int peak() const { return peak_.load(); }
  int calls() const { return calls_.load(); }

 private:
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
  std::atomic<int> calls_{0};
};

}  // namespace steereval

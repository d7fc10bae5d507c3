#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace steereval {

struct GenRequest {
  std::string backend_id;
  std::string prompt;
  int max_tokens = 512;
  double temperature = 0.0;  // deterministic decoding by default
};

struct GenResponse {
  std::string text;
  bool refusal = false;
  bool cached = false;
  std::string matched_refusal_pattern;  // set iff refusal
};

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t dim() const { return values.size(); }
};

// True iff any pattern occurs in text, case-insensitively.
bool detect_refusal(const std::string& text, const std::vector<std::string>& patterns,
                    std::string* matched = nullptr);

const std::vector<std::string>& default_refusal_patterns();

// First decimal literal (optional sign, digits, optional fraction) in the
// text, clamped to [0.0, 5.0]; 0.0 when no number is present. Total function.
double parse_score(const std::string& text);

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string generate(const GenRequest& request) = 0;
};

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<double> embed(const std::string& text) = 0;
  virtual std::size_t dim() const = 0;
};

// Runtime-sized counting semaphore bounding in-flight backend calls.
class Semaphore {
 public:
  explicit Semaphore(std::size_t count) : count_(count) {}
  void acquire();
  void release();

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t count_;
};

struct GatewayOptions {
  std::string cache_dir;             // empty disables the on-disk cache
  std::size_t max_in_flight = 4;
  std::vector<std::string> refusal_patterns = default_refusal_patterns();
};

// Uniform access to registered text-generation and embedding backends with
// content-addressed response caching and a bounded in-flight window.
// Safe for concurrent callers.
class Gateway {
 public:
  explicit Gateway(GatewayOptions options);

  void register_generation(const std::string& backend_id,
                           std::unique_ptr<GenerationBackend> backend);
  void register_embedding(const std::string& backend_id,
                          std::unique_ptr<EmbeddingBackend> backend);
  bool has_generation(const std::string& backend_id) const;
  bool has_embedding(const std::string& backend_id) const;

  GenResponse generate(const GenRequest& request);
  // Fresh backend call even when a cache entry exists; the result replaces
  // the cached entry. Used for the single malformed-append retry.
  GenResponse generate_fresh(const GenRequest& request);

  EmbeddingVector embed(const std::string& backend_id, const std::string& text);

  // Cache management, used by tests and the resume machinery.
  std::string generation_cache_path(const GenRequest& request) const;
  std::string embedding_cache_path(const std::string& backend_id,
                                   const std::string& text) const;

 private:
  GenResponse generate_impl(const GenRequest& request, bool allow_cache);

  GatewayOptions options_;
  Semaphore in_flight_;
  mutable std::mutex cache_mutex_;
  std::map<std::string, std::unique_ptr<GenerationBackend>> generation_;
  std::map<std::string, std::unique_ptr<EmbeddingBackend>> embedding_;
};

struct HttpBackendOptions {
  std::string base_url;   // scheme://host[:port][/prefix]
  std::string model;
  std::string api_key;    // optional bearer token
  int max_retries = 3;
  int retry_initial_ms = 250;
  int timeout_sec = 120;
};

// JSON-over-HTTP chat-completions backend:
//   POST {base}/v1/chat/completions
//   {"model", "messages":[{"role":"user","content"}], "temperature", "max_tokens"}
std::unique_ptr<GenerationBackend> make_http_chat_backend(HttpBackendOptions options);

// JSON-over-HTTP embeddings backend:
//   POST {base}/v1/embeddings   {"model", "input": [text]}
std::unique_ptr<EmbeddingBackend> make_http_embedding_backend(HttpBackendOptions options,
                                                              std::size_t dim);

}  // namespace steereval

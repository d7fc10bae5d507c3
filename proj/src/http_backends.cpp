#include <chrono>
#include <memory>
#include <thread>

#include <fmt/core.h>
#include <httplib.h>
#include <json.hpp>

#include "steereval/errors.hpp"
#include "steereval/gateway.hpp"

namespace steereval {

namespace {

struct ParsedBase {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix, possibly empty
};

ParsedBase parse_base_url(const std::string& base_url) {
  const std::size_t scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::config_error, "base_url must include scheme: " + base_url);
  }
  const std::size_t path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

// POSTs the body with bounded exponential-backoff retries on transport
// errors and retryable statuses. Returns the response body.
class HttpPoster {
 public:
  explicit HttpPoster(HttpBackendOptions options)
      : options_(std::move(options)), base_(parse_base_url(options_.base_url)) {}

  std::string post_json(const std::string& path, const std::string& body) {
    std::string last_error;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
      if (attempt > 0) {
        const auto delay = std::chrono::milliseconds(
            static_cast<long>(options_.retry_initial_ms) * (1L << (attempt - 1)));
        std::this_thread::sleep_for(delay);
      }
      httplib::Client client(base_.origin);
      client.set_connection_timeout(options_.timeout_sec, 0);
      client.set_read_timeout(options_.timeout_sec, 0);
      httplib::Headers headers;
      if (!options_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + options_.api_key);
      }
      auto result = client.Post(base_.prefix + path, headers, body, "application/json");
      if (!result) {
        last_error = fmt::format("transport error: {}", httplib::to_string(result.error()));
        continue;
      }
      if (result->status == 200) return result->body;
      if (retryable_status(result->status)) {
        last_error = fmt::format("HTTP {}", result->status);
        continue;
      }
      throw Error(Errc::protocol_error,
                  fmt::format("HTTP {} from {}{}: {}", result->status, base_.origin,
                              path, result->body.substr(0, 200)));
    }
    throw Error(Errc::backend_unavailable,
                fmt::format("{}{} failed after {} retries ({})", base_.origin,
                            base_.prefix, options_.max_retries, last_error));
  }

 private:
  HttpBackendOptions options_;
  ParsedBase base_;
};

class HttpChatBackend final : public GenerationBackend {
 public:
  explicit HttpChatBackend(HttpBackendOptions options)
      : model_(options.model), poster_(std::move(options)) {}

  std::string generate(const GenRequest& request) override {
    nlohmann::json body;
    body["model"] = model_;
    body["messages"] = nlohmann::json::array(
        {{{"role", "user"}, {"content", request.prompt}}});
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;

    const std::string raw = poster_.post_json("/v1/chat/completions", body.dump());
    nlohmann::json doc = nlohmann::json::parse(raw, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() ||
        doc["choices"].empty() || !doc["choices"][0].contains("message") ||
        !doc["choices"][0]["message"].contains("content") ||
        !doc["choices"][0]["message"]["content"].is_string()) {
      throw Error(Errc::protocol_error,
                  "chat response missing choices[0].message.content");
    }
    return doc["choices"][0]["message"]["content"].get<std::string>();
  }

 private:
  std::string model_;
  HttpPoster poster_;
};

class HttpEmbeddingBackend final : public EmbeddingBackend {
 public:
  HttpEmbeddingBackend(HttpBackendOptions options, std::size_t dim)
      : model_(options.model), dim_(dim), poster_(std::move(options)) {}

  std::vector<double> embed(const std::string& text) override {
    nlohmann::json body;
    body["model"] = model_;
    body["input"] = nlohmann::json::array({text});

    const std::string raw = poster_.post_json("/v1/embeddings", body.dump());
    nlohmann::json doc = nlohmann::json::parse(raw, nullptr, false);
    if (doc.is_discarded() || !doc.contains("data") || !doc["data"].is_array() ||
        doc["data"].empty() || !doc["data"][0].contains("embedding") ||
        !doc["data"][0]["embedding"].is_array()) {
      throw Error(Errc::protocol_error, "embedding response missing data[0].embedding");
    }
    return doc["data"][0]["embedding"].get<std::vector<double>>();
  }

  std::size_t dim() const override { return dim_; }

 private:
  std::string model_;
  std::size_t dim_;
  HttpPoster poster_;
};

}  // namespace

std::unique_ptr<GenerationBackend> make_http_chat_backend(HttpBackendOptions options) {
  return std::make_unique<HttpChatBackend>(std::move(options));
}

std::unique_ptr<EmbeddingBackend> make_http_embedding_backend(HttpBackendOptions options,
                                                              std::size_t dim) {
  return std::make_unique<HttpEmbeddingBackend>(std::move(options), dim);
}

}  // namespace steereval

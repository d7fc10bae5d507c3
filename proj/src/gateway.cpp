#include "steereval/gateway.hpp"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <fmt/core.h>
#include <json.hpp>

#include "steereval/errors.hpp"
#include "steereval/hash.hpp"
#include "steereval/strings.hpp"

namespace steereval {

namespace fs = std::filesystem;

bool detect_refusal(const std::string& text, const std::vector<std::string>& patterns,
                    std::string* matched) {
  const std::string lowered = to_lower(text);
  for (const std::string& pattern : patterns) {
    if (lowered.find(to_lower(pattern)) != std::string::npos) {
      if (matched) *matched = pattern;
      return true;
    }
  }
  return false;
}

const std::vector<std::string>& default_refusal_patterns() {
  static const std::vector<std::string> patterns = {
      "i can't", "i cannot", "i'm sorry", "as an ai", "i won't"};
  return patterns;
}

double parse_score(const std::string& text) {
  const auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  for (std::size_t i = 0; i < text.size(); ++i) {
    std::size_t start = i;
    if ((text[i] == '+' || text[i] == '-') && i + 1 < text.size() &&
        is_digit(text[i + 1])) {
      ++i;
    }
    if (!is_digit(text[i])) continue;
    std::size_t end = i;
    while (end < text.size() && is_digit(text[end])) ++end;
    if (end + 1 < text.size() && text[end] == '.' && is_digit(text[end + 1])) {
      ++end;
      while (end < text.size() && is_digit(text[end])) ++end;
    }
    const double value = std::stod(text.substr(start, end - start));
    return std::clamp(value, 0.0, 5.0);
  }
  return 0.0;
}

void Semaphore::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return count_ > 0; });
  --count_;
}

void Semaphore::release() {
  {
    std::lock_guard lock(mutex_);
    ++count_;
  }
  cv_.notify_one();
}

namespace {

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(Semaphore& sem) : sem_(sem) { sem_.acquire(); }
  ~SemaphoreGuard() { sem_.release(); }

 private:
  Semaphore& sem_;
};

void atomic_write(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + fmt::format(".tmp{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(Errc::io_error, "cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::optional<nlohmann::json> read_json_if_exists(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) return std::nullopt;
  return doc;
}

std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Gateway::Gateway(GatewayOptions options)
    : options_(std::move(options)),
      in_flight_(options_.max_in_flight == 0 ? 1 : options_.max_in_flight) {}

void Gateway::register_generation(const std::string& backend_id,
                                  std::unique_ptr<GenerationBackend> backend) {
  generation_[backend_id] = std::move(backend);
}

void Gateway::register_embedding(const std::string& backend_id,
                                 std::unique_ptr<EmbeddingBackend> backend) {
  embedding_[backend_id] = std::move(backend);
}

bool Gateway::has_generation(const std::string& backend_id) const {
  return generation_.count(backend_id) > 0;
}

bool Gateway::has_embedding(const std::string& backend_id) const {
  return embedding_.count(backend_id) > 0;
}

std::string Gateway::generation_cache_path(const GenRequest& request) const {
  const std::uint64_t key =
      stable_hash({request.backend_id, "chat", request.prompt,
                   fmt::format("{:.6g}", request.temperature),
                   fmt::format("{}", request.max_tokens)});
  const std::string hex = hash_hex(key);
  return (fs::path(options_.cache_dir) / request.backend_id / hex.substr(0, 2) /
          (hex + ".json"))
      .string();
}

std::string Gateway::embedding_cache_path(const std::string& backend_id,
                                          const std::string& text) const {
  const std::uint64_t key = stable_hash({backend_id, "embed", text});
  const std::string hex = hash_hex(key);
  return (fs::path(options_.cache_dir) / backend_id / hex.substr(0, 2) /
          (hex + ".json"))
      .string();
}

GenResponse Gateway::generate(const GenRequest& request) {
  return generate_impl(request, /*allow_cache=*/true);
}

GenResponse Gateway::generate_fresh(const GenRequest& request) {
  return generate_impl(request, /*allow_cache=*/false);
}

GenResponse Gateway::generate_impl(const GenRequest& request, bool allow_cache) {
  if (request.prompt.empty()) {
    throw Error(Errc::protocol_error, "empty prompt");
  }
  if (request.temperature < 0.0) {
    throw Error(Errc::protocol_error, "negative temperature");
  }
  auto it = generation_.find(request.backend_id);
  if (it == generation_.end()) {
    throw Error(Errc::backend_unavailable,
                "no generation backend '" + request.backend_id + "'");
  }

  const bool use_cache = !options_.cache_dir.empty();
  const fs::path cache_path =
      use_cache ? fs::path(generation_cache_path(request)) : fs::path();

  if (use_cache && allow_cache) {
    std::lock_guard lock(cache_mutex_);
    if (auto doc = read_json_if_exists(cache_path)) {
      GenResponse response;
      response.text = doc->at("response").at("text").get<std::string>();
      response.cached = true;
      response.refusal = detect_refusal(response.text, options_.refusal_patterns,
                                        &response.matched_refusal_pattern);
      return response;
    }
  }

  std::string text;
  {
    SemaphoreGuard guard(in_flight_);
    text = it->second->generate(request);
  }

  if (use_cache) {
    nlohmann::json doc;
    doc["request"] = {{"backend_id", request.backend_id},
                      {"prompt", request.prompt},
                      {"max_tokens", request.max_tokens},
                      {"temperature", request.temperature}};
    doc["response"] = {{"text", text}};
    doc["timestamp"] = unix_now();
    std::lock_guard lock(cache_mutex_);
    atomic_write(cache_path, doc.dump(2) + "\n");
  }

  GenResponse response;
  response.text = std::move(text);
  response.cached = false;
  response.refusal = detect_refusal(response.text, options_.refusal_patterns,
                                    &response.matched_refusal_pattern);
  return response;
}

EmbeddingVector Gateway::embed(const std::string& backend_id, const std::string& text) {
  if (text.empty()) throw Error(Errc::protocol_error, "empty embedding text");
  auto it = embedding_.find(backend_id);
  if (it == embedding_.end()) {
    throw Error(Errc::backend_unavailable, "no embedding backend '" + backend_id + "'");
  }

  const bool use_cache = !options_.cache_dir.empty();
  const fs::path cache_path =
      use_cache ? fs::path(embedding_cache_path(backend_id, text)) : fs::path();

  if (use_cache) {
    std::lock_guard lock(cache_mutex_);
    if (auto doc = read_json_if_exists(cache_path)) {
      EmbeddingVector vec;
      vec.values = doc->at("response").at("embedding").get<std::vector<double>>();
      if (vec.values.size() != it->second->dim()) {
        throw Error(Errc::dimension_mismatch,
                    fmt::format("cached embedding has dim {}, backend registered {}",
                                vec.values.size(), it->second->dim()));
      }
      return vec;
    }
  }

  std::vector<double> values;
  {
    SemaphoreGuard guard(in_flight_);
    values = it->second->embed(text);
  }
  if (values.size() != it->second->dim()) {
    throw Error(Errc::dimension_mismatch,
                fmt::format("backend returned {} values, {} registered",
                            values.size(), it->second->dim()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(Errc::protocol_error, "non-finite embedding value");
    }
  }

  if (use_cache) {
    nlohmann::json doc;
    doc["request"] = {{"backend_id", backend_id}, {"input", text}};
    doc["response"] = {{"embedding", values}};
    doc["timestamp"] = unix_now();
    std::lock_guard lock(cache_mutex_);
    atomic_write(cache_path, doc.dump() + "\n");
  }

  EmbeddingVector vec;
  vec.values = std::move(values);
  return vec;
}

}  // namespace steereval

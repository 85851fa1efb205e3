#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hobson/error.hpp"
#include "hobson/prompt.hpp"

namespace hobson {

struct CompletionRequest {
  RenderedPrompt prompt;
  std::string model;
  double temperature = 0.2;
  // Which simulated annotator this sample belongs to. Part of the cache key,
  // never part of the prompt text.
  int run_index = 0;
  int max_tokens = 1024;
};

struct RawResponse {
  std::string request_digest;
  std::string instance_id;
  PromptTier tier = PromptTier::Constrained;
  std::string text;
  std::string model;
  double temperature = 0.0;
  int run_index = 0;
  std::int64_t latency_ms = 0;
  std::string provider;
  bool retrieved_from_cache = false;
  // Provider calls spent on this response; 0 on a cache hit.
  int attempts = 0;
};

/// SHA-256 over a length-prefixed encoding of the four fields. The
/// temperature is encoded with round-trip precision, so any change in any
/// argument yields a different digest.
std::string cache_key(std::string_view prompt_text, std::string_view model,
                      double temperature, int run_index);

enum class FailureKind {
  Transport,    // retryable
  RateLimited,  // retryable
  Refusal,
  EmptyResponse,
  CacheMiss,
};

std::string_view to_string(FailureKind kind);

class CompletionError : public Error {
 public:
  CompletionError(FailureKind kind, const std::string& message,
                  int attempts = 0)
      : Error(message), kind_(kind), attempts_(attempts) {}

  FailureKind kind() const { return kind_; }
  int attempts() const { return attempts_; }
  bool retryable() const {
    return kind_ == FailureKind::Transport || kind_ == FailureKind::RateLimited;
  }

 private:
  FailureKind kind_;
  int attempts_;
};

// A backend that turns a request into completion text. Implementations
// throw CompletionError; they must be callable from several threads.
class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  virtual std::string name() const = 0;
  virtual std::string send(const CompletionRequest& request) = 0;
};

struct CachedCompletion {
  std::string digest;
  std::string text;
  std::string provider;
  std::string model;
  double temperature = 0.0;
  int run_index = 0;
};

/// Content-addressed response store. Entries live in
/// `<dir>/<first two digest hex chars>.jsonl`, one JSON object per line.
/// Reads and writes are serialized by one mutex; a later put for the same
/// digest replaces the earlier entry.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<CachedCompletion> get(const std::string& digest);
  void put(const CachedCompletion& entry);

  const std::filesystem::path& directory() const { return dir_; }

 private:
  using Bucket = std::unordered_map<std::string, CachedCompletion>;
  Bucket& load_bucket(const std::string& prefix);

  std::filesystem::path dir_;
  std::mutex mutex_;
  std::unordered_map<std::string, Bucket> buckets_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};

  // Delay before attempt `attempt` (1-based; attempt 1 has no delay).
  std::chrono::milliseconds delay_before(int attempt) const;
};

enum class CacheMode {
  ReadWrite,
  ReadOnly,  // cache-only: a miss is an error, the provider is never called
  Disabled,
};

struct GatewayStats {
  std::size_t provider_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t retries = 0;
  std::size_t failures = 0;
};

struct BatchSlot {
  std::optional<RawResponse> response;
  std::optional<FailureKind> failure;
  std::string error;

  bool ok() const { return response.has_value(); }
};

class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(std::shared_ptr<CompletionProvider> provider,
          std::shared_ptr<ResponseCache> cache,
          CacheMode mode = CacheMode::ReadWrite, RetryPolicy retry = {});

  /// Cache lookup, then up to `max_attempts` provider calls with
  /// exponential backoff on transport and rate-limit failures. Throws
  /// CompletionError; an empty completion is FailureKind::EmptyResponse.
  RawResponse complete(const CompletionRequest& request);

  /// Runs `requests` on at most `parallelism` worker threads. Slot i always
  /// holds the outcome of requests[i]; one failure never aborts the rest.
  std::vector<BatchSlot> complete_batch(
      const std::vector<CompletionRequest>& requests, std::size_t parallelism);

  GatewayStats stats() const;
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

 private:
  RawResponse from_cache(const CompletionRequest& request,
                         const CachedCompletion& entry) const;

  std::shared_ptr<CompletionProvider> provider_;
  std::shared_ptr<ResponseCache> cache_;
  CacheMode mode_;
  RetryPolicy retry_;
  Sleeper sleeper_;

  mutable std::mutex stats_mutex_;
  GatewayStats stats_;
};

}  // namespace hobson

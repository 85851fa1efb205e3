#include "hobson/gateway.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "hobson/digest.hpp"

namespace hobson {
namespace {

using nlohmann::json;

void append_field(std::string& out, std::string_view field) {
  out += std::to_string(field.size());
  out += ':';
  out += field;
  out += '\n';
}

bool is_blank(std::string_view text) {
  return text.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

}  // namespace

std::string cache_key(std::string_view prompt_text, std::string_view model,
                      double temperature, int run_index) {
  char temp[40];
  std::snprintf(temp, sizeof temp, "%.17g", temperature);
  std::string material = "hobson-completion-v1\n";
  append_field(material, prompt_text);
  append_field(material, model);
  append_field(material, temp);
  append_field(material, std::to_string(run_index));
  return sha256_hex(material);
}

std::string_view to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::Transport:
      return "transport";
    case FailureKind::RateLimited:
      return "rate_limited";
    case FailureKind::Refusal:
      return "refusal";
    case FailureKind::EmptyResponse:
      return "empty_response";
    case FailureKind::CacheMiss:
      return "cache_miss";
  }
  return "transport";
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

ResponseCache::Bucket& ResponseCache::load_bucket(const std::string& prefix) {
  auto it = buckets_.find(prefix);
  if (it != buckets_.end()) return it->second;
  Bucket bucket;
  std::ifstream in(dir_ / (prefix + ".jsonl"), std::ios::binary);
  std::string line;
  while (in && std::getline(in, line)) {
    json row = json::parse(line, nullptr, false);
    // A torn trailing line from an interrupted run is skipped.
    if (row.is_discarded() || !row.contains("digest")) continue;
    CachedCompletion entry;
    entry.digest = row.value("digest", "");
    entry.text = row.value("text", "");
    entry.provider = row.value("provider", "");
    entry.model = row.value("model", "");
    entry.temperature = row.value("temperature", 0.0);
    entry.run_index = row.value("run_index", 0);
    bucket[entry.digest] = std::move(entry);
  }
  return buckets_.emplace(prefix, std::move(bucket)).first->second;
}

std::optional<CachedCompletion> ResponseCache::get(const std::string& digest) {
  std::lock_guard lock(mutex_);
  Bucket& bucket = load_bucket(digest.substr(0, 2));
  auto it = bucket.find(digest);
  if (it == bucket.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(const CachedCompletion& entry) {
  std::lock_guard lock(mutex_);
  const std::string prefix = entry.digest.substr(0, 2);
  Bucket& bucket = load_bucket(prefix);
  bucket[entry.digest] = entry;
  std::filesystem::create_directories(dir_);
  std::ofstream out(dir_ / (prefix + ".jsonl"), std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot write cache bucket in " + dir_.string());
  out << json{{"digest", entry.digest},
              {"text", entry.text},
              {"provider", entry.provider},
              {"model", entry.model},
              {"temperature", entry.temperature},
              {"run_index", entry.run_index}}
             .dump()
      << '\n';
}

std::chrono::milliseconds RetryPolicy::delay_before(int attempt) const {
  if (attempt <= 1) return std::chrono::milliseconds{0};
  const double ms = static_cast<double>(initial_backoff.count()) *
                    std::pow(multiplier, attempt - 2);
  return std::min(max_backoff,
                  std::chrono::milliseconds{static_cast<std::int64_t>(ms)});
}

Gateway::Gateway(std::shared_ptr<CompletionProvider> provider,
                 std::shared_ptr<ResponseCache> cache, CacheMode mode,
                 RetryPolicy retry)
    : provider_(std::move(provider)),
      cache_(std::move(cache)),
      mode_(mode),
      retry_(retry),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (retry_.max_attempts < 1) throw ContractError("max_attempts must be >= 1");
}

RawResponse Gateway::from_cache(const CompletionRequest& request,
                                const CachedCompletion& entry) const {
  RawResponse r;
  r.request_digest = entry.digest;
  r.instance_id = request.prompt.instance_id;
  r.tier = request.prompt.tier;
  r.text = entry.text;
  r.model = request.model;
  r.temperature = request.temperature;
  r.run_index = request.run_index;
  r.provider = entry.provider;
  r.retrieved_from_cache = true;
  return r;
}

RawResponse Gateway::complete(const CompletionRequest& request) {
  const std::string digest = cache_key(request.prompt.text, request.model,
                                       request.temperature, request.run_index);
  auto count_failure = [this] {
    std::lock_guard lock(stats_mutex_);
    ++stats_.failures;
  };

  if (cache_ && mode_ != CacheMode::Disabled) {
    if (auto hit = cache_->get(digest)) {
      std::lock_guard lock(stats_mutex_);
      ++stats_.cache_hits;
      return from_cache(request, *hit);
    }
  }
  if (mode_ == CacheMode::ReadOnly) {
    count_failure();
    throw CompletionError(FailureKind::CacheMiss, "cache miss: " + digest);
  }
  if (!provider_) {
    count_failure();
    throw CompletionError(FailureKind::Transport, "no provider configured");
  }

  for (int attempt = 1;; ++attempt) {
    if (attempt > 1) {
      sleeper_(retry_.delay_before(attempt));
      std::lock_guard lock(stats_mutex_);
      ++stats_.retries;
    }
    {
      std::lock_guard lock(stats_mutex_);
      ++stats_.provider_calls;
    }
    const auto start = std::chrono::steady_clock::now();
    std::string text;
    try {
      text = provider_->send(request);
    } catch (const CompletionError& e) {
      if (e.retryable() && attempt < retry_.max_attempts) continue;
      count_failure();
      throw CompletionError(e.kind(),
                            std::string(e.what()) + " (after " +
                                std::to_string(attempt) + " attempts)",
                            attempt);
    } catch (const std::exception& e) {
      if (attempt < retry_.max_attempts) continue;
      count_failure();
      throw CompletionError(FailureKind::Transport, e.what(), attempt);
    }
    if (is_blank(text)) {
      count_failure();
      throw CompletionError(FailureKind::EmptyResponse, "empty response", attempt);
    }

    RawResponse r;
    r.request_digest = digest;
    r.instance_id = request.prompt.instance_id;
    r.tier = request.prompt.tier;
    r.text = std::move(text);
    r.model = request.model;
    r.temperature = request.temperature;
    r.run_index = request.run_index;
    r.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    r.provider = provider_->name();
    r.attempts = attempt;
    if (cache_ && mode_ == CacheMode::ReadWrite) {
      cache_->put({digest, r.text, r.provider, r.model, r.temperature, r.run_index});
    }
    return r;
  }
}

std::vector<BatchSlot> Gateway::complete_batch(
    const std::vector<CompletionRequest>& requests, std::size_t parallelism) {
  if (parallelism < 1) throw ContractError("parallelism must be >= 1");
  std::vector<BatchSlot> slots(requests.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < requests.size();
         i = next.fetch_add(1)) {
      try {
        slots[i].response = complete(requests[i]);
      } catch (const CompletionError& e) {
        slots[i].failure = e.kind();
        slots[i].error = e.what();
      } catch (const std::exception& e) {
        slots[i].failure = FailureKind::Transport;
        slots[i].error = e.what();
      }
    }
  };

  const std::size_t n_workers = std::min(parallelism, requests.size());
  if (n_workers <= 1) {
    worker();
    return slots;
  }
  std::vector<std::jthread> threads;
  threads.reserve(n_workers);
  for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
  threads.clear();  // joins
  return slots;
}

GatewayStats Gateway::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

}  // namespace hobson

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hobson/gateway.hpp"

namespace hobson {

struct HttpEndpoint {
  // Scheme, host and optional port, e.g. "https://api.openai.com".
  std::string base_url;
  // Path prefix prepended to the route, e.g. "/v1".
  std::string path_prefix = "/v1";
  // Environment variable holding the bearer token; empty means no auth.
  std::string api_key_env = "HOBSON_API_KEY";
  int timeout_seconds = 60;
};

/// Chat-completions style HTTP provider: POSTs
/// {model, messages:[{role:user, content}], temperature, max_tokens} to
/// `<prefix>/chat/completions` and returns choices[0].message.content.
///
/// 429 maps to RateLimited, 5xx and connection errors to Transport, other
/// non-2xx statuses to Refusal.
class ChatCompletionsProvider : public CompletionProvider {
 public:
  explicit ChatCompletionsProvider(HttpEndpoint endpoint,
                                   std::optional<std::string> system_prompt = {});

  std::string name() const override { return "chat-completions"; }
  std::string send(const CompletionRequest& request) override;

 private:
  HttpEndpoint endpoint_;
  std::optional<std::string> system_prompt_;
  std::string api_key_;
};

/// Client for an OpenAI-style `<prefix>/embeddings` endpoint.
class EmbeddingClient {
 public:
  EmbeddingClient(HttpEndpoint endpoint, std::string model);

  // One vector per input, in input order. Throws CompletionError.
  std::vector<std::vector<double>> embed(const std::vector<std::string>& inputs);

 private:
  HttpEndpoint endpoint_;
  std::string model_;
  std::string api_key_;
};

}  // namespace hobson

#include <httplib.h>

#include "hobson/http_provider.hpp"

#include <cstdlib>

#include <json.hpp>

namespace hobson {
namespace {

using nlohmann::json;

std::string read_api_key(const std::string& env_name) {
  if (env_name.empty()) return {};
  const char* value = std::getenv(env_name.c_str());
  return value ? std::string(value) : std::string{};
}

httplib::Client make_client(const HttpEndpoint& endpoint) {
  httplib::Client client(endpoint.base_url);
  client.set_connection_timeout(endpoint.timeout_seconds, 0);
  client.set_read_timeout(endpoint.timeout_seconds, 0);
  client.set_write_timeout(endpoint.timeout_seconds, 0);
  return client;
}

json post_json(const HttpEndpoint& endpoint, const std::string& api_key,
               const std::string& route, const json& body) {
  httplib::Client client = make_client(endpoint);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  auto res = client.Post(endpoint.path_prefix + route, headers, body.dump(),
                         "application/json");
  if (!res) {
    throw CompletionError(FailureKind::Transport,
                          "transport failure: " + httplib::to_string(res.error()));
  }
  if (res->status == 429) {
    throw CompletionError(FailureKind::RateLimited, "rate limited (HTTP 429)");
  }
  if (res->status >= 500) {
    throw CompletionError(FailureKind::Transport,
                          "server error (HTTP " + std::to_string(res->status) + ")");
  }
  if (res->status < 200 || res->status >= 300) {
    throw CompletionError(FailureKind::Refusal,
                          "provider refused request (HTTP " +
                              std::to_string(res->status) + "): " + res->body);
  }
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) {
    throw CompletionError(FailureKind::Refusal, "provider reply is not JSON");
  }
  return reply;
}

}  // namespace

ChatCompletionsProvider::ChatCompletionsProvider(
    HttpEndpoint endpoint, std::optional<std::string> system_prompt)
    : endpoint_(std::move(endpoint)),
      system_prompt_(std::move(system_prompt)),
      api_key_(read_api_key(endpoint_.api_key_env)) {
  if (endpoint_.base_url.empty()) {
    throw ContractError("chat-completions provider needs a base URL");
  }
}

std::string ChatCompletionsProvider::send(const CompletionRequest& request) {
  json messages = json::array();
  if (system_prompt_) {
    messages.push_back({{"role", "system"}, {"content", *system_prompt_}});
  }
  messages.push_back({{"role", "user"}, {"content", request.prompt.text}});
  const json body = {{"model", request.model},
                     {"messages", std::move(messages)},
                     {"temperature", request.temperature},
                     {"max_tokens", request.max_tokens}};

  const json reply = post_json(endpoint_, api_key_, "/chat/completions", body);
  const json* choices = reply.contains("choices") ? &reply["choices"] : nullptr;
  if (choices == nullptr || !choices->is_array() || choices->empty()) {
    throw CompletionError(FailureKind::Refusal, "provider reply has no choices");
  }
  const json& choice = (*choices)[0];
  if (choice.value("finish_reason", "") == "content_filter") {
    throw CompletionError(FailureKind::Refusal, "completion blocked by content filter");
  }
  if (!choice.contains("message") || !choice["message"].contains("content") ||
      !choice["message"]["content"].is_string()) {
    return {};
  }
  return choice["message"]["content"].get<std::string>();
}

EmbeddingClient::EmbeddingClient(HttpEndpoint endpoint, std::string model)
    : endpoint_(std::move(endpoint)),
      model_(std::move(model)),
      api_key_(read_api_key(endpoint_.api_key_env)) {
  if (endpoint_.base_url.empty()) {
    throw ContractError("embedding client needs a base URL");
  }
}

std::vector<std::vector<double>> EmbeddingClient::embed(
    const std::vector<std::string>& inputs) {
  const json reply = post_json(endpoint_, api_key_, "/embeddings",
                               {{"model", model_}, {"input", inputs}});
  if (!reply.contains("data") || !reply["data"].is_array() ||
      reply["data"].size() != inputs.size()) {
    throw CompletionError(FailureKind::Refusal,
                          "embedding reply does not match the input count");
  }
  std::vector<std::vector<double>> out(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const json& item = reply["data"][i];
    const std::size_t slot = item.value("index", i);
    if (slot >= out.size() || !item.contains("embedding")) {
      throw CompletionError(FailureKind::Refusal, "malformed embedding item");
    }
    out[slot] = item["embedding"].get<std::vector<double>>();
  }
  return out;
}

}  // namespace hobson

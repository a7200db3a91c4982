#include "fhirsculptor/backend.hpp"

#include <cstdlib>

#include "fhirsculptor/httplib_config.hpp"

#include <nlohmann/json.hpp>

namespace fhirsculptor {

using nlohmann::json;

// ---------------------------------------------------------------------------
// RuleBackend
// ---------------------------------------------------------------------------

CompletionResult RuleBackend::complete(const BackendRequest& request) {
  if (collapse_whitespace(request.input_text).empty()) {
    return CompletionResult::success("{}");
  }
  ParsedSig sig;
  try {
    sig = parser_.parse_sig(request.input_text);
  } catch (const EmptyInput&) {
    return CompletionResult::success("{}");
  }
  Fragments fragments = parser_.to_fragments(sig);
  switch (request.kind) {
    case ElementKind::medication:
      return CompletionResult::success(to_json(fragments.medication).dump());
    case ElementKind::route:
      return CompletionResult::success(to_json(fragments.route).dump());
    case ElementKind::schedule:
      return CompletionResult::success(to_json(fragments.schedule).dump());
    case ElementKind::dosage:
      return CompletionResult::success(to_json(fragments.dose).dump());
    case ElementKind::reason:
      return CompletionResult::success(to_json(fragments.reason).dump());
  }
  return CompletionResult::failure("unknown element kind", false);
}

// ---------------------------------------------------------------------------
// RemoteBackend
// ---------------------------------------------------------------------------

RemoteBackend::RemoteBackend(BackendConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw ConfigError("remote backend needs an endpoint URL");
  }
  if (config_.credentials_env.empty()) {
    throw ConfigError("remote backend needs a credentials variable name");
  }
  const char* key = std::getenv(config_.credentials_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError("environment variable " + config_.credentials_env +
                      " is not set; export the API key there");
  }
  api_key_ = key;

  // Split scheme://host[:port] from the request path.
  auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint must start with http:// or https://");
  }
  auto path_start = config_.endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_url_ = config_.endpoint;
    path_ = "/v1/chat/completions";
  } else {
    base_url_ = config_.endpoint.substr(0, path_start);
    path_ = config_.endpoint.substr(path_start);
  }
#ifndef FHIRSCULPTOR_HAVE_OPENSSL
  if (base_url_.rfind("https", 0) == 0) {
    throw ConfigError("built without TLS support; use an http:// endpoint");
  }
#endif
}

RemoteBackend::~RemoteBackend() = default;

CompletionResult RemoteBackend::complete(const BackendRequest& request) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(static_cast<time_t>(config_.timeout_seconds),
                                0);
  client.set_read_timeout(static_cast<time_t>(config_.timeout_seconds), 0);
  client.set_bearer_token_auth(api_key_);

  json body;
  body["model"] = config_.model;
  body["temperature"] = config_.temperature;
  body["messages"] = json::array({
      json{{"role", "system"}, {"content", request.system_instructions}},
      json{{"role", "user"}, {"content", request.prompt}},
  });

  httplib::Result res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    return CompletionResult::failure(
        "connection failed: " + httplib::to_string(res.error()), true);
  }
  if (res->status == 429 || res->status >= 500) {
    return CompletionResult::failure(
        "HTTP " + std::to_string(res->status) + " from backend", true);
  }
  if (res->status != 200) {
    return CompletionResult::failure(
        "HTTP " + std::to_string(res->status) + " from backend: " + res->body,
        false);
  }
  try {
    json doc = json::parse(res->body);
    const json& choices = doc.at("choices");
    if (!choices.is_array() || choices.empty()) {
      return CompletionResult::failure("response has no choices", false);
    }
    return CompletionResult::success(
        choices[0].at("message").at("content").get<std::string>());
  } catch (const std::exception& e) {
    return CompletionResult::failure(
        std::string("unreadable backend response: ") + e.what(), false);
  }
}

}  // namespace fhirsculptor

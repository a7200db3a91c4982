#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "fhirsculptor/errors.hpp"
#include "fhirsculptor/prompt.hpp"
#include "fhirsculptor/sig_parser.hpp"

namespace fhirsculptor {

struct BackendConfig {
  std::string endpoint;
  std::string model;
  /// Name of the environment variable holding the API key; the key itself
  /// never lives in configuration files or output.
  std::string credentials_env = "FHIR_SCULPTOR_API_KEY";
  double timeout_seconds = 30.0;
  int max_retries = 3;
  int max_in_flight = 4;
  double temperature = 0.0;
  /// First backoff delay; doubles on each further attempt.
  int retry_base_delay_ms = 1000;
};

struct BackendRequest {
  ElementKind kind;
  std::string input_text;
  std::string system_instructions;
  std::string prompt;
};

struct CompletionResult {
  std::optional<std::string> text;
  std::string error;
  bool retryable = false;

  bool ok() const { return text.has_value(); }

  static CompletionResult success(std::string text) {
    CompletionResult result;
    result.text = std::move(text);
    return result;
  }
  static CompletionResult failure(std::string error, bool retryable) {
    CompletionResult result;
    result.error = std::move(error);
    result.retryable = retryable;
    return result;
  }
};

/// One element conversion call. Implementations must either be safely
/// callable from multiple workers or declare single_flight.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string_view name() const = 0;
  virtual CompletionResult complete(const BackendRequest& request) = 0;
  virtual bool single_flight() const { return false; }
};

/// Deterministic offline backend: runs the rule-based sig parser and
/// answers with the requested fragment as clean JSON text.
class RuleBackend : public Backend {
 public:
  explicit RuleBackend(const SigParser& parser) : parser_(parser) {}

  std::string_view name() const override { return "rules"; }
  CompletionResult complete(const BackendRequest& request) override;

 private:
  const SigParser& parser_;
};

/// Chat-completion HTTP backend. POSTs the rendered prompt as the user
/// message (instructions as the system message) and returns the first
/// message content. Credentials are read from the configured environment
/// variable at construction; a missing key is a ConfigError before any
/// request goes out.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(BackendConfig config);
  ~RemoteBackend() override;

  std::string_view name() const override { return "remote"; }
  CompletionResult complete(const BackendRequest& request) override;

 private:
  BackendConfig config_;
  std::string api_key_;
  std::string base_url_;
  std::string path_;
};

}  // namespace fhirsculptor

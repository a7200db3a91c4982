#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fhirsculptor/backend.hpp"
#include "fhirsculptor/fhir_model.hpp"
#include "fhirsculptor/prompt.hpp"
#include "fhirsculptor/validator.hpp"

namespace fhirsculptor {

/// Pull the first balanced JSON object (or array) out of model output,
/// tolerating code fences and surrounding prose. Never throws; nullopt is
/// the format-conformity failure. Idempotent on already-clean JSON.
std::optional<nlohmann::json> extract_json(std::string_view response) noexcept;

/// Everything retained about one converted input: the assembled resource
/// (when at least one fragment came through and the merge succeeded), the
/// parsed fragments, every raw backend response for audit, per-kind
/// format-conformity flags, and the validation report.
struct ConversionResult {
  std::string input_id;
  std::string input_text;
  std::optional<MedicationStatement> resource;
  Fragments fragments;
  std::array<std::string, kElementKindCount> raw_responses;
  std::array<bool, kElementKindCount> format_failure{};
  std::array<std::string, kElementKindCount> errors;  // backend/shape issues
  std::string merge_error;
  std::optional<ValidationReport> validation;

  size_t format_failure_count() const;
  bool has_resource() const { return resource.has_value(); }
};

struct CorpusInput {
  std::string id;
  std::string text;
};

/// Called after each input finishes all five conversions.
using ProgressHook = std::function<void(size_t completed, size_t total,
                                        const std::string& input_id)>;

/// Drives the five element conversions per input through a backend,
/// extracts and parses fragments, merges them into a resource, and
/// validates it. run_batch keeps at most max_in_flight requests
/// outstanding, retries transient failures with exponential backoff, and
/// returns results in input order regardless of completion order.
class Converter {
 public:
  Converter(Backend& backend, const TableSet& tables,
            const PromptLibrary& prompts, BackendConfig config);

  ConversionResult convert_statement(std::string id, std::string text) const;

  std::vector<ConversionResult> run_batch(const std::vector<CorpusInput>& corpus,
                                          const ProgressHook& progress = {}) const;

 private:
  CompletionResult call_with_retry(const BackendRequest& request) const;
  void run_element(ElementKind kind, const std::string& text,
                   ConversionResult& result) const;
  void assemble(ConversionResult& result) const;

  Backend& backend_;
  const TableSet& tables_;
  const PromptLibrary& prompts_;
  BackendConfig config_;
};

}  // namespace fhirsculptor

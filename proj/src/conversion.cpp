#include "fhirsculptor/conversion.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <set>
#include <thread>

namespace fhirsculptor {

using nlohmann::json;

// ---------------------------------------------------------------------------
// extract_json
// ---------------------------------------------------------------------------

namespace {

/// Scan a balanced candidate starting at an opening brace/bracket,
/// respecting strings and escapes. Returns one past the closing character,
/// or npos when unbalanced.
size_t balanced_end(std::string_view text, size_t start) {
  std::vector<char> stack;
  bool in_string = false;
  bool escaped = false;
  for (size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '{': stack.push_back('}'); break;
      case '[': stack.push_back(']'); break;
      case '}':
      case ']':
        if (stack.empty() || stack.back() != c) return std::string_view::npos;
        stack.pop_back();
        if (stack.empty()) return i + 1;
        break;
      default: break;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<json> extract_json(std::string_view response) noexcept {
  try {
    for (size_t i = 0; i < response.size(); ++i) {
      if (response[i] != '{' && response[i] != '[') continue;
      size_t end = balanced_end(response, i);
      if (end == std::string_view::npos) continue;
      json parsed =
          json::parse(response.substr(i, end - i), nullptr, false);
      if (!parsed.is_discarded()) return parsed;
    }
  } catch (...) {
    // fall through: arbitrary byte noise is simply a format failure
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ConversionResult
// ---------------------------------------------------------------------------

size_t ConversionResult::format_failure_count() const {
  size_t count = 0;
  for (bool failed : format_failure) count += failed ? 1 : 0;
  return count;
}

// ---------------------------------------------------------------------------
// Converter
// ---------------------------------------------------------------------------

Converter::Converter(Backend& backend, const TableSet& tables,
                     const PromptLibrary& prompts, BackendConfig config)
    : backend_(backend), tables_(tables), prompts_(prompts),
      config_(std::move(config)) {}

CompletionResult Converter::call_with_retry(
    const BackendRequest& request) const {
  int delay_ms = config_.retry_base_delay_ms;
  CompletionResult result = backend_.complete(request);
  for (int attempt = 0; attempt < config_.max_retries; ++attempt) {
    if (result.ok() || !result.retryable) return result;
    if (delay_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    }
    delay_ms *= 2;
    result = backend_.complete(request);
  }
  return result;
}

void Converter::run_element(ElementKind kind, const std::string& text,
                            ConversionResult& result) const {
  const size_t slot = static_cast<size_t>(kind);
  BackendRequest request;
  request.kind = kind;
  request.input_text = text;
  request.system_instructions = prompts_.instructions(kind);
  request.prompt = prompts_.build_prompt(kind, text);

  CompletionResult completion = call_with_retry(request);
  if (!completion.ok()) {
    result.errors[slot] = completion.error;
    return;
  }
  result.raw_responses[slot] = *completion.text;

  std::optional<json> doc = extract_json(*completion.text);
  if (!doc.has_value()) {
    result.format_failure[slot] = true;
    return;
  }
  try {
    switch (kind) {
      case ElementKind::medication:
        result.fragments.medication = parse_medication_fragment(*doc).value;
        break;
      case ElementKind::route:
        result.fragments.route = parse_route_fragment(*doc).value;
        break;
      case ElementKind::schedule:
        result.fragments.schedule = parse_schedule_fragment(*doc).value;
        break;
      case ElementKind::dosage:
        result.fragments.dose = parse_dose_fragment(*doc).value;
        break;
      case ElementKind::reason:
        result.fragments.reason = parse_reason_fragment(*doc).value;
        break;
    }
  } catch (const ModelError& e) {
    result.errors[slot] = e.what();
  }
}

void Converter::assemble(ConversionResult& result) const {
  const Fragments& f = result.fragments;
  const bool any_fragment = !f.medication.empty() || !f.route.empty() ||
                            !f.schedule.empty() || !f.dose.empty() ||
                            !f.reason.empty();
  if (!any_fragment) return;
  try {
    result.resource = merge_fragments(f, result.input_text);
    result.validation = validate(*result.resource, tables_);
  } catch (const ConflictError& e) {
    result.merge_error = e.what();
    result.resource.reset();
  }
}

ConversionResult Converter::convert_statement(std::string id,
                                              std::string text) const {
  ConversionResult result;
  result.input_id = std::move(id);
  result.input_text = std::move(text);
  for (ElementKind kind : kAllElementKinds) {
    run_element(kind, result.input_text, result);
  }
  assemble(result);
  return result;
}

std::vector<ConversionResult> Converter::run_batch(
    const std::vector<CorpusInput>& corpus, const ProgressHook& progress) const {
  std::vector<ConversionResult> results(corpus.size());
  if (corpus.empty()) return results;

  {
    std::set<std::string> ids;
    for (const auto& input : corpus) {
      if (!ids.insert(input.id).second) {
        throw std::invalid_argument("duplicate corpus id: " + input.id);
      }
    }
  }

  for (size_t i = 0; i < corpus.size(); ++i) {
    results[i].input_id = corpus[i].id;
    results[i].input_text = corpus[i].text;
  }

  struct Job {
    size_t input;
    ElementKind kind;
  };
  std::vector<Job> jobs;
  jobs.reserve(corpus.size() * kElementKindCount);
  for (size_t i = 0; i < corpus.size(); ++i) {
    for (ElementKind kind : kAllElementKinds) jobs.push_back({i, kind});
  }

  size_t worker_count = static_cast<size_t>(std::max(1, config_.max_in_flight));
  if (backend_.single_flight()) worker_count = 1;
  worker_count = std::min(worker_count, jobs.size());

  std::atomic<size_t> next_job{0};
  std::atomic<size_t> completed_inputs{0};
  std::vector<std::atomic<int>> remaining(corpus.size());
  for (auto& r : remaining) r.store(static_cast<int>(kElementKindCount));
  std::mutex progress_mutex;

  auto worker = [&]() {
    while (true) {
      size_t index = next_job.fetch_add(1);
      if (index >= jobs.size()) break;
      const Job& job = jobs[index];
      // Distinct (input, kind) slots per job: no write overlap.
      run_element(job.kind, results[job.input].input_text, results[job.input]);
      if (remaining[job.input].fetch_sub(1) == 1) {
        // Last element of this input: assemble and report.
        assemble(results[job.input]);
        size_t done = completed_inputs.fetch_add(1) + 1;
        if (progress) {
          std::lock_guard<std::mutex> lock(progress_mutex);
          progress(done, corpus.size(), results[job.input].input_id);
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(worker_count);
  for (size_t i = 0; i < worker_count; ++i) pool.emplace_back(worker);
  for (auto& thread : pool) thread.join();

  return results;
}

}  // namespace fhirsculptor

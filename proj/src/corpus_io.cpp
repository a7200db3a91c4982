#include "fhirsculptor/corpus_io.hpp"

#include <fstream>
#include <map>
#include <set>

namespace fhirsculptor {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<CorpusRecord> read_corpus(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open corpus file: " + file.string());
  std::vector<CorpusRecord> records;
  std::set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (collapse_whitespace(line).empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IoError(file.string() + ":" + std::to_string(line_no) + ": " +
                    e.what());
    }
    CorpusRecord record;
    if (!doc.contains("id") || !doc["id"].is_string()) {
      throw ConfigError(file.string() + ":" + std::to_string(line_no) +
                        ": record needs a string 'id'");
    }
    record.id = doc["id"].get<std::string>();
    if (!doc.contains("text") || !doc["text"].is_string()) {
      throw ConfigError(file.string() + ":" + std::to_string(line_no) +
                        ": record needs a string 'text'");
    }
    record.text = doc["text"].get<std::string>();
    if (doc.contains("gold") && !doc["gold"].is_null()) {
      record.gold = doc["gold"];
    }
    if (!seen.insert(record.id).second) {
      throw ConfigError("duplicate corpus id '" + record.id + "' in " +
                        file.string());
    }
    records.push_back(std::move(record));
  }
  return records;
}

void write_corpus(const std::filesystem::path& file,
                  std::span<const CorpusRecord> records) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write corpus file: " + file.string());
  for (const auto& record : records) {
    ordered_json doc;
    doc["id"] = record.id;
    doc["text"] = record.text;
    if (record.gold.has_value()) doc["gold"] = *record.gold;
    out << doc.dump() << "\n";
  }
}

namespace {

constexpr std::array<const char*, kElementKindCount> kKindKeys = {
    "medication", "route", "schedule", "dosage", "reason"};

}  // namespace

ordered_json result_to_json(const ConversionResult& result) {
  ordered_json doc;
  doc["id"] = result.input_id;
  doc["text"] = result.input_text;
  if (result.resource.has_value()) {
    doc["resource"] = to_json(*result.resource);
  } else {
    doc["resource"] = nullptr;
  }
  ordered_json fragments;
  fragments["medication"] = to_json(result.fragments.medication);
  fragments["route"] = to_json(result.fragments.route);
  fragments["schedule"] = to_json(result.fragments.schedule);
  fragments["dosage"] = to_json(result.fragments.dose);
  fragments["reason"] = to_json(result.fragments.reason);
  doc["fragments"] = fragments;
  ordered_json raw;
  ordered_json fail;
  ordered_json errors;
  for (size_t i = 0; i < kElementKindCount; ++i) {
    raw[kKindKeys[i]] = result.raw_responses[i];
    fail[kKindKeys[i]] = result.format_failure[i];
    if (!result.errors[i].empty()) errors[kKindKeys[i]] = result.errors[i];
  }
  doc["rawResponses"] = raw;
  doc["formatFailure"] = fail;
  if (!errors.empty()) doc["errors"] = errors;
  if (!result.merge_error.empty()) doc["mergeError"] = result.merge_error;
  if (result.validation.has_value()) {
    doc["validation"] = result.validation->to_json();
  } else {
    doc["validation"] = nullptr;
  }
  return doc;
}

ConversionResult result_from_json(const json& doc) {
  ConversionResult result;
  result.input_id = doc.at("id").get<std::string>();
  if (doc.contains("text") && doc["text"].is_string()) {
    result.input_text = doc["text"].get<std::string>();
  }
  if (doc.contains("resource") && !doc["resource"].is_null()) {
    result.resource = parse_statement(doc["resource"].dump()).value;
  }
  if (doc.contains("rawResponses")) {
    for (size_t i = 0; i < kElementKindCount; ++i) {
      const auto& raw = doc["rawResponses"];
      if (raw.contains(kKindKeys[i]) && raw[kKindKeys[i]].is_string()) {
        result.raw_responses[i] = raw[kKindKeys[i]].get<std::string>();
      }
    }
  }
  if (doc.contains("formatFailure")) {
    for (size_t i = 0; i < kElementKindCount; ++i) {
      const auto& fail = doc["formatFailure"];
      if (fail.contains(kKindKeys[i]) && fail[kKindKeys[i]].is_boolean()) {
        result.format_failure[i] = fail[kKindKeys[i]].get<bool>();
      }
    }
  }
  if (doc.contains("errors")) {
    for (size_t i = 0; i < kElementKindCount; ++i) {
      const auto& errors = doc["errors"];
      if (errors.contains(kKindKeys[i]) && errors[kKindKeys[i]].is_string()) {
        result.errors[i] = errors[kKindKeys[i]].get<std::string>();
      }
    }
  }
  if (doc.contains("mergeError") && doc["mergeError"].is_string()) {
    result.merge_error = doc["mergeError"].get<std::string>();
  }
  if (doc.contains("validation") && !doc["validation"].is_null()) {
    ValidationReport report;
    const json& v = doc["validation"];
    report.valid = v.value("valid", true);
    if (v.contains("issues")) {
      for (const auto& issue : v["issues"]) {
        ValidationIssue parsed;
        parsed.severity = issue.value("severity", "error") == "warning"
                              ? Severity::warning
                              : Severity::error;
        parsed.path = issue.value("path", "");
        parsed.message = issue.value("message", "");
        std::string kind = issue.value("kind", "structure");
        parsed.kind = IssueKind::structure;
        for (IssueKind candidate :
             {IssueKind::structure, IssueKind::datatype, IssueKind::code_binding,
              IssueKind::display_name, IssueKind::cardinality,
              IssueKind::oov_code}) {
          if (to_string(candidate) == kind) parsed.kind = candidate;
        }
        report.issues.push_back(std::move(parsed));
      }
    }
    result.validation = std::move(report);
  }
  return result;
}

void write_results(const std::filesystem::path& file,
                   std::span<const ConversionResult> results) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write results file: " + file.string());
  for (const auto& result : results) {
    out << result_to_json(result).dump() << "\n";
  }
}

std::vector<ConversionResult> read_results(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open results file: " + file.string());
  std::vector<ConversionResult> results;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (collapse_whitespace(line).empty()) continue;
    try {
      results.push_back(result_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw IoError(file.string() + ":" + std::to_string(line_no) + ": " +
                    e.what());
    }
  }
  return results;
}

std::vector<GoldPair> join_results(std::span<const ConversionResult> results,
                                   std::span<const CorpusRecord> gold_records) {
  std::map<std::string, const ConversionResult*> by_id;
  for (const auto& result : results) by_id[result.input_id] = &result;

  std::vector<std::string> missing;
  std::vector<GoldPair> pairs;
  std::set<std::string> gold_ids;
  for (const auto& record : gold_records) {
    gold_ids.insert(record.id);
    auto it = by_id.find(record.id);
    if (it == by_id.end()) {
      missing.push_back(record.id);
      continue;
    }
    if (!record.gold.has_value()) {
      throw ConfigError("corpus record '" + record.id + "' has no gold resource");
    }
    GoldPair pair;
    pair.input_id = record.id;
    pair.gold = parse_statement(record.gold->dump()).value;
    pair.predicted = *it->second;
    pairs.push_back(std::move(pair));
  }
  std::vector<std::string> extra;
  for (const auto& result : results) {
    if (gold_ids.count(result.input_id) == 0) extra.push_back(result.input_id);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string message = "result and gold ids do not align;";
    if (!missing.empty()) {
      message += " missing results for:";
      for (const auto& id : missing) message += " " + id;
      message += ";";
    }
    if (!extra.empty()) {
      message += " results without gold:";
      for (const auto& id : extra) message += " " + id;
    }
    throw JoinError(message);
  }
  return pairs;
}

}  // namespace fhirsculptor

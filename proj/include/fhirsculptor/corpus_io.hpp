#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fhirsculptor/conversion.hpp"
#include "fhirsculptor/errors.hpp"
#include "fhirsculptor/eval.hpp"

namespace fhirsculptor {

/// One line of a corpus file: `{"id": ..., "text": ..., "gold": {...}?}`.
struct CorpusRecord {
  std::string id;
  std::string text;
  std::optional<nlohmann::json> gold;
};

/// Read a JSON-lines corpus. Throws IoError (unreadable file / bad JSON)
/// or ConfigError (missing fields, duplicate id — named in the message).
std::vector<CorpusRecord> read_corpus(const std::filesystem::path& file);

void write_corpus(const std::filesystem::path& file,
                  std::span<const CorpusRecord> records);

/// Conversion-result JSON-lines: resource, per-kind raw responses and
/// format flags, validation report.
nlohmann::ordered_json result_to_json(const ConversionResult& result);
ConversionResult result_from_json(const nlohmann::json& doc);

void write_results(const std::filesystem::path& file,
                   std::span<const ConversionResult> results);
std::vector<ConversionResult> read_results(const std::filesystem::path& file);

/// Join results with gold records by id; order follows the gold corpus.
/// Throws JoinError listing ids present on only one side, and ConfigError
/// when a gold record has no gold resource.
std::vector<GoldPair> join_results(std::span<const ConversionResult> results,
                                   std::span<const CorpusRecord> gold_records);

}  // namespace fhirsculptor

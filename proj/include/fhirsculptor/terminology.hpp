#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fhirsculptor/code_systems.hpp"
#include "fhirsculptor/fhir_model.hpp"

namespace fhirsculptor {

struct TableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad row in a table file; carries the 1-based line number.
struct FormatError : TableError {
  FormatError(size_t line_in, const std::string& message)
      : TableError("line " + std::to_string(line_in) + ": " + message),
        line(line_in) {}
  size_t line;
};

/// Two rows share the same (system, code) pair.
struct DuplicateCode : TableError {
  using TableError::TableError;
};

/// One terminology row: canonical system URI, code, display, and the
/// normalized lookup synonyms (the display is always a synonym).
struct CodeEntry {
  std::string system;
  std::string code;
  std::string display;
  std::vector<std::string> synonyms;
};

/// Immutable after load; indexed by (system, code) and by normalized
/// synonym. All queries are read-only and thread-safe.
class CodeTable {
 public:
  CodeTable() = default;

  /// Load a `system,code,display,synonyms` file (synonyms `|`-separated).
  /// Shorthand system names are normalized through the registry.
  /// Throws FormatError (bad row) or DuplicateCode.
  static CodeTable load(const std::filesystem::path& file,
                        const SystemRegistry& registry = SystemRegistry::builtin());

  static CodeTable from_entries(std::vector<CodeEntry> entries);

  size_t size() const { return entries_.size(); }
  const std::vector<CodeEntry>& entries() const { return entries_; }

  /// Exact (system, code) lookup; nullptr means the code is not in the
  /// table — a potential invented code for any system the table covers.
  const CodeEntry* lookup(std::string_view system, std::string_view code) const;

  /// Exact match on normalized synonyms; no fuzzy matching. An empty scope
  /// means any system. Ambiguous synonyms resolve to the first entry in
  /// file order.
  const CodeEntry* resolve_text(
      std::string_view text,
      std::span<const std::string> system_scope = {}) const;

  /// True when at least one entry uses this system URI.
  bool covers_system(std::string_view system) const;

  enum class DisplayStatus { ok, mismatch, unknown_code };
  struct DisplayCheck {
    DisplayStatus status;
    std::string expected;  // the table's display, set on mismatch
  };

  /// Case-insensitive display comparison against the table row.
  DisplayCheck verify_display(const Coding& coding) const;

 private:
  void index_entry(size_t idx);

  std::vector<CodeEntry> entries_;
  std::map<std::string, size_t> by_system_code_;      // "system\x1fcode"
  std::map<std::string, std::vector<size_t>> by_synonym_;
  std::vector<std::string> systems_;
};

/// The named table bindings the validator and sig parser work against.
/// Route, form, timing and unit tables are required; medication and reason
/// dictionaries are optional (absent means those elements stay text-only
/// and their codes are not checked).
struct TableSet {
  CodeTable routes;
  CodeTable forms;
  CodeTable timing_codes;
  CodeTable units;
  std::optional<CodeTable> medications;
  std::optional<CodeTable> reasons;

  /// Load routes.csv, forms.csv, timing_codes.csv, units.csv (required)
  /// plus medications.csv / reasons.csv when present from a directory.
  static TableSet load_dir(
      const std::filesystem::path& dir,
      const SystemRegistry& registry = SystemRegistry::builtin());
};

}  // namespace fhirsculptor

#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fhirsculptor/fhir_model.hpp"
#include "fhirsculptor/rational.hpp"
#include "fhirsculptor/terminology.hpp"

namespace fhirsculptor {

struct EmptyInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One timing abbreviation with its event rate. PRN-style tokens carry no
/// rate and never participate in duration inference.
struct FrequencyRule {
  std::string token;
  std::optional<std::int64_t> frequency;
  std::optional<double> period;
  std::optional<std::string> period_unit;
  /// Events per day, derived exactly from frequency/period/periodUnit.
  std::optional<Rational> daily_events;

  bool has_rate() const { return daily_events.has_value(); }
};

class FrequencyRuleTable {
 public:
  /// Load `token,frequency,period,periodUnit,dailyEvents` rows. The
  /// dailyEvents column is documentation; the loader recomputes the exact
  /// rate from the other columns and rejects rows where the two disagree.
  static FrequencyRuleTable load(const std::filesystem::path& file);
  static FrequencyRuleTable from_rules(std::vector<FrequencyRule> rules);

  const FrequencyRule* find(std::string_view token) const;
  const std::vector<FrequencyRule>& rules() const { return rules_; }
  size_t size() const { return rules_.size(); }

 private:
  std::vector<FrequencyRule> rules_;
};

/// Events per day implied by (frequency, period, periodUnit), exact.
/// Throws DomainError for nonpositive inputs or unknown units.
Rational daily_event_rate(std::int64_t frequency, const Rational& period,
                          std::string_view period_unit);

/// Days until a dispensed supply runs out:
/// dispense / (dailyEvents x unitsPerAdministration), exact, unrounded.
/// Throws DomainError when any input is nonpositive or the rule has no rate.
Rational infer_duration(const FrequencyRule& rule, const Rational& dispense_quantity,
                        const Rational& units_per_administration);

/// Captured components of one free-text sig. All captured spans are
/// substrings of the input (original casing preserved).
struct ParsedSig {
  std::string drug_text;
  std::optional<Quantity> strength;
  std::optional<std::string> form_text;
  std::optional<std::string> route_text;
  std::optional<std::string> frequency_token;
  std::optional<std::pair<double, std::string>> explicit_duration;  // (value, FHIR unit)
  std::optional<double> dispense_quantity;
  std::optional<Quantity> dose_quantity;
  std::optional<DoseRange> dose_range;
  std::vector<std::string> reason_texts;
};

/// Deterministic rule-based sig reader: longest-match extraction against
/// the loaded tables, no fuzzy matching. Pure and stateless once built;
/// safe to share across threads.
class SigParser {
 public:
  SigParser(const TableSet& tables, const FrequencyRuleTable& frequency_rules);

  /// Throws EmptyInput on empty/whitespace-only text.
  ParsedSig parse_sig(std::string_view text) const;

  /// Map captured components onto the five element fragments; unresolvable
  /// text stays text-only, never invented codes.
  Fragments to_fragments(const ParsedSig& sig) const;

  const TableSet& tables() const { return tables_; }
  const FrequencyRuleTable& frequency_rules() const { return frequency_rules_; }

 private:
  const TableSet& tables_;
  const FrequencyRuleTable& frequency_rules_;
};

}  // namespace fhirsculptor

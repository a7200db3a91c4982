#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace fhirsculptor {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input text is not well-formed JSON.
struct MalformedDocument : ModelError {
  using ModelError::ModelError;
};

/// Wrong JSON type at a path inside an otherwise well-formed document.
struct ShapeError : ModelError {
  ShapeError(std::string path_in, const std::string& message)
      : ModelError(path_in + ": " + message), path(std::move(path_in)) {}
  std::string path;
};

/// Two fragments populate the same exclusive slot (doseQuantity vs doseRange).
struct ConflictError : ModelError {
  using ModelError::ModelError;
};

// ---------------------------------------------------------------------------
// Datatypes
// ---------------------------------------------------------------------------

/// Unrecognized keys captured during parse, re-emitted on serialization.
/// Kept sorted so serialization stays deterministic.
using ExtraFields = std::map<std::string, nlohmann::json>;

struct Coding {
  std::string system;   // canonical URI after shorthand normalization
  std::string code;
  std::string display;
  /// Shorthand seen on input ("SNOMED"), provenance only; ignored by
  /// serialization and comparison.
  std::optional<std::string> source_system;
  ExtraFields extra;
};

struct CodeableConcept {
  std::optional<std::string> text;
  std::vector<Coding> coding;
  ExtraFields extra;

  bool empty() const { return !text.has_value() && coding.empty() && extra.empty(); }
};

struct Quantity {
  std::optional<double> value;
  std::optional<std::string> unit;
  std::optional<std::string> system;
  std::optional<std::string> code;
  ExtraFields extra;
};

struct DoseRange {
  Quantity low;
  Quantity high;
  ExtraFields extra;
};

/// Closed FHIR time-unit set: {s, min, h, d, wk, mo, a}.
bool is_time_unit(std::string_view code);

struct TimingRepeat {
  std::optional<std::int64_t> frequency;
  std::optional<double> period;
  std::optional<std::string> period_unit;
  std::optional<double> duration;
  std::optional<std::string> duration_unit;
  ExtraFields extra;
};

struct Dosage {
  std::optional<CodeableConcept> route;
  std::optional<TimingRepeat> timing_repeat;
  std::optional<CodeableConcept> timing_code;
  std::optional<Quantity> dose_quantity;
  std::optional<DoseRange> dose_range;
  ExtraFields extra;
  ExtraFields timing_extra;  // unknown keys inside the "timing" object
};

struct MedicationDetail {
  CodeableConcept code;
  std::optional<CodeableConcept> dose_form;
  std::optional<Quantity> total_volume;
  ExtraFields extra;
};

struct MedicationStatement {
  MedicationDetail medication;
  std::vector<CodeableConcept> reason;
  std::vector<Dosage> dosage;
  std::string source_text;
  ExtraFields extra;
};

// ---------------------------------------------------------------------------
// Element fragments — one per conversion prompt; any may be empty.
// ---------------------------------------------------------------------------

struct MedicationFragment {
  std::optional<CodeableConcept> code;
  std::optional<CodeableConcept> dose_form;
  std::optional<Quantity> total_volume;
  bool empty() const;
};

struct RouteFragment {
  std::optional<CodeableConcept> value;
  bool empty() const { return !value.has_value(); }
};

struct ScheduleFragment {
  std::optional<TimingRepeat> repeat;
  std::optional<CodeableConcept> code;
  bool empty() const { return !repeat.has_value() && !code.has_value(); }
};

struct DoseFragment {
  std::optional<Quantity> quantity;
  std::optional<DoseRange> range;
  bool empty() const { return !quantity.has_value() && !range.has_value(); }
};

struct ReasonFragment {
  std::vector<CodeableConcept> concepts;
  bool empty() const { return concepts.empty(); }
};

struct Fragments {
  MedicationFragment medication;
  RouteFragment route;
  ScheduleFragment schedule;
  DoseFragment dose;
  ReasonFragment reason;
};

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Canonical JSON tree: fixed key order, absent optionals elided, reason
/// entries nested under "concept".
nlohmann::ordered_json to_json(const MedicationStatement& resource);
nlohmann::ordered_json to_json(const CodeableConcept& value);
nlohmann::ordered_json to_json(const Coding& coding);
nlohmann::ordered_json to_json(const Quantity& quantity);
nlohmann::ordered_json to_json(const TimingRepeat& repeat);
nlohmann::ordered_json to_json(const Dosage& dosage);
nlohmann::ordered_json to_json(const MedicationFragment& fragment);
nlohmann::ordered_json to_json(const RouteFragment& fragment);
nlohmann::ordered_json to_json(const ScheduleFragment& fragment);
nlohmann::ordered_json to_json(const DoseFragment& fragment);
nlohmann::ordered_json to_json(const ReasonFragment& fragment);

/// Deterministic canonical text: serialize(r) called twice is byte-identical
/// and parse(serialize(r)) structurally equals r.
std::string serialize(const MedicationStatement& resource);

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

template <typename T>
struct Parsed {
  T value;
  /// Paths of keys retained in the side maps (round-trip safe).
  std::vector<std::string> unknown_keys;
};

/// Throws MalformedDocument (not JSON) or ShapeError (wrong type at a path).
Parsed<MedicationStatement> parse_statement(std::string_view json_text);

/// Fragment parsers used for backend output; tolerate empty documents.
Parsed<MedicationFragment> parse_medication_fragment(const nlohmann::json& doc);
Parsed<RouteFragment> parse_route_fragment(const nlohmann::json& doc);
Parsed<ScheduleFragment> parse_schedule_fragment(const nlohmann::json& doc);
Parsed<DoseFragment> parse_dose_fragment(const nlohmann::json& doc);
Parsed<ReasonFragment> parse_reason_fragment(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// Structural comparison
// ---------------------------------------------------------------------------

/// Canonical-form equality: key order ignored, numbers by value, code and
/// system case-sensitive, display/text case-insensitive after whitespace
/// normalization, coding and reason lists unordered, dosage list ordered.
bool structural_equals(const MedicationStatement& a, const MedicationStatement& b);
bool structural_equals(const Coding& a, const Coding& b);
bool structural_equals(const CodeableConcept& a, const CodeableConcept& b);
bool structural_equals(const Quantity& a, const Quantity& b);
bool structural_equals(const DoseRange& a, const DoseRange& b);
bool structural_equals(const TimingRepeat& a, const TimingRepeat& b);
bool structural_equals(const Dosage& a, const Dosage& b);
bool structural_equals(const Fragments& a, const Fragments& b);

/// Case-insensitive, whitespace-normalized comparison for display/text.
bool text_equals(std::string_view a, std::string_view b);

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

/// Assemble one resource from the five element fragments. Route, schedule
/// and dose land in a single dosage entry; missing fragments yield absent
/// optionals. Throws ConflictError when the dose fragment carries both a
/// quantity and a range.
MedicationStatement merge_fragments(const MedicationFragment& medication,
                                    const RouteFragment& route,
                                    const ScheduleFragment& schedule,
                                    const DoseFragment& dose,
                                    const ReasonFragment& reason,
                                    std::string source_text);

MedicationStatement merge_fragments(const Fragments& fragments,
                                    std::string source_text);

}  // namespace fhirsculptor

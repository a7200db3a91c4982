#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fhirsculptor/fhir_model.hpp"
#include "fhirsculptor/terminology.hpp"

namespace fhirsculptor {

enum class Severity { error, warning };

enum class IssueKind {
  structure,
  datatype,
  code_binding,
  display_name,
  cardinality,
  oov_code,
};

std::string_view to_string(Severity severity);
std::string_view to_string(IssueKind kind);

struct ValidationIssue {
  Severity severity;
  std::string path;  // e.g. dosage[0].route.coding[0].display
  IssueKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool valid = true;  // no error-severity issues

  bool has_kind(IssueKind kind) const;
  nlohmann::ordered_json to_json() const;
  std::string to_text() const;
};

/// Check a statement against the bound tables: required fields (structure),
/// value domains and closed value sets (datatype), codes found in bound
/// tables (code_binding / oov_code), display strings (display_name,
/// warning), exclusive slots and duplicate codings (cardinality). The
/// report is deterministic for a given input; the input is never modified.
ValidationReport validate(const MedicationStatement& resource,
                          const TableSet& tables);

/// Same checks over bare element fragments, before assembly. The
/// medication-code-required rule applies only when the medication fragment
/// itself is present; a dose fragment carrying both quantity and range is
/// reported as a cardinality issue rather than refused.
ValidationReport validate(const Fragments& fragments, const TableSet& tables);

std::vector<ValidationReport> validate_batch(
    std::span<const MedicationStatement> resources, const TableSet& tables);

}  // namespace fhirsculptor

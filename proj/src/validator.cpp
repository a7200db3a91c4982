#include "fhirsculptor/validator.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace fhirsculptor {

std::string_view to_string(Severity severity) {
  return severity == Severity::error ? "error" : "warning";
}

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::structure: return "structure";
    case IssueKind::datatype: return "datatype";
    case IssueKind::code_binding: return "code_binding";
    case IssueKind::display_name: return "display_name";
    case IssueKind::cardinality: return "cardinality";
    case IssueKind::oov_code: return "oov_code";
  }
  return "unknown";
}

bool ValidationReport::has_kind(IssueKind kind) const {
  for (const auto& issue : issues) {
    if (issue.kind == kind) return true;
  }
  return false;
}

nlohmann::ordered_json ValidationReport::to_json() const {
  nlohmann::ordered_json out;
  out["valid"] = valid;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& issue : issues) {
    nlohmann::ordered_json entry;
    entry["severity"] = std::string(to_string(issue.severity));
    entry["path"] = issue.path;
    entry["kind"] = std::string(to_string(issue.kind));
    entry["message"] = issue.message;
    arr.push_back(entry);
  }
  out["issues"] = arr;
  return out;
}

std::string ValidationReport::to_text() const {
  std::ostringstream out;
  if (issues.empty()) {
    out << "valid (no issues)\n";
    return out.str();
  }
  for (const auto& issue : issues) {
    out << to_string(issue.severity) << " [" << to_string(issue.kind) << "] "
        << issue.path << ": " << issue.message << "\n";
  }
  return out.str();
}

namespace {

/// Which table, if any, governs the codings at an element.
enum class Binding { none, route, form, timing, medication, reason };

struct ConceptNode {
  std::string path;
  const CodeableConcept* value;
  Binding binding;
  bool required;  // structure error when empty
};

struct QuantityNode {
  std::string path;
  const Quantity* quantity;
};

struct RepeatNode {
  std::string path;
  const TimingRepeat* repeat;
};

struct DosageNode {
  std::string path;
  const Dosage* dosage;
};

struct Nodes {
  std::vector<ConceptNode> concepts;
  std::vector<QuantityNode> quantities;
  std::vector<RepeatNode> repeats;
  std::vector<DosageNode> dosages;
};

Nodes collect_nodes(const MedicationStatement& resource,
                    bool medication_code_required) {
  Nodes nodes;
  if (medication_code_required || !resource.medication.code.empty()) {
    nodes.concepts.push_back({"medication.code", &resource.medication.code,
                              Binding::medication, medication_code_required});
  }
  if (resource.medication.dose_form.has_value()) {
    nodes.concepts.push_back({"medication.doseForm",
                              &*resource.medication.dose_form, Binding::form,
                              false});
  }
  if (resource.medication.total_volume.has_value()) {
    nodes.quantities.push_back(
        {"medication.totalVolume", &*resource.medication.total_volume});
  }
  for (size_t i = 0; i < resource.reason.size(); ++i) {
    nodes.concepts.push_back({"reason[" + std::to_string(i) + "].concept",
                              &resource.reason[i], Binding::reason, false});
  }
  for (size_t i = 0; i < resource.dosage.size(); ++i) {
    const std::string base = "dosage[" + std::to_string(i) + "]";
    const Dosage& dosage = resource.dosage[i];
    nodes.dosages.push_back({base, &dosage});
    if (dosage.route.has_value()) {
      nodes.concepts.push_back(
          {base + ".route", &*dosage.route, Binding::route, false});
    }
    if (dosage.timing_code.has_value()) {
      nodes.concepts.push_back(
          {base + ".timing.code", &*dosage.timing_code, Binding::timing, false});
    }
    if (dosage.timing_repeat.has_value()) {
      nodes.repeats.push_back({base + ".timing.repeat", &*dosage.timing_repeat});
    }
    if (dosage.dose_quantity.has_value()) {
      nodes.quantities.push_back(
          {base + ".doseQuantity", &*dosage.dose_quantity});
    }
    if (dosage.dose_range.has_value()) {
      nodes.quantities.push_back(
          {base + ".doseRange.low", &dosage.dose_range->low});
      nodes.quantities.push_back(
          {base + ".doseRange.high", &dosage.dose_range->high});
    }
  }
  return nodes;
}

class Checker {
 public:
  Checker(const MedicationStatement& resource, const TableSet& tables,
          bool medication_code_required = true)
      : tables_(tables),
        nodes_(collect_nodes(resource, medication_code_required)) {}

  ValidationReport run() {
    check_structure();
    check_datatype();
    check_code_bindings();
    check_displays();
    check_cardinality();
    ValidationReport report;
    report.issues = std::move(issues_);
    report.valid = true;
    for (const auto& issue : report.issues) {
      if (issue.severity == Severity::error) {
        report.valid = false;
        break;
      }
    }
    return report;
  }

 private:
  void add(Severity severity, const std::string& path, IssueKind kind,
           std::string message) {
    issues_.push_back({severity, path, kind, std::move(message)});
  }

  void error(const std::string& path, IssueKind kind, std::string message) {
    add(Severity::error, path, kind, std::move(message));
  }

  void check_structure() {
    for (const auto& node : nodes_.concepts) {
      if (node.value->empty()) {
        if (node.required) {
          error(node.path, IssueKind::structure,
                "required element is missing or empty");
        } else {
          error(node.path, IssueKind::structure,
                "needs at least one of text or coding");
        }
        continue;
      }
      if (!node.value->text.has_value() && node.value->coding.empty()) {
        error(node.path, IssueKind::structure,
              "needs at least one of text or coding");
      }
      for (size_t i = 0; i < node.value->coding.size(); ++i) {
        const Coding& coding = node.value->coding[i];
        const std::string base = node.path + ".coding[" + std::to_string(i) + "]";
        if (coding.code.empty()) {
          error(base + ".code", IssueKind::structure, "coding has no code");
        }
        if (coding.system.empty()) {
          error(base + ".system", IssueKind::structure, "coding has no system");
        }
      }
    }
    for (const auto& node : nodes_.quantities) {
      if (!node.quantity->value.has_value()) {
        error(node.path + ".value", IssueKind::structure,
              "quantity has no value");
      }
    }
    for (const auto& node : nodes_.repeats) {
      if (!node.repeat->frequency.has_value()) {
        error(node.path + ".frequency", IssueKind::structure,
              "repeat has no frequency");
      }
      if (!node.repeat->period.has_value()) {
        error(node.path + ".period", IssueKind::structure,
              "repeat has no period");
      }
      if (!node.repeat->period_unit.has_value()) {
        error(node.path + ".periodUnit", IssueKind::structure,
              "repeat has no periodUnit");
      }
      if (node.repeat->duration.has_value() !=
          node.repeat->duration_unit.has_value()) {
        error(node.path, IssueKind::structure,
              "duration and durationUnit must be present together");
      }
    }
  }

  void check_datatype() {
    for (const auto& node : nodes_.repeats) {
      const TimingRepeat& repeat = *node.repeat;
      if (repeat.frequency.has_value() && *repeat.frequency <= 0) {
        error(node.path + ".frequency", IssueKind::datatype,
              "frequency must be a positive integer");
      }
      if (repeat.period.has_value() &&
          (!(*repeat.period > 0.0) || !std::isfinite(*repeat.period))) {
        error(node.path + ".period", IssueKind::datatype,
              "period must be a positive number");
      }
      if (repeat.period_unit.has_value() && !is_time_unit(*repeat.period_unit)) {
        error(node.path + ".periodUnit", IssueKind::datatype,
              "'" + *repeat.period_unit +
                  "' is not in the time-unit set {s, min, h, d, wk, mo, a}");
      }
      if (repeat.duration.has_value() &&
          (!(*repeat.duration > 0.0) || !std::isfinite(*repeat.duration))) {
        error(node.path + ".duration", IssueKind::datatype,
              "duration must be a positive number");
      }
      if (repeat.duration_unit.has_value() &&
          !is_time_unit(*repeat.duration_unit)) {
        error(node.path + ".durationUnit", IssueKind::datatype,
              "'" + *repeat.duration_unit +
                  "' is not in the time-unit set {s, min, h, d, wk, mo, a}");
      }
    }
    for (const auto& node : nodes_.quantities) {
      const Quantity& quantity = *node.quantity;
      if (quantity.value.has_value() && !std::isfinite(*quantity.value)) {
        error(node.path + ".value", IssueKind::datatype,
              "value must be finite");
      }
      if (quantity.code.has_value() &&
          (!quantity.system.has_value() ||
           *quantity.system != systems::kUcum)) {
        error(node.path + ".system", IssueKind::datatype,
              "a coded quantity must use the UCUM system");
      }
    }
    for (const auto& node : nodes_.dosages) {
      if (!node.dosage->dose_range.has_value()) continue;
      const DoseRange& range = *node.dosage->dose_range;
      if (range.low.value.has_value() && range.high.value.has_value() &&
          *range.low.value > *range.high.value) {
        error(node.path + ".doseRange", IssueKind::datatype,
              "range low exceeds high");
      }
      if (range.low.unit.has_value() && range.high.unit.has_value() &&
          !text_equals(*range.low.unit, *range.high.unit)) {
        error(node.path + ".doseRange", IssueKind::datatype,
              "range low and high units differ");
      }
    }
  }

  /// Returns the governing table, or nullptr when the element is unbound
  /// (optional dictionary absent). `strict` is set for the four bundled
  /// tables where a foreign system is itself a binding violation.
  const CodeTable* binding_table(Binding binding, bool& strict) const {
    strict = true;
    switch (binding) {
      case Binding::route: return &tables_.routes;
      case Binding::form: return &tables_.forms;
      case Binding::timing: return &tables_.timing_codes;
      case Binding::medication:
        strict = false;
        return tables_.medications.has_value() ? &*tables_.medications : nullptr;
      case Binding::reason:
        strict = false;
        return tables_.reasons.has_value() ? &*tables_.reasons : nullptr;
      case Binding::none: return nullptr;
    }
    return nullptr;
  }

  void check_code_bindings() {
    for (const auto& node : nodes_.concepts) {
      bool strict = false;
      const CodeTable* table = binding_table(node.binding, strict);
      if (table == nullptr) continue;
      for (size_t i = 0; i < node.value->coding.size(); ++i) {
        const Coding& coding = node.value->coding[i];
        if (coding.code.empty() || coding.system.empty()) continue;
        const std::string base =
            node.path + ".coding[" + std::to_string(i) + "]";
        if (!table->covers_system(coding.system)) {
          if (strict) {
            error(base + ".system", IssueKind::code_binding,
                  "system '" + coding.system +
                      "' is not bound at this element");
          }
          continue;
        }
        if (table->lookup(coding.system, coding.code) == nullptr) {
          error(base + ".code", IssueKind::oov_code,
                "code '" + coding.code + "' not found in system '" +
                    coding.system + "'");
        }
      }
    }
    for (const auto& node : nodes_.quantities) {
      const Quantity& quantity = *node.quantity;
      if (!quantity.code.has_value()) continue;
      if (!quantity.system.has_value() || *quantity.system != systems::kUcum) {
        continue;  // already a datatype issue
      }
      if (tables_.units.lookup(*quantity.system, *quantity.code) == nullptr) {
        error(node.path + ".code", IssueKind::oov_code,
              "unit code '" + *quantity.code + "' not found");
      }
    }
  }

  void check_displays() {
    for (const auto& node : nodes_.concepts) {
      bool strict = false;
      const CodeTable* table = binding_table(node.binding, strict);
      if (table == nullptr) continue;
      for (size_t i = 0; i < node.value->coding.size(); ++i) {
        const Coding& coding = node.value->coding[i];
        if (coding.code.empty() || coding.system.empty()) continue;
        if (!table->covers_system(coding.system)) continue;
        auto check = table->verify_display(coding);
        if (check.status == CodeTable::DisplayStatus::mismatch) {
          add(Severity::warning,
              node.path + ".coding[" + std::to_string(i) + "].display",
              IssueKind::display_name,
              "display '" + coding.display + "' differs from table display '" +
                  check.expected + "'");
        }
      }
    }
    for (const auto& node : nodes_.quantities) {
      const Quantity& quantity = *node.quantity;
      if (!quantity.code.has_value() || !quantity.unit.has_value()) continue;
      const CodeEntry* entry =
          quantity.system.has_value()
              ? tables_.units.lookup(*quantity.system, *quantity.code)
              : nullptr;
      if (entry != nullptr && !text_equals(*quantity.unit, entry->display)) {
        add(Severity::warning, node.path + ".unit", IssueKind::display_name,
            "unit '" + *quantity.unit + "' differs from table display '" +
                entry->display + "'");
      }
    }
  }

  void check_cardinality() {
    for (const auto& node : nodes_.dosages) {
      if (node.dosage->dose_quantity.has_value() &&
          node.dosage->dose_range.has_value()) {
        error(node.path, IssueKind::cardinality,
              "doseQuantity and doseRange are mutually exclusive");
      }
    }
    for (const auto& node : nodes_.concepts) {
      std::set<std::pair<std::string, std::string>> seen;
      for (size_t i = 0; i < node.value->coding.size(); ++i) {
        const Coding& coding = node.value->coding[i];
        auto key = std::make_pair(coding.system, coding.code);
        if (!seen.insert(key).second) {
          error(node.path + ".coding[" + std::to_string(i) + "]",
                IssueKind::cardinality,
                "duplicate coding (" + coding.system + ", " + coding.code + ")");
        }
      }
    }
  }

  const TableSet& tables_;
  Nodes nodes_;
  std::vector<ValidationIssue> issues_;
};

}  // namespace

ValidationReport validate(const MedicationStatement& resource,
                          const TableSet& tables) {
  return Checker(resource, tables).run();
}

ValidationReport validate(const Fragments& fragments, const TableSet& tables) {
  // Assemble without merge_fragments so an exclusivity conflict lands in
  // the report instead of throwing.
  MedicationStatement staged;
  if (fragments.medication.code.has_value()) {
    staged.medication.code = *fragments.medication.code;
  }
  staged.medication.dose_form = fragments.medication.dose_form;
  staged.medication.total_volume = fragments.medication.total_volume;
  if (!fragments.route.empty() || !fragments.schedule.empty() ||
      !fragments.dose.empty()) {
    Dosage dosage;
    dosage.route = fragments.route.value;
    dosage.timing_repeat = fragments.schedule.repeat;
    dosage.timing_code = fragments.schedule.code;
    dosage.dose_quantity = fragments.dose.quantity;
    dosage.dose_range = fragments.dose.range;
    staged.dosage.push_back(std::move(dosage));
  }
  staged.reason = fragments.reason.concepts;
  const bool medication_code_required = !fragments.medication.empty();
  return Checker(staged, tables, medication_code_required).run();
}

std::vector<ValidationReport> validate_batch(
    std::span<const MedicationStatement> resources, const TableSet& tables) {
  std::vector<ValidationReport> reports;
  reports.reserve(resources.size());
  for (const auto& resource : resources) {
    reports.push_back(validate(resource, tables));
  }
  return reports;
}

}  // namespace fhirsculptor

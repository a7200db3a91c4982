#include "fhirsculptor/eval.hpp"

#include <cstdio>
#include <sstream>

namespace fhirsculptor {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view element_name(Element element) {
  switch (element) {
    case Element::medication_code: return "medicationCode";
    case Element::dose_form: return "doseForm";
    case Element::total_volume: return "totalVolume";
    case Element::reason: return "reason";
    case Element::route: return "route";
    case Element::timing_repeat: return "timing.repeat";
    case Element::timing_code: return "timing.code";
    case Element::dose: return "doseQuantity/doseRange";
  }
  return "unknown";
}

namespace {

const CodeableConcept* concept_slot(const MedicationStatement& r,
                                    Element element) {
  switch (element) {
    case Element::medication_code:
      return r.medication.code.empty() ? nullptr : &r.medication.code;
    case Element::dose_form:
      return r.medication.dose_form.has_value() ? &*r.medication.dose_form
                                                : nullptr;
    case Element::route:
      return (!r.dosage.empty() && r.dosage[0].route.has_value())
                 ? &*r.dosage[0].route
                 : nullptr;
    case Element::timing_code:
      return (!r.dosage.empty() && r.dosage[0].timing_code.has_value())
                 ? &*r.dosage[0].timing_code
                 : nullptr;
    default:
      return nullptr;
  }
}

const Quantity* volume_slot(const MedicationStatement& r) {
  return r.medication.total_volume.has_value() ? &*r.medication.total_volume
                                               : nullptr;
}

const TimingRepeat* repeat_slot(const MedicationStatement& r) {
  return (!r.dosage.empty() && r.dosage[0].timing_repeat.has_value())
             ? &*r.dosage[0].timing_repeat
             : nullptr;
}

struct DoseSlot {
  const Quantity* quantity = nullptr;
  const DoseRange* range = nullptr;
  bool present() const { return quantity != nullptr || range != nullptr; }
};

DoseSlot dose_slot(const MedicationStatement& r) {
  DoseSlot slot;
  if (r.dosage.empty()) return slot;
  if (r.dosage[0].dose_quantity.has_value())
    slot.quantity = &*r.dosage[0].dose_quantity;
  if (r.dosage[0].dose_range.has_value()) slot.range = &*r.dosage[0].dose_range;
  return slot;
}

bool dose_equal(const DoseSlot& a, const DoseSlot& b) {
  if (a.quantity != nullptr && b.quantity != nullptr) {
    return structural_equals(*a.quantity, *b.quantity);
  }
  if (a.range != nullptr && b.range != nullptr) {
    return structural_equals(*a.range, *b.range);
  }
  return false;  // quantity vs range never matches exactly
}

template <typename T>
ElementCounts single_valued(const T* predicted, const T* gold) {
  ElementCounts counts;
  if (predicted != nullptr && gold != nullptr) {
    if (structural_equals(*predicted, *gold)) {
      counts.tp_exact = 1;
    } else {
      counts.tp_inexact = 1;
    }
  } else if (predicted != nullptr) {
    counts.fp = 1;
  } else if (gold != nullptr) {
    counts.fn = 1;
  } else {
    counts.tn = 1;
  }
  return counts;
}

/// Greedy one-to-one matching on structural equality; every matched pair
/// is exact by construction, leftovers count FP/FN.
ElementCounts reason_counts(const std::vector<CodeableConcept>& predicted,
                            const std::vector<CodeableConcept>& gold) {
  ElementCounts counts;
  if (predicted.empty() && gold.empty()) {
    counts.tn = 1;
    return counts;
  }
  std::vector<bool> used(predicted.size(), false);
  for (const auto& g : gold) {
    bool matched = false;
    for (size_t j = 0; j < predicted.size(); ++j) {
      if (!used[j] && structural_equals(predicted[j], g)) {
        used[j] = true;
        matched = true;
        break;
      }
    }
    if (matched) {
      ++counts.tp_exact;
    } else {
      ++counts.fn;
    }
  }
  counts.fp = static_cast<long>(predicted.size()) - counts.tp_exact;
  return counts;
}

}  // namespace

ElementCounts compare_element(const MedicationStatement* predicted,
                              const MedicationStatement& gold,
                              Element element) {
  static const MedicationStatement kEmpty{};
  const MedicationStatement& pred = predicted != nullptr ? *predicted : kEmpty;

  switch (element) {
    case Element::medication_code:
    case Element::dose_form:
    case Element::route:
    case Element::timing_code:
      return single_valued(concept_slot(pred, element),
                           concept_slot(gold, element));
    case Element::total_volume:
      return single_valued(volume_slot(pred), volume_slot(gold));
    case Element::timing_repeat:
      return single_valued(repeat_slot(pred), repeat_slot(gold));
    case Element::reason:
      return reason_counts(pred.reason, gold.reason);
    case Element::dose: {
      DoseSlot p = dose_slot(pred);
      DoseSlot g = dose_slot(gold);
      ElementCounts counts;
      if (p.present() && g.present()) {
        if (dose_equal(p, g)) {
          counts.tp_exact = 1;
        } else {
          counts.tp_inexact = 1;
        }
      } else if (p.present()) {
        counts.fp = 1;
      } else if (g.present()) {
        counts.fn = 1;
      } else {
        counts.tn = 1;
      }
      return counts;
    }
  }
  return {};
}

namespace {

ElementMetrics finalize(Element element, const ElementCounts& counts) {
  ElementMetrics metrics;
  metrics.element = element;
  metrics.true_positives = counts.tp();
  metrics.false_positives = counts.fp;
  metrics.false_negatives = counts.fn;
  metrics.exact_matches = counts.tp_exact;
  metrics.gold_present = counts.tp() + counts.fn;
  const long pd = counts.tp() + counts.fp;
  const long rd = counts.tp() + counts.fn;
  metrics.precision = pd == 0 ? 1.0 : static_cast<double>(counts.tp()) / pd;
  metrics.recall = rd == 0 ? 1.0 : static_cast<double>(counts.tp()) / rd;
  metrics.f1 = (metrics.precision + metrics.recall) == 0.0
                   ? 0.0
                   : 2.0 * metrics.precision * metrics.recall /
                         (metrics.precision + metrics.recall);
  metrics.exact_match_rate =
      metrics.gold_present == 0
          ? 1.0
          : static_cast<double>(metrics.exact_matches) / metrics.gold_present;
  return metrics;
}

}  // namespace

EvalReport compute_metrics(std::span<const GoldPair> pairs) {
  if (pairs.empty()) throw EmptyCorpus("no gold pairs to score");

  std::array<ElementCounts, 8> totals{};
  size_t format_failures = 0;
  size_t whole_exact = 0;
  for (const auto& pair : pairs) {
    const MedicationStatement* predicted =
        pair.predicted.resource.has_value() ? &*pair.predicted.resource
                                            : nullptr;
    for (Element element : kAllElements) {
      totals[static_cast<size_t>(element)] +=
          compare_element(predicted, pair.gold, element);
    }
    format_failures += pair.predicted.format_failure_count();
    if (predicted != nullptr && structural_equals(*predicted, pair.gold)) {
      ++whole_exact;
    }
  }

  EvalReport report;
  report.corpus_size = pairs.size();
  for (Element element : kAllElements) {
    report.per_element[static_cast<size_t>(element)] =
        finalize(element, totals[static_cast<size_t>(element)]);
  }
  report.format_conformity_rate =
      1.0 - static_cast<double>(format_failures) /
                (static_cast<double>(kElementKindCount) * pairs.size());
  report.whole_resource_exact_rate =
      static_cast<double>(whole_exact) / pairs.size();
  return report;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

ordered_json EvalReport::to_json() const {
  ordered_json out;
  out["corpusSize"] = corpus_size;
  out["formatConformityRate"] = format_conformity_rate;
  out["wholeResourceExactMatchRate"] = whole_resource_exact_rate;
  ordered_json elements = ordered_json::array();
  for (const auto& m : per_element) {
    ordered_json entry;
    entry["element"] = std::string(element_name(m.element));
    entry["goldPresent"] = m.gold_present;
    entry["truePositives"] = m.true_positives;
    entry["falsePositives"] = m.false_positives;
    entry["falseNegatives"] = m.false_negatives;
    entry["exactMatches"] = m.exact_matches;
    entry["exactMatchRate"] = m.exact_match_rate;
    entry["precision"] = m.precision;
    entry["recall"] = m.recall;
    entry["f1"] = m.f1;
    elements.push_back(entry);
  }
  out["perElement"] = elements;
  return out;
}

EvalReport EvalReport::from_json(const json& doc) {
  EvalReport report;
  report.corpus_size = doc.at("corpusSize").get<size_t>();
  report.format_conformity_rate = doc.at("formatConformityRate").get<double>();
  report.whole_resource_exact_rate =
      doc.at("wholeResourceExactMatchRate").get<double>();
  for (const auto& entry : doc.at("perElement")) {
    std::string name = entry.at("element").get<std::string>();
    for (Element element : kAllElements) {
      if (element_name(element) != name) continue;
      ElementMetrics& m = report.per_element[static_cast<size_t>(element)];
      m.element = element;
      m.gold_present = entry.at("goldPresent").get<long>();
      m.true_positives = entry.at("truePositives").get<long>();
      m.false_positives = entry.at("falsePositives").get<long>();
      m.false_negatives = entry.at("falseNegatives").get<long>();
      m.exact_matches = entry.at("exactMatches").get<long>();
      m.exact_match_rate = entry.at("exactMatchRate").get<double>();
      m.precision = entry.at("precision").get<double>();
      m.recall = entry.at("recall").get<double>();
      m.f1 = entry.at("f1").get<double>();
    }
  }
  return report;
}

namespace {

std::string fixed3(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", value);
  return buf;
}

std::string pad(std::string s, size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
  if (format == ReportFormat::json_doc) {
    return report.to_json().dump(2) + "\n";
  }
  if (format == ReportFormat::csv) {
    std::ostringstream out;
    out << "element,goldPresent,truePositives,falsePositives,falseNegatives,"
           "exactMatches,exactMatchRate,precision,recall,f1\n";
    for (const auto& m : report.per_element) {
      out << element_name(m.element) << ',' << m.gold_present << ','
          << m.true_positives << ',' << m.false_positives << ','
          << m.false_negatives << ',' << m.exact_matches << ','
          << fixed3(m.exact_match_rate) << ',' << fixed3(m.precision) << ','
          << fixed3(m.recall) << ',' << fixed3(m.f1) << "\n";
    }
    return out.str();
  }

  std::ostringstream out;
  out << pad("Element", 24) << pad("N (%)", 16) << pad("Exact Match", 13)
      << pad("Prec.", 8) << pad("Rec.", 8) << pad("F1", 8) << "\n";
  for (const auto& m : report.per_element) {
    double pct = report.corpus_size == 0
                     ? 0.0
                     : 100.0 * static_cast<double>(m.gold_present) /
                           static_cast<double>(report.corpus_size);
    char n_cell[48];
    std::snprintf(n_cell, sizeof(n_cell), "%ld (%.1f%%)", m.gold_present, pct);
    out << pad(std::string(element_name(m.element)), 24)
        << pad(n_cell, 16) << pad(fixed3(m.exact_match_rate), 13)
        << pad(fixed3(m.precision), 8) << pad(fixed3(m.recall), 8)
        << pad(fixed3(m.f1), 8) << "\n";
  }
  out << "\n";
  out << "Corpus size:                 " << report.corpus_size << "\n";
  out << "Format conformity rate:      " << fixed3(report.format_conformity_rate)
      << "\n";
  out << "Whole-resource exact match:  "
      << fixed3(report.whole_resource_exact_rate) << "\n";
  return out.str();
}

}  // namespace fhirsculptor

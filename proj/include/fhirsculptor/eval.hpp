#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fhirsculptor/conversion.hpp"
#include "fhirsculptor/fhir_model.hpp"

namespace fhirsculptor {

struct EmptyCorpus : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The eight scored elements.
enum class Element : int {
  medication_code = 0,
  dose_form,
  total_volume,
  reason,
  route,
  timing_repeat,
  timing_code,
  dose,
};

inline constexpr std::array<Element, 8> kAllElements = {
    Element::medication_code, Element::dose_form, Element::total_volume,
    Element::reason,          Element::route,     Element::timing_repeat,
    Element::timing_code,     Element::dose};

std::string_view element_name(Element element);

/// Occurrence outcome counts for one element of one statement pair.
/// For the list-valued reason element the counts may exceed one.
struct ElementCounts {
  long tp_exact = 0;
  long tp_inexact = 0;
  long fp = 0;
  long fn = 0;
  long tn = 0;

  long tp() const { return tp_exact + tp_inexact; }

  ElementCounts& operator+=(const ElementCounts& other) {
    tp_exact += other.tp_exact;
    tp_inexact += other.tp_inexact;
    fp += other.fp;
    fn += other.fn;
    tn += other.tn;
    return *this;
  }
};

/// Occurrence logic: both present is a TP (exact iff structurally equal),
/// predicted-only an FP, gold-only an FN, both absent a TN. Reason lists
/// use greedy one-to-one matching on structural equality with leftovers
/// counted FP/FN. Route, timing and dose are read from the first dosage
/// entry.
ElementCounts compare_element(const MedicationStatement* predicted,
                              const MedicationStatement& gold, Element element);

struct ElementMetrics {
  Element element = Element::medication_code;
  long true_positives = 0;
  long false_positives = 0;
  long false_negatives = 0;
  long exact_matches = 0;
  long gold_present = 0;  // true_positives + false_negatives
  double exact_match_rate = 1.0;  // exact_matches / gold_present, 1 when 0/0
  double precision = 1.0;         // 1 when the denominator is 0
  double recall = 1.0;
  double f1 = 1.0;                // 0 when precision + recall is 0
};

struct GoldPair {
  std::string input_id;
  MedicationStatement gold;
  ConversionResult predicted;
};

struct EvalReport {
  std::array<ElementMetrics, 8> per_element;
  double format_conformity_rate = 1.0;
  /// Supplementary: statements whose whole resource matches gold exactly.
  double whole_resource_exact_rate = 1.0;
  size_t corpus_size = 0;

  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::json& doc);
};

/// Aggregate compare_element over the corpus; the format-conformity rate is
/// 1 - failures / (5 x corpus size). Deterministic and permutation-
/// invariant over corpus order. Throws EmptyCorpus on an empty pair list.
EvalReport compute_metrics(std::span<const GoldPair> pairs);

enum class ReportFormat { table_text, json_doc, csv };

/// table_text mirrors the element/N(%)/exact/precision/recall/F1 layout
/// with numbers at 3 decimals.
std::string render_report(const EvalReport& report, ReportFormat format);

}  // namespace fhirsculptor

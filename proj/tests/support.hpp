// Shared test fixtures: bundled-data loaders, the fully-specified example
// resource used as a golden fixture, and a seeded random resource
// generator for property and mutation tests.
#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "fhirsculptor/fhir_model.hpp"
#include "fhirsculptor/prompt.hpp"
#include "fhirsculptor/sig_parser.hpp"
#include "fhirsculptor/terminology.hpp"

namespace testsupport {

using namespace fhirsculptor;

inline std::filesystem::path data_dir() {
  return std::filesystem::path(FHIRSCULPTOR_DATA_DIR);
}

inline const TableSet& tables() {
  static const TableSet set = TableSet::load_dir(data_dir() / "tables");
  return set;
}

inline const FrequencyRuleTable& frequency_rules() {
  static const FrequencyRuleTable table =
      FrequencyRuleTable::load(data_dir() / "tables" / "frequency_rules.csv");
  return table;
}

inline const PromptLibrary& prompts() {
  static const PromptLibrary library =
      PromptLibrary::load(data_dir() / "templates", tables());
  return library;
}

inline const SigParser& sig_parser() {
  static const SigParser parser(tables(), frequency_rules());
  return parser;
}

inline Coding make_coding(std::string system, std::string code,
                          std::string display) {
  Coding coding;
  coding.system = std::move(system);
  coding.code = std::move(code);
  coding.display = std::move(display);
  return coding;
}

inline CodeableConcept make_concept(std::optional<std::string> text,
                                    std::vector<Coding> codings = {}) {
  CodeableConcept cc;
  cc.text = std::move(text);
  cc.coding = std::move(codings);
  return cc;
}

/// The fully-specified example statement: clonazepam with three medication
/// codings, Tablet form, 0.5 mg strength, headache reason, oral route,
/// every-4-hours schedule and a 5 mL dose.
inline MedicationStatement golden_statement() {
  MedicationStatement r;
  r.medication.code = make_concept(
      "clonazepam 0.5 mg Tablet",
      {make_coding(std::string(systems::kNdc), "51079088120",
                   "clonazepam 0.5 MG Oral Tablet"),
       make_coding(std::string(systems::kRxNorm), "197527",
                   "Clonazepam 500 microgram oral tablet"),
       make_coding(std::string(systems::kSnomed), "322897008",
                   "Clonazepam 500 microgram oral tablet")});
  r.medication.dose_form = make_concept(
      "Tablet",
      {make_coding(std::string(systems::kSnomed), "385055001", "Tablet")});
  Quantity volume;
  volume.value = 0.5;
  volume.unit = "milligram";
  volume.system = std::string(systems::kUcum);
  volume.code = "mg";
  r.medication.total_volume = volume;

  r.reason.push_back(make_concept(
      "headache",
      {make_coding(std::string(systems::kSnomed), "25064002", "Headache")}));

  Dosage dosage;
  dosage.route = make_concept(
      "PO",
      {make_coding(std::string(systems::kSnomed), "26643006", "Oral route")});
  TimingRepeat repeat;
  repeat.frequency = 1;
  repeat.period = 4.0;
  repeat.period_unit = "h";
  dosage.timing_repeat = repeat;
  dosage.timing_code = make_concept(
      std::nullopt, {make_coding(std::string(systems::kGts), "Q4H", "Q4H")});
  Quantity dose;
  dose.value = 5.0;
  dose.unit = "ML";
  dosage.dose_quantity = dose;
  r.dosage.push_back(std::move(dosage));
  r.source_text = "clonazepam 0.5 mg Tablet PO Q4H for headache";
  return r;
}

/// Random valid statements built from bundled table entries. Seeded, so
/// every run sees the same sequence.
class ResourceGenerator {
 public:
  explicit ResourceGenerator(unsigned seed) : rng_(seed) {}

  MedicationStatement next() {
    MedicationStatement r;
    r.medication.code = make_concept(pick_drug_text());
    if (flip()) {
      const CodeEntry& form = pick_entry(tables().forms);
      r.medication.dose_form = make_concept(
          form.display, {make_coding(form.system, form.code, form.display)});
    }
    if (flip()) {
      const CodeEntry& unit = pick_entry(tables().units);
      Quantity volume;
      volume.value = pick_value();
      volume.unit = unit.display;
      volume.system = unit.system;
      volume.code = unit.code;
      r.medication.total_volume = volume;
    }
    size_t reasons = rng_() % 3;
    for (size_t i = 0; i < reasons; ++i) {
      const CodeEntry& reason = pick_entry(*tables().reasons);
      // Reuse of the same reason entry would collide with the greedy
      // matcher's one-to-one assumption; keep entries distinct.
      bool duplicate = false;
      for (const auto& existing : r.reason) {
        if (!existing.coding.empty() && existing.coding[0].code == reason.code) {
          duplicate = true;
        }
      }
      if (duplicate) continue;
      r.reason.push_back(make_concept(
          to_lower(reason.display),
          {make_coding(reason.system, reason.code, reason.display)}));
    }
    if (flip() || r.reason.empty()) {
      Dosage dosage;
      if (flip()) {
        const CodeEntry& route = pick_entry(tables().routes);
        dosage.route = make_concept(
            route.synonyms.empty() ? route.display : route.synonyms[0],
            {make_coding(route.system, route.code, route.display)});
      }
      const FrequencyRule* rule = pick_rule();
      if (rule != nullptr) {
        const CodeEntry* entry =
            tables().timing_codes.lookup(systems::kGts, rule->token);
        dosage.timing_code = make_concept(
            std::nullopt,
            {make_coding(entry->system, entry->code, entry->display)});
        if (rule->has_rate()) {
          TimingRepeat repeat;
          repeat.frequency = rule->frequency;
          repeat.period = rule->period;
          repeat.period_unit = rule->period_unit;
          if (flip()) {
            repeat.duration = static_cast<double>(1 + rng_() % 30);
            repeat.duration_unit = "d";
          }
          dosage.timing_repeat = repeat;
        }
      }
      if (flip()) {
        if (flip()) {
          Quantity dose;
          dose.value = pick_value();
          dose.unit = "tablet";
          dosage.dose_quantity = dose;
        } else {
          DoseRange range;
          range.low.value = 1.0;
          range.low.unit = "tablet";
          range.high.value = 1.0 + static_cast<double>(rng_() % 3);
          range.high.unit = "tablet";
          dosage.dose_range = range;
        }
      }
      r.dosage.push_back(std::move(dosage));
    }
    r.source_text = "generated case";
    return r;
  }

  std::mt19937& rng() { return rng_; }

 private:
  bool flip() { return rng_() % 2 == 0; }

  double pick_value() {
    static const double kValues[] = {0.5, 1.0, 2.0, 4.0, 5.0, 10.0, 250.0};
    return kValues[rng_() % (sizeof(kValues) / sizeof(kValues[0]))];
  }

  std::string pick_drug_text() {
    static const char* kDrugs[] = {"aspirin",    "metformin", "lisinopril",
                                   "omeprazole", "ibuprofen", "amoxicillin"};
    return kDrugs[rng_() % 6];
  }

  const CodeEntry& pick_entry(const CodeTable& table) {
    return table.entries()[rng_() % table.size()];
  }

  const FrequencyRule* pick_rule() {
    const auto& rules = frequency_rules().rules();
    if (rng_() % 4 == 0) return nullptr;
    return &rules[rng_() % rules.size()];
  }

  std::mt19937 rng_;
};

}  // namespace testsupport

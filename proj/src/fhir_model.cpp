#include "fhirsculptor/fhir_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fhirsculptor/code_systems.hpp"

namespace fhirsculptor {

using nlohmann::json;
using nlohmann::ordered_json;

bool is_time_unit(std::string_view code) {
  static constexpr std::array<std::string_view, 7> kUnits = {
      "s", "min", "h", "d", "wk", "mo", "a"};
  return std::find(kUnits.begin(), kUnits.end(), code) != kUnits.end();
}

bool MedicationFragment::empty() const {
  return !code.has_value() && !dose_form.has_value() &&
         !total_volume.has_value();
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

void emit_extras(ordered_json& out, const ExtraFields& extra) {
  for (const auto& [key, value] : extra) {
    out[key] = value;  // std::map keeps key order deterministic
  }
}

}  // namespace

ordered_json to_json(const Coding& coding) {
  ordered_json out = ordered_json::object();
  if (!coding.system.empty()) out["system"] = coding.system;
  if (!coding.code.empty()) out["code"] = coding.code;
  if (!coding.display.empty()) out["display"] = coding.display;
  emit_extras(out, coding.extra);
  return out;
}

ordered_json to_json(const CodeableConcept& value) {
  ordered_json out = ordered_json::object();
  if (value.text.has_value()) out["text"] = *value.text;
  if (!value.coding.empty()) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : value.coding) arr.push_back(to_json(c));
    out["coding"] = arr;
  }
  emit_extras(out, value.extra);
  return out;
}

ordered_json to_json(const Quantity& quantity) {
  ordered_json out = ordered_json::object();
  if (quantity.value.has_value()) out["value"] = *quantity.value;
  if (quantity.unit.has_value()) out["unit"] = *quantity.unit;
  if (quantity.system.has_value()) out["system"] = *quantity.system;
  if (quantity.code.has_value()) out["code"] = *quantity.code;
  emit_extras(out, quantity.extra);
  return out;
}

ordered_json to_json(const TimingRepeat& repeat) {
  ordered_json out = ordered_json::object();
  if (repeat.frequency.has_value()) out["frequency"] = *repeat.frequency;
  if (repeat.period.has_value()) out["period"] = *repeat.period;
  if (repeat.period_unit.has_value()) out["periodUnit"] = *repeat.period_unit;
  if (repeat.duration.has_value()) out["duration"] = *repeat.duration;
  if (repeat.duration_unit.has_value())
    out["durationUnit"] = *repeat.duration_unit;
  emit_extras(out, repeat.extra);
  return out;
}

namespace {

ordered_json range_to_json(const DoseRange& range) {
  ordered_json out = ordered_json::object();
  out["low"] = to_json(range.low);
  out["high"] = to_json(range.high);
  emit_extras(out, range.extra);
  return out;
}

}  // namespace

ordered_json to_json(const Dosage& dosage) {
  ordered_json out = ordered_json::object();
  if (dosage.route.has_value()) out["route"] = to_json(*dosage.route);
  if (dosage.timing_repeat.has_value() || dosage.timing_code.has_value() ||
      !dosage.timing_extra.empty()) {
    ordered_json timing = ordered_json::object();
    if (dosage.timing_repeat.has_value())
      timing["repeat"] = to_json(*dosage.timing_repeat);
    if (dosage.timing_code.has_value())
      timing["code"] = to_json(*dosage.timing_code);
    emit_extras(timing, dosage.timing_extra);
    out["timing"] = timing;
  }
  if (dosage.dose_quantity.has_value())
    out["doseQuantity"] = to_json(*dosage.dose_quantity);
  if (dosage.dose_range.has_value())
    out["doseRange"] = range_to_json(*dosage.dose_range);
  emit_extras(out, dosage.extra);
  return out;
}

ordered_json to_json(const MedicationStatement& resource) {
  ordered_json out = ordered_json::object();
  out["resourceType"] = "MedicationStatement";
  ordered_json med = ordered_json::object();
  if (!resource.medication.code.empty())
    med["code"] = to_json(resource.medication.code);
  if (resource.medication.dose_form.has_value())
    med["doseForm"] = to_json(*resource.medication.dose_form);
  if (resource.medication.total_volume.has_value())
    med["totalVolume"] = to_json(*resource.medication.total_volume);
  emit_extras(med, resource.medication.extra);
  out["medication"] = med;
  if (!resource.reason.empty()) {
    ordered_json arr = ordered_json::array();
    for (const auto& reason : resource.reason) {
      ordered_json entry = ordered_json::object();
      entry["concept"] = to_json(reason);
      arr.push_back(entry);
    }
    out["reason"] = arr;
  }
  if (!resource.dosage.empty()) {
    ordered_json arr = ordered_json::array();
    for (const auto& d : resource.dosage) arr.push_back(to_json(d));
    out["dosage"] = arr;
  }
  if (!resource.source_text.empty()) out["sourceText"] = resource.source_text;
  emit_extras(out, resource.extra);
  return out;
}

ordered_json to_json(const MedicationFragment& fragment) {
  ordered_json out = ordered_json::object();
  if (fragment.code.has_value()) out["medicationCode"] = to_json(*fragment.code);
  if (fragment.dose_form.has_value())
    out["doseForm"] = to_json(*fragment.dose_form);
  if (fragment.total_volume.has_value())
    out["totalVolume"] = to_json(*fragment.total_volume);
  return out;
}

ordered_json to_json(const RouteFragment& fragment) {
  if (!fragment.value.has_value()) return ordered_json::object();
  return to_json(*fragment.value);
}

ordered_json to_json(const ScheduleFragment& fragment) {
  ordered_json out = ordered_json::object();
  if (fragment.repeat.has_value()) out["repeat"] = to_json(*fragment.repeat);
  if (fragment.code.has_value()) out["code"] = to_json(*fragment.code);
  return out;
}

ordered_json to_json(const DoseFragment& fragment) {
  ordered_json out = ordered_json::object();
  if (fragment.quantity.has_value())
    out["doseQuantity"] = to_json(*fragment.quantity);
  if (fragment.range.has_value())
    out["doseRange"] = range_to_json(*fragment.range);
  return out;
}

ordered_json to_json(const ReasonFragment& fragment) {
  ordered_json arr = ordered_json::array();
  for (const auto& reason : fragment.concepts) {
    ordered_json entry = ordered_json::object();
    entry["concept"] = to_json(reason);
    arr.push_back(entry);
  }
  return arr;
}

std::string serialize(const MedicationStatement& resource) {
  return to_json(resource).dump();
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

/// Walk context: accumulates unknown-key paths for the caller's report.
struct ParseContext {
  std::vector<std::string>* unknown_keys = nullptr;

  void note_unknown(const std::string& path) {
    if (unknown_keys) unknown_keys->push_back(path);
  }
};

std::string child(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

std::string index_path(const std::string& path, size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const json* find_key(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void require_object(const json& value, const std::string& path) {
  if (!value.is_object()) {
    throw ShapeError(path.empty() ? "$" : path, "expected a JSON object");
  }
}

std::string parse_string(const json& value, const std::string& path) {
  if (!value.is_string()) throw ShapeError(path, "expected a string");
  return value.get<std::string>();
}

double parse_decimal(const json& value, const std::string& path) {
  if (!value.is_number()) throw ShapeError(path, "expected a number");
  return value.get<double>();
}

std::int64_t parse_integer(const json& value, const std::string& path) {
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_number_float()) {
    double d = value.get<double>();
    double rounded = std::nearbyint(d);
    if (rounded == d && std::abs(rounded) <= 9.0e18) {
      return static_cast<std::int64_t>(rounded);
    }
    throw ShapeError(path, "expected an integer");
  }
  throw ShapeError(path, "expected an integer");
}

/// Copies keys not named in `known` into `extra` and records their paths.
template <size_t N>
void collect_extras(const json& obj, const std::array<const char*, N>& known,
                    const std::string& path, ExtraFields& extra,
                    ParseContext& ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) {
          return it.key() == k;
        }) != known.end()) {
      continue;
    }
    extra[it.key()] = it.value();
    ctx.note_unknown(child(path, it.key().c_str()));
  }
}

Coding parse_coding(const json& value, const std::string& path,
                    ParseContext& ctx) {
  require_object(value, path);
  Coding coding;
  if (const json* v = find_key(value, "system")) {
    std::string raw = parse_string(*v, child(path, "system"));
    coding.system = normalize_system(raw);
    if (coding.system != raw) coding.source_system = raw;
  }
  if (const json* v = find_key(value, "code"))
    coding.code = parse_string(*v, child(path, "code"));
  if (const json* v = find_key(value, "display"))
    coding.display = parse_string(*v, child(path, "display"));
  collect_extras(value, std::array<const char*, 3>{"system", "code", "display"},
                 path, coding.extra, ctx);
  return coding;
}

CodeableConcept parse_concept(const json& value, const std::string& path,
                              ParseContext& ctx) {
  require_object(value, path);
  CodeableConcept parsed;
  if (const json* v = find_key(value, "text"))
    parsed.text = parse_string(*v, child(path, "text"));
  if (const json* v = find_key(value, "coding")) {
    const std::string coding_path = child(path, "coding");
    if (!v->is_array()) throw ShapeError(coding_path, "expected an array");
    for (size_t i = 0; i < v->size(); ++i) {
      parsed.coding.push_back(
          parse_coding((*v)[i], index_path(coding_path, i), ctx));
    }
  }
  collect_extras(value, std::array<const char*, 2>{"text", "coding"}, path,
                 parsed.extra, ctx);
  return parsed;
}

Quantity parse_quantity(const json& value, const std::string& path,
                        ParseContext& ctx) {
  require_object(value, path);
  Quantity quantity;
  if (const json* v = find_key(value, "value"))
    quantity.value = parse_decimal(*v, child(path, "value"));
  if (const json* v = find_key(value, "unit"))
    quantity.unit = parse_string(*v, child(path, "unit"));
  if (const json* v = find_key(value, "system"))
    quantity.system =
        normalize_system(parse_string(*v, child(path, "system")));
  if (const json* v = find_key(value, "code"))
    quantity.code = parse_string(*v, child(path, "code"));
  collect_extras(value,
                 std::array<const char*, 4>{"value", "unit", "system", "code"},
                 path, quantity.extra, ctx);
  return quantity;
}

TimingRepeat parse_repeat(const json& value, const std::string& path,
                          ParseContext& ctx) {
  require_object(value, path);
  TimingRepeat repeat;
  if (const json* v = find_key(value, "frequency"))
    repeat.frequency = parse_integer(*v, child(path, "frequency"));
  if (const json* v = find_key(value, "period"))
    repeat.period = parse_decimal(*v, child(path, "period"));
  if (const json* v = find_key(value, "periodUnit"))
    repeat.period_unit = parse_string(*v, child(path, "periodUnit"));
  if (const json* v = find_key(value, "duration"))
    repeat.duration = parse_decimal(*v, child(path, "duration"));
  if (const json* v = find_key(value, "durationUnit"))
    repeat.duration_unit = parse_string(*v, child(path, "durationUnit"));
  collect_extras(value,
                 std::array<const char*, 5>{"frequency", "period", "periodUnit",
                                            "duration", "durationUnit"},
                 path, repeat.extra, ctx);
  return repeat;
}

DoseRange parse_range(const json& value, const std::string& path,
                      ParseContext& ctx) {
  require_object(value, path);
  DoseRange range;
  if (const json* v = find_key(value, "low"))
    range.low = parse_quantity(*v, child(path, "low"), ctx);
  if (const json* v = find_key(value, "high"))
    range.high = parse_quantity(*v, child(path, "high"), ctx);
  collect_extras(value, std::array<const char*, 2>{"low", "high"}, path,
                 range.extra, ctx);
  return range;
}

Dosage parse_dosage(const json& value, const std::string& path,
                    ParseContext& ctx) {
  require_object(value, path);
  Dosage dosage;
  if (const json* v = find_key(value, "route"))
    dosage.route = parse_concept(*v, child(path, "route"), ctx);
  if (const json* v = find_key(value, "timing")) {
    const std::string timing_path = child(path, "timing");
    require_object(*v, timing_path);
    if (const json* r = find_key(*v, "repeat"))
      dosage.timing_repeat = parse_repeat(*r, child(timing_path, "repeat"), ctx);
    if (const json* c = find_key(*v, "code"))
      dosage.timing_code = parse_concept(*c, child(timing_path, "code"), ctx);
    collect_extras(*v, std::array<const char*, 2>{"repeat", "code"},
                   timing_path, dosage.timing_extra, ctx);
  }
  if (const json* v = find_key(value, "doseQuantity"))
    dosage.dose_quantity = parse_quantity(*v, child(path, "doseQuantity"), ctx);
  if (const json* v = find_key(value, "doseRange"))
    dosage.dose_range = parse_range(*v, child(path, "doseRange"), ctx);
  collect_extras(
      value, std::array<const char*, 4>{"route", "timing", "doseQuantity", "doseRange"},
      path, dosage.extra, ctx);
  return dosage;
}

MedicationDetail parse_medication(const json& value, const std::string& path,
                                  ParseContext& ctx) {
  require_object(value, path);
  MedicationDetail detail;
  if (const json* v = find_key(value, "code"))
    detail.code = parse_concept(*v, child(path, "code"), ctx);
  if (const json* v = find_key(value, "doseForm"))
    detail.dose_form = parse_concept(*v, child(path, "doseForm"), ctx);
  if (const json* v = find_key(value, "totalVolume"))
    detail.total_volume = parse_quantity(*v, child(path, "totalVolume"), ctx);
  collect_extras(value,
                 std::array<const char*, 3>{"code", "doseForm", "totalVolume"},
                 path, detail.extra, ctx);
  return detail;
}

std::vector<CodeableConcept> parse_reason_list(const json& value,
                                               const std::string& path,
                                               ParseContext& ctx) {
  if (!value.is_array()) throw ShapeError(path, "expected an array");
  std::vector<CodeableConcept> reasons;
  for (size_t i = 0; i < value.size(); ++i) {
    const std::string entry_path = index_path(path, i);
    const json& entry = value[i];
    require_object(entry, entry_path);
    const json* concept_value = find_key(entry, "concept");
    if (concept_value == nullptr) {
      throw ShapeError(entry_path, "expected an object with a 'concept' key");
    }
    reasons.push_back(
        parse_concept(*concept_value, child(entry_path, "concept"), ctx));
  }
  return reasons;
}

}  // namespace

Parsed<MedicationStatement> parse_statement(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw MalformedDocument(std::string("not valid JSON: ") + e.what());
  }
  Parsed<MedicationStatement> result;
  ParseContext ctx{&result.unknown_keys};
  require_object(doc, "");
  MedicationStatement& resource = result.value;
  if (const json* v = find_key(doc, "resourceType")) {
    std::string type = parse_string(*v, "resourceType");
    if (type != "MedicationStatement") {
      throw ShapeError("resourceType",
                       "expected 'MedicationStatement', got '" + type + "'");
    }
  }
  if (const json* v = find_key(doc, "medication"))
    resource.medication = parse_medication(*v, "medication", ctx);
  if (const json* v = find_key(doc, "reason"))
    resource.reason = parse_reason_list(*v, "reason", ctx);
  if (const json* v = find_key(doc, "dosage")) {
    if (!v->is_array()) throw ShapeError("dosage", "expected an array");
    for (size_t i = 0; i < v->size(); ++i) {
      resource.dosage.push_back(
          parse_dosage((*v)[i], index_path("dosage", i), ctx));
    }
  }
  if (const json* v = find_key(doc, "sourceText"))
    resource.source_text = parse_string(*v, "sourceText");
  collect_extras(doc,
                 std::array<const char*, 5>{"resourceType", "medication",
                                            "reason", "dosage", "sourceText"},
                 "", resource.extra, ctx);
  return result;
}

Parsed<MedicationFragment> parse_medication_fragment(const json& doc) {
  Parsed<MedicationFragment> result;
  ParseContext ctx{&result.unknown_keys};
  require_object(doc, "");
  if (const json* v = find_key(doc, "medicationCode"))
    result.value.code = parse_concept(*v, "medicationCode", ctx);
  if (const json* v = find_key(doc, "doseForm"))
    result.value.dose_form = parse_concept(*v, "doseForm", ctx);
  if (const json* v = find_key(doc, "totalVolume"))
    result.value.total_volume = parse_quantity(*v, "totalVolume", ctx);
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "medicationCode" && it.key() != "doseForm" &&
        it.key() != "totalVolume") {
      ctx.note_unknown(it.key());
    }
  }
  return result;
}

Parsed<RouteFragment> parse_route_fragment(const json& doc) {
  Parsed<RouteFragment> result;
  ParseContext ctx{&result.unknown_keys};
  require_object(doc, "");
  if (!doc.empty()) {
    CodeableConcept parsed = parse_concept(doc, "", ctx);
    if (!parsed.empty()) result.value.value = std::move(parsed);
  }
  return result;
}

Parsed<ScheduleFragment> parse_schedule_fragment(const json& doc) {
  Parsed<ScheduleFragment> result;
  ParseContext ctx{&result.unknown_keys};
  require_object(doc, "");
  if (const json* v = find_key(doc, "repeat"))
    result.value.repeat = parse_repeat(*v, "repeat", ctx);
  if (const json* v = find_key(doc, "code"))
    result.value.code = parse_concept(*v, "code", ctx);
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "repeat" && it.key() != "code") ctx.note_unknown(it.key());
  }
  return result;
}

Parsed<DoseFragment> parse_dose_fragment(const json& doc) {
  Parsed<DoseFragment> result;
  ParseContext ctx{&result.unknown_keys};
  require_object(doc, "");
  if (const json* v = find_key(doc, "doseQuantity"))
    result.value.quantity = parse_quantity(*v, "doseQuantity", ctx);
  if (const json* v = find_key(doc, "doseRange"))
    result.value.range = parse_range(*v, "doseRange", ctx);
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "doseQuantity" && it.key() != "doseRange")
      ctx.note_unknown(it.key());
  }
  return result;
}

Parsed<ReasonFragment> parse_reason_fragment(const json& doc) {
  Parsed<ReasonFragment> result;
  ParseContext ctx{&result.unknown_keys};
  if (doc.is_object() && doc.empty()) return result;  // "{}" -> empty fragment
  result.value.concepts = parse_reason_list(doc, "", ctx);
  return result;
}

// ---------------------------------------------------------------------------
// Structural comparison
// ---------------------------------------------------------------------------

bool text_equals(std::string_view a, std::string_view b) {
  return to_lower(collapse_whitespace(a)) == to_lower(collapse_whitespace(b));
}

namespace {

bool opt_text_equals(const std::optional<std::string>& a,
                     const std::optional<std::string>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a.has_value() || text_equals(*a, *b);
}

template <typename T>
bool opt_equals(const std::optional<T>& a, const std::optional<T>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a.has_value() || structural_equals(*a, *b);
}

bool extras_equal(const ExtraFields& a, const ExtraFields& b) {
  return a == b;  // nlohmann::json deep equality, numbers by value
}

/// Order-insensitive sort key for a coding within one concept.
std::string coding_sort_key(const Coding& c) {
  return c.system + "\x1f" + c.code + "\x1f" +
         to_lower(collapse_whitespace(c.display));
}

}  // namespace

bool structural_equals(const Coding& a, const Coding& b) {
  return a.system == b.system && a.code == b.code &&
         text_equals(a.display, b.display) && extras_equal(a.extra, b.extra);
}

bool structural_equals(const CodeableConcept& a, const CodeableConcept& b) {
  if (!opt_text_equals(a.text, b.text)) return false;
  if (a.coding.size() != b.coding.size()) return false;
  std::vector<size_t> ia(a.coding.size()), ib(b.coding.size());
  for (size_t i = 0; i < ia.size(); ++i) ia[i] = ib[i] = i;
  auto by_key = [](const std::vector<Coding>& v) {
    return [&v](size_t l, size_t r) {
      return coding_sort_key(v[l]) < coding_sort_key(v[r]);
    };
  };
  std::sort(ia.begin(), ia.end(), by_key(a.coding));
  std::sort(ib.begin(), ib.end(), by_key(b.coding));
  for (size_t i = 0; i < ia.size(); ++i) {
    if (!structural_equals(a.coding[ia[i]], b.coding[ib[i]])) return false;
  }
  return extras_equal(a.extra, b.extra);
}

bool structural_equals(const Quantity& a, const Quantity& b) {
  if (a.value.has_value() != b.value.has_value()) return false;
  if (a.value.has_value() && *a.value != *b.value) return false;
  return opt_text_equals(a.unit, b.unit) && a.system == b.system &&
         a.code == b.code && extras_equal(a.extra, b.extra);
}

bool structural_equals(const DoseRange& a, const DoseRange& b) {
  return structural_equals(a.low, b.low) && structural_equals(a.high, b.high) &&
         extras_equal(a.extra, b.extra);
}

bool structural_equals(const TimingRepeat& a, const TimingRepeat& b) {
  return a.frequency == b.frequency && a.period == b.period &&
         a.period_unit == b.period_unit && a.duration == b.duration &&
         a.duration_unit == b.duration_unit && extras_equal(a.extra, b.extra);
}

bool structural_equals(const Dosage& a, const Dosage& b) {
  return opt_equals(a.route, b.route) &&
         opt_equals(a.timing_repeat, b.timing_repeat) &&
         opt_equals(a.timing_code, b.timing_code) &&
         opt_equals(a.dose_quantity, b.dose_quantity) &&
         opt_equals(a.dose_range, b.dose_range) &&
         extras_equal(a.extra, b.extra) &&
         extras_equal(a.timing_extra, b.timing_extra);
}

namespace {

/// Unordered one-to-one matching for concept lists (reason).
bool concept_multiset_equals(const std::vector<CodeableConcept>& a,
                             const std::vector<CodeableConcept>& b) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& ca : a) {
    bool matched = false;
    for (size_t j = 0; j < b.size(); ++j) {
      if (!used[j] && structural_equals(ca, b[j])) {
        used[j] = true;
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

}  // namespace

bool structural_equals(const MedicationStatement& a,
                       const MedicationStatement& b) {
  if (!structural_equals(a.medication.code, b.medication.code)) return false;
  if (!opt_equals(a.medication.dose_form, b.medication.dose_form)) return false;
  if (!opt_equals(a.medication.total_volume, b.medication.total_volume))
    return false;
  if (!extras_equal(a.medication.extra, b.medication.extra)) return false;
  if (!concept_multiset_equals(a.reason, b.reason)) return false;
  if (a.dosage.size() != b.dosage.size()) return false;
  for (size_t i = 0; i < a.dosage.size(); ++i) {
    if (!structural_equals(a.dosage[i], b.dosage[i])) return false;
  }
  return a.source_text == b.source_text && extras_equal(a.extra, b.extra);
}

bool structural_equals(const Fragments& a, const Fragments& b) {
  auto cc = [](const std::optional<CodeableConcept>& x,
               const std::optional<CodeableConcept>& y) {
    return opt_equals(x, y);
  };
  return cc(a.medication.code, b.medication.code) &&
         cc(a.medication.dose_form, b.medication.dose_form) &&
         opt_equals(a.medication.total_volume, b.medication.total_volume) &&
         cc(a.route.value, b.route.value) &&
         opt_equals(a.schedule.repeat, b.schedule.repeat) &&
         cc(a.schedule.code, b.schedule.code) &&
         opt_equals(a.dose.quantity, b.dose.quantity) &&
         opt_equals(a.dose.range, b.dose.range) &&
         concept_multiset_equals(a.reason.concepts, b.reason.concepts);
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

MedicationStatement merge_fragments(const MedicationFragment& medication,
                                    const RouteFragment& route,
                                    const ScheduleFragment& schedule,
                                    const DoseFragment& dose,
                                    const ReasonFragment& reason,
                                    std::string source_text) {
  if (dose.quantity.has_value() && dose.range.has_value()) {
    throw ConflictError(
        "dose fragment populates both doseQuantity and doseRange");
  }
  MedicationStatement resource;
  if (medication.code.has_value()) resource.medication.code = *medication.code;
  resource.medication.dose_form = medication.dose_form;
  resource.medication.total_volume = medication.total_volume;
  if (!route.empty() || !schedule.empty() || !dose.empty()) {
    Dosage d;
    d.route = route.value;
    d.timing_repeat = schedule.repeat;
    d.timing_code = schedule.code;
    d.dose_quantity = dose.quantity;
    d.dose_range = dose.range;
    resource.dosage.push_back(std::move(d));
  }
  resource.reason = reason.concepts;
  resource.source_text = std::move(source_text);
  return resource;
}

MedicationStatement merge_fragments(const Fragments& fragments,
                                    std::string source_text) {
  return merge_fragments(fragments.medication, fragments.route,
                         fragments.schedule, fragments.dose, fragments.reason,
                         std::move(source_text));
}

}  // namespace fhirsculptor

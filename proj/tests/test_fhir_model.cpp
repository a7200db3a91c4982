#include "doctest.h"

#include <algorithm>

#include "fhirsculptor/fhir_model.hpp"
#include "support.hpp"

using namespace fhirsculptor;
using nlohmann::json;

namespace {

MedicationStatement reparse(const MedicationStatement& r) {
  return parse_statement(serialize(r)).value;
}

}  // namespace

TEST_CASE("route concept serializes with text first and canonical system") {
  MedicationStatement r;
  r.medication.code = testsupport::make_concept("aspirin");
  Dosage d;
  d.route = testsupport::make_concept(
      "PO", {testsupport::make_coding(std::string(systems::kSnomed),
                                      "26643006", "Oral route")});
  r.dosage.push_back(d);

  json doc = json::parse(serialize(r));
  CHECK(doc["dosage"][0]["route"] ==
        json::parse(R"({"text":"PO","coding":[{"system":"http://snomed.info/sct","code":"26643006","display":"Oral route"}]})"));
}

TEST_CASE("absent optional elements are elided") {
  MedicationStatement r;
  r.medication.code = testsupport::make_concept("aspirin");
  json doc = json::parse(serialize(r));
  CHECK(!doc.contains("dosage"));
  CHECK(!doc.contains("reason"));
  CHECK(!doc.contains("sourceText"));
  CHECK(doc["resourceType"] == "MedicationStatement");
}

TEST_CASE("reason entries nest under concept") {
  MedicationStatement r;
  r.medication.code = testsupport::make_concept("aspirin");
  r.reason.push_back(testsupport::make_concept("headache"));
  r.reason.push_back(testsupport::make_concept("fever"));
  json doc = json::parse(serialize(r));
  REQUIRE(doc["reason"].size() == 2);
  CHECK(doc["reason"][0]["concept"]["text"] == "headache");
  CHECK(doc["reason"][1]["concept"]["text"] == "fever");
}

TEST_CASE("serialization is deterministic") {
  MedicationStatement golden = testsupport::golden_statement();
  CHECK(serialize(golden) == serialize(golden));
  MedicationStatement copy = reparse(golden);
  CHECK(serialize(copy) == serialize(golden));
}

TEST_CASE("parse normalizes shorthand system names and records the original") {
  // timing.code example with the shorthand system name
  auto parsed = parse_statement(
      R"({"dosage":[{"timing":{"code":{"coding":[{"system":"HL7","code":"Q4H","display":"Q4H"}]}}}]})");
  const Coding& coding =
      parsed.value.dosage.at(0).timing_code.value().coding.at(0);
  CHECK(coding.system == systems::kGts);
  CHECK(coding.code == "Q4H");
  REQUIRE(coding.source_system.has_value());
  CHECK(*coding.source_system == "HL7");
}

TEST_CASE("empty object parses as an empty fragment") {
  auto fragment = parse_medication_fragment(json::parse("{}"));
  CHECK(fragment.value.empty());
  CHECK(fragment.unknown_keys.empty());
}

TEST_CASE("wrong type at a quantity path names the path") {
  CHECK_THROWS_WITH_AS(
      parse_statement(R"({"medication":{"totalVolume":{"value":"abc"}}})"),
      "medication.totalVolume.value: expected a number", ShapeError);
}

TEST_CASE("not-JSON input raises MalformedDocument") {
  CHECK_THROWS_AS(parse_statement("not json at all"), MalformedDocument);
}

TEST_CASE("unknown keys are retained, reported, and round-trip") {
  const char* text =
      R"({"medication":{"code":{"text":"aspirin"},"mystery":7},"status":"active"})";
  auto parsed = parse_statement(text);
  CHECK(parsed.unknown_keys ==
        std::vector<std::string>{"medication.mystery", "status"});
  json round = json::parse(serialize(parsed.value));
  CHECK(round["medication"]["mystery"] == 7);
  CHECK(round["status"] == "active");
  MedicationStatement again = reparse(parsed.value);
  CHECK(structural_equals(parsed.value, again));
}

TEST_CASE("numeric equality by value: 4 equals 4.0") {
  auto a = parse_statement(
      R"({"dosage":[{"timing":{"repeat":{"frequency":1,"period":4.0,"periodUnit":"h"}}}]})");
  auto b = parse_statement(
      R"({"dosage":[{"timing":{"repeat":{"frequency":1,"period":4,"periodUnit":"h"}}}]})");
  CHECK(structural_equals(a.value, b.value));
}

TEST_CASE("display comparison is case-insensitive, codes are not") {
  Coding a = testsupport::make_coding(std::string(systems::kSnomed),
                                      "26643006", "Oral route");
  Coding b = a;
  b.display = "oral  route";  // case and internal whitespace
  CHECK(structural_equals(a, b));

  Coding q4h = testsupport::make_coding(std::string(systems::kGts), "Q4H", "Q4H");
  Coding lower = q4h;
  lower.code = "q4h";
  CHECK(!structural_equals(q4h, lower));
}

TEST_CASE("coding list order is ignored, dosage order is significant") {
  MedicationStatement a = testsupport::golden_statement();
  MedicationStatement b = a;
  std::reverse(b.medication.code.coding.begin(),
               b.medication.code.coding.end());
  CHECK(structural_equals(a, b));

  MedicationStatement two_dosages = a;
  Dosage extra;
  extra.route = testsupport::make_concept("IV");
  two_dosages.dosage.push_back(extra);
  MedicationStatement swapped = two_dosages;
  std::swap(swapped.dosage[0], swapped.dosage[1]);
  CHECK(!structural_equals(two_dosages, swapped));
}

TEST_CASE("merge assembles the full example into one resource") {
  MedicationStatement golden = testsupport::golden_statement();

  MedicationFragment medication;
  medication.code = golden.medication.code;
  medication.dose_form = golden.medication.dose_form;
  medication.total_volume = golden.medication.total_volume;
  RouteFragment route;
  route.value = golden.dosage[0].route;
  ScheduleFragment schedule;
  schedule.repeat = golden.dosage[0].timing_repeat;
  schedule.code = golden.dosage[0].timing_code;
  DoseFragment dose;
  dose.quantity = golden.dosage[0].dose_quantity;
  ReasonFragment reason;
  reason.concepts = golden.reason;

  MedicationStatement merged = merge_fragments(medication, route, schedule,
                                               dose, reason, golden.source_text);
  CHECK(structural_equals(merged, golden));
}

TEST_CASE("merge with only a medication fragment yields a minimal resource") {
  MedicationFragment medication;
  medication.code = testsupport::make_concept("aspirin");
  MedicationStatement merged =
      merge_fragments(medication, {}, {}, {}, {}, "aspirin");
  CHECK(merged.dosage.empty());
  CHECK(merged.reason.empty());
  CHECK(merged.medication.code.text == "aspirin");
}

TEST_CASE("merge rejects a dose fragment with both quantity and range") {
  DoseFragment dose;
  Quantity q;
  q.value = 1.0;
  q.unit = "tablet";
  dose.quantity = q;
  DoseRange r;
  r.low = q;
  r.high = q;
  dose.range = r;
  CHECK_THROWS_AS(merge_fragments({}, {}, {}, dose, {}, "x"), ConflictError);
}

TEST_CASE("merge is insensitive to reason order under structural equality") {
  ReasonFragment forward;
  forward.concepts = {testsupport::make_concept("a"),
                      testsupport::make_concept("b")};
  ReasonFragment backward;
  backward.concepts = {testsupport::make_concept("b"),
                       testsupport::make_concept("a")};
  MedicationFragment med;
  med.code = testsupport::make_concept("aspirin");
  CHECK(structural_equals(merge_fragments(med, {}, {}, {}, forward, "t"),
                          merge_fragments(med, {}, {}, {}, backward, "t")));
}

TEST_CASE("property: round trip and equivalence over generated resources") {
  testsupport::ResourceGenerator gen(20240817);
  for (int i = 0; i < 200; ++i) {
    MedicationStatement r = gen.next();

    MedicationStatement back = reparse(r);
    CAPTURE(serialize(r));
    REQUIRE(structural_equals(r, back));

    CHECK(serialize(r) == serialize(back));

    // equivalence relation across harmless variants: c folds display
    // case, d reorders codings; r ~ c and c ~ d must give r ~ d.
    MedicationStatement c = r;
    for (auto& coding : c.medication.code.coding) {
      coding.display = to_lower(coding.display);
    }
    MedicationStatement d = c;
    std::reverse(d.medication.code.coding.begin(),
                 d.medication.code.coding.end());
    CHECK(structural_equals(r, r));
    CHECK(structural_equals(r, c));
    CHECK(structural_equals(c, r));
    CHECK(structural_equals(c, d));
    CHECK(structural_equals(r, d));
  }
}

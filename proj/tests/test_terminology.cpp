#include "doctest.h"

#include <fstream>

#include "fhirsculptor/terminology.hpp"
#include "support.hpp"

using namespace fhirsculptor;

namespace {

std::filesystem::path write_temp(const std::string& name,
                                 const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("bundled table sizes match the documented code counts") {
  CHECK(testsupport::tables().routes.size() == 15);
  CHECK(testsupport::tables().forms.size() == 26);
  CHECK(testsupport::tables().timing_codes.size() == 17);
  CHECK(testsupport::tables().units.size() == 16);
}

TEST_CASE("lookup finds bundled entries and misses unknown codes") {
  const auto& tables = testsupport::tables();
  const CodeEntry* tablet = tables.forms.lookup(systems::kSnomed, "385055001");
  REQUIRE(tablet != nullptr);
  CHECK(tablet->display == "Tablet");

  CHECK(tables.routes.lookup(systems::kSnomed, "99999999") == nullptr);

  const CodeEntry* mg = tables.units.lookup(systems::kUcum, "mg");
  REQUIRE(mg != nullptr);
  CHECK(mg->display == "milligram");

  const CodeEntry* oral = tables.routes.lookup(systems::kSnomed, "26643006");
  REQUIRE(oral != nullptr);
  CHECK(oral->display == "Oral route");
}

TEST_CASE("resolve_text matches exact normalized synonyms only") {
  const auto& routes = testsupport::tables().routes;
  const std::vector<std::string> snomed_scope = {std::string(systems::kSnomed)};

  const CodeEntry* po = routes.resolve_text("PO", snomed_scope);
  REQUIRE(po != nullptr);
  CHECK(po->code == "26643006");

  const CodeEntry* mouth = routes.resolve_text("by mouth", snomed_scope);
  REQUIRE(mouth != nullptr);
  CHECK(mouth->code == "26643006");

  CHECK(routes.resolve_text("xyzzy") == nullptr);
  CHECK(routes.resolve_text("oralish") == nullptr);  // no fuzzy matching

  // punctuation-tolerant normalization
  const CodeEntry* dotted = routes.resolve_text("p.o.");
  REQUIRE(dotted != nullptr);
  CHECK(dotted->code == "26643006");
}

TEST_CASE("verify_display distinguishes ok, mismatch, and unknown codes") {
  const auto& routes = testsupport::tables().routes;
  Coding ok = testsupport::make_coding(std::string(systems::kSnomed),
                                       "26643006", "Oral route");
  CHECK(routes.verify_display(ok).status == CodeTable::DisplayStatus::ok);

  Coding case_variant = ok;
  case_variant.display = "ORAL ROUTE";
  CHECK(routes.verify_display(case_variant).status ==
        CodeTable::DisplayStatus::ok);

  Coding mismatch = ok;
  mismatch.display = "oral";
  auto check = routes.verify_display(mismatch);
  CHECK(check.status == CodeTable::DisplayStatus::mismatch);
  CHECK(check.expected == "Oral route");

  Coding unknown = testsupport::make_coding(std::string(systems::kSnomed),
                                            "1", "x");
  CHECK(routes.verify_display(unknown).status ==
        CodeTable::DisplayStatus::unknown_code);
}

TEST_CASE("loader rejects duplicates and bad rows with line numbers") {
  auto dup = write_temp("dup_table.csv",
                        "system,code,display,synonyms\n"
                        "SNOMED,26643006,Oral route,po\n"
                        "SNOMED,26643006,Oral route again,oral\n");
  CHECK_THROWS_AS(CodeTable::load(dup), DuplicateCode);

  auto bad = write_temp("bad_table.csv",
                        "system,code,display,synonyms\n"
                        "SNOMED,123,only three fields\n");
  try {
    CodeTable::load(bad);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.line == 2);
  }

  auto empty = write_temp("empty_table.csv", "");
  CodeTable table = CodeTable::load(empty);
  CHECK(table.size() == 0);
  CHECK(table.lookup(systems::kSnomed, "anything") == nullptr);
}

TEST_CASE("shorthand system names in table files normalize to URIs") {
  auto path = write_temp("shorthand_table.csv",
                         "system,code,display,synonyms\n"
                         "SNOMED,385055001,Tablet,tab\n");
  CodeTable table = CodeTable::load(path);
  CHECK(table.lookup(systems::kSnomed, "385055001") != nullptr);
  CHECK(table.covers_system(systems::kSnomed));
  CHECK(!table.covers_system("SNOMED"));  // only canonical URIs after load
}

TEST_CASE("every bundled display resolves back to its entry within scope") {
  const auto& set = testsupport::tables();
  const CodeTable* all[] = {&set.routes, &set.forms, &set.timing_codes,
                            &set.units, &*set.medications, &*set.reasons};
  for (const CodeTable* table : all) {
    for (const auto& entry : table->entries()) {
      std::vector<std::string> scope = {entry.system};
      const CodeEntry* hit = table->resolve_text(entry.display, scope);
      REQUIRE_MESSAGE(hit != nullptr, entry.display);
      CHECK(hit->system == entry.system);
      CHECK(hit->code == entry.code);
    }
  }
}

TEST_CASE("loading the same file twice gives identical query behavior") {
  auto dir = testsupport::data_dir() / "tables";
  CodeTable a = CodeTable::load(dir / "routes.csv");
  CodeTable b = CodeTable::load(dir / "routes.csv");
  REQUIRE(a.size() == b.size());
  for (const auto& entry : a.entries()) {
    const CodeEntry* ea = a.lookup(entry.system, entry.code);
    const CodeEntry* eb = b.lookup(entry.system, entry.code);
    REQUIRE(ea != nullptr);
    REQUIRE(eb != nullptr);
    CHECK(ea->display == eb->display);
    CHECK(ea->synonyms == eb->synonyms);
  }
  CHECK(a.resolve_text("by mouth")->code == b.resolve_text("by mouth")->code);
}

TEST_CASE("system registry resolves aliases case-insensitively") {
  const auto& registry = SystemRegistry::builtin();
  CHECK(registry.resolve("SNOMED") == std::string(systems::kSnomed));
  CHECK(registry.resolve("snomed") == std::string(systems::kSnomed));
  CHECK(registry.resolve("RxNORM") == std::string(systems::kRxNorm));
  CHECK(registry.resolve("UoM") == std::string(systems::kUcum));
  CHECK(registry.resolve("HL7") == std::string(systems::kGts));
  CHECK(registry.resolve(systems::kSnomed) == std::string(systems::kSnomed));
  CHECK(!registry.resolve("no-such-system").has_value());

  SystemRegistry custom;
  custom.register_system("http://example.org/a", {"ex"});
  CHECK_THROWS_AS(custom.register_system("http://example.org/b", {"EX"}),
                  RegistryError);
}

TEST_CASE("alias file loads on top of builtin registrations") {
  SystemRegistry loaded =
      SystemRegistry::load(testsupport::data_dir() / "tables" / "systems.csv");
  CHECK(loaded.resolve("GTS") == std::string(systems::kGts));
  CHECK(loaded.resolve("NDC") == std::string(systems::kNdc));
}

TEST_CASE("a systems.csv in the table directory extends table loading") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "tables_with_aliases";
  fs::create_directories(dir);
  fs::copy(testsupport::data_dir() / "tables", dir,
           fs::copy_options::overwrite_existing | fs::copy_options::recursive);
  {
    std::ofstream out(dir / "systems.csv", std::ios::app);
    out << "http://example.org/local-codes,LOCAL\n";
  }
  {
    std::ofstream out(dir / "reasons.csv");
    out << "system,code,display,synonyms\n";
    out << "LOCAL,R1,House remedy,remedy\n";
  }
  TableSet set = TableSet::load_dir(dir);
  REQUIRE(set.reasons.has_value());
  CHECK(set.reasons->lookup("http://example.org/local-codes", "R1") != nullptr);
  fs::remove_all(dir);
}

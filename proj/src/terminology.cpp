#include "fhirsculptor/terminology.hpp"

#include <algorithm>
#include <fstream>

namespace fhirsculptor {

namespace {

constexpr char kSep = '\x1f';

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    auto next = s.find(delim, pos);
    if (next == std::string::npos) next = s.size();
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

}  // namespace

CodeTable CodeTable::load(const std::filesystem::path& file,
                          const SystemRegistry& registry) {
  std::ifstream in(file);
  if (!in) throw TableError("cannot open table file: " + file.string());

  std::vector<CodeEntry> entries;
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line != "system,code,display,synonyms") {
        throw FormatError(line_no,
                          "expected header 'system,code,display,synonyms'");
      }
      continue;
    }
    auto fields = split(line, ',');
    if (fields.size() != 4) {
      throw FormatError(line_no, "expected 4 comma-separated fields, got " +
                                     std::to_string(fields.size()));
    }
    CodeEntry entry;
    auto system = registry.resolve(fields[0]);
    entry.system = system ? *system : fields[0];
    entry.code = fields[1];
    entry.display = fields[2];
    if (entry.code.empty()) throw FormatError(line_no, "empty code");
    if (entry.display.empty()) throw FormatError(line_no, "empty display");
    for (auto& synonym : split(fields[3], '|')) {
      if (!synonym.empty()) entry.synonyms.push_back(synonym);
    }
    entries.push_back(std::move(entry));
  }
  return from_entries(std::move(entries));
}

CodeTable CodeTable::from_entries(std::vector<CodeEntry> entries) {
  CodeTable table;
  table.entries_ = std::move(entries);
  for (size_t i = 0; i < table.entries_.size(); ++i) table.index_entry(i);
  return table;
}

void CodeTable::index_entry(size_t idx) {
  const CodeEntry& entry = entries_[idx];
  std::string key = entry.system + kSep + entry.code;
  auto [it, inserted] = by_system_code_.emplace(key, idx);
  if (!inserted) {
    throw DuplicateCode("duplicate (system, code): (" + entry.system + ", " +
                        entry.code + ")");
  }
  auto add_synonym = [&](std::string_view raw) {
    std::string norm = normalize_lookup_key(raw);
    if (norm.empty()) return;
    auto& bucket = by_synonym_[norm];
    if (std::find(bucket.begin(), bucket.end(), idx) == bucket.end()) {
      bucket.push_back(idx);
    }
  };
  add_synonym(entry.display);
  for (const auto& synonym : entry.synonyms) add_synonym(synonym);
  if (std::find(systems_.begin(), systems_.end(), entry.system) ==
      systems_.end()) {
    systems_.push_back(entry.system);
  }
}

const CodeEntry* CodeTable::lookup(std::string_view system,
                                   std::string_view code) const {
  std::string key = std::string(system) + kSep + std::string(code);
  auto it = by_system_code_.find(key);
  return it == by_system_code_.end() ? nullptr : &entries_[it->second];
}

const CodeEntry* CodeTable::resolve_text(
    std::string_view text, std::span<const std::string> system_scope) const {
  auto it = by_synonym_.find(normalize_lookup_key(text));
  if (it == by_synonym_.end()) return nullptr;
  for (size_t idx : it->second) {
    const CodeEntry& entry = entries_[idx];
    if (system_scope.empty() ||
        std::find(system_scope.begin(), system_scope.end(), entry.system) !=
            system_scope.end()) {
      return &entry;
    }
  }
  return nullptr;
}

bool CodeTable::covers_system(std::string_view system) const {
  return std::find(systems_.begin(), systems_.end(), system) != systems_.end();
}

CodeTable::DisplayCheck CodeTable::verify_display(const Coding& coding) const {
  const CodeEntry* entry = lookup(coding.system, coding.code);
  if (entry == nullptr) return {DisplayStatus::unknown_code, {}};
  if (text_equals(coding.display, entry->display)) {
    return {DisplayStatus::ok, {}};
  }
  return {DisplayStatus::mismatch, entry->display};
}

TableSet TableSet::load_dir(const std::filesystem::path& dir,
                            const SystemRegistry& registry) {
  // A systems.csv in the directory extends the shorthand alias map for
  // every table in the set.
  SystemRegistry extended;
  const SystemRegistry* effective = &registry;
  if (std::filesystem::exists(dir / "systems.csv")) {
    extended = SystemRegistry::load(dir / "systems.csv");
    effective = &extended;
  }
  TableSet set;
  set.routes = CodeTable::load(dir / "routes.csv", *effective);
  set.forms = CodeTable::load(dir / "forms.csv", *effective);
  set.timing_codes = CodeTable::load(dir / "timing_codes.csv", *effective);
  set.units = CodeTable::load(dir / "units.csv", *effective);
  if (std::filesystem::exists(dir / "medications.csv")) {
    set.medications = CodeTable::load(dir / "medications.csv", *effective);
  }
  if (std::filesystem::exists(dir / "reasons.csv")) {
    set.reasons = CodeTable::load(dir / "reasons.csv", *effective);
  }
  return set;
}

}  // namespace fhirsculptor

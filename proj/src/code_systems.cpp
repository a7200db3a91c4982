#include "fhirsculptor/code_systems.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace fhirsculptor {

std::string to_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out += c;
    }
  }
  return out;
}

std::string normalize_lookup_key(std::string_view s) {
  std::string mapped;
  mapped.reserve(s.size());
  for (char c : s) {
    unsigned char uc = static_cast<unsigned char>(c);
    if (c == '.' || c == '\'') continue;  // "p.o." -> "po"
    if (std::isalnum(uc) || c == '%' || c == '/') {
      mapped += static_cast<char>(std::tolower(uc));
    } else {
      mapped += ' ';
    }
  }
  return collapse_whitespace(mapped);
}

const SystemRegistry& SystemRegistry::builtin() {
  static const SystemRegistry reg = [] {
    SystemRegistry r;
    r.register_system(std::string(systems::kSnomed),
                      {"SNOMED", "SNOMED CT", "SNOMEDCT", "sct"});
    r.register_system(std::string(systems::kRxNorm), {"RxNorm"});
    r.register_system(std::string(systems::kNdc), {"NDC"});
    r.register_system(std::string(systems::kUcum),
                      {"UCUM", "UoM", "unitsofmeasure"});
    r.register_system(std::string(systems::kGts),
                      {"HL7", "GTS", "v3-GTSAbbreviation"});
    return r;
  }();
  return reg;
}

SystemRegistry SystemRegistry::load(const std::filesystem::path& file) {
  SystemRegistry reg = builtin();
  std::ifstream in(file);
  if (!in) {
    throw RegistryError("cannot open system alias file: " + file.string());
  }
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {  // header
      first = false;
      continue;
    }
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw RegistryError("bad alias row (expected uri,aliases): " + line);
    }
    std::string uri = line.substr(0, comma);
    std::vector<std::string> aliases;
    std::string rest = line.substr(comma + 1);
    size_t pos = 0;
    while (pos <= rest.size()) {
      auto bar = rest.find('|', pos);
      if (bar == std::string::npos) bar = rest.size();
      std::string alias = rest.substr(pos, bar - pos);
      if (!alias.empty()) aliases.push_back(alias);
      pos = bar + 1;
    }
    // Re-registering a builtin URI just adds aliases.
    reg.register_system(uri, aliases);
  }
  return reg;
}

void SystemRegistry::register_system(std::string canonical_uri,
                                     const std::vector<std::string>& aliases) {
  if (std::find(canonical_.begin(), canonical_.end(), canonical_uri) ==
      canonical_.end()) {
    canonical_.push_back(canonical_uri);
  }
  for (const auto& alias : aliases) {
    std::string key = to_lower(alias);
    auto it = alias_to_uri_.find(key);
    if (it != alias_to_uri_.end() && it->second != canonical_uri) {
      throw RegistryError("alias '" + alias + "' already registered for " +
                          it->second);
    }
    alias_to_uri_[key] = canonical_uri;
  }
}

std::optional<std::string> SystemRegistry::resolve(
    std::string_view name_or_uri) const {
  std::string name(name_or_uri);
  if (is_canonical(name)) return name;
  auto it = alias_to_uri_.find(to_lower(name));
  if (it != alias_to_uri_.end()) return it->second;
  return std::nullopt;
}

bool SystemRegistry::is_canonical(std::string_view uri) const {
  return std::find(canonical_.begin(), canonical_.end(), uri) !=
         canonical_.end();
}

std::string normalize_system(std::string_view name_or_uri) {
  if (auto resolved = SystemRegistry::builtin().resolve(name_or_uri)) {
    return *resolved;
  }
  return std::string(name_or_uri);
}

}  // namespace fhirsculptor

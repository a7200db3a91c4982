#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fhirsculptor {

/// Canonical code-system URIs used throughout the toolkit.
namespace systems {
inline constexpr std::string_view kSnomed = "http://snomed.info/sct";
inline constexpr std::string_view kRxNorm =
    "http://www.nlm.nih.gov/research/umls/rxnorm";
inline constexpr std::string_view kNdc = "http://hl7.org/fhir/sid/ndc";
inline constexpr std::string_view kUcum = "http://unitsofmeasure.org";
inline constexpr std::string_view kGts =
    "http://terminology.hl7.org/CodeSystem/v3-GTSAbbreviation";
}  // namespace systems

struct RegistryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Maps shorthand system names ("SNOMED", "NDC", "RxNORM", "HL7", "UCUM")
/// to canonical URIs. Aliases are matched case-insensitively and must be
/// unique across all registered systems.
class SystemRegistry {
 public:
  /// The registry pre-loaded with the standard systems and their common
  /// shorthands.
  static const SystemRegistry& builtin();

  /// Load an alias file (header `uri,aliases`, aliases `|`-separated) on
  /// top of the builtin registrations.
  static SystemRegistry load(const std::filesystem::path& file);

  SystemRegistry() = default;

  /// Throws RegistryError if an alias is already claimed by another system.
  void register_system(std::string canonical_uri,
                       const std::vector<std::string>& aliases);

  /// Resolves a shorthand alias or a known canonical URI to the canonical
  /// URI. Returns nullopt for names this registry has never seen.
  std::optional<std::string> resolve(std::string_view name_or_uri) const;

  bool is_canonical(std::string_view uri) const;

  const std::vector<std::string>& canonical_uris() const { return canonical_; }

 private:
  std::vector<std::string> canonical_;
  std::map<std::string, std::string> alias_to_uri_;  // lowercased alias
};

/// Resolve against the builtin registry; unknown names pass through
/// unchanged so foreign systems survive a round trip.
std::string normalize_system(std::string_view name_or_uri);

/// Lowercase ASCII copy.
std::string to_lower(std::string_view s);

/// Lowercase, drop '.' and apostrophes, turn remaining punctuation into
/// spaces (keeping '%' and '/'), collapse whitespace, trim. The shared
/// normalization for synonym keys and free-text lookup.
std::string normalize_lookup_key(std::string_view s);

/// Collapse whitespace runs to single spaces and trim; case preserved.
std::string collapse_whitespace(std::string_view s);

}  // namespace fhirsculptor

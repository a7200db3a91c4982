#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fhirsculptor/terminology.hpp"

namespace fhirsculptor {

/// The five element conversions; each maps to one prompt template and one
/// fragment slot.
enum class ElementKind : int {
  medication = 0,
  route = 1,
  schedule = 2,
  dosage = 3,
  reason = 4,
};

inline constexpr std::array<ElementKind, 5> kAllElementKinds = {
    ElementKind::medication, ElementKind::route, ElementKind::schedule,
    ElementKind::dosage, ElementKind::reason};

inline constexpr size_t kElementKindCount = 5;

std::string_view to_string(ElementKind kind);
std::optional<ElementKind> element_kind_from_string(std::string_view name);

struct PromptError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PromptExample {
  std::string input;
  std::string output_json;
};

struct PromptSpec {
  ElementKind kind;
  std::string instructions;       // must carry the MUST directives
  std::string output_template;    // JSON text of the expected fragment shape
  std::vector<PromptExample> examples;  // 4-5 entries
  std::vector<std::string> code_list_rows;  // empty only for reason
};

/// Section headers stamped into every rendered prompt, in order.
namespace prompt_sections {
inline constexpr std::string_view kInstructions = "## Task instructions";
inline constexpr std::string_view kTemplate = "## Output template";
inline constexpr std::string_view kExamples = "## Examples";
inline constexpr std::string_view kCodeList = "## Allowed codes";
inline constexpr std::string_view kInput = "## Input";
}  // namespace prompt_sections

/// Loads the editable per-kind template files plus the shared layout and
/// renders prompts: instructions, output template, examples, code list
/// (for the kinds that code directly), then the input text verbatim.
class PromptLibrary {
 public:
  /// Expects <dir>/prompt_layout.txt with {{INSTRUCTIONS}} {{TEMPLATE}}
  /// {{EXAMPLES}} {{CODELIST}} {{INPUT}} markers in that order, and
  /// <dir>/{medication,route,schedule,dosage,reason}.json content files.
  /// Code lists are drawn from the bound tables. Throws PromptError on
  /// malformed templates.
  static PromptLibrary load(const std::filesystem::path& dir,
                            const TableSet& tables);

  const PromptSpec& spec(ElementKind kind) const;

  /// Deterministic rendering; the input lands verbatim in the final section.
  std::string build_prompt(ElementKind kind, std::string_view input) const;

  /// The instructions block alone; sent as the system message by remote
  /// backends.
  const std::string& instructions(ElementKind kind) const;

 private:
  std::string layout_;
  std::array<PromptSpec, kElementKindCount> specs_;
};

}  // namespace fhirsculptor

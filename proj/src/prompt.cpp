#include "fhirsculptor/prompt.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fhirsculptor {

using nlohmann::ordered_json;

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::medication: return "medication";
    case ElementKind::route: return "route";
    case ElementKind::schedule: return "schedule";
    case ElementKind::dosage: return "dosage";
    case ElementKind::reason: return "reason";
  }
  return "unknown";
}

std::optional<ElementKind> element_kind_from_string(std::string_view name) {
  for (ElementKind kind : kAllElementKinds) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PromptError("cannot open template file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

const CodeTable* code_list_table(ElementKind kind, const TableSet& tables) {
  switch (kind) {
    case ElementKind::medication: return &tables.forms;  // forms are bounded
    case ElementKind::route: return &tables.routes;
    case ElementKind::schedule: return &tables.timing_codes;
    case ElementKind::dosage: return &tables.units;
    case ElementKind::reason: return nullptr;
  }
  return nullptr;
}

std::vector<std::string> render_code_rows(const CodeTable& table) {
  std::vector<std::string> rows;
  rows.reserve(table.size());
  for (const auto& entry : table.entries()) {
    std::string row = "- " + entry.code + " | " + entry.display;
    if (!entry.synonyms.empty()) {
      row += " | also written as: ";
      for (size_t i = 0; i < entry.synonyms.size(); ++i) {
        if (i > 0) row += ", ";
        row += entry.synonyms[i];
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

PromptSpec load_spec(ElementKind kind, const std::filesystem::path& dir,
                     const TableSet& tables) {
  const std::filesystem::path file =
      dir / (std::string(to_string(kind)) + ".json");
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(file));
  } catch (const ordered_json::parse_error& e) {
    throw PromptError(file.string() + ": " + e.what());
  }
  PromptSpec spec;
  spec.kind = kind;
  if (!doc.contains("instructions") || !doc["instructions"].is_string()) {
    throw PromptError(file.string() + ": missing 'instructions' string");
  }
  spec.instructions = doc["instructions"].get<std::string>();
  if (spec.instructions.find("MUST") == std::string::npos) {
    throw PromptError(file.string() +
                      ": instructions need the MUST directive");
  }
  if (!doc.contains("output_template")) {
    throw PromptError(file.string() + ": missing 'output_template'");
  }
  spec.output_template = doc["output_template"].dump(2);
  if (!doc.contains("examples") || !doc["examples"].is_array()) {
    throw PromptError(file.string() + ": missing 'examples' array");
  }
  for (const auto& example : doc["examples"]) {
    if (!example.contains("input") || !example.contains("output")) {
      throw PromptError(file.string() + ": example needs 'input' and 'output'");
    }
    spec.examples.push_back({example["input"].get<std::string>(),
                             example["output"].dump()});
  }
  if (spec.examples.size() < 4 || spec.examples.size() > 5) {
    throw PromptError(file.string() + ": expected 4-5 examples, got " +
                      std::to_string(spec.examples.size()));
  }
  if (const CodeTable* table = code_list_table(kind, tables)) {
    spec.code_list_rows = render_code_rows(*table);
    if (spec.code_list_rows.empty()) {
      throw PromptError(file.string() + ": bound code table is empty");
    }
  }
  return spec;
}

void replace_marker(std::string& text, std::string_view marker,
                    const std::string& replacement) {
  auto pos = text.find(marker);
  if (pos == std::string::npos) {
    throw PromptError("layout is missing marker " + std::string(marker));
  }
  text.replace(pos, marker.size(), replacement);
}

}  // namespace

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir,
                                  const TableSet& tables) {
  PromptLibrary library;
  library.layout_ = read_file(dir / "prompt_layout.txt");
  static constexpr std::array<std::string_view, 5> kMarkers = {
      "{{INSTRUCTIONS}}", "{{TEMPLATE}}", "{{EXAMPLES}}", "{{CODELIST}}",
      "{{INPUT}}"};
  size_t previous = 0;
  for (std::string_view marker : kMarkers) {
    auto pos = library.layout_.find(marker);
    if (pos == std::string::npos) {
      throw PromptError("prompt_layout.txt is missing " + std::string(marker));
    }
    if (pos < previous) {
      throw PromptError("prompt_layout.txt markers out of order at " +
                        std::string(marker));
    }
    previous = pos;
  }
  for (ElementKind kind : kAllElementKinds) {
    library.specs_[static_cast<size_t>(kind)] = load_spec(kind, dir, tables);
  }
  return library;
}

const PromptSpec& PromptLibrary::spec(ElementKind kind) const {
  return specs_[static_cast<size_t>(kind)];
}

const std::string& PromptLibrary::instructions(ElementKind kind) const {
  return spec(kind).instructions;
}

std::string PromptLibrary::build_prompt(ElementKind kind,
                                        std::string_view input) const {
  const PromptSpec& s = spec(kind);
  std::string text = layout_;

  replace_marker(text, "{{INSTRUCTIONS}}",
                 std::string(prompt_sections::kInstructions) + "\n\n" +
                     s.instructions);

  replace_marker(text, "{{TEMPLATE}}",
                 std::string(prompt_sections::kTemplate) + "\n\n```json\n" +
                     s.output_template + "\n```");

  std::string examples = std::string(prompt_sections::kExamples) + "\n";
  for (const auto& example : s.examples) {
    examples += "\nInput: " + example.input + "\nOutput: " +
                example.output_json + "\n";
  }
  replace_marker(text, "{{EXAMPLES}}", examples);

  if (s.code_list_rows.empty()) {
    replace_marker(text, "{{CODELIST}}", "");
  } else {
    std::string rows = std::string(prompt_sections::kCodeList) + "\n\n";
    for (const auto& row : s.code_list_rows) rows += row + "\n";
    replace_marker(text, "{{CODELIST}}", rows);
  }

  replace_marker(text, "{{INPUT}}", std::string(prompt_sections::kInput) +
                                        "\n\n" + std::string(input));
  return text;
}

}  // namespace fhirsculptor

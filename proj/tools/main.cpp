// Command-line front end: convert free-text sigs through a backend,
// validate resource files, score results against gold, and inspect the
// rendered prompts.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fhirsculptor/backend.hpp"
#include "fhirsculptor/conversion.hpp"
#include "fhirsculptor/corpus_io.hpp"
#include "fhirsculptor/eval.hpp"
#include "fhirsculptor/prompt.hpp"
#include "fhirsculptor/sig_parser.hpp"
#include "fhirsculptor/terminology.hpp"
#include "fhirsculptor/validator.hpp"

namespace fs = std::filesystem;
using namespace fhirsculptor;

namespace {

struct GlobalOptions {
  std::string tables_dir = "data/tables";
  std::string templates_dir = "data/templates";
};

struct LoadedTables {
  TableSet tables;
  FrequencyRuleTable frequency_rules;
};

LoadedTables load_tables(const GlobalOptions& options) {
  fs::path dir(options.tables_dir);
  LoadedTables loaded;
  loaded.tables = TableSet::load_dir(dir);
  loaded.frequency_rules = FrequencyRuleTable::load(dir / "frequency_rules.csv");
  return loaded;
}

int run_convert(const GlobalOptions& options, const std::string& backend_name,
                const std::string& in_path, const std::string& out_path,
                const BackendConfig& config) {
  auto corpus_records = read_corpus(in_path);
  std::vector<CorpusInput> corpus;
  corpus.reserve(corpus_records.size());
  for (const auto& record : corpus_records) {
    corpus.push_back({record.id, record.text});
  }

  LoadedTables loaded = load_tables(options);
  PromptLibrary prompts =
      PromptLibrary::load(options.templates_dir, loaded.tables);
  SigParser sig_parser(loaded.tables, loaded.frequency_rules);

  std::unique_ptr<Backend> backend;
  if (backend_name == "rules") {
    backend = std::make_unique<RuleBackend>(sig_parser);
  } else if (backend_name == "remote") {
    backend = std::make_unique<RemoteBackend>(config);
  } else {
    throw ConfigError("unknown backend '" + backend_name +
                      "' (expected rules or remote)");
  }

  Converter converter(*backend, loaded.tables, prompts, config);
  auto results = converter.run_batch(
      corpus, [](size_t done, size_t total, const std::string& id) {
        std::cerr << "converted " << done << "/" << total << " (" << id << ")\n";
      });

  write_results(out_path, results);

  size_t with_resource = 0;
  for (const auto& result : results) {
    if (result.has_resource()) ++with_resource;
  }
  std::cerr << with_resource << "/" << results.size()
            << " inputs produced a resource -> " << out_path << "\n";
  return with_resource == results.size() ? 0 : 2;
}

int run_validate(const GlobalOptions& options, const std::string& in_path) {
  LoadedTables loaded = load_tables(options);

  std::ifstream in(in_path);
  if (!in) throw IoError("cannot open input file: " + in_path);

  size_t documents = 0;
  size_t invalid = 0;
  size_t skipped = 0;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (collapse_whitespace(line).empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError(in_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    // Accept bare resources, corpus records (gold), and result lines.
    std::string label = "line " + std::to_string(line_no);
    const nlohmann::json* resource = &doc;
    if (doc.contains("id") && doc["id"].is_string()) {
      label = doc["id"].get<std::string>();
    }
    if (doc.contains("gold")) {
      resource = &doc["gold"];
    } else if (doc.contains("resource")) {
      resource = &doc["resource"];
    }
    if (resource->is_null()) {
      std::cout << label << ": no resource to validate (skipped)\n";
      ++skipped;
      continue;
    }
    ++documents;
    try {
      auto parsed = parse_statement(resource->dump());
      ValidationReport report = validate(parsed.value, loaded.tables);
      if (!report.valid) ++invalid;
      if (report.issues.empty()) {
        std::cout << label << ": valid\n";
      } else {
        std::cout << label << (report.valid ? ": valid with warnings\n"
                                            : ": invalid\n");
        for (const auto& issue : report.issues) {
          std::cout << "  " << to_string(issue.severity) << " ["
                    << to_string(issue.kind) << "] " << issue.path << ": "
                    << issue.message << "\n";
        }
      }
      for (const auto& key : parsed.unknown_keys) {
        std::cout << "  note: unknown key retained: " << key << "\n";
      }
    } catch (const ModelError& e) {
      ++invalid;
      std::cout << label << ": invalid\n  error [structure] " << e.what()
                << "\n";
    }
  }
  std::cout << documents << " document(s) checked, " << invalid
            << " invalid";
  if (skipped > 0) std::cout << ", " << skipped << " without a resource";
  std::cout << "\n";
  return invalid == 0 ? 0 : 1;
}

int run_evaluate(const std::string& results_path, const std::string& gold_path,
                 const std::string& format, const std::string& out_path) {
  auto results = read_results(results_path);
  auto gold = read_corpus(gold_path);
  auto pairs = join_results(results, gold);
  EvalReport report = compute_metrics(pairs);

  ReportFormat render_format = ReportFormat::table_text;
  if (format == "json") render_format = ReportFormat::json_doc;
  if (format == "csv") render_format = ReportFormat::csv;
  std::string rendered = render_report(report, render_format);

  if (out_path.empty()) {
    std::cout << rendered;
  } else {
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot write report file: " + out_path);
    out << rendered;
  }
  return 0;
}

int run_prompt(const GlobalOptions& options, const std::string& kind_name,
               const std::string& text) {
  auto kind = element_kind_from_string(kind_name);
  if (!kind.has_value()) {
    throw ConfigError(
        "unknown element kind '" + kind_name +
        "'; expected one of: medication, route, schedule, dosage, reason");
  }
  LoadedTables loaded = load_tables(options);
  PromptLibrary prompts =
      PromptLibrary::load(options.templates_dir, loaded.tables);
  std::cout << prompts.build_prompt(*kind, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free-text medication sigs to MedicationStatement resources"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI/TOML file");

  GlobalOptions global;
  app.add_option("--tables", global.tables_dir, "Terminology table directory")
      ->envname("FHIR_SCULPTOR_TABLES")
      ->capture_default_str();
  app.add_option("--templates", global.templates_dir,
                 "Prompt template directory")
      ->envname("FHIR_SCULPTOR_TEMPLATES")
      ->capture_default_str();

  // convert
  auto* convert = app.add_subcommand(
      "convert", "Convert a corpus of free-text sigs to resources");
  std::string backend_name = "rules";
  std::string in_path;
  std::string out_path = "results.jsonl";
  BackendConfig backend_config;
  convert->add_option("--backend", backend_name, "rules | remote")
      ->check(CLI::IsMember({"rules", "remote"}))
      ->capture_default_str();
  convert->add_option("--in", in_path, "Input corpus (JSON lines)")
      ->required();
  convert->add_option("--out", out_path, "Results file (JSON lines)")
      ->capture_default_str();
  convert->add_option("--endpoint", backend_config.endpoint,
                      "Chat-completion endpoint URL (remote backend)")
      ->envname("FHIR_SCULPTOR_ENDPOINT");
  convert->add_option("--model", backend_config.model,
                      "Model identifier (remote backend)")
      ->envname("FHIR_SCULPTOR_MODEL");
  convert->add_option("--credentials-env", backend_config.credentials_env,
                      "Environment variable holding the API key")
      ->capture_default_str();
  convert->add_option("--max-inflight", backend_config.max_in_flight,
                      "Concurrent request cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  convert->add_option("--retries", backend_config.max_retries,
                      "Retry attempts for transient failures")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  convert->add_option("--timeout", backend_config.timeout_seconds,
                      "Request timeout in seconds")
      ->capture_default_str();
  convert->add_option("--temperature", backend_config.temperature,
                      "Sampling temperature")
      ->capture_default_str();

  // validate
  auto* validate_cmd = app.add_subcommand(
      "validate", "Validate resources, gold records, or results files");
  std::string validate_in;
  validate_cmd->add_option("--in", validate_in, "Input file (JSON lines)")
      ->required();

  // evaluate
  auto* evaluate = app.add_subcommand(
      "evaluate", "Score a results file against a gold corpus");
  std::string results_path;
  std::string gold_path;
  std::string report_format = "table";
  std::string report_out;
  evaluate->add_option("--results", results_path, "Results file from convert")
      ->required();
  evaluate->add_option("--gold", gold_path, "Gold corpus (JSON lines)")
      ->required();
  evaluate->add_option("--format", report_format, "table | json | csv")
      ->check(CLI::IsMember({"table", "json", "csv"}))
      ->capture_default_str();
  evaluate->add_option("--out", report_out, "Write the report here instead of stdout");

  // prompt
  auto* prompt_cmd = app.add_subcommand(
      "prompt", "Print the exact prompt a conversion would send");
  std::string prompt_kind;
  std::string prompt_text;
  prompt_cmd->add_option("--kind", prompt_kind,
                         "medication | route | schedule | dosage | reason")
      ->required();
  prompt_cmd->add_option("--text", prompt_text, "Input text for the prompt");

  CLI11_PARSE(app, argc, argv);

  try {
    if (convert->parsed()) {
      return run_convert(global, backend_name, in_path, out_path,
                         backend_config);
    }
    if (validate_cmd->parsed()) {
      return run_validate(global, validate_in);
    }
    if (evaluate->parsed()) {
      return run_evaluate(results_path, gold_path, report_format, report_out);
    }
    if (prompt_cmd->parsed()) {
      return run_prompt(global, prompt_kind, prompt_text);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const JoinError& e) {
    std::cerr << "join error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// Maintenance utility: re-derive the gold column of a corpus file by
// running the rule backend over its texts. Used to refresh
// data/corpus/synthetic_sigs.jsonl after table or parser-rule edits.

#include <iostream>
#include <string>

#include "fhirsculptor/backend.hpp"
#include "fhirsculptor/conversion.hpp"
#include "fhirsculptor/corpus_io.hpp"
#include "fhirsculptor/prompt.hpp"

using namespace fhirsculptor;

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: " << argv[0] << " <tables-dir> <in.jsonl> <out.jsonl>\n";
    return 2;
  }
  try {
    TableSet tables = TableSet::load_dir(argv[1]);
    FrequencyRuleTable rules = FrequencyRuleTable::load(
        std::filesystem::path(argv[1]) / "frequency_rules.csv");
    SigParser parser(tables, rules);

    auto records = read_corpus(argv[2]);
    size_t failures = 0;
    for (auto& record : records) {
      ParsedSig sig = parser.parse_sig(record.text);
      MedicationStatement resource =
          merge_fragments(parser.to_fragments(sig), record.text);
      ValidationReport report = validate(resource, tables);
      if (!report.valid) {
        ++failures;
        std::cerr << record.id << ": gold does not validate\n"
                  << report.to_text();
      }
      record.gold = to_json(resource);
    }
    write_corpus(argv[3], records);
    std::cerr << "wrote " << records.size() << " records to " << argv[3]
              << "\n";
    return failures == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

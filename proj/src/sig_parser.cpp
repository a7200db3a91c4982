#include "fhirsculptor/sig_parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace fhirsculptor {

// ---------------------------------------------------------------------------
// Rational decimal parsing
// ---------------------------------------------------------------------------

Rational Rational::from_decimal(std::string_view text) {
  if (text.empty()) throw std::invalid_argument("empty decimal");
  bool negative = false;
  size_t pos = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    pos = 1;
  }
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool after_point = false;
  bool any_digit = false;
  for (; pos < text.size(); ++pos) {
    char c = text[pos];
    if (c == '.') {
      if (after_point) throw std::invalid_argument("bad decimal: two points");
      after_point = true;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw std::invalid_argument("bad decimal: " + std::string(text));
    }
    any_digit = true;
    num = num * 10 + (c - '0');
    if (after_point) den *= 10;
    if (den > 1000000000000LL || num > 4000000000000000000LL) {
      throw std::invalid_argument("decimal out of range: " + std::string(text));
    }
  }
  if (!any_digit) throw std::invalid_argument("bad decimal: " + std::string(text));
  return Rational(negative ? -num : num, den);
}

namespace {

Rational rational_from_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return Rational::from_decimal(buf);
}

}  // namespace

// ---------------------------------------------------------------------------
// Frequency rules
// ---------------------------------------------------------------------------

Rational daily_event_rate(std::int64_t frequency, const Rational& period,
                          std::string_view period_unit) {
  if (frequency <= 0) throw DomainError("frequency must be positive");
  if (!period.is_positive()) throw DomainError("period must be positive");
  Rational days_per_unit;
  if (period_unit == "s") days_per_unit = Rational(1, 86400);
  else if (period_unit == "min") days_per_unit = Rational(1, 1440);
  else if (period_unit == "h") days_per_unit = Rational(1, 24);
  else if (period_unit == "d") days_per_unit = Rational(1, 1);
  else if (period_unit == "wk") days_per_unit = Rational(7, 1);
  else if (period_unit == "mo") days_per_unit = Rational(30, 1);
  else if (period_unit == "a") days_per_unit = Rational(365, 1);
  else throw DomainError("unknown period unit: " + std::string(period_unit));
  return Rational::from_int(frequency) / (period * days_per_unit);
}

Rational infer_duration(const FrequencyRule& rule,
                        const Rational& dispense_quantity,
                        const Rational& units_per_administration) {
  if (!rule.has_rate()) {
    throw DomainError("rule '" + rule.token + "' has no event rate");
  }
  if (!dispense_quantity.is_positive()) {
    throw DomainError("dispense quantity must be positive");
  }
  if (!units_per_administration.is_positive()) {
    throw DomainError("units per administration must be positive");
  }
  return dispense_quantity / (*rule.daily_events * units_per_administration);
}

namespace {

std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= line.size()) {
    auto next = line.find(delim, pos);
    if (next == std::string::npos) next = line.size();
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

}  // namespace

FrequencyRuleTable FrequencyRuleTable::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw TableError("cannot open rule file: " + file.string());
  std::vector<FrequencyRule> rules;
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (line != "token,frequency,period,periodUnit,dailyEvents") {
        throw FormatError(
            line_no, "expected header 'token,frequency,period,periodUnit,dailyEvents'");
      }
      continue;
    }
    auto fields = split_fields(line, ',');
    if (fields.size() != 5) {
      throw FormatError(line_no, "expected 5 fields, got " +
                                     std::to_string(fields.size()));
    }
    FrequencyRule rule;
    rule.token = fields[0];
    if (rule.token.empty()) throw FormatError(line_no, "empty token");
    const bool has_rate_fields = !fields[1].empty() || !fields[2].empty() ||
                                 !fields[3].empty() || !fields[4].empty();
    if (has_rate_fields) {
      try {
        Rational period = Rational::from_decimal(fields[2]);
        rule.frequency = std::stoll(fields[1]);
        rule.period = period.to_double();
        rule.period_unit = fields[3];
        rule.daily_events =
            daily_event_rate(*rule.frequency, period, fields[3]);
        // dailyEvents column is documentation; it must agree with the rate
        // derived from the other columns.
        double documented = std::stod(fields[4]);
        if (documented != rule.daily_events->to_double()) {
          throw FormatError(line_no,
                            "dailyEvents column disagrees with derived rate");
        }
      } catch (const FormatError&) {
        throw;
      } catch (const std::exception& e) {
        throw FormatError(line_no, e.what());
      }
    }
    rules.push_back(std::move(rule));
  }
  return from_rules(std::move(rules));
}

FrequencyRuleTable FrequencyRuleTable::from_rules(
    std::vector<FrequencyRule> rules) {
  std::set<std::string> seen;
  for (const auto& rule : rules) {
    if (!seen.insert(rule.token).second) {
      throw DuplicateCode("duplicate frequency token: " + rule.token);
    }
  }
  FrequencyRuleTable table;
  table.rules_ = std::move(rules);
  return table;
}

const FrequencyRule* FrequencyRuleTable::find(std::string_view token) const {
  for (const auto& rule : rules_) {
    if (rule.token == token) return &rule;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

namespace {

struct Token {
  std::string raw;   // punctuation-trimmed slice, original casing
  std::string norm;  // normalize_lookup_key(raw)
  size_t begin = 0;  // offsets of the trimmed slice in the input
  size_t end = 0;
};

bool is_trim_char(char c) {
  return c == ',' || c == ';' || c == ':' || c == '(' || c == ')' ||
         c == '"' || c == '\'';
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    if (i >= text.size()) break;
    size_t j = i;
    while (j < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    size_t b = i;
    size_t e = j;
    while (b < e && is_trim_char(text[b])) ++b;
    while (e > b && (is_trim_char(text[e - 1]) || text[e - 1] == '.')) --e;
    if (e > b) {
      Token token;
      token.raw = std::string(text.substr(b, e - b));
      token.norm = normalize_lookup_key(token.raw);
      token.begin = b;
      token.end = e;
      tokens.push_back(std::move(token));
    }
    i = j;
  }
  return tokens;
}

std::optional<double> parse_number_word(const std::string& norm) {
  static const std::map<std::string, double> kWords = {
      {"one", 1},  {"two", 2},  {"three", 3}, {"four", 4},   {"five", 5},
      {"six", 6},  {"seven", 7}, {"eight", 8}, {"nine", 9},  {"ten", 10},
      {"eleven", 11}, {"twelve", 12}, {"half", 0.5}};
  auto it = kWords.find(norm);
  if (it == kWords.end()) return std::nullopt;
  return it->second;
}

bool is_plain_number(const std::string& s) {
  if (s.size() > 12) return false;  // keeps std::stod in range
  bool digit = false;
  bool point = false;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digit = true;
    } else if (c == '.' && !point) {
      point = true;
    } else {
      return false;
    }
  }
  return digit;
}

std::optional<double> token_number(const Token& token) {
  if (is_plain_number(token.raw)) return std::stod(token.raw);
  return parse_number_word(token.norm);
}

/// "1-2" / "0.5-1" style range inside one token.
std::optional<std::pair<double, double>> token_range(const Token& token) {
  auto dash = token.raw.find('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 >= token.raw.size()) {
    return std::nullopt;
  }
  std::string lo = token.raw.substr(0, dash);
  std::string hi = token.raw.substr(dash + 1);
  if (!is_plain_number(lo) || !is_plain_number(hi)) return std::nullopt;
  return std::make_pair(std::stod(lo), std::stod(hi));
}

/// "500mg" / "1%" style combined number + unit.
std::optional<std::pair<double, std::string>> token_number_with_suffix(
    const Token& token) {
  size_t i = 0;
  while (i < token.raw.size() &&
         (std::isdigit(static_cast<unsigned char>(token.raw[i])) ||
          token.raw[i] == '.')) {
    ++i;
  }
  if (i == 0 || i >= token.raw.size()) return std::nullopt;
  std::string number = token.raw.substr(0, i);
  std::string suffix = token.raw.substr(i);
  if (!is_plain_number(number)) return std::nullopt;
  return std::make_pair(std::stod(number), normalize_lookup_key(suffix));
}

const std::set<std::string>& mass_unit_words() {
  static const std::set<std::string> kWords = {
      "mg", "milligram", "milligrams", "mcg", "ug", "microgram", "micrograms",
      "g", "gram", "grams", "kg", "kilogram", "kilograms", "meq",
      "milliequivalent", "milliequivalents", "mmol", "millimole", "millimoles",
      "unit", "units", "iu", "%"};
  return kWords;
}

const std::set<std::string>& volume_unit_words() {
  static const std::set<std::string> kWords = {
      "ml", "milliliter", "milliliters", "l", "liter", "liters", "cc"};
  return kWords;
}

const std::map<std::string, std::string>& countable_words() {
  static const std::map<std::string, std::string> kWords = {
      {"tablet", "tablet"},       {"tablets", "tablet"},
      {"tab", "tablet"},          {"tabs", "tablet"},
      {"capsule", "capsule"},     {"capsules", "capsule"},
      {"cap", "capsule"},         {"caps", "capsule"},
      {"puff", "puff"},           {"puffs", "puff"},
      {"drop", "drop"},           {"drops", "drop"},
      {"spray", "spray"},         {"sprays", "spray"},
      {"patch", "patch"},         {"patches", "patch"},
      {"lozenge", "lozenge"},     {"lozenges", "lozenge"},
      {"suppository", "suppository"}, {"suppositories", "suppository"}};
  return kWords;
}

bool is_dose_unit_word(const std::string& norm) {
  return countable_words().count(norm) > 0 ||
         volume_unit_words().count(norm) > 0 || mass_unit_words().count(norm) > 0;
}

const std::set<std::string>& dose_verbs() {
  static const std::set<std::string> kVerbs = {
      "take",   "give",  "use",   "apply",      "instill", "inhale",
      "insert", "place", "chew",  "administer", "inject",  "dissolve"};
  return kVerbs;
}

std::optional<std::string> time_unit_word(const std::string& norm) {
  if (norm == "day" || norm == "days") return "d";
  if (norm == "week" || norm == "weeks") return "wk";
  if (norm == "month" || norm == "months") return "mo";
  if (norm == "hour" || norm == "hours") return "h";
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// SigParser
// ---------------------------------------------------------------------------

SigParser::SigParser(const TableSet& tables,
                     const FrequencyRuleTable& frequency_rules)
    : tables_(tables), frequency_rules_(frequency_rules) {}

namespace {

class Extraction {
 public:
  Extraction(std::string_view text, const TableSet& tables)
      : text_(text), tables_(tables), tokens_(tokenize(text)),
        consumed_(tokens_.size(), false) {}

  ParsedSig run() {
    extract_dispense();
    extract_explicit_duration();
    extract_frequency();
    extract_strength();
    extract_dose_range();
    extract_verb_dose();
    extract_bare_dose();
    extract_form();
    extract_route();
    extract_reason();
    extract_drug();
    return std::move(sig_);
  }

 private:
  bool free_at(size_t i) const { return i < tokens_.size() && !consumed_[i]; }

  void consume(size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) consumed_[i] = true;
  }

  std::string slice(size_t first_token, size_t last_token) const {
    return std::string(text_.substr(tokens_[first_token].begin,
                                    tokens_[last_token].end -
                                        tokens_[first_token].begin));
  }

  void extract_dispense() {
    for (size_t i = 0; i < tokens_.size(); ++i) {
      if (!free_at(i)) continue;
      const std::string& norm = tokens_[i].norm;
      if (norm == "dispense" || norm == "disp" || norm == "qty") {
        if (free_at(i + 1)) {
          if (auto n = token_number(tokens_[i + 1])) {
            sig_.dispense_quantity = *n;
            size_t end = i + 2;
            if (free_at(end) && is_dose_unit_word(tokens_[end].norm)) ++end;
            consume(i, end);
            return;
          }
        }
      }
      if (tokens_[i].raw.size() > 1 && tokens_[i].raw[0] == '#' &&
          is_plain_number(tokens_[i].raw.substr(1))) {
        sig_.dispense_quantity = std::stod(tokens_[i].raw.substr(1));
        size_t end = i + 1;
        if (free_at(end) && is_dose_unit_word(tokens_[end].norm)) ++end;
        consume(i, end);
        return;
      }
    }
  }

  void extract_explicit_duration() {
    for (size_t i = 0; i + 2 < tokens_.size(); ++i) {
      if (!free_at(i) || !free_at(i + 1) || !free_at(i + 2)) continue;
      if (tokens_[i].norm != "for" && tokens_[i].norm != "x") continue;
      auto n = token_number(tokens_[i + 1]);
      if (!n) continue;
      auto unit = time_unit_word(tokens_[i + 2].norm);
      if (!unit) continue;
      sig_.explicit_duration = std::make_pair(*n, *unit);
      consume(i, i + 3);
      return;
    }
    // "x7 days" with the count glued to the marker
    for (size_t i = 0; i + 1 < tokens_.size(); ++i) {
      if (!free_at(i) || !free_at(i + 1)) continue;
      const std::string& raw = tokens_[i].raw;
      if (raw.size() < 2 || (raw[0] != 'x' && raw[0] != 'X')) continue;
      if (!is_plain_number(raw.substr(1))) continue;
      auto unit = time_unit_word(tokens_[i + 1].norm);
      if (!unit) continue;
      sig_.explicit_duration = std::make_pair(std::stod(raw.substr(1)), *unit);
      consume(i, i + 2);
      return;
    }
  }

  /// Longest n-gram over a table's synonyms; returns the entry and marks
  /// the window consumed.
  const CodeEntry* match_table(const CodeTable& table, size_t max_len,
                               size_t* match_begin = nullptr,
                               size_t* match_end = nullptr) {
    for (size_t len = max_len; len >= 1; --len) {
      for (size_t start = 0; start + len <= tokens_.size(); ++start) {
        bool free = true;
        for (size_t k = start; k < start + len; ++k) {
          if (!free_at(k)) {
            free = false;
            break;
          }
        }
        if (!free) continue;
        std::string joined;
        for (size_t k = start; k < start + len; ++k) {
          if (!joined.empty()) joined += ' ';
          joined += tokens_[k].norm;
        }
        const CodeEntry* entry = table.resolve_text(joined);
        if (entry != nullptr) {
          if (match_begin) *match_begin = start;
          if (match_end) *match_end = start + len;
          consume(start, start + len);
          return entry;
        }
      }
    }
    return nullptr;
  }

  void extract_frequency() {
    const CodeEntry* entry = match_table(tables_.timing_codes, 5);
    if (entry != nullptr) sig_.frequency_token = entry->code;
  }

  void extract_strength() {
    for (size_t i = 0; i < tokens_.size(); ++i) {
      if (!free_at(i)) continue;
      if (auto combined = token_number_with_suffix(tokens_[i])) {
        if (mass_unit_words().count(combined->second) > 0) {
          set_strength(combined->first, combined->second);
          consume(i, i + 1);
          return;
        }
      }
      auto n = token_number(tokens_[i]);
      if (!n || !free_at(i + 1)) continue;
      if (mass_unit_words().count(tokens_[i + 1].norm) > 0) {
        set_strength(*n, tokens_[i + 1].raw);
        consume(i, i + 2);
        return;
      }
    }
  }

  void set_strength(double value, const std::string& unit_word) {
    Quantity q;
    q.value = value;
    q.unit = unit_word;
    sig_.strength = std::move(q);
  }

  void extract_dose_range() {
    for (size_t i = 0; i < tokens_.size(); ++i) {
      if (!free_at(i)) continue;
      auto range = token_range(tokens_[i]);
      if (!range || !free_at(i + 1)) continue;
      if (!is_dose_unit_word(tokens_[i + 1].norm)) continue;
      DoseRange r;
      r.low.value = range->first;
      r.low.unit = tokens_[i + 1].raw;
      r.high.value = range->second;
      r.high.unit = tokens_[i + 1].raw;
      sig_.dose_range = std::move(r);
      consume(i, i + 2);
      return;
    }
  }

  void extract_verb_dose() {
    if (sig_.dose_range.has_value() || sig_.dose_quantity.has_value()) return;
    for (size_t i = 0; i + 2 < tokens_.size(); ++i) {
      if (!free_at(i) || !free_at(i + 1) || !free_at(i + 2)) continue;
      if (dose_verbs().count(tokens_[i].norm) == 0) continue;
      auto n = token_number(tokens_[i + 1]);
      if (!n) continue;
      if (!is_dose_unit_word(tokens_[i + 2].norm)) continue;
      Quantity q;
      q.value = *n;
      q.unit = tokens_[i + 2].raw;
      sig_.dose_quantity = std::move(q);
      consume(i, i + 3);
      return;
    }
  }

  void extract_bare_dose() {
    if (sig_.dose_range.has_value() || sig_.dose_quantity.has_value()) return;
    for (size_t i = 0; i + 1 < tokens_.size(); ++i) {
      if (!free_at(i) || !free_at(i + 1)) continue;
      auto n = token_number(tokens_[i]);
      if (!n) continue;
      const std::string& unit = tokens_[i + 1].norm;
      if (countable_words().count(unit) == 0 &&
          volume_unit_words().count(unit) == 0) {
        continue;
      }
      Quantity q;
      q.value = *n;
      q.unit = tokens_[i + 1].raw;
      sig_.dose_quantity = std::move(q);
      consume(i, i + 2);
      return;
    }
  }

  void extract_form() {
    size_t begin = 0;
    size_t end = 0;
    if (match_table(tables_.forms, 4, &begin, &end) != nullptr) {
      sig_.form_text = slice(begin, end - 1);
    }
  }

  void extract_route() {
    size_t begin = 0;
    size_t end = 0;
    if (match_table(tables_.routes, 4, &begin, &end) != nullptr) {
      sig_.route_text = slice(begin, end - 1);
    }
  }

  void extract_reason() {
    for (size_t i = 0; i < tokens_.size(); ++i) {
      if (!free_at(i) || tokens_[i].norm != "for") continue;
      size_t first = i + 1;
      if (!free_at(first)) continue;
      size_t last = first;
      while (free_at(last + 1)) ++last;
      std::string span = slice(first, last);
      consume(i, last + 1);
      size_t pos = 0;
      while (pos <= span.size()) {
        auto comma = span.find(',', pos);
        if (comma == std::string::npos) comma = span.size();
        std::string part = collapse_whitespace(span.substr(pos, comma - pos));
        if (!part.empty()) sig_.reason_texts.push_back(part);
        pos = comma + 1;
      }
      return;
    }
  }

  void extract_drug() {
    static const std::set<std::string> kSkip = {"of", "the", "a", "an"};
    size_t i = 0;
    while (i < tokens_.size()) {
      bool usable = free_at(i) && kSkip.count(tokens_[i].norm) == 0 &&
                    dose_verbs().count(tokens_[i].norm) == 0 &&
                    !token_number(tokens_[i]).has_value();
      if (!usable) {
        ++i;
        continue;
      }
      size_t last = i;
      while (free_at(last + 1) && kSkip.count(tokens_[last + 1].norm) == 0 &&
             dose_verbs().count(tokens_[last + 1].norm) == 0 &&
             !token_number(tokens_[last + 1]).has_value()) {
        ++last;
      }
      sig_.drug_text = slice(i, last);
      consume(i, last + 1);
      return;
    }
  }

  std::string_view text_;
  const TableSet& tables_;
  std::vector<Token> tokens_;
  std::vector<bool> consumed_;
  ParsedSig sig_;
};

}  // namespace

ParsedSig SigParser::parse_sig(std::string_view text) const {
  if (collapse_whitespace(text).empty()) {
    throw EmptyInput("sig text is empty");
  }
  return Extraction(text, tables_).run();
}

namespace {

Coding coding_from_entry(const CodeEntry& entry) {
  return Coding{entry.system, entry.code, entry.display, std::nullopt, {}};
}

/// Text concept plus a coding when the text resolves in the table.
CodeableConcept concept_from_text(const std::string& text,
                                  const CodeTable* table) {
  CodeableConcept cc;
  cc.text = text;
  if (table != nullptr) {
    if (const CodeEntry* entry = table->resolve_text(text)) {
      cc.coding.push_back(coding_from_entry(*entry));
    }
  }
  return cc;
}

/// Resolve a dose unit word: countables become bare singular units, words
/// in the unit table get the UCUM coding, anything else stays as written.
Quantity dose_quantity_from(double value, const std::string& unit_word,
                            const CodeTable& units) {
  Quantity q;
  q.value = value;
  std::string norm = normalize_lookup_key(unit_word);
  auto countable = countable_words().find(norm);
  if (countable != countable_words().end()) {
    q.unit = countable->second;
    return q;
  }
  if (const CodeEntry* entry = units.resolve_text(unit_word)) {
    q.unit = entry->display;
    q.system = entry->system;
    q.code = entry->code;
    return q;
  }
  q.unit = unit_word;
  return q;
}

bool is_countable_unit(const std::optional<std::string>& unit_word) {
  if (!unit_word.has_value()) return false;
  return countable_words().count(normalize_lookup_key(*unit_word)) > 0;
}

}  // namespace

Fragments SigParser::to_fragments(const ParsedSig& sig) const {
  Fragments fragments;

  // medication: drug text stays text-only; strength becomes a coded
  // totalVolume; the form resolves against the form table.
  if (!sig.drug_text.empty()) {
    CodeableConcept code;
    code.text = sig.drug_text;
    fragments.medication.code = std::move(code);
  }
  if (sig.form_text.has_value()) {
    fragments.medication.dose_form =
        concept_from_text(*sig.form_text, &tables_.forms);
  }
  if (sig.strength.has_value() && sig.strength->value.has_value()) {
    Quantity volume;
    volume.value = sig.strength->value;
    if (sig.strength->unit.has_value()) {
      if (const CodeEntry* entry =
              tables_.units.resolve_text(*sig.strength->unit)) {
        volume.unit = entry->display;
        volume.system = entry->system;
        volume.code = entry->code;
      } else {
        volume.unit = sig.strength->unit;
      }
    }
    fragments.medication.total_volume = std::move(volume);
  }

  if (sig.route_text.has_value()) {
    fragments.route.value =
        concept_from_text(*sig.route_text, &tables_.routes);
  }

  if (sig.frequency_token.has_value()) {
    CodeableConcept timing_code;
    if (const CodeEntry* entry = tables_.timing_codes.lookup(
            systems::kGts, *sig.frequency_token)) {
      timing_code.coding.push_back(coding_from_entry(*entry));
    } else {
      timing_code.text = *sig.frequency_token;
    }
    fragments.schedule.code = std::move(timing_code);

    const FrequencyRule* rule = frequency_rules_.find(*sig.frequency_token);
    if (rule != nullptr && rule->has_rate()) {
      TimingRepeat repeat;
      repeat.frequency = rule->frequency;
      repeat.period = rule->period;
      repeat.period_unit = rule->period_unit;
      if (sig.explicit_duration.has_value()) {
        repeat.duration = sig.explicit_duration->first;
        repeat.duration_unit = sig.explicit_duration->second;
      } else if (sig.dispense_quantity.has_value() &&
                 !sig.dose_range.has_value()) {
        Rational units_per_admin = Rational::from_int(1);
        if (sig.dose_quantity.has_value() &&
            sig.dose_quantity->value.has_value() &&
            is_countable_unit(sig.dose_quantity->unit)) {
          units_per_admin = rational_from_double(*sig.dose_quantity->value);
        }
        if (units_per_admin.is_positive() && *sig.dispense_quantity > 0) {
          Rational duration =
              infer_duration(*rule, rational_from_double(*sig.dispense_quantity),
                             units_per_admin);
          repeat.duration = duration.to_double();
          repeat.duration_unit = "d";
        }
      }
      fragments.schedule.repeat = std::move(repeat);
    }
  }

  if (sig.dose_range.has_value()) {
    const DoseRange& parsed = *sig.dose_range;
    DoseRange range;
    if (parsed.low.value.has_value() && parsed.low.unit.has_value()) {
      range.low = dose_quantity_from(*parsed.low.value, *parsed.low.unit,
                                     tables_.units);
    }
    if (parsed.high.value.has_value() && parsed.high.unit.has_value()) {
      range.high = dose_quantity_from(*parsed.high.value, *parsed.high.unit,
                                      tables_.units);
    }
    fragments.dose.range = std::move(range);
  } else if (sig.dose_quantity.has_value() &&
             sig.dose_quantity->value.has_value() &&
             sig.dose_quantity->unit.has_value()) {
    fragments.dose.quantity = dose_quantity_from(
        *sig.dose_quantity->value, *sig.dose_quantity->unit, tables_.units);
  }

  const CodeTable* reason_table =
      tables_.reasons.has_value() ? &*tables_.reasons : nullptr;
  for (const auto& reason : sig.reason_texts) {
    fragments.reason.concepts.push_back(
        concept_from_text(reason, reason_table));
  }

  return fragments;
}

}  // namespace fhirsculptor

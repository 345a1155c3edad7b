#include "metasdt/trial_store.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "metasdt/error.hpp"

namespace metasdt {

namespace {

using nlohmann::json;

// A field value as it arrives from either container, before typing.
struct RawField {
  const json* j = nullptr;
  std::optional<std::string> text;  // delimited input
};

struct LineError {
  std::string reason;
};

double parse_double(std::string_view s, const std::string& field) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw LineError{"field '" + field + "' is not a number: '" + std::string(s) + "'"};
  }
  return v;
}

double as_double(const RawField& f, const std::string& field) {
  if (f.text) return parse_double(*f.text, field);
  if (f.j->is_number()) return f.j->get<double>();
  if (f.j->is_string()) return parse_double(f.j->get_ref<const std::string&>(), field);
  throw LineError{"field '" + field + "' must be numeric"};
}

bool parse_bool_text(std::string s, const std::string& field) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "true" || s == "1" || s == "yes" || s == "t") return true;
  if (s == "false" || s == "0" || s == "no" || s == "f") return false;
  throw LineError{"field '" + field + "' is not a boolean: '" + s + "'"};
}

bool as_bool(const RawField& f, const std::string& field) {
  if (f.text) return parse_bool_text(*f.text, field);
  if (f.j->is_boolean()) return f.j->get<bool>();
  if (f.j->is_number_integer() || f.j->is_number_unsigned()) {
    const auto v = f.j->get<long long>();
    if (v == 0 || v == 1) return v == 1;
  }
  if (f.j->is_string()) return parse_bool_text(f.j->get<std::string>(), field);
  throw LineError{"field '" + field + "' must be boolean"};
}

std::string as_string(const RawField& f, const std::string& field) {
  if (f.text) return *f.text;
  if (f.j->is_string()) return f.j->get<std::string>();
  if (f.j->is_number_integer() || f.j->is_number_unsigned()) return f.j->dump();
  throw LineError{"field '" + field + "' must be a string"};
}

// Builds a record from a field lookup; returns false in `graded` when the
// correctness field was absent.
template <class Lookup>
TrialRecord build_record(const Lookup& lookup, const FieldMapping& mapping, bool& graded) {
  auto get = [&](const std::string& canonical) -> std::optional<RawField> {
    return lookup(mapping.source_for(canonical));
  };
  auto require = [&](const std::string& canonical) {
    auto f = get(canonical);
    if (!f) throw LineError{"missing mandatory field '" + canonical + "'"};
    return *f;
  };
  TrialRecord t;
  t.model_id = as_string(require("model_id"), "model_id");
  t.dataset_id = as_string(require("dataset_id"), "dataset_id");
  t.question_id = as_string(require("question_id"), "question_id");
  t.nlp = as_double(require("nlp"), "nlp");
  if (!std::isfinite(t.nlp)) throw LineError{"non-finite nlp"};
  if (auto f = get("domain")) t.domain = as_string(*f, "domain");
  if (auto f = get("temperature")) {
    t.temperature = as_double(*f, "temperature");
    if (!std::isfinite(t.temperature)) throw LineError{"non-finite temperature"};
  }
  if (auto f = get("answer_text")) t.answer_text = as_string(*f, "answer_text");
  graded = false;
  if (auto f = get("correct")) {
    t.correct = as_bool(*f, "correct");
    graded = true;
  }
  return t;
}

std::vector<std::string> split_delimited(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw LineError{"unterminated quoted field"};
  out.push_back(std::move(cur));
  return out;
}

std::string record_key(const TrialRecord& t) {
  std::ostringstream os;
  os.precision(17);
  os << "(model=" << t.model_id << ", dataset=" << t.dataset_id
     << ", temperature=" << t.temperature << ", question=" << t.question_id << ")";
  return os.str();
}

}  // namespace

const std::string& FieldMapping::source_for(const std::string& canonical) const {
  auto it = source_names.find(canonical);
  return it == source_names.end() ? canonical : it->second;
}

bool same_temperature(double a, double b) { return std::fabs(a - b) <= 1e-9; }

LoadResult load_trials(std::istream& in, const LoadOptions& options) {
  if (!in) throw Error("trial stream is not readable");
  LoadResult result;
  std::set<std::tuple<std::string, std::string, double, std::string>> seen;
  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;

  auto accept = [&](TrialRecord t, bool graded) {
    auto key = std::make_tuple(t.model_id, t.dataset_id, t.temperature, t.question_id);
    if (!seen.insert(key).second) {
      throw DuplicateRecord("duplicate trial key " + record_key(t) + " at line " +
                            std::to_string(line_no));
    }
    if (!graded) {
      if (!options.allow_ungraded) throw LineError{"missing mandatory field 'correct'"};
      result.ungraded.push_back(result.records.size());
    }
    result.records.push_back(std::move(t));
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      bool graded = false;
      if (options.format == InputFormat::kJsonLines) {
        json obj;
        try {
          obj = json::parse(line);
        } catch (const json::parse_error& e) {
          throw LineError{std::string("malformed record: ") + e.what()};
        }
        if (!obj.is_object()) throw LineError{"record is not an object"};
        auto lookup = [&](const std::string& name) -> std::optional<RawField> {
          auto it = obj.find(name);
          if (it == obj.end() || it->is_null()) return std::nullopt;
          return RawField{&*it, std::nullopt};
        };
        TrialRecord record = build_record(lookup, options.mapping, graded);
        accept(std::move(record), graded);
      } else {
        auto cells = split_delimited(line, options.delimiter);
        if (header.empty()) {
          header = std::move(cells);
          for (auto& h : header) {
            while (!h.empty() && std::isspace(static_cast<unsigned char>(h.back()))) h.pop_back();
          }
          continue;
        }
        if (cells.size() != header.size()) {
          throw LineError{"expected " + std::to_string(header.size()) + " columns, got " +
                          std::to_string(cells.size())};
        }
        auto lookup = [&](const std::string& name) -> std::optional<RawField> {
          for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
              if (cells[i].empty()) return std::nullopt;
              return RawField{nullptr, cells[i]};
            }
          }
          return std::nullopt;
        };
        TrialRecord record = build_record(lookup, options.mapping, graded);
        accept(std::move(record), graded);
      }
    } catch (const LineError& e) {
      result.skipped.push_back({line_no, e.reason});
    }
  }
  if (in.bad()) throw Error("error while reading trial stream");
  return result;
}

LoadResult load_trials_file(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trial log '" + path + "'");
  return load_trials(in, options);
}

InputFormat format_from_path(const std::string& path, char* delimiter) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".csv")) {
    if (delimiter) *delimiter = ',';
    return InputFormat::kDelimited;
  }
  if (ends_with(".tsv")) {
    if (delimiter) *delimiter = '\t';
    return InputFormat::kDelimited;
  }
  return InputFormat::kJsonLines;
}

std::string serialize_trial(const TrialRecord& t) {
  json j;
  j["model_id"] = t.model_id;
  j["dataset_id"] = t.dataset_id;
  j["domain"] = t.domain;
  j["temperature"] = t.temperature;
  j["question_id"] = t.question_id;
  if (t.answer_text) j["answer_text"] = *t.answer_text;
  j["nlp"] = t.nlp;
  j["correct"] = t.correct;
  return j.dump();
}

void write_trials(std::ostream& out, std::span<const TrialRecord> trials) {
  for (const auto& t : trials) out << serialize_trial(t) << '\n';
}

bool TrialFilter::matches(const TrialRecord& t) const {
  if (model_id && t.model_id != *model_id) return false;
  if (dataset_id && t.dataset_id != *dataset_id) return false;
  if (domain && t.domain != *domain) return false;
  if (temperature && !same_temperature(t.temperature, *temperature)) return false;
  return true;
}

std::vector<TrialRecord> filter_trials(std::span<const TrialRecord> trials,
                                       const TrialFilter& filter) {
  return filter_trials(trials, [&](const TrialRecord& t) { return filter.matches(t); });
}

std::vector<TrialRecord> filter_trials(
    std::span<const TrialRecord> trials,
    const std::function<bool(const TrialRecord&)>& predicate) {
  std::vector<TrialRecord> out;
  for (const auto& t : trials) {
    if (predicate(t)) out.push_back(t);
  }
  return out;
}

}  // namespace metasdt

#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace metasdt {

/// One question/answer trial. `nlp` is the mean per-token log-probability of
/// the generated answer and acts as the continuous confidence variable.
struct TrialRecord {
  std::string model_id;
  std::string dataset_id;
  std::string domain;
  double temperature = 1.0;
  std::string question_id;
  std::optional<std::string> answer_text;
  double nlp = 0.0;
  bool correct = false;

  bool operator==(const TrialRecord&) const = default;
};

/// Maps canonical field names (model_id, dataset_id, domain, temperature,
/// question_id, answer_text, nlp, correct) to the names used in a source file.
/// Unmapped fields are looked up under their canonical name.
struct FieldMapping {
  std::map<std::string, std::string> source_names;

  const std::string& source_for(const std::string& canonical) const;
  static FieldMapping canonical() { return {}; }
};

enum class InputFormat { kJsonLines, kDelimited };

struct SkippedLine {
  std::size_t line = 0;  // 1-based; header is line 1 for delimited input
  std::string reason;
};

struct LoadResult {
  std::vector<TrialRecord> records;
  std::vector<SkippedLine> skipped;
  /// Records that arrived without a `correct` field; they are kept with
  /// correct=false until graded against an answer key.
  std::vector<std::size_t> ungraded;
};

struct LoadOptions {
  InputFormat format = InputFormat::kJsonLines;
  FieldMapping mapping;
  char delimiter = ',';
  /// When false, a record lacking `correct` is skipped instead of being kept
  /// for later grading.
  bool allow_ungraded = false;
};

/// Parses a trial log. Malformed lines are skipped and reported; a duplicate
/// (model, dataset, temperature, question) key throws DuplicateRecord naming
/// the key.
LoadResult load_trials(std::istream& in, const LoadOptions& options = {});
LoadResult load_trials_file(const std::string& path, const LoadOptions& options = {});

/// Canonical line-delimited serialisation (one JSON object per line). Doubles
/// are written with round-trip precision.
void write_trials(std::ostream& out, std::span<const TrialRecord> trials);
std::string serialize_trial(const TrialRecord& t);

/// Guesses the input format from a file extension (.csv/.tsv are delimited).
InputFormat format_from_path(const std::string& path, char* delimiter);

struct TrialFilter {
  std::optional<std::string> model_id;
  std::optional<std::string> dataset_id;
  std::optional<std::string> domain;
  std::optional<double> temperature;

  bool matches(const TrialRecord& t) const;
};

std::vector<TrialRecord> filter_trials(std::span<const TrialRecord> trials,
                                       const TrialFilter& filter);
std::vector<TrialRecord> filter_trials(
    std::span<const TrialRecord> trials,
    const std::function<bool(const TrialRecord&)>& predicate);

/// Temperatures are compared with a small absolute tolerance so that values
/// read from text (0.3 vs 0.30000000000000004) still match.
bool same_temperature(double a, double b);

}  // namespace metasdt

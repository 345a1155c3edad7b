#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace metasdt {

/// Text normalisation applied identically to generated answers and aliases.
struct NormalizeOptions {
  bool casefold = true;
  /// Strips whitespace and punctuation at both ends.
  bool trim = true;
  /// Drops a leading "the", "a" or "an". Off by default so that the gestalt
  /// fallback sees the article, matching plain exact-match grading.
  bool strip_articles = false;
};

std::string normalize_answer(std::string_view text, const NormalizeOptions& opts = {});

/// Ratcliff-Obershelp ("gestalt") similarity: 2*M / (|a| + |b|) where M counts
/// characters in recursively found longest common blocks. Ties between equally
/// long blocks go to the earliest position in `a`, then in `b`. Two empty
/// strings have similarity 1.
double gestalt_ratio(std::string_view a, std::string_view b);

struct AnswerKey {
  std::string question_id;
  std::vector<std::string> aliases;
  double similarity_threshold = 0.85;

  /// Throws std::invalid_argument on empty aliases or a threshold outside (0, 1].
  void validate() const;
};

struct GradeResult {
  bool correct = false;
  /// Set when the generated text is empty after normalisation.
  bool empty_answer = false;
  bool exact = false;
  double best_similarity = 0.0;
};

GradeResult grade_answer_detailed(std::string_view generated, const AnswerKey& key,
                                  const NormalizeOptions& opts = {});

bool grade_answer(std::string_view generated, const AnswerKey& key,
                  const NormalizeOptions& opts = {});

/// Reads an answer-key document: a JSON object mapping question_id to a list
/// of aliases.
std::map<std::string, AnswerKey> load_answer_keys(std::istream& in,
                                                  double similarity_threshold = 0.85);

}  // namespace metasdt

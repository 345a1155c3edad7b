#include "metasdt/grading.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <istream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace metasdt {

namespace {

bool is_trim_char(unsigned char c) { return std::isspace(c) || std::ispunct(c); }

struct Block {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t size = 0;
};

// Longest common substring of a[alo,ahi) and b[blo,bhi), first found in
// row-major order so ties resolve the same way as difflib.
Block longest_match(std::string_view a, std::size_t alo, std::size_t ahi,
                    std::string_view b, std::size_t blo, std::size_t bhi,
                    std::vector<std::size_t>& prev, std::vector<std::size_t>& cur) {
  Block best{alo, blo, 0};
  std::fill(prev.begin(), prev.end(), 0);
  for (std::size_t i = alo; i < ahi; ++i) {
    std::fill(cur.begin(), cur.end(), 0);
    for (std::size_t j = blo; j < bhi; ++j) {
      if (a[i] != b[j]) continue;
      const std::size_t k = (j > blo ? prev[j - 1] : 0) + 1;
      cur[j] = k;
      if (k > best.size) best = {i + 1 - k, j + 1 - k, k};
    }
    std::swap(prev, cur);
  }
  return best;
}

}  // namespace

std::string normalize_answer(std::string_view text, const NormalizeOptions& opts) {
  std::string s(text);
  if (opts.casefold) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  }
  auto trim = [&] {
    if (!opts.trim) return;
    std::size_t lo = 0, hi = s.size();
    while (lo < hi && is_trim_char(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && is_trim_char(static_cast<unsigned char>(s[hi - 1]))) --hi;
    s = s.substr(lo, hi - lo);
  };
  trim();
  if (opts.strip_articles) {
    for (std::string_view article : {"the ", "a ", "an "}) {
      // Article match is case-insensitive even without casefolding.
      if (s.size() > article.size() &&
          std::equal(article.begin(), article.end(), s.begin(), [](char x, char y) {
            return x == std::tolower(static_cast<unsigned char>(y));
          })) {
        s = s.substr(article.size());
        trim();
        break;
      }
    }
  }
  return s;
}

double gestalt_ratio(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::size_t matched = 0;
  std::vector<std::array<std::size_t, 4>> queue{{0, a.size(), 0, b.size()}};
  while (!queue.empty()) {
    const auto [alo, ahi, blo, bhi] = queue.back();
    queue.pop_back();
    const Block m = longest_match(a, alo, ahi, b, blo, bhi, prev, cur);
    if (m.size == 0) continue;
    matched += m.size;
    if (alo < m.a && blo < m.b) queue.push_back({alo, m.a, blo, m.b});
    if (m.a + m.size < ahi && m.b + m.size < bhi)
      queue.push_back({m.a + m.size, ahi, m.b + m.size, bhi});
  }
  return 2.0 * static_cast<double>(matched) / static_cast<double>(a.size() + b.size());
}

void AnswerKey::validate() const {
  if (aliases.empty()) {
    throw std::invalid_argument("answer key '" + question_id + "' has no aliases");
  }
  if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0)) {
    throw std::invalid_argument("similarity threshold must lie in (0, 1]");
  }
}

GradeResult grade_answer_detailed(std::string_view generated, const AnswerKey& key,
                                  const NormalizeOptions& opts) {
  key.validate();
  GradeResult result;
  const std::string gen = normalize_answer(generated, opts);
  if (gen.empty()) {
    result.empty_answer = true;
    return result;
  }
  for (const auto& alias : key.aliases) {
    const std::string norm = normalize_answer(alias, opts);
    if (norm == gen) {
      result.exact = true;
      result.best_similarity = 1.0;
      break;
    }
    result.best_similarity = std::max(result.best_similarity, gestalt_ratio(gen, norm));
  }
  result.correct = result.exact || result.best_similarity >= key.similarity_threshold;
  return result;
}

bool grade_answer(std::string_view generated, const AnswerKey& key,
                  const NormalizeOptions& opts) {
  return grade_answer_detailed(generated, key, opts).correct;
}

std::map<std::string, AnswerKey> load_answer_keys(std::istream& in,
                                                  double similarity_threshold) {
  const auto doc = nlohmann::json::parse(in);
  if (!doc.is_object()) {
    throw std::invalid_argument("answer-key document must be an object of alias lists");
  }
  std::map<std::string, AnswerKey> keys;
  for (const auto& [qid, aliases] : doc.items()) {
    AnswerKey key{qid, aliases.get<std::vector<std::string>>(), similarity_threshold};
    key.validate();
    keys.emplace(qid, std::move(key));
  }
  return keys;
}

}  // namespace metasdt

#include <gtest/gtest.h>

#include <sstream>
#include <stdexcept>

#include "metasdt/grading.hpp"

using namespace metasdt;

TEST(Grading, GestaltRatioMatchesDifflibReference) {
  // Frozen from difflib.SequenceMatcher(None, a, b).ratio().
  EXPECT_DOUBLE_EQ(gestalt_ratio("the beatles", "beatles"), 0.7777777777777778);
  EXPECT_DOUBLE_EQ(gestalt_ratio("paris", "pariss"), 0.9090909090909091);
  EXPECT_DOUBLE_EQ(gestalt_ratio("john lennon", "jon lennon"), 0.9523809523809523);
  EXPECT_DOUBLE_EQ(gestalt_ratio("abcd", "bcda"), 0.75);
  EXPECT_DOUBLE_EQ(gestalt_ratio("new york city", "new york"), 0.7619047619047619);
  EXPECT_DOUBLE_EQ(gestalt_ratio("aaab", "aab"), 0.8571428571428571);
  EXPECT_DOUBLE_EQ(gestalt_ratio("qwerty", "asdfgh"), 0.0);
}

TEST(Grading, GestaltRatioEdgeCases) {
  EXPECT_EQ(gestalt_ratio("", ""), 1.0);
  EXPECT_EQ(gestalt_ratio("abc", ""), 0.0);
  EXPECT_EQ(gestalt_ratio("same", "same"), 1.0);
}

TEST(Grading, GestaltRatioSymmetricOnSimpleInputs) {
  EXPECT_DOUBLE_EQ(gestalt_ratio("paris", "pariss"), gestalt_ratio("pariss", "paris"));
}

TEST(Grading, NormalizationFoldsCaseAndTrims) {
  EXPECT_EQ(normalize_answer("  Paris.  "), "paris");
  EXPECT_EQ(normalize_answer("\"The Beatles!\""), "the beatles");
  EXPECT_EQ(normalize_answer("..."), "");
}

TEST(Grading, ArticleStrippingIsOptIn) {
  NormalizeOptions opts;
  EXPECT_EQ(normalize_answer("The Beatles", opts), "the beatles");
  opts.strip_articles = true;
  EXPECT_EQ(normalize_answer("The Beatles", opts), "beatles");
  EXPECT_EQ(normalize_answer("an apple", opts), "apple");
  // A lone article is not stripped into an empty answer.
  EXPECT_EQ(normalize_answer("the", opts), "the");
}

TEST(Grading, ExactMatchAfterNormalisation) {
  AnswerKey key{"q1", {"Paris"}, 0.85};
  const auto r = grade_answer_detailed(" paris. ", key);
  EXPECT_TRUE(r.correct);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.best_similarity, 1.0);
}

TEST(Grading, FuzzyMatchRespectsThreshold) {
  AnswerKey key{"q1", {"John Lennon"}, 0.85};
  EXPECT_TRUE(grade_answer("Jon Lennon", key));
  key.aliases = {"Beatles"};
  // 0.778 < 0.85
  EXPECT_FALSE(grade_answer("The Beatles", key));
  key.similarity_threshold = 0.75;
  EXPECT_TRUE(grade_answer("The Beatles", key));
}

TEST(Grading, ThresholdBoundaryIsInclusive) {
  AnswerKey key{"q", {"bcda"}, 0.75};
  EXPECT_TRUE(grade_answer("abcd", key));
}

TEST(Grading, BestAliasWins) {
  AnswerKey key{"q", {"London", "New York"}, 0.85};
  const auto r = grade_answer_detailed("new york", key);
  EXPECT_TRUE(r.correct);
  EXPECT_TRUE(r.exact);
}

TEST(Grading, EmptyAnswerIsIncorrect) {
  AnswerKey key{"q", {"x"}, 0.85};
  const auto r = grade_answer_detailed("  ?! ", key);
  EXPECT_FALSE(r.correct);
  EXPECT_TRUE(r.empty_answer);
}

TEST(Grading, KeyValidation) {
  EXPECT_THROW(grade_answer("a", AnswerKey{"q", {}, 0.85}), std::invalid_argument);
  EXPECT_THROW(grade_answer("a", AnswerKey{"q", {"a"}, 0.0}), std::invalid_argument);
  EXPECT_THROW(grade_answer("a", AnswerKey{"q", {"a"}, 1.5}), std::invalid_argument);
}

TEST(Grading, LoadsAnswerKeys) {
  std::istringstream in(R"({"q1": ["Paris"], "q2": ["Lennon", "John Lennon"]})");
  const auto keys = load_answer_keys(in, 0.9);
  ASSERT_EQ(keys.size(), 2u);
  EXPECT_EQ(keys.at("q2").aliases.size(), 2u);
  EXPECT_EQ(keys.at("q1").similarity_threshold, 0.9);

  std::istringstream bad(R"(["Paris"])");
  EXPECT_THROW(load_answer_keys(bad), std::invalid_argument);
}

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "support.hpp"

using namespace tunesmith;

namespace {

RakeConfig with_stopwords(std::set<std::string, std::less<>> words, std::size_t top_k = 5) {
  RakeConfig cfg;
  cfg.stopwords = std::move(words);
  cfg.top_k = top_k;
  return cfg;
}

}  // namespace

TEST_CASE("empty text has no keywords") { CHECK(extract_keywords("", RakeConfig{}).empty()); }

TEST_CASE("two-word phrase without stopwords scores 4") {
  auto k = extract_keywords("red apple", with_stopwords({}));
  REQUIRE(k.size() == 1);
  CHECK(k[0].phrase == "red apple");
  CHECK(k[0].score == Rational(4));
}

TEST_CASE("repeated word: degree summed over occurrences") {
  auto k = extract_keywords("deep learning is deep", with_stopwords({"is"}));
  REQUIRE(k.size() == 2);
  CHECK(k[0].phrase == "deep learning");
  CHECK(k[0].score == Rational(7, 2));
  CHECK(k[1].phrase == "deep");
  CHECK(k[1].score == Rational(3, 2));
}

TEST_CASE("keyword instruction joins phrases") {
  auto k = extract_keywords("AION provides model monitoring", with_stopwords({"the"}));
  REQUIRE_FALSE(k.empty());
  CHECK(k[0].phrase == "aion provides model monitoring");
  CHECK(k[0].score == Rational(16));
  CHECK(extract_keywords("AION provides model monitoring", RakeConfig{})[0].phrase == "model monitoring");
  CHECK(keyword_instruction(extract_keywords("deep learning is deep", with_stopwords({"is"}))) ==
        "deep learning, deep");
}

TEST_CASE("stopword-only text has no keywords") {
  CHECK(extract_keywords("it is what it is, and so on.", RakeConfig{}).empty());
}

TEST_CASE("delimiters split phrases and top_k truncates") {
  auto k = extract_keywords("alpha beta. gamma; delta (epsilon zeta eta)", with_stopwords({"x"}, 2));
  REQUIRE(k.size() == 2);
  CHECK(k[0].phrase == "epsilon zeta eta");
  CHECK(k[1].phrase == "alpha beta");
}

TEST_CASE("ties keep first occurrence order") {
  auto k = extract_keywords("one two, three four, five six", with_stopwords({"x"}));
  REQUIRE(k.size() == 3);
  CHECK(k[0].phrase == "one two");
  CHECK(k[1].phrase == "three four");
  CHECK(k[2].phrase == "five six");
}

TEST_CASE("rational arithmetic") {
  CHECK(Rational(2, 4) == Rational(1, 2));
  CHECK(Rational(1, 2) + Rational(1, 3) == Rational(5, 6));
  CHECK(Rational(-1, -2) == Rational(1, 2));
  CHECK(Rational(7, 2) > Rational(3, 1));
  CHECK_THROWS(Rational(1, 0));
}

TEST_CASE("SMART stoplist ships by default") {
  CHECK(smart_stoplist().size() == 570);
  CHECK(smart_stoplist().contains("the"));
  auto loaded = load_stoplist(std::string(TUNESMITH_DATA_DIR) + "/smart_stoplist.txt");
  CHECK(loaded == smart_stoplist());
}

TEST_CASE("config validation") {
  RakeConfig cfg;
  cfg.top_k = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK_THROWS_AS(extract_keywords("a", cfg), ValidationError);
  CHECK_THROWS_AS(with_stopwords({}).validate(), ValidationError);
}

TEST_CASE("top five agree with an independent RAKE implementation") {
  const auto text = support::read_text(support::fixture("rake/sentences.txt"));
  std::set<std::string> expected;
  for (const auto& line : support::lines_of(support::read_text(support::fixture("rake/top5.tsv")))) {
    expected.insert(line.substr(0, line.find('\t')));
  }
  REQUIRE(expected.size() == 5);
  std::set<std::string> got;
  for (const auto& k : extract_keywords(text, RakeConfig{})) got.insert(k.phrase);
  CHECK(got == expected);
}

TEST_CASE("output phrases are stopword-free substrings of the normalized input") {
  const auto text = support::read_text(support::fixture("rake/sentences.txt"));
  RakeConfig cfg;
  cfg.top_k = 1000;
  const std::string lower = detail::ascii_lower(text);
  for (const auto& k : extract_keywords(text, cfg)) {
    CHECK(lower.find(k.phrase) != std::string::npos);
    CHECK(k.score > Rational(0));
    std::stringstream ss(k.phrase);
    std::string w;
    while (ss >> w) CHECK_FALSE(cfg.stopwords.contains(w));
  }
}

TEST_CASE("shuffling sentences only reorders equal scores") {
  auto sentences = support::lines_of(support::read_text(support::fixture("rake/sentences.txt")));
  RakeConfig cfg;
  cfg.top_k = 1000;
  auto join = [](const std::vector<std::string>& s) {
    std::string out;
    for (const auto& x : s) out += x + "\n";
    return out;
  };
  auto base = extract_keywords(join(sentences), cfg);
  std::mt19937 rng(9);
  for (int iter = 0; iter < 20; ++iter) {
    std::shuffle(sentences.begin(), sentences.end(), rng);
    auto shuffled = extract_keywords(join(sentences), cfg);
    REQUIRE(shuffled.size() == base.size());
    for (std::size_t i = 0; i < base.size(); ++i) REQUIRE(shuffled[i].score == base[i].score);
    auto key = [](std::vector<ScoredPhrase> v) {
      std::vector<std::pair<std::string, double>> out;
      for (auto& p : v) out.emplace_back(p.phrase, p.score.to_double());
      std::sort(out.begin(), out.end());
      return out;
    };
    REQUIRE(key(shuffled) == key(base));
  }
}

#pragma once

// Rapid Automatic Keyword Extraction.
//
// Text is lowercased and cut at phrase delimiters; within each segment,
// whitespace-separated words are grouped into candidate phrases bounded by
// stopwords. Each word w is scored deg(w) / freq(w), where every occurrence
// of w adds the length (in words) of its phrase to deg(w) and 1 to freq(w).
// A phrase scores the sum of its word scores. Scores are exact rationals.

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tunesmith/error.hpp"
#include "tunesmith/smart_stoplist.hpp"

namespace tunesmith {

class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t num, std::int64_t den = 1) : num_(num), den_(den) { normalize(); }

  constexpr std::int64_t num() const noexcept { return num_; }
  constexpr std::int64_t den() const noexcept { return den_; }
  constexpr double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend constexpr Rational operator+(const Rational& a, const Rational& b) {
    std::int64_t g = std::gcd(a.den_, b.den_);
    return Rational(a.num_ * (b.den_ / g) + b.num_ * (a.den_ / g), a.den_ / g * b.den_);
  }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }

  friend constexpr bool operator==(const Rational&, const Rational&) = default;
  friend constexpr std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    // Denominators are positive.
    return static_cast<__int128>(a.num_) * b.den_ <=> static_cast<__int128>(b.num_) * a.den_;
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) {
    os << r.num_;
    if (r.den_ != 1) os << '/' << r.den_;
    return os;
  }

 private:
  constexpr void normalize() {
    if (den_ == 0) throw std::domain_error("zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline constexpr std::string_view kDefaultPhraseDelimiters = ".,;:!?()[]{}\"'`|/\\<>=*";

struct RakeConfig {
  std::set<std::string, std::less<>> stopwords = smart_stoplist();
  std::string phrase_delimiters{kDefaultPhraseDelimiters};
  std::size_t top_k = 5;
  std::size_t min_phrase_chars = 1;

  void validate() const {
    if (stopwords.empty()) throw ValidationError("RAKE stopword list is empty");
    if (top_k < 1) throw ValidationError("RAKE top_k must be >= 1");
    if (min_phrase_chars < 1) throw ValidationError("RAKE min_phrase_chars must be >= 1");
  }
};

struct ScoredPhrase {
  std::string phrase;
  Rational score;

  bool operator==(const ScoredPhrase&) const = default;
};

// Stoplist file: one word per line; blank lines and `#` comments ignored.
inline std::set<std::string, std::less<>> load_stoplist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stoplist " + path);
  std::set<std::string, std::less<>> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t k = 0;
    while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    line.erase(0, k);
    if (line.empty() || line.front() == '#') continue;
    std::transform(line.begin(), line.end(), line.begin(), [](unsigned char c) { return std::tolower(c); });
    words.insert(line);
  }
  return words;
}

namespace detail {

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Candidate phrases (as word lists) in text order, repeats included.
inline std::vector<std::vector<std::string>> rake_candidates(std::string_view text, const RakeConfig& cfg) {
  std::string norm = ascii_lower(text);
  std::vector<std::vector<std::string>> phrases;
  std::vector<std::string> current;
  auto close = [&] {
    if (!current.empty()) {
      std::size_t chars = current.size() - 1;
      for (const auto& w : current) chars += w.size();
      if (chars >= cfg.min_phrase_chars) phrases.push_back(current);
      current.clear();
    }
  };
  std::size_t i = 0;
  while (i < norm.size()) {
    char c = norm[i];
    if (cfg.phrase_delimiters.find(c) != std::string::npos) {
      close();
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else {
      std::size_t j = i;
      while (j < norm.size() && !std::isspace(static_cast<unsigned char>(norm[j])) &&
             cfg.phrase_delimiters.find(norm[j]) == std::string::npos) {
        ++j;
      }
      std::string word = norm.substr(i, j - i);
      if (cfg.stopwords.contains(word)) {
        close();
      } else {
        current.push_back(std::move(word));
      }
      i = j;
    }
  }
  close();
  return phrases;
}

inline std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t k = 0; k < words.size(); ++k) {
    if (k) out.push_back(' ');
    out += words[k];
  }
  return out;
}

}  // namespace detail

// Distinct phrases by descending score, ties broken by first occurrence,
// truncated to top_k. An empty stoplist is allowed here so that callers can
// score raw phrases; RakeConfig::validate() enforces the configured default.
inline std::vector<ScoredPhrase> extract_keywords(std::string_view text, const RakeConfig& cfg) {
  if (cfg.top_k < 1) throw ValidationError("RAKE top_k must be >= 1");
  const auto phrases = detail::rake_candidates(text, cfg);

  std::unordered_map<std::string, std::int64_t> degree, freq;
  for (const auto& p : phrases) {
    for (const auto& w : p) {
      degree[w] += static_cast<std::int64_t>(p.size());
      freq[w] += 1;
    }
  }

  std::vector<ScoredPhrase> out;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& p : phrases) {
    std::string key = detail::join_words(p);
    if (seen.contains(key)) continue;
    Rational score;
    for (const auto& w : p) score += Rational(degree[w], freq[w]);
    seen.emplace(key, out.size());
    out.push_back({std::move(key), score});
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredPhrase& a, const ScoredPhrase& b) { return a.score > b.score; });
  if (out.size() > cfg.top_k) out.resize(cfg.top_k);
  return out;
}

inline std::string keyword_instruction(const std::vector<ScoredPhrase>& phrases) {
  std::string out;
  for (std::size_t k = 0; k < phrases.size(); ++k) {
    if (k) out += ", ";
    out += phrases[k].phrase;
  }
  return out;
}

}  // namespace tunesmith

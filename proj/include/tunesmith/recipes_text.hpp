#pragma once

// Text recipes: raw chunks, keywords as instruction, headings as instruction,
// generated queries as instruction. The response is always source text.

#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "tunesmith/bpe.hpp"
#include "tunesmith/chunking.hpp"
#include "tunesmith/dataset.hpp"
#include "tunesmith/document.hpp"
#include "tunesmith/llm_client.hpp"
#include "tunesmith/parallel.hpp"
#include "tunesmith/rake.hpp"
#include "tunesmith/report.hpp"

namespace tunesmith {

struct RecipeResult {
  std::vector<DatasetRow> rows;
  Report report;
};

inline std::string chunk_subject(const Chunk& c, std::size_t index) {
  return (c.doc_id.empty() ? std::string("chunk") : c.doc_id) + "#" + std::to_string(index);
}

inline std::vector<DatasetRow> recipe_raw(const std::vector<Chunk>& chunks, const PromptTemplate& tmpl = {}) {
  std::vector<DatasetRow> rows;
  rows.reserve(chunks.size());
  for (const auto& c : chunks) rows.push_back(make_row(Recipe::raw, std::nullopt, std::nullopt, c.text, tmpl));
  return rows;
}

// Chunks with no keyword phrase become raw rows and are reported.
inline RecipeResult recipe_keyword(const std::vector<Chunk>& chunks, const RakeConfig& cfg,
                                   const PromptTemplate& tmpl = {}) {
  RecipeResult out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    auto phrases = extract_keywords(chunks[i].text, cfg);
    if (phrases.empty()) {
      out.rows.push_back(make_row(Recipe::raw, std::nullopt, std::nullopt, chunks[i].text, tmpl));
      out.report.add(chunk_subject(chunks[i], i), "no keywords; raw fallback");
      continue;
    }
    out.rows.push_back(make_row(Recipe::keyword, keyword_instruction(phrases), std::nullopt, chunks[i].text, tmpl));
  }
  return out;
}

inline std::string heading_instruction(const HeadingPath& path) {
  std::string out;
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (k) out += " > ";
    out += path[k].title;
  }
  return out;
}

// Consecutive token windows of at most `max_tokens` over `text`, returned as
// the source slices they cover.
inline std::vector<std::string> split_by_tokens(const std::string& text, std::size_t max_tokens,
                                                const TokenizerModel& model) {
  const auto enc = model.encode_with_offsets(text);
  if (enc.ids.size() <= max_tokens) return {text};
  std::vector<std::string> pieces;
  for (auto [start, end] : chunk_windows(enc.ids.size(), ChunkSpec{max_tokens, 0})) {
    std::size_t b = enc.offsets[start];
    std::size_t e = end < enc.ids.size() ? enc.offsets[end] : text.size();
    pieces.push_back(text.substr(b, e - b));
  }
  return pieces;
}

struct HeadingOptions {
  // Responses over this many tokens are split into pieces that each repeat
  // the instruction. Needs a tokenizer; without one nothing is split.
  std::size_t max_response_tokens = 512;
  const TokenizerModel* model = nullptr;
};

// One row per block (more when a block is split); headingless blocks become
// raw rows and are reported.
inline RecipeResult recipe_heading(const Document& doc, const HeadingOptions& opts = {},
                                   const PromptTemplate& tmpl = {}) {
  RecipeResult out;
  for (std::size_t b = 0; b < doc.blocks.size(); ++b) {
    const auto& block = doc.blocks[b];
    std::vector<std::string> pieces = opts.model && opts.max_response_tokens > 0
                                          ? split_by_tokens(block.text, opts.max_response_tokens, *opts.model)
                                          : std::vector<std::string>{block.text};
    const std::string subject = doc.id + "#block" + std::to_string(b);
    if (block.heading_path.empty()) {
      for (auto& p : pieces) out.rows.push_back(make_row(Recipe::raw, std::nullopt, std::nullopt, std::move(p), tmpl));
      out.report.add(subject, "no heading; raw fallback");
      continue;
    }
    if (pieces.size() > 1) out.report.add(subject, "split into " + std::to_string(pieces.size()) + " pieces");
    const std::string instruction = heading_instruction(block.heading_path);
    for (auto& p : pieces) out.rows.push_back(make_row(Recipe::heading, instruction, std::nullopt, std::move(p), tmpl));
  }
  return out;
}

inline std::string query_prompt(std::size_t n, std::string_view chunk) {
  const std::string ns = std::to_string(n);
  return "Generate " + ns + " distinct questions a user could ask that are answered by the following passage. Number them 1.." +
         ns + ".\n\n" + std::string(chunk);
}

inline constexpr std::string_view kQuerySystemPrompt =
    "You write questions that a user of the documentation could ask. Reply with a numbered list only.";

// Items of a numbered list ("1. text", "2) text"), whitespace-trimmed, in
// order, exact duplicates removed. Other lines are ignored.
inline std::vector<std::string> parse_numbered_list(std::string_view reply) {
  static const std::regex item(R"(^\s*\d+\s*[.):]\s*(.*?)\s*$)");
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto line : detail::split_lines(reply)) {
    std::string s(line);
    std::smatch m;
    if (!std::regex_match(s, m, item)) continue;
    std::string text = m[1].str();
    if (text.empty() || !seen.insert(text).second) continue;
    out.push_back(std::move(text));
  }
  return out;
}

struct QueryOptions {
  std::size_t queries_per_chunk = 3;
  std::size_t max_in_flight = 4;
  double temperature = 0.7;

  void validate() const {
    if (queries_per_chunk < 1) throw ValidationError("queries_per_chunk must be >= 1");
    if (max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
  }
};

// One request per chunk; up to queries_per_chunk rows per chunk, in chunk
// order. Failed requests and unparsable replies skip the chunk; short lists
// are kept and reported.
inline RecipeResult recipe_query(const std::vector<Chunk>& chunks, LlmClient& client, const QueryOptions& opts = {},
                                 const PromptTemplate& tmpl = {}) {
  opts.validate();
  struct Outcome {
    std::vector<std::string> queries;
    std::string error;
  };
  auto outcomes = parallel_map(chunks.size(), opts.max_in_flight, [&](std::size_t i) {
    Outcome o;
    try {
      o.queries = parse_numbered_list(
          client.complete(kQuerySystemPrompt, query_prompt(opts.queries_per_chunk, chunks[i].text), opts.temperature));
    } catch (const Error& e) {
      o.error = e.what();
    }
    return o;
  });

  RecipeResult out;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    auto& o = outcomes[i];
    const std::string subject = chunk_subject(chunks[i], i);
    if (!o.error.empty()) {
      out.report.add(subject, "skipped: " + o.error);
      continue;
    }
    if (o.queries.empty()) {
      out.report.add(subject, "skipped: no numbered questions in reply");
      continue;
    }
    if (o.queries.size() > opts.queries_per_chunk) o.queries.resize(opts.queries_per_chunk);
    if (o.queries.size() < opts.queries_per_chunk) {
      out.report.add(subject, "shortfall: " + std::to_string(o.queries.size()) + " of " +
                                  std::to_string(opts.queries_per_chunk) + " queries");
    }
    for (auto& q : o.queries) out.rows.push_back(make_row(Recipe::query, std::move(q), std::nullopt, chunks[i].text, tmpl));
  }
  return out;
}

}  // namespace tunesmith

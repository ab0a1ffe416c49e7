#pragma once

// Code recipes: generated summary as instruction, docstring/comments as
// instruction, and the whole repository tokenized into fixed windows.

#include <filesystem>
#include <string>
#include <vector>

#include "tunesmith/bpe.hpp"
#include "tunesmith/chunking.hpp"
#include "tunesmith/code_units.hpp"
#include "tunesmith/dataset.hpp"
#include "tunesmith/llm_client.hpp"
#include "tunesmith/parallel.hpp"
#include "tunesmith/recipes_text.hpp"
#include "tunesmith/report.hpp"

namespace tunesmith {

inline std::string summary_prompt(std::string_view code) {
  return "Summarize what the following function does as an imperative step-by-step description.\n\n" +
         std::string(code);
}

inline constexpr std::string_view kSummarySystemPrompt =
    "You describe source code precisely for developers. Reply with the description only.";

// Functions whose body exceeds `max_body_tokens` are excluded rather than
// truncated. Needs a tokenizer; without one nothing is excluded.
struct CodeRecipeOptions {
  std::size_t max_body_tokens = 0;  // 0 = no limit
  const TokenizerModel* model = nullptr;
  std::size_t max_in_flight = 4;
  double temperature = 0.0;
};

namespace detail {

inline bool oversized(const CodeUnit& u, const CodeRecipeOptions& opts, Report& report) {
  if (opts.model == nullptr || opts.max_body_tokens == 0) return false;
  std::size_t n = opts.model->count_tokens(u.body);
  if (n <= opts.max_body_tokens) return false;
  report.add(u.file_path + ":" + u.qualified_name,
             "excluded: body has " + std::to_string(n) + " tokens, over " + std::to_string(opts.max_body_tokens));
  return true;
}

}  // namespace detail

inline RecipeResult recipe_code_summary(const std::vector<CodeUnit>& units, LlmClient& client,
                                        const CodeRecipeOptions& opts = {}, const PromptTemplate& tmpl = {}) {
  if (opts.max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
  RecipeResult out;
  std::vector<const CodeUnit*> kept;
  for (const auto& u : units) {
    if (!detail::oversized(u, opts, out.report)) kept.push_back(&u);
  }
  struct Outcome {
    std::string summary;
    std::string error;
  };
  auto outcomes = parallel_map(kept.size(), opts.max_in_flight, [&](std::size_t i) {
    Outcome o;
    try {
      o.summary = std::string(detail::trim(client.complete(kSummarySystemPrompt, summary_prompt(kept[i]->body),
                                                           opts.temperature)));
    } catch (const Error& e) {
      o.error = e.what();
    }
    return o;
  });
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const std::string subject = kept[i]->file_path + ":" + kept[i]->qualified_name;
    if (!outcomes[i].error.empty()) {
      out.report.add(subject, "skipped: " + outcomes[i].error);
    } else if (outcomes[i].summary.empty()) {
      out.report.add(subject, "skipped: empty summary");
    } else {
      out.rows.push_back(make_row(Recipe::code_summary, std::move(outcomes[i].summary), std::nullopt, kept[i]->body, tmpl));
    }
  }
  return out;
}

// Instruction is the docstring, else the leading comments; undocumented
// units are excluded and reported.
inline RecipeResult recipe_code_metadata(const std::vector<CodeUnit>& units, const CodeRecipeOptions& opts = {},
                                         const PromptTemplate& tmpl = {}) {
  RecipeResult out;
  for (const auto& u : units) {
    const std::optional<std::string>& doc =
        u.docstring && !u.docstring->empty() ? u.docstring : u.leading_comments;
    if (!doc || doc->empty()) {
      out.report.add(u.file_path + ":" + u.qualified_name, "excluded: no docstring or comments");
      continue;
    }
    if (detail::oversized(u, opts, out.report)) continue;
    out.rows.push_back(make_row(Recipe::code_metadata, *doc, std::nullopt, u.body, tmpl));
  }
  return out;
}

struct TokenizedCorpus {
  std::vector<DatasetRow> rows;                // decoded windows, raw format
  std::vector<std::vector<TokenId>> windows;  // the token windows themselves
  std::vector<std::string> files;             // files included, in order
  std::size_t token_count = 0;                // stream length incl. separators
  Report report;
};

// Every readable file under repo_root (any type, lexicographic order) is
// encoded, files are joined with EOS, and the stream is cut into consecutive
// seq_len windows; the last window may be shorter. Binary files (containing
// NUL) are skipped and reported.
inline TokenizedCorpus recipe_code_tokenized(const std::filesystem::path& repo_root, const TokenizerModel& model,
                                             std::size_t seq_len, const PromptTemplate& tmpl = {}) {
  if (seq_len < 1) throw ValidationError("seq_len must be >= 1");
  const auto eos = model.specials().eos_id;
  TokenizedCorpus out;
  std::vector<TokenId> stream;
  for (const auto& rel : detail::list_files(repo_root)) {
    auto text = detail::read_file(repo_root / rel);
    if (!text) {
      out.report.add(rel.generic_string(), "unreadable");
      continue;
    }
    if (text->find('\0') != std::string::npos) {
      out.report.add(rel.generic_string(), "binary file");
      continue;
    }
    if (!out.files.empty()) stream.push_back(eos);
    auto ids = model.encode(*text);
    stream.insert(stream.end(), ids.begin(), ids.end());
    out.files.push_back(rel.generic_string());
  }
  out.token_count = stream.size();
  for (std::size_t start = 0; start < stream.size(); start += seq_len) {
    std::size_t end = std::min(stream.size(), start + seq_len);
    std::vector<TokenId> window(stream.begin() + static_cast<std::ptrdiff_t>(start),
                                stream.begin() + static_cast<std::ptrdiff_t>(end));
    out.rows.push_back(make_row(Recipe::code_tokenized, std::nullopt, std::nullopt, model.decode(window), tmpl));
    out.windows.push_back(std::move(window));
  }
  return out;
}

}  // namespace tunesmith

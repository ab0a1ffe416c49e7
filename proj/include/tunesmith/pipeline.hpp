#pragma once

// Rows -> fixed-length training examples.
//
// Instruction rows become one example each: [bos] + prompt is masked, the
// response (+ template suffix) + [eos] is learned. Consecutive unpaired rows
// (raw, code_tokenized) are packed in order into rows of
// [bos] item eos item ... [eos] and learned in full.

#include <string>
#include <vector>

#include "tunesmith/bpe.hpp"
#include "tunesmith/chunking.hpp"
#include "tunesmith/dataset.hpp"

namespace tunesmith {

struct TokenizeOptions {
  std::size_t seq_len = 4096;
  bool add_bos = true;
  bool add_eos = true;
  bool pack_unpaired = true;
};

struct TokenizedDataset {
  std::vector<TokenizedExample> examples;
  std::size_t packed_rows = 0;  // examples built from unpaired rows
};

namespace detail {

inline std::string row_name(std::size_t k, const DatasetRow& row) {
  return "row " + std::to_string(k) + " (" + std::string(to_string(row.recipe)) + ")";
}

}  // namespace detail

inline TokenizedDataset tokenize_rows(const std::vector<DatasetRow>& rows, const TokenizerModel& model,
                                      const PromptTemplate& tmpl, const TokenizeOptions& opts) {
  const auto& sp = model.specials();
  const std::size_t overhead = (opts.add_bos ? 1 : 0) + (opts.add_eos ? 1 : 0);
  if (opts.seq_len <= overhead) throw ValidationError("seq_len must exceed the bos/eos overhead");
  const std::size_t budget = opts.seq_len - overhead;
  TokenizedDataset out;

  std::vector<std::size_t> run;  // indexes of pending unpaired rows
  auto flush = [&] {
    if (run.empty()) return;
    std::vector<std::vector<TokenId>> items;
    std::vector<std::size_t> counts;
    for (auto k : run) {
      items.push_back(model.encode(rows[k].response));
      counts.push_back(items.back().size());
      if (counts.back() > budget) {
        throw OverflowError(detail::row_name(k, rows[k]) + ": " + std::to_string(counts.back()) +
                            " tokens exceeds the per-row budget of " + std::to_string(budget) + " (seq_len " +
                            std::to_string(opts.seq_len) + ")");
      }
    }
    std::vector<PackedRow> packed;
    if (opts.pack_unpaired) {
      packed = pack_rows(counts, budget, 1);
    } else {
      for (std::size_t i = 0; i < counts.size(); ++i) packed.push_back({i, i + 1, counts[i]});
    }
    for (const auto& p : packed) {
      std::vector<TokenId> ids;
      if (opts.add_bos) ids.push_back(sp.bos_id);
      auto body = join_packed(p, items, sp.eos_id);
      ids.insert(ids.end(), body.begin(), body.end());
      if (opts.add_eos) ids.push_back(sp.eos_id);
      out.examples.push_back(build_example({}, ids, opts.seq_len, sp.pad_id, detail::row_name(run[p.first], rows[run[p.first]])));
      ++out.packed_rows;
    }
    run.clear();
  };

  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& row = rows[k];
    if (!row.instruction) {
      run.push_back(k);
      continue;
    }
    flush();
    auto parts = tmpl.split(row);
    std::vector<TokenId> prompt, response = model.encode(parts.target);
    if (opts.add_bos) prompt.push_back(sp.bos_id);
    auto p = model.encode(parts.prompt);
    prompt.insert(prompt.end(), p.begin(), p.end());
    if (opts.add_eos) response.push_back(sp.eos_id);
    out.examples.push_back(build_example(prompt, response, opts.seq_len, sp.pad_id, detail::row_name(k, row)));
  }
  flush();
  return out;
}

// Pre-cut token windows (at most seq_len each), learned in full.
inline std::vector<TokenizedExample> examples_from_windows(const std::vector<std::vector<TokenId>>& windows,
                                                           std::size_t seq_len, TokenId pad_id) {
  std::vector<TokenizedExample> out;
  out.reserve(windows.size());
  for (std::size_t k = 0; k < windows.size(); ++k) {
    out.push_back(build_example({}, windows[k], seq_len, pad_id, "window " + std::to_string(k)));
  }
  return out;
}

}  // namespace tunesmith

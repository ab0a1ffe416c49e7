#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tunesmith/bpe.hpp"
#include "tunesmith/document.hpp"
#include "tunesmith/error.hpp"

namespace tunesmith {

struct ChunkSpec {
  std::size_t chunk_tokens = 512;
  std::size_t overlap_tokens = 64;

  std::size_t stride() const noexcept { return chunk_tokens - overlap_tokens; }

  void validate() const {
    if (chunk_tokens < 1) throw ValidationError("chunk_tokens must be >= 1");
    if (overlap_tokens >= chunk_tokens) throw ValidationError("overlap_tokens must be < chunk_tokens");
  }
};

struct Chunk {
  std::string text;
  std::size_t token_count = 0;
  std::vector<TokenId> token_ids;
  std::string doc_id;
  std::vector<std::size_t> block_indexes;  // blocks the window touches
  std::size_t token_begin = 0;             // window within the document stream
  std::size_t token_end = 0;
};

// Separator placed between block texts when a document is flattened into one
// token stream.
inline constexpr std::string_view kBlockSeparator = "\n\n";

inline std::string document_text(const Document& doc) {
  std::string out;
  for (std::size_t i = 0; i < doc.blocks.size(); ++i) {
    if (i) out += kBlockSeparator;
    out += doc.blocks[i].text;
  }
  return out;
}

// Window start offsets [k * stride] for a stream of n tokens; the last window
// is the first one reaching the end of the stream.
inline std::vector<std::pair<std::size_t, std::size_t>> chunk_windows(std::size_t n, const ChunkSpec& spec) {
  spec.validate();
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  for (std::size_t start = 0; start < n; start += spec.stride()) {
    std::size_t end = std::min(n, start + spec.chunk_tokens);
    windows.emplace_back(start, end);
    if (end == n) break;
  }
  return windows;
}

// Sliding token window over the whole document (blocks joined by a blank
// line). Chunk text is the exact source slice the window's tokens cover.
inline std::vector<Chunk> split_chunks(const Document& doc, const ChunkSpec& spec, const TokenizerModel& model) {
  const std::string text = document_text(doc);
  const auto enc = model.encode_with_offsets(text);
  const std::size_t n = enc.ids.size();

  std::vector<std::size_t> block_begin, block_end;
  std::size_t off = 0;
  for (std::size_t i = 0; i < doc.blocks.size(); ++i) {
    if (i) off += kBlockSeparator.size();
    block_begin.push_back(off);
    off += doc.blocks[i].text.size();
    block_end.push_back(off);
  }

  std::vector<Chunk> chunks;
  for (auto [start, end] : chunk_windows(n, spec)) {
    Chunk c;
    std::size_t byte_begin = enc.offsets[start];
    std::size_t byte_end = end < n ? enc.offsets[end] : text.size();
    c.text = text.substr(byte_begin, byte_end - byte_begin);
    c.token_ids.assign(enc.ids.begin() + start, enc.ids.begin() + end);
    c.token_count = c.token_ids.size();
    c.doc_id = doc.id;
    c.token_begin = start;
    c.token_end = end;
    for (std::size_t b = 0; b < doc.blocks.size(); ++b) {
      if (block_begin[b] < byte_end && block_end[b] > byte_begin) c.block_indexes.push_back(b);
    }
    chunks.push_back(std::move(c));
  }
  return chunks;
}

// Items [first, last) of the input, in order.
struct PackedRow {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t token_count = 0;  // including separators

  std::size_t size() const noexcept { return last - first; }
  bool operator==(const PackedRow&) const = default;
};

// Order-preserving greedy packing: an item joins the current row while the
// row stays within budget counting one separator per join, otherwise it opens
// a new row.
inline std::vector<PackedRow> pack_rows(std::span<const std::size_t> token_counts, std::size_t budget,
                                        std::size_t separator_tokens = 1) {
  std::vector<PackedRow> rows;
  for (std::size_t i = 0; i < token_counts.size(); ++i) {
    const std::size_t n = token_counts[i];
    if (n > budget) {
      throw OverflowError("item " + std::to_string(i) + " has " + std::to_string(n) +
                          " tokens, over the per-row budget of " + std::to_string(budget));
    }
    if (!rows.empty() && rows.back().token_count + separator_tokens + n <= budget) {
      rows.back().last = i + 1;
      rows.back().token_count += separator_tokens + n;
    } else {
      rows.push_back({i, i + 1, n});
    }
  }
  return rows;
}

// Concatenates the token ids of one packed row with `separator` between items.
inline std::vector<TokenId> join_packed(const PackedRow& row, std::span<const std::vector<TokenId>> items,
                                        TokenId separator) {
  std::vector<TokenId> out;
  for (std::size_t i = row.first; i < row.last; ++i) {
    if (i > row.first) out.push_back(separator);
    out.insert(out.end(), items[i].begin(), items[i].end());
  }
  return out;
}

struct TokenizedExample {
  std::vector<TokenId> input_ids;
  std::vector<TokenId> labels;
  std::vector<int> attention_mask;
  std::size_t prompt_len = 0;

  bool operator==(const TokenizedExample&) const = default;
};

// input_ids = prompt + response + pad; labels = ignore * |prompt| + response
// + ignore * |pad|. `row` names the example in overflow errors.
inline TokenizedExample build_example(std::span<const TokenId> prompt_ids, std::span<const TokenId> response_ids,
                                      std::size_t seq_len, TokenId pad_id, const std::string& row = "row") {
  const std::size_t used = prompt_ids.size() + response_ids.size();
  if (used > seq_len) {
    throw OverflowError(row + ": prompt (" + std::to_string(prompt_ids.size()) + ") + response (" +
                        std::to_string(response_ids.size()) + ") = " + std::to_string(used) +
                        " tokens exceeds seq_len " + std::to_string(seq_len));
  }
  TokenizedExample ex;
  ex.prompt_len = prompt_ids.size();
  ex.input_ids.reserve(seq_len);
  ex.input_ids.insert(ex.input_ids.end(), prompt_ids.begin(), prompt_ids.end());
  ex.input_ids.insert(ex.input_ids.end(), response_ids.begin(), response_ids.end());
  ex.input_ids.resize(seq_len, pad_id);

  ex.labels.assign(prompt_ids.size(), kIgnoreLabel);
  ex.labels.insert(ex.labels.end(), response_ids.begin(), response_ids.end());
  ex.labels.resize(seq_len, kIgnoreLabel);

  ex.attention_mask.assign(used, 1);
  ex.attention_mask.resize(seq_len, 0);
  return ex;
}

inline TokenizedExample build_example(std::span<const TokenId> prompt_ids, std::span<const TokenId> response_ids,
                                      std::size_t seq_len, const TokenizerModel& model,
                                      const std::string& row = "row") {
  return build_example(prompt_ids, response_ids, seq_len, model.specials().pad_id, row);
}

// Checks the label/mask layout of an example. Padding is the trailing run
// where attention_mask is 0.
inline void validate_example(const TokenizedExample& ex, TokenId pad_id) {
  const std::size_t n = ex.input_ids.size();
  if (ex.labels.size() != n || ex.attention_mask.size() != n) {
    throw ValidationError("array length mismatch: input_ids " + std::to_string(n) + ", labels " +
                          std::to_string(ex.labels.size()) + ", attention_mask " +
                          std::to_string(ex.attention_mask.size()));
  }
  if (ex.prompt_len > n) throw ValidationError("prompt_len exceeds sequence length");
  std::size_t used = 0;
  while (used < n && ex.attention_mask[used] == 1) ++used;
  for (std::size_t i = used; i < n; ++i) {
    if (ex.attention_mask[i] != 0) throw ValidationError("attention_mask is not a prefix of ones");
    if (ex.input_ids[i] != pad_id) throw ValidationError("padding position " + std::to_string(i) + " is not pad_id");
    if (ex.labels[i] != kIgnoreLabel) throw ValidationError("padding position " + std::to_string(i) + " has a label");
  }
  if (ex.prompt_len > used) throw ValidationError("prompt_len exceeds unpadded length");
  for (std::size_t i = 0; i < ex.prompt_len; ++i) {
    if (ex.labels[i] != kIgnoreLabel) throw ValidationError("prompt position " + std::to_string(i) + " has a label");
  }
  for (std::size_t i = ex.prompt_len; i < used; ++i) {
    if (ex.labels[i] != ex.input_ids[i]) {
      throw ValidationError("label at " + std::to_string(i) + " differs from input id");
    }
  }
}

}  // namespace tunesmith

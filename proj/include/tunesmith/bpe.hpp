#pragma once

// Byte-level BPE tokenizer.
//
// Vocabulary tokens are written in the byte-to-printable-unicode alphabet used
// by GPT-2 style tokenizers, so every byte sequence has a whitespace-free
// spelling and the plain-text vocab/merges files stay one token per line.
//
// Encoding starts from one symbol per byte and repeatedly applies the
// lowest-ranked merge among adjacent symbol pairs (leftmost on ties) until no
// merge applies. Bytes missing from the vocabulary become unk_id and never
// take part in a merge.

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tunesmith/error.hpp"

namespace tunesmith {

using TokenId = std::int32_t;

inline constexpr TokenId kIgnoreLabel = -100;

struct SpecialTokens {
  // Unset ids are resolved at load time: the conventional token string
  // ("<unk>", "<s>", "</s>") when present in the vocab, otherwise the next
  // free id after the vocabulary.
  std::optional<TokenId> unk_id;
  std::optional<TokenId> bos_id;
  std::optional<TokenId> eos_id;
};

namespace detail {

// GPT-2 byte <-> code point table.
inline const std::array<char32_t, 256>& byte_to_codepoint() {
  static const std::array<char32_t, 256> table = [] {
    std::array<char32_t, 256> t{};
    std::array<bool, 256> printable{};
    auto mark = [&](int lo, int hi) {
      for (int b = lo; b <= hi; ++b) printable[b] = true;
    };
    mark('!', '~');
    mark(0xA1, 0xAC);
    mark(0xAE, 0xFF);
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) t[b] = printable[b] ? static_cast<char32_t>(b) : next++;
    return t;
  }();
  return table;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Decodes UTF-8 into code points; nullopt on malformed input.
inline std::optional<std::vector<char32_t>> utf8_codepoints(std::string_view s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    auto c = static_cast<unsigned char>(s[i]);
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || i + len > s.size()) return std::nullopt;
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    for (int k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) return std::nullopt;
      cp = (cp << 6) | (cc & 0x3F);
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

}  // namespace detail

// Spelling of a raw byte string in the byte-level alphabet.
inline std::string to_byte_units(std::string_view raw) {
  const auto& table = detail::byte_to_codepoint();
  std::string out;
  out.reserve(raw.size() * 2);
  for (unsigned char b : raw) detail::append_utf8(out, table[b]);
  return out;
}

class TokenizerModel {
 public:
  struct Specials {
    TokenId pad_id;
    TokenId unk_id;
    TokenId bos_id;
    TokenId eos_id;
    TokenId ignore_label = kIgnoreLabel;
  };

  // Builds a model from in-memory tables. `vocab` is (token, id) in file
  // order; `merges` is (left, right) in priority order. The 1-based `line`
  // numbers only feed error messages.
  static TokenizerModel from_tables(const std::vector<std::pair<std::string, TokenId>>& vocab,
                                    const std::vector<std::pair<std::string, std::string>>& merges,
                                    const SpecialTokens& specials = {}) {
    TokenizerModel m;
    std::size_t line = 0;
    for (const auto& [token, id] : vocab) {
      ++line;
      m.add_token(token, id, line);
    }
    m.resolve_specials(specials);
    line = 0;
    for (const auto& [left, right] : merges) {
      ++line;
      m.add_merge(left, right, line);
    }
    m.build_byte_table();
    return m;
  }

  // vocab file: `token<TAB>id` per line. merges file: `left<SPACE>right` per
  // line in priority order; a leading `#version` line is ignored.
  static TokenizerModel load(const std::string& vocab_path, const std::string& merges_path,
                             const SpecialTokens& specials = {}) {
    TokenizerModel m;
    {
      std::ifstream in(vocab_path, std::ios::binary);
      if (!in) throw IoError("cannot open vocab file " + vocab_path);
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.rfind('\t');
        if (tab == std::string::npos || tab == 0) {
          throw LoadError("malformed vocab entry at line " + std::to_string(lineno) + " of " + vocab_path);
        }
        TokenId id{};
        try {
          std::size_t used = 0;
          long v = std::stol(line.substr(tab + 1), &used);
          if (used != line.size() - tab - 1 || v < 0) throw std::invalid_argument("id");
          id = static_cast<TokenId>(v);
        } catch (const std::exception&) {
          throw LoadError("bad id at line " + std::to_string(lineno) + " of " + vocab_path);
        }
        m.add_token(line.substr(0, tab), id, lineno);
      }
    }
    m.resolve_specials(specials);
    {
      std::ifstream in(merges_path, std::ios::binary);
      if (!in) throw IoError("cannot open merges file " + merges_path);
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (lineno == 1 && line.starts_with("#version"))) continue;
        auto sp = line.find(' ');
        if (sp == std::string::npos || sp == 0 || sp + 1 == line.size() ||
            line.find(' ', sp + 1) != std::string::npos) {
          throw LoadError("malformed merge at line " + std::to_string(lineno) + " of " + merges_path);
        }
        m.add_merge(line.substr(0, sp), line.substr(sp + 1), lineno);
      }
    }
    m.build_byte_table();
    return m;
  }

  // Regular vocabulary entries; special ids outside the vocab are not counted.
  std::size_t vocab_size() const noexcept { return id_to_token_.size(); }
  std::size_t merge_count() const noexcept { return merge_count_; }
  const Specials& specials() const noexcept { return specials_; }

  std::optional<TokenId> token_id(std::string_view token) const {
    auto it = token_to_id_.find(std::string(token));
    if (it == token_to_id_.end()) return std::nullopt;
    return it->second;
  }

  bool is_special(TokenId id) const noexcept {
    return id == specials_.unk_id || id == specials_.bos_id || id == specials_.eos_id ||
           id == specials_.pad_id;
  }

  std::vector<TokenId> encode(std::string_view text, bool add_bos = false, bool add_eos = false) const {
    std::vector<TokenId> out;
    if (add_bos) out.push_back(specials_.bos_id);
    auto body = merge_bytes(text);
    out.insert(out.end(), body.begin(), body.end());
    if (add_eos) out.push_back(specials_.eos_id);
    return out;
  }

  std::size_t count_tokens(std::string_view text) const { return merge_bytes(text).size(); }

  // Token ids plus the byte offset in `text` where each token starts.
  struct Encoding {
    std::vector<TokenId> ids;
    std::vector<std::size_t> offsets;
  };
  Encoding encode_with_offsets(std::string_view text) const {
    Encoding e;
    e.ids = merge_bytes(text, &e.offsets);
    return e;
  }

  // Special tokens (pad/unk, bos, eos) decode to nothing.
  std::string decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
      if (is_special(id)) continue;
      if (id < 0 || static_cast<std::size_t>(id) >= id_bytes_.size() || !id_known_[id]) {
        throw ValidationError("token id " + std::to_string(id) + " outside vocab of size " +
                    std::to_string(vocab_size()));
      }
      out += id_bytes_[id];
    }
    return out;
  }

 private:
  struct MergeRule {
    std::uint32_t rank;
    TokenId result;
  };

  static std::uint64_t pair_key(TokenId a, TokenId b) noexcept {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
  }

  void add_token(const std::string& token, TokenId id, std::size_t line) {
    if (id_seen_.size() <= static_cast<std::size_t>(id)) id_seen_.resize(id + 1, false);
    if (id_seen_[id]) throw LoadError("duplicate id " + std::to_string(id) + " at line " + std::to_string(line));
    if (token_to_id_.contains(token)) throw LoadError("duplicate token '" + token + "' at line " + std::to_string(line));
    id_seen_[id] = true;
    token_to_id_.emplace(token, id);
    id_to_token_.emplace(id, token);
  }

  void resolve_specials(const SpecialTokens& s) {
    TokenId next_free = 0;
    for (const auto& [id, tok] : id_to_token_) next_free = std::max(next_free, id + 1);
    auto pick = [&](const std::optional<TokenId>& given, std::string_view conventional) {
      if (given) return *given;
      if (auto it = token_to_id_.find(std::string(conventional)); it != token_to_id_.end()) return it->second;
      return next_free++;
    };
    specials_.unk_id = pick(s.unk_id, "<unk>");
    specials_.bos_id = pick(s.bos_id, "<s>");
    specials_.eos_id = pick(s.eos_id, "</s>");
    // LLaMA convention: padding reuses the unknown token.
    specials_.pad_id = specials_.unk_id;
  }

  void add_merge(const std::string& left, const std::string& right, std::size_t line) {
    auto l = token_to_id_.find(left);
    auto r = token_to_id_.find(right);
    if (l == token_to_id_.end() || r == token_to_id_.end()) {
      throw LoadError("missing merge operand '" + (l == token_to_id_.end() ? left : right) + "' at line " +
                      std::to_string(line));
    }
    auto res = token_to_id_.find(left + right);
    if (res == token_to_id_.end()) {
      throw LoadError("merge result '" + left + right + "' not in vocab at line " + std::to_string(line));
    }
    // First occurrence keeps its priority.
    merges_.try_emplace(pair_key(l->second, r->second), MergeRule{static_cast<std::uint32_t>(merge_count_), res->second});
    ++merge_count_;
  }

  void build_byte_table() {
    const auto& table = detail::byte_to_codepoint();
    std::unordered_map<char32_t, unsigned char> reverse;
    for (int b = 0; b < 256; ++b) {
      reverse.emplace(table[b], static_cast<unsigned char>(b));
      std::string spelled;
      detail::append_utf8(spelled, table[b]);
      auto it = token_to_id_.find(spelled);
      byte_ids_[b] = it == token_to_id_.end() ? specials_.unk_id : it->second;
    }
    TokenId max_id = -1;
    for (const auto& [id, tok] : id_to_token_) max_id = std::max(max_id, id);
    id_bytes_.assign(static_cast<std::size_t>(max_id + 1), {});
    id_known_.assign(static_cast<std::size_t>(max_id + 1), false);
    for (const auto& [id, tok] : id_to_token_) {
      id_known_[id] = true;
      auto cps = detail::utf8_codepoints(tok);
      std::string raw;
      bool byte_level = cps.has_value();
      if (cps) {
        for (char32_t cp : *cps) {
          auto it = reverse.find(cp);
          if (it == reverse.end()) {
            byte_level = false;
            break;
          }
          raw.push_back(static_cast<char>(it->second));
        }
      }
      // Tokens outside the byte alphabet decode to their literal spelling.
      id_bytes_[id] = byte_level ? raw : tok;
    }
  }

  std::vector<TokenId> merge_bytes(std::string_view text, std::vector<std::size_t>* offsets = nullptr) const {
    const std::size_t n = text.size();
    std::vector<TokenId> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = byte_ids_[static_cast<unsigned char>(text[i])];
    if (n < 2 || merges_.empty()) {
      if (offsets) {
        offsets->resize(n);
        for (std::size_t i = 0; i < n; ++i) (*offsets)[i] = i;
      }
      return ids;
    }

    std::vector<std::ptrdiff_t> prev(n), next(n);
    for (std::size_t i = 0; i < n; ++i) {
      prev[i] = static_cast<std::ptrdiff_t>(i) - 1;
      next[i] = i + 1 < n ? static_cast<std::ptrdiff_t>(i + 1) : -1;
    }
    std::vector<bool> alive(n, true);

    struct Candidate {
      std::uint32_t rank;
      std::ptrdiff_t pos;
      TokenId left;
      TokenId right;
      bool operator>(const Candidate& o) const noexcept {
        return rank != o.rank ? rank > o.rank : pos > o.pos;
      }
    };
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
    auto consider = [&](std::ptrdiff_t pos) {
      if (pos < 0) return;
      std::ptrdiff_t nx = next[pos];
      if (nx < 0) return;
      TokenId a = ids[pos], b = ids[nx];
      if (a == specials_.unk_id || b == specials_.unk_id) return;
      auto it = merges_.find(pair_key(a, b));
      if (it != merges_.end()) heap.push({it->second.rank, pos, a, b});
    };
    for (std::size_t i = 0; i + 1 < n; ++i) consider(static_cast<std::ptrdiff_t>(i));

    while (!heap.empty()) {
      Candidate c = heap.top();
      heap.pop();
      if (!alive[c.pos]) continue;
      std::ptrdiff_t nx = next[c.pos];
      if (nx < 0 || ids[c.pos] != c.left || ids[nx] != c.right) continue;
      ids[c.pos] = merges_.at(pair_key(c.left, c.right)).result;
      alive[nx] = false;
      next[c.pos] = next[nx];
      if (next[nx] >= 0) prev[next[nx]] = c.pos;
      consider(prev[c.pos]);
      consider(c.pos);
    }

    std::vector<TokenId> out;
    if (offsets) offsets->clear();
    for (std::ptrdiff_t i = 0; i >= 0; i = next[i]) {
      out.push_back(ids[i]);
      if (offsets) offsets->push_back(static_cast<std::size_t>(i));
    }
    return out;
  }

  std::unordered_map<std::string, TokenId> token_to_id_;
  std::unordered_map<TokenId, std::string> id_to_token_;
  std::vector<bool> id_seen_;
  std::unordered_map<std::uint64_t, MergeRule> merges_;
  std::size_t merge_count_ = 0;
  std::array<TokenId, 256> byte_ids_{};
  std::vector<std::string> id_bytes_;
  std::vector<bool> id_known_;
  Specials specials_{};
};

inline TokenizerModel load_tokenizer(const std::string& vocab_path, const std::string& merges_path,
                                     const SpecialTokens& specials = {}) {
  return TokenizerModel::load(vocab_path, merges_path, specials);
}

}  // namespace tunesmith

#pragma once

// Function-level splitting of Java and Python sources.
//
// Java: comments and literals are blanked out, then a brace-matching scan
// tracks class scopes and picks up every method body declared directly in a
// class. Python: a line lexer marks logical line starts (outside strings and
// brackets) and blocks are delimited by indentation. In both languages inner
// functions, lambdas and anonymous classes stay inside their parent's body.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tunesmith/document.hpp"
#include "tunesmith/parallel.hpp"
#include "tunesmith/report.hpp"

namespace tunesmith {

enum class Language { java, python };

inline std::string_view to_string(Language l) { return l == Language::java ? "java" : "python"; }

inline std::optional<Language> parse_language(std::string_view s) {
  if (s == "java") return Language::java;
  if (s == "python") return Language::python;
  return std::nullopt;
}

struct LineSpan {
  int start = 1;
  int end = 1;

  bool operator==(const LineSpan&) const = default;
};

struct CodeUnit {
  Language language = Language::java;
  std::string file_path;
  std::string qualified_name;
  std::string signature;
  std::string body;
  std::optional<std::string> docstring;
  std::optional<std::string> leading_comments;
  LineSpan line_span;

  bool operator==(const CodeUnit&) const = default;
};

// Raised by the per-language extractors when the heuristics cannot make
// sense of a file; callers turn it into a skipped-file report entry.
class MalformedSource : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string collapse_ws(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
    } else {
      if (space && !out.empty()) out.push_back(' ');
      space = false;
      out.push_back(c);
    }
  }
  return out;
}

inline int line_of(const std::vector<std::size_t>& line_starts, std::size_t offset) {
  auto it = std::upper_bound(line_starts.begin(), line_starts.end(), offset);
  return static_cast<int>(it - line_starts.begin());
}

inline std::vector<std::size_t> line_starts_of(std::string_view src) {
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] == '\n') starts.push_back(i + 1);
  }
  return starts;
}

inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' ||
         static_cast<unsigned char>(c) >= 0x80;
}

// Strips the leading marker from each line of a comment and drops blank
// edge lines.
inline std::string clean_comment_lines(const std::vector<std::string>& lines) {
  std::size_t first = 0, last = lines.size();
  while (first < last && is_blank(lines[first])) ++first;
  while (last > first && is_blank(lines[last - 1])) --last;
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) out.push_back('\n');
    out.append(trim(lines[i]));
  }
  return out;
}

// ---------------------------------------------------------------- java

struct JavaComment {
  std::size_t begin;  // offset of the opening marker
  std::size_t end;    // one past the closing marker (line comments: before '\n')
  bool line;
  bool doc;
};

struct JavaLexed {
  std::string masked;  // comments and literal contents replaced by spaces
  std::vector<JavaComment> comments;
};

inline JavaLexed lex_java(std::string_view src) {
  JavaLexed out{std::string(src), {}};
  auto& m = out.masked;
  auto blank = [&](std::size_t from, std::size_t to) {
    for (std::size_t k = from; k < to; ++k) {
      if (m[k] != '\n') m[k] = ' ';
    }
  };
  std::size_t i = 0;
  const std::size_t n = src.size();
  while (i < n) {
    char c = src[i];
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      std::size_t e = src.find('\n', i);
      if (e == std::string_view::npos) e = n;
      out.comments.push_back({i, e, true, false});
      blank(i, e);
      i = e;
    } else if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      std::size_t e = src.find("*/", i + 2);
      if (e == std::string_view::npos) throw MalformedSource("unterminated block comment");
      e += 2;
      bool doc = i + 2 < n && src[i + 2] == '*' && e - i > 4;
      out.comments.push_back({i, e, false, doc});
      blank(i, e);
      i = e;
    } else if (c == '"' && src.substr(i, 3) == "\"\"\"") {
      std::size_t e = i + 3;
      while (true) {
        e = src.find("\"\"\"", e);
        if (e == std::string_view::npos) throw MalformedSource("unterminated text block");
        std::size_t bs = 0;
        while (e - bs > i + 3 && src[e - 1 - bs] == '\\') ++bs;
        if (bs % 2 == 0) break;
        ++e;
      }
      blank(i + 3, e);
      i = e + 3;
    } else if (c == '"' || c == '\'') {
      std::size_t e = i + 1;
      while (e < n && src[e] != c) {
        if (src[e] == '\n') throw MalformedSource("unterminated literal");
        e += src[e] == '\\' ? 2 : 1;
      }
      if (e >= n) throw MalformedSource("unterminated literal");
      blank(i + 1, e);
      i = e + 1;
    } else {
      ++i;
    }
  }
  return out;
}

inline std::size_t match_brace(const std::string& masked, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < masked.size(); ++i) {
    if (masked[i] == '{') ++depth;
    else if (masked[i] == '}' && --depth == 0) return i;
  }
  throw MalformedSource("unbalanced braces");
}

// Drops leading annotations (`@Foo`, `@Foo(...)`) from a header.
inline std::string_view strip_annotations(std::string_view h) {
  h = trim(h);
  while (h.starts_with("@") && !h.starts_with("@interface")) {
    std::size_t k = 1;
    while (k < h.size() && (is_ident_char(h[k]) || h[k] == '.')) ++k;
    while (k < h.size() && std::isspace(static_cast<unsigned char>(h[k]))) ++k;
    if (k < h.size() && h[k] == '(') {
      int depth = 0;
      for (; k < h.size(); ++k) {
        if (h[k] == '(') ++depth;
        else if (h[k] == ')' && --depth == 0) {
          ++k;
          break;
        }
      }
    }
    h = trim(h.substr(k));
  }
  return h;
}

inline std::vector<std::string> words_of(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_ident_char(s[i])) {
      std::size_t j = i;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      out.emplace_back(s.substr(i, j - i));
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

// Name declared by a type header (`class Foo<T> extends ...`), if any.
inline std::optional<std::string> java_type_name(std::string_view header) {
  auto paren = header.find('(');
  auto words = words_of(header.substr(0, paren));
  for (std::size_t k = 0; k + 1 < words.size(); ++k) {
    if (words[k] == "class" || words[k] == "interface" || words[k] == "enum" || words[k] == "record") {
      return words[k + 1];
    }
  }
  return std::nullopt;
}

// Method name when `header` declares a method with a body.
inline std::optional<std::string> java_method_name(std::string_view header, std::string_view enclosing) {
  auto h = strip_annotations(header);
  auto paren = h.find('(');
  if (paren == std::string_view::npos) return std::nullopt;
  auto before = h.substr(0, paren);
  if (before.find('=') != std::string_view::npos) return std::nullopt;
  auto words = words_of(before);
  if (words.empty()) return std::nullopt;
  const std::string& name = words.back();
  static const char* const kControl[] = {"if", "for", "while", "switch", "catch", "synchronized",
                                         "try", "return", "new", "else", "do"};
  for (const char* kw : kControl) {
    if (name == kw) return std::nullopt;
  }
  if (std::isdigit(static_cast<unsigned char>(name[0]))) return std::nullopt;
  // A declaration needs a return type or modifier before the name, unless it
  // is a constructor.
  bool has_prefix = trim(before).size() > name.size();
  if (!has_prefix && name != enclosing) return std::nullopt;
  return name;
}

inline std::vector<CodeUnit> extract_java(std::string_view src, const std::string& file_path) {
  JavaLexed lx = lex_java(src);
  const std::string& m = lx.masked;
  const auto starts = line_starts_of(src);
  std::vector<CodeUnit> units;

  struct Scope {
    std::string name;  // empty for the file scope
  };
  std::vector<Scope> scopes{{""}};
  auto qualified = [&](const std::string& leaf) {
    std::string q;
    for (std::size_t k = 1; k < scopes.size(); ++k) q += scopes[k].name + ".";
    return q + leaf;
  };

  auto comments_before = [&](std::size_t sig) {
    std::optional<std::string> doc;
    std::vector<std::string> line_comments;
    std::size_t cursor = sig;
    auto gap_ok = [&](std::size_t from, std::size_t to) {
      int newlines = 0;
      for (std::size_t k = from; k < to; ++k) {
        if (!std::isspace(static_cast<unsigned char>(src[k]))) return false;
        if (src[k] == '\n') ++newlines;
      }
      return newlines <= 1;
    };
    auto it = std::lower_bound(lx.comments.begin(), lx.comments.end(), sig,
                               [](const JavaComment& c, std::size_t off) { return c.begin < off; });
    while (it != lx.comments.begin()) {
      const auto& c = *std::prev(it);
      if (!gap_ok(c.end, cursor)) break;
      if (c.line) {
        // Trailing comment on a code line is not a leading comment.
        std::size_t ls = starts[line_of(starts, c.begin) - 1];
        if (!is_blank(src.substr(ls, c.begin - ls))) break;
        std::string_view text = src.substr(c.begin + 2, c.end - c.begin - 2);
        while (text.starts_with("/")) text.remove_prefix(1);
        line_comments.insert(line_comments.begin(), std::string(trim(text)));
      } else if (c.doc && !doc && line_comments.empty()) {
        std::vector<std::string> lines;
        std::string_view inner = src.substr(c.begin + 3, c.end - c.begin - 5);
        for (auto line : split_lines(inner)) {
          auto t = trim(line);
          if (t.starts_with("*")) t.remove_prefix(1);
          lines.emplace_back(trim(t));
        }
        doc = clean_comment_lines(lines);
      } else {
        break;
      }
      cursor = c.begin;
      --it;
    }
    std::optional<std::string> leading;
    if (!line_comments.empty()) leading = clean_comment_lines(line_comments);
    if (doc && doc->empty()) doc.reset();
    if (leading && leading->empty()) leading.reset();
    return std::pair{doc, leading};
  };

  std::size_t seg = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    char c = m[i];
    if (c == ';') {
      seg = i + 1;
    } else if (c == '}') {
      if (scopes.size() == 1) throw MalformedSource("unbalanced braces");
      scopes.pop_back();
      seg = i + 1;
    } else if (c == '{') {
      std::string_view header = std::string_view(m).substr(seg, i - seg);
      if (auto type = java_type_name(strip_annotations(header))) {
        scopes.push_back({*type});
        seg = i + 1;
        continue;
      }
      std::size_t close = match_brace(m, i);
      std::optional<std::string> method;
      if (scopes.size() > 1) method = java_method_name(header, scopes.back().name);
      if (method) {
        std::size_t sig = seg;
        while (sig < i && std::isspace(static_cast<unsigned char>(m[sig]))) ++sig;
        CodeUnit u;
        u.language = Language::java;
        u.file_path = file_path;
        u.qualified_name = qualified(*method);
        u.signature = collapse_ws(src.substr(sig, i - sig));
        u.body = std::string(src.substr(sig, close + 1 - sig));
        u.line_span = {line_of(starts, sig), line_of(starts, close)};
        auto [doc, leading] = comments_before(sig);
        u.docstring = std::move(doc);
        u.leading_comments = std::move(leading);
        units.push_back(std::move(u));
      }
      // Method bodies, initializers and enum constant bodies are opaque.
      i = close;
      seg = close + 1;
    }
  }
  if (scopes.size() != 1) throw MalformedSource("unbalanced braces");
  return units;
}

// -------------------------------------------------------------- python

struct PyLine {
  std::string_view text;  // without the line terminator
  bool logical_start = true;
  int indent = 0;
  bool blank = false;
  bool comment_only = false;
};

inline std::vector<PyLine> lex_python(std::string_view src) {
  std::vector<PyLine> lines;
  std::size_t pos = 0;
  int depth = 0;
  std::string_view triple;  // active triple-quote delimiter
  bool continuation = false;
  while (pos < src.size()) {
    std::size_t nl = src.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? src.size() : nl;
    PyLine pl;
    pl.text = src.substr(pos, end - pos);
    pl.logical_start = triple.empty() && depth == 0 && !continuation;
    int indent = 0;
    std::size_t k = 0;
    for (; k < pl.text.size() && (pl.text[k] == ' ' || pl.text[k] == '\t'); ++k) indent += pl.text[k] == '\t' ? 8 - indent % 8 : 1;
    pl.indent = indent;
    auto stripped = trim(pl.text);
    pl.blank = stripped.empty();
    pl.comment_only = stripped.starts_with("#");
    continuation = false;

    const std::string_view t = pl.text;
    for (std::size_t i = 0; i < t.size();) {
      if (!triple.empty()) {
        if (t[i] == '\\') {
          i += 2;
          continue;
        }
        if (t.substr(i, 3) == triple) {
          i += 3;
          triple = {};
          continue;
        }
        ++i;
        continue;
      }
      char c = t[i];
      if (c == '#') break;
      if (c == '\'' || c == '"') {
        if (t.substr(i, 3) == "'''" || t.substr(i, 3) == "\"\"\"") {
          triple = c == '\'' ? std::string_view("'''") : std::string_view("\"\"\"");
          i += 3;
          continue;
        }
        std::size_t e = i + 1;
        while (e < t.size() && t[e] != c) e += t[e] == '\\' ? 2 : 1;
        if (e >= t.size()) {
          // Single-quoted literal continued with a trailing backslash.
          if (!t.empty() && t.back() == '\\') {
            continuation = true;
            break;
          }
          throw MalformedSource("unterminated string literal");
        }
        i = e + 1;
        continue;
      }
      if (c == '(' || c == '[' || c == '{') ++depth;
      if (c == ')' || c == ']' || c == '}') {
        if (--depth < 0) throw MalformedSource("unbalanced brackets");
      }
      if (c == '\\' && i + 1 == t.size()) continuation = true;
      ++i;
    }
    lines.push_back(pl);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (!triple.empty()) throw MalformedSource("unterminated triple-quoted string");
  if (depth != 0) throw MalformedSource("unbalanced brackets");
  return lines;
}

inline bool starts_with_word(std::string_view s, std::string_view word) {
  return s.starts_with(word) && s.size() > word.size() &&
         (s[word.size()] == ' ' || s[word.size()] == '\t' || s[word.size()] == '(' || s[word.size()] == ':');
}

inline std::string py_name_after(std::string_view s, std::string_view keyword) {
  s.remove_prefix(keyword.size());
  s = trim(s);
  std::size_t k = 0;
  while (k < s.size() && is_ident_char(s[k])) ++k;
  return std::string(s.substr(0, k));
}

// inspect.cleandoc semantics.
inline std::string clean_docstring(std::string_view raw) {
  auto lines = split_lines(raw);
  std::vector<std::string> out;
  std::optional<int> margin;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto t = lines[i];
    if (is_blank(t)) continue;
    int ind = 0;
    while (ind < static_cast<int>(t.size()) && (t[ind] == ' ' || t[ind] == '\t')) ++ind;
    margin = margin ? std::min(*margin, ind) : ind;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view t = lines[i];
    if (i == 0) {
      out.emplace_back(trim(t));
    } else {
      std::size_t cut = std::min<std::size_t>(margin.value_or(0), t.size());
      std::string_view rest = t.substr(cut);
      while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.back()))) rest.remove_suffix(1);
      out.emplace_back(rest);
    }
  }
  while (!out.empty() && is_blank(out.front())) out.erase(out.begin());
  while (!out.empty() && is_blank(out.back())) out.pop_back();
  std::string joined;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) joined.push_back('\n');
    joined += out[i];
  }
  return joined;
}

// Docstring of the block whose body starts on line `first` (0-based).
inline std::optional<std::string> py_docstring(const std::vector<PyLine>& lines, std::size_t first,
                                               std::size_t end) {
  while (first < end && (lines[first].blank || lines[first].comment_only)) ++first;
  if (first >= end) return std::nullopt;
  std::string_view t = trim(lines[first].text);
  std::size_t k = 0;
  while (k < t.size() && k < 2 && std::strchr("rRuU", t[k]) != nullptr) ++k;
  t.remove_prefix(k);
  if (t.empty() || (t[0] != '"' && t[0] != '\'')) return std::nullopt;
  std::string_view quote = t.substr(0, 3) == "\"\"\"" || t.substr(0, 3) == "'''" ? t.substr(0, 3) : t.substr(0, 1);

  // Join the physical lines the literal spans.
  std::string text;
  for (std::size_t i = first; i < end; ++i) {
    if (i > first) text.push_back('\n');
    text.append(i == first ? t : lines[i].text);
  }
  std::size_t close = text.find(quote, quote.size());
  while (close != std::string::npos && close > 0 && text[close - 1] == '\\') close = text.find(quote, close + 1);
  if (close == std::string::npos) return std::nullopt;
  auto doc = clean_docstring(std::string_view(text).substr(quote.size(), close - quote.size()));
  if (doc.empty()) return std::nullopt;
  return doc;
}

inline std::vector<CodeUnit> extract_python(std::string_view src, const std::string& file_path) {
  const auto lines = lex_python(src);
  std::vector<CodeUnit> units;

  auto is_code = [&](std::size_t i) {
    return lines[i].logical_start && !lines[i].blank && !lines[i].comment_only;
  };

  // Lines of the compound statement headed at `head`: returns (body_first, end).
  auto block_of = [&](std::size_t head, std::size_t limit) {
    std::size_t body = head + 1;
    while (body < limit && !lines[body].logical_start) ++body;
    std::size_t j = body;
    while (j < limit && !(is_code(j) && lines[j].indent <= lines[head].indent)) ++j;
    std::size_t last = j;
    while (last > body && (lines[last - 1].blank ||
                           (lines[last - 1].comment_only && lines[last - 1].logical_start &&
                            lines[last - 1].indent <= lines[head].indent))) {
      --last;
    }
    return std::pair{body, std::max(last, body)};
  };

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  auto scan = [&](auto&& self, std::size_t begin, std::size_t limit, const std::string& prefix) -> void {
    std::size_t decorator_start = kNone;  // first line of pending decorators
    for (std::size_t i = begin; i < limit; ++i) {
      if (!is_code(i)) continue;
      std::string_view t = trim(lines[i].text);
      if (t.starts_with("@")) {
        if (decorator_start == kNone) decorator_start = i;
        continue;
      }
      bool is_def = starts_with_word(t, "def") || (starts_with_word(t, "async") && trim(t.substr(5)).starts_with("def"));
      bool is_class = starts_with_word(t, "class");
      if (!is_def && !is_class) {
        decorator_start = kNone;
        continue;
      }
      auto [body, end] = block_of(i, limit);
      if (is_class) {
        self(self, body, end, prefix + py_name_after(t, "class") + ".");
      } else {
        std::string_view def_part = t.starts_with("async") ? trim(t.substr(5)) : t;
        std::size_t first = decorator_start == kNone ? i : decorator_start;
        std::size_t last_line = std::max(end, body) - 1;
        if (last_line < i) last_line = i;  // one-line def
        CodeUnit u;
        u.language = Language::python;
        u.file_path = file_path;
        u.qualified_name = prefix + py_name_after(def_part, "def");
        std::string header;
        for (std::size_t h = i; h < body; ++h) {
          if (h > i) header.push_back(' ');
          header.append(lines[h].text);
        }
        u.signature = collapse_ws(header);
        std::string text;
        for (std::size_t h = first; h <= last_line; ++h) {
          if (h > first) text.push_back('\n');
          text.append(lines[h].text);
        }
        u.body = std::move(text);
        u.line_span = {static_cast<int>(first) + 1, static_cast<int>(last_line) + 1};
        u.docstring = py_docstring(lines, body, end);
        std::vector<std::string> comments;
        for (std::size_t c = first; c > 0 && lines[c - 1].comment_only && lines[c - 1].logical_start; --c) {
          std::string_view ct = trim(lines[c - 1].text);
          while (ct.starts_with("#")) ct.remove_prefix(1);
          comments.insert(comments.begin(), std::string(trim(ct)));
        }
        if (!comments.empty()) {
          auto joined = clean_comment_lines(comments);
          if (!joined.empty()) u.leading_comments = std::move(joined);
        }
        if (u.qualified_name.empty() || u.qualified_name.back() == '.') throw MalformedSource("def without a name");
        units.push_back(std::move(u));
      }
      decorator_start = kNone;
      i = std::max(end, body) - 1;
    }
  };
  scan(scan, 0, lines.size(), "");
  return units;
}

}  // namespace detail

inline std::vector<CodeUnit> extract_code_units_from_source(std::string_view source, Language lang,
                                                            const std::string& file_path) {
  return lang == Language::java ? detail::extract_java(source, file_path)
                                : detail::extract_python(source, file_path);
}

struct CodeExtraction {
  std::vector<CodeUnit> units;
  Report skipped;  // `<path>\t<reason>`
};

namespace detail {

inline std::optional<Language> language_of(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  if (ext == ".java") return Language::java;
  if (ext == ".py") return Language::python;
  return std::nullopt;
}

// Regular files under root in lexicographic relative-path order; hidden
// entries (".git", ".venv", ...) are skipped.
inline std::vector<std::filesystem::path> list_files(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  std::error_code ec;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw IoError("cannot read directory " + root.string() + ": " + ec.message());
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    const auto name = it->path().filename().string();
    if (name.starts_with(".")) {
      if (it->is_directory(ec)) it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file(ec) && !it->is_symlink(ec)) files.push_back(fs::relative(it->path(), root));
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
  return files;
}

inline std::optional<std::string> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return ss.str();
}

}  // namespace detail

// One CodeUnit per method/function under repo_root, in lexicographic file
// order. Files that cannot be read or defeat the extractor are listed in
// `skipped` and never abort the walk.
inline CodeExtraction extract_code_units(const std::filesystem::path& repo_root,
                                         const std::vector<Language>& languages = {Language::java, Language::python},
                                         std::size_t max_threads = 4) {
  CodeExtraction out;
  std::vector<std::pair<std::filesystem::path, Language>> files;
  for (const auto& rel : detail::list_files(repo_root)) {
    auto lang = detail::language_of(rel);
    if (lang && std::find(languages.begin(), languages.end(), *lang) != languages.end()) files.emplace_back(rel, *lang);
  }
  struct FileResult {
    std::vector<CodeUnit> units;
    std::optional<std::string> skip_reason;
  };
  auto results = parallel_map(files.size(), max_threads, [&](std::size_t k) {
    const auto& [rel, lang] = files[k];
    FileResult r;
    auto text = detail::read_file(repo_root / rel);
    if (!text) {
      r.skip_reason = "unreadable";
      return r;
    }
    try {
      r.units = extract_code_units_from_source(*text, lang, rel.generic_string());
    } catch (const MalformedSource& e) {
      r.skip_reason = std::string("malformed: ") + e.what();
    }
    return r;
  });
  for (std::size_t k = 0; k < files.size(); ++k) {
    if (results[k].skip_reason) {
      out.skipped.add(files[k].first.generic_string(), *results[k].skip_reason);
    } else {
      for (auto& u : results[k].units) out.units.push_back(std::move(u));
    }
  }
  return out;
}

struct CorpusStats {
  std::size_t function_count = 0;
  std::size_t total_bytes = 0;
  std::size_t java_count = 0;
  std::size_t python_count = 0;

  bool operator==(const CorpusStats&) const = default;
};

inline CorpusStats corpus_stats(const std::vector<CodeUnit>& units) {
  CorpusStats s;
  for (const auto& u : units) {
    ++s.function_count;
    s.total_bytes += u.body.size();
    (u.language == Language::java ? s.java_count : s.python_count) += 1;
  }
  return s;
}

}  // namespace tunesmith

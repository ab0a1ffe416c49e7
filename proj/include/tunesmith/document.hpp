#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace tunesmith {

struct HeadingEntry {
  int level = 1;
  std::string title;

  bool operator==(const HeadingEntry&) const = default;
};

using HeadingPath = std::vector<HeadingEntry>;

struct Block {
  HeadingPath heading_path;
  std::string text;

  bool operator==(const Block&) const = default;
};

struct Document {
  std::string id;
  std::string source_path;
  std::vector<Block> blocks;

  bool operator==(const Document&) const = default;
};

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    auto line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  if (!lines.empty() && !lines.back().empty() && lines.back().back() == '\r') lines.back().remove_suffix(1);
  return lines;
}

inline bool is_blank(std::string_view s) {
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// ATX heading: up to 3 spaces, 1-6 '#', then space or end of line.
inline bool parse_atx_heading(std::string_view line, HeadingEntry& out) {
  std::size_t i = 0;
  while (i < line.size() && i < 3 && line[i] == ' ') ++i;
  std::size_t hashes = 0;
  while (i + hashes < line.size() && line[i + hashes] == '#') ++hashes;
  if (hashes == 0 || hashes > 6) return false;
  std::size_t rest = i + hashes;
  if (rest < line.size() && line[rest] != ' ' && line[rest] != '\t') return false;
  std::string_view title = trim(line.substr(rest));
  // Optional closing sequence of '#'.
  std::size_t end = title.size();
  while (end > 0 && title[end - 1] == '#') --end;
  if (end == 0) {
    title = {};
  } else if (end < title.size() && (title[end - 1] == ' ' || title[end - 1] == '\t')) {
    title = trim(title.substr(0, end));
  }
  out.level = static_cast<int>(hashes);
  out.title = std::string(title);
  return true;
}

inline bool is_fence(std::string_view line) {
  auto t = trim(line);
  return t.starts_with("```") || t.starts_with("~~~");
}

}  // namespace detail

// One Block per maximal run of body text under a fixed heading path. Lines
// inside fenced code blocks are body text even when they start with '#'.
inline Document parse_markdown(std::string_view text, std::string doc_id, std::string source_path = {}) {
  Document doc{std::move(doc_id), std::move(source_path), {}};
  HeadingPath path;
  std::vector<std::string_view> run;
  bool in_fence = false;

  auto flush = [&] {
    std::size_t first = 0, last = run.size();
    while (first < last && detail::is_blank(run[first])) ++first;
    while (last > first && detail::is_blank(run[last - 1])) --last;
    if (first < last) {
      std::string body;
      for (std::size_t i = first; i < last; ++i) {
        if (i > first) body.push_back('\n');
        body.append(run[i]);
      }
      doc.blocks.push_back({path, std::move(body)});
    }
    run.clear();
  };

  for (auto line : detail::split_lines(text)) {
    if (detail::is_fence(line)) in_fence = !in_fence;
    HeadingEntry heading;
    if (!in_fence && detail::parse_atx_heading(line, heading)) {
      flush();
      while (!path.empty() && path.back().level >= heading.level) path.pop_back();
      path.push_back(std::move(heading));
      continue;
    }
    run.push_back(line);
  }
  flush();
  return doc;
}

// Plain text has no structure: the whole file is one headingless block.
inline Document parse_plain_text(std::string_view text, std::string doc_id, std::string source_path = {}) {
  Document doc{std::move(doc_id), std::move(source_path), {}};
  auto lines = detail::split_lines(text);
  std::size_t first = 0, last = lines.size();
  while (first < last && detail::is_blank(lines[first])) ++first;
  while (last > first && detail::is_blank(lines[last - 1])) --last;
  if (first < last) {
    std::string body;
    for (std::size_t i = first; i < last; ++i) {
      if (i > first) body.push_back('\n');
      body.append(lines[i]);
    }
    doc.blocks.push_back({{}, std::move(body)});
  }
  return doc;
}

}  // namespace tunesmith

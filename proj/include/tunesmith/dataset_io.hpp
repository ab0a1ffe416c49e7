#pragma once

// Dataset serialization: JSONL and CSV rows, tokenized examples, and the
// corpus manifest written by `ingest`.
//
// Text is expected to be UTF-8; invalid sequences (possible only when a token
// window splits a character) are written as U+FFFD.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tunesmith/chunking.hpp"
#include "tunesmith/code_units.hpp"
#include "tunesmith/dataset.hpp"
#include "tunesmith/document.hpp"
#include "tunesmith/error.hpp"
#include "tunesmith/report.hpp"

namespace tunesmith {

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

inline std::string dump(const nlohmann::ordered_json& j) {
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

// Calls fn(json, lineno) for every non-blank line.
template <typename Fn>
void for_each_json_line(const std::string& path, Fn&& fn) {
  auto in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      fn(j, lineno);
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace detail

// ---- rows: JSONL ----

inline nlohmann::ordered_json row_to_json(const DatasetRow& row) {
  nlohmann::ordered_json j;
  j["recipe"] = std::string(to_string(row.recipe));
  if (row.instruction) j["instruction"] = *row.instruction;
  if (row.context) j["context"] = *row.context;
  j["response"] = row.response;
  j["rendered"] = row.rendered;
  return j;
}

inline DatasetRow row_from_json(const nlohmann::json& j) {
  DatasetRow row;
  auto recipe = parse_recipe(j.at("recipe").get<std::string>());
  if (!recipe) throw ValidationError("unknown recipe " + j.at("recipe").dump());
  row.recipe = *recipe;
  if (j.contains("instruction")) row.instruction = j["instruction"].get<std::string>();
  if (j.contains("context")) row.context = j["context"].get<std::string>();
  row.response = j.at("response").get<std::string>();
  row.rendered = j.at("rendered").get<std::string>();
  return row;
}

inline std::size_t write_jsonl(const std::vector<DatasetRow>& rows, const std::string& path) {
  auto out = detail::open_out(path);
  for (const auto& r : rows) out << detail::dump(row_to_json(r)) << '\n';
  detail::finish(out, path);
  return rows.size();
}

inline std::vector<DatasetRow> read_jsonl(const std::string& path) {
  std::vector<DatasetRow> rows;
  detail::for_each_json_line(path, [&](const nlohmann::json& j, std::size_t lineno) {
    try {
      rows.push_back(row_from_json(j));
    } catch (const ValidationError& e) {
      throw LoadError(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  });
  return rows;
}

// ---- rows: CSV (RFC 4180) ----

inline constexpr std::string_view kCsvHeader = "recipe,instruction,context,response";

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// Records of a CSV text; quoted fields may contain separators and newlines.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  while (i < text.size()) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        quoted = false;
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      end_field();
      records.push_back(std::move(record));
      record.clear();
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw LoadError("unterminated quoted CSV field");
  if (field_started || !field.empty() || !record.empty()) {
    end_field();
    records.push_back(std::move(record));
  }
  return records;
}

// Absent instruction/context are written as empty fields. CRLF record ends.
inline std::size_t write_csv(const std::vector<DatasetRow>& rows, const std::string& path) {
  auto out = detail::open_out(path);
  out << kCsvHeader << "\r\n";
  for (const auto& r : rows) {
    out << csv_field(to_string(r.recipe)) << ',' << csv_field(r.instruction.value_or("")) << ','
        << csv_field(r.context.value_or("")) << ',' << csv_field(r.response) << "\r\n";
  }
  detail::finish(out, path);
  return rows.size();
}

// The rendered column is not stored; it is rebuilt with `tmpl`.
inline std::vector<DatasetRow> read_csv(const std::string& path, const PromptTemplate& tmpl = {}) {
  auto in = detail::open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto records = parse_csv(ss.str());
  if (records.empty()) throw LoadError(path + ": missing CSV header");
  if (records[0] != std::vector<std::string>{"recipe", "instruction", "context", "response"}) {
    throw LoadError(path + ": CSV header must be " + std::string(kCsvHeader));
  }
  std::vector<DatasetRow> rows;
  for (std::size_t k = 1; k < records.size(); ++k) {
    const auto& f = records[k];
    if (f.size() != 4) throw LoadError(path + " record " + std::to_string(k) + ": expected 4 fields");
    auto recipe = parse_recipe(f[0]);
    if (!recipe) throw LoadError(path + " record " + std::to_string(k) + ": unknown recipe '" + f[0] + "'");
    std::optional<std::string> instruction, context;
    if (!f[1].empty()) instruction = f[1];
    if (!f[2].empty()) context = f[2];
    rows.push_back(make_row(*recipe, instruction, context, f[3], tmpl));
  }
  return rows;
}

// ---- tokenized examples ----

inline std::size_t write_tokenized(const std::vector<TokenizedExample>& examples, TokenId pad_id,
                                   const std::string& path) {
  for (std::size_t k = 0; k < examples.size(); ++k) {
    try {
      validate_example(examples[k], pad_id);
    } catch (const ValidationError& e) {
      throw ValidationError("example " + std::to_string(k) + ": " + e.what());
    }
  }
  auto out = detail::open_out(path);
  for (const auto& ex : examples) {
    nlohmann::ordered_json j;
    j["input_ids"] = ex.input_ids;
    j["labels"] = ex.labels;
    j["attention_mask"] = ex.attention_mask;
    j["prompt_len"] = ex.prompt_len;
    out << detail::dump(j) << '\n';
  }
  detail::finish(out, path);
  return examples.size();
}

inline std::vector<TokenizedExample> read_tokenized(const std::string& path) {
  std::vector<TokenizedExample> out;
  detail::for_each_json_line(path, [&](const nlohmann::json& j, std::size_t lineno) {
    TokenizedExample ex;
    ex.input_ids = j.at("input_ids").get<std::vector<TokenId>>();
    ex.labels = j.at("labels").get<std::vector<TokenId>>();
    ex.attention_mask = j.at("attention_mask").get<std::vector<int>>();
    ex.prompt_len = j.value("prompt_len", std::size_t{0});
    if (ex.labels.size() != ex.input_ids.size() || ex.attention_mask.size() != ex.input_ids.size()) {
      throw LoadError(path + " line " + std::to_string(lineno) + ": array length mismatch");
    }
    out.push_back(std::move(ex));
  });
  return out;
}

// ---- corpus manifest ----

struct Manifest {
  std::string docs_root;
  std::string code_root;
  std::vector<Document> documents;
  std::vector<CodeUnit> code_units;
};

inline nlohmann::ordered_json document_to_json(const Document& d) {
  nlohmann::ordered_json j;
  j["type"] = "document";
  j["id"] = d.id;
  j["source_path"] = d.source_path;
  auto blocks = nlohmann::ordered_json::array();
  for (const auto& b : d.blocks) {
    auto path = nlohmann::ordered_json::array();
    for (const auto& h : b.heading_path) path.push_back(nlohmann::ordered_json::array({h.level, h.title}));
    blocks.push_back({{"heading_path", path}, {"text", b.text}});
  }
  j["blocks"] = blocks;
  return j;
}

inline Document document_from_json(const nlohmann::json& j) {
  Document d;
  d.id = j.at("id").get<std::string>();
  d.source_path = j.value("source_path", std::string());
  for (const auto& b : j.at("blocks")) {
    Block block;
    for (const auto& h : b.at("heading_path")) block.heading_path.push_back({h.at(0).get<int>(), h.at(1).get<std::string>()});
    block.text = b.at("text").get<std::string>();
    d.blocks.push_back(std::move(block));
  }
  return d;
}

inline nlohmann::ordered_json code_unit_to_json(const CodeUnit& u) {
  nlohmann::ordered_json j;
  j["type"] = "code_unit";
  j["language"] = std::string(to_string(u.language));
  j["file_path"] = u.file_path;
  j["qualified_name"] = u.qualified_name;
  j["signature"] = u.signature;
  j["line_span"] = nlohmann::ordered_json::array({u.line_span.start, u.line_span.end});
  if (u.docstring) j["docstring"] = *u.docstring;
  if (u.leading_comments) j["leading_comments"] = *u.leading_comments;
  j["body"] = u.body;
  return j;
}

inline CodeUnit code_unit_from_json(const nlohmann::json& j) {
  CodeUnit u;
  auto lang = parse_language(j.at("language").get<std::string>());
  if (!lang) throw ValidationError("unknown language " + j.at("language").dump());
  u.language = *lang;
  u.file_path = j.at("file_path").get<std::string>();
  u.qualified_name = j.at("qualified_name").get<std::string>();
  u.signature = j.value("signature", std::string());
  u.line_span = {j.at("line_span").at(0).get<int>(), j.at("line_span").at(1).get<int>()};
  if (j.contains("docstring")) u.docstring = j["docstring"].get<std::string>();
  if (j.contains("leading_comments")) u.leading_comments = j["leading_comments"].get<std::string>();
  u.body = j.at("body").get<std::string>();
  return u;
}

// First line is a header record; then one line per document and code unit.
inline void write_manifest(const Manifest& m, const std::string& path) {
  auto out = detail::open_out(path);
  nlohmann::ordered_json header;
  header["type"] = "manifest";
  header["version"] = 1;
  header["docs_root"] = m.docs_root;
  header["code_root"] = m.code_root;
  header["documents"] = m.documents.size();
  header["code_units"] = m.code_units.size();
  out << detail::dump(header) << '\n';
  for (const auto& d : m.documents) out << detail::dump(document_to_json(d)) << '\n';
  for (const auto& u : m.code_units) out << detail::dump(code_unit_to_json(u)) << '\n';
  detail::finish(out, path);
}

inline Manifest read_manifest(const std::string& path) {
  Manifest m;
  bool header = false;
  detail::for_each_json_line(path, [&](const nlohmann::json& j, std::size_t lineno) {
    const auto type = j.value("type", std::string());
    try {
      if (type == "manifest") {
        header = true;
        m.docs_root = j.value("docs_root", std::string());
        m.code_root = j.value("code_root", std::string());
      } else if (type == "document") {
        m.documents.push_back(document_from_json(j));
      } else if (type == "code_unit") {
        m.code_units.push_back(code_unit_from_json(j));
      } else {
        throw ValidationError("unknown record type '" + type + "'");
      }
    } catch (const ValidationError& e) {
      throw LoadError(path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  });
  if (!header) throw LoadError(path + ": not a corpus manifest (missing header)");
  return m;
}

// ---- document ingestion ----

struct DocumentIngest {
  std::vector<Document> documents;
  Report skipped;
};

// `.md` files are parsed as markdown, `.txt` as plain text; the relative path
// is the document id. Other files are ignored.
inline DocumentIngest ingest_documents(const std::filesystem::path& root) {
  DocumentIngest out;
  for (const auto& rel : detail::list_files(root)) {
    const auto ext = rel.extension().string();
    if (ext != ".md" && ext != ".txt") continue;
    const std::string id = rel.generic_string();
    auto text = detail::read_file(root / rel);
    if (!text) {
      out.skipped.add(id, "unreadable");
      continue;
    }
    const std::string source = (root / rel).generic_string();
    out.documents.push_back(ext == ".md" ? parse_markdown(*text, id, source) : parse_plain_text(*text, id, source));
  }
  return out;
}

}  // namespace tunesmith

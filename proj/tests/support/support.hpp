#pragma once

// Shared by the unit tests and the acceptance runner.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tunesmith/tunesmith.hpp"

namespace support {

inline std::string fixture(const std::string& rel) { return std::string(TUNESMITH_FIXTURE_DIR) + "/" + rel; }

inline const tunesmith::TokenizerModel& fixture_model() {
  static const auto model =
      tunesmith::load_tokenizer(fixture("tokenizer/vocab.txt"), fixture("tokenizer/merges.txt"));
  return model;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, std::string_view text) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("tunesmith-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') q += "'\\''";
    else q.push_back(c);
  }
  return q + "'";
}

inline CliResult run_cli(const std::vector<std::string>& args) {
  TempDir tmp;
  std::string cmd = shell_quote(TUNESMITH_CLI);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " >" + shell_quote(tmp.file("out")) + " 2>" + shell_quote(tmp.file("err"));
  int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(tmp.file("out"));
  r.err = read_text(tmp.file("err"));
  return r;
}

inline std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

// Reference byte-level BPE: repeatedly merge every occurrence of the
// lowest-ranked adjacent pair, left to right, until none applies.
inline std::vector<tunesmith::TokenId> naive_bpe(std::string_view text, const std::string& vocab_path,
                                                 const std::string& merges_path) {
  std::map<std::string, tunesmith::TokenId> vocab;
  {
    std::ifstream in(vocab_path);
    std::string line;
    while (std::getline(in, line)) {
      auto tab = line.rfind('\t');
      vocab[line.substr(0, tab)] = std::stoi(line.substr(tab + 1));
    }
  }
  std::map<std::pair<std::string, std::string>, int> rank;
  {
    std::ifstream in(merges_path);
    std::string line;
    int r = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line.starts_with("#version")) continue;
      auto sp = line.find(' ');
      rank[{line.substr(0, sp), line.substr(sp + 1)}] = r++;
    }
  }
  std::vector<std::string> sym;
  for (unsigned char b : text) {
    std::string s;
    tunesmith::detail::append_utf8(s, tunesmith::detail::byte_to_codepoint()[b]);
    sym.push_back(s);
  }
  while (sym.size() > 1) {
    int best = -1;
    std::pair<std::string, std::string> best_pair;
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      auto it = rank.find({sym[i], sym[i + 1]});
      if (it != rank.end() && (best < 0 || it->second < best)) {
        best = it->second;
        best_pair = it->first;
      }
    }
    if (best < 0) break;
    std::vector<std::string> next;
    for (std::size_t i = 0; i < sym.size(); ++i) {
      if (i + 1 < sym.size() && sym[i] == best_pair.first && sym[i + 1] == best_pair.second) {
        next.push_back(sym[i] + sym[i + 1]);
        ++i;
      } else {
        next.push_back(sym[i]);
      }
    }
    sym = std::move(next);
  }
  std::vector<tunesmith::TokenId> ids;
  for (const auto& s : sym) ids.push_back(vocab.at(s));
  return ids;
}

}  // namespace support

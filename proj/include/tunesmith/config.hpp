#pragma once

// Global key=value configuration.
//
//   # comment
//   template.without_context = ### Instruction:\n{instruction}\n\n### Response:\n{response}
//   tokenizer.eos_id = 2
//   client.base_url = http://127.0.0.1:8080
//
// Values are trimmed and may use the escapes \n, \t and \\. Relative paths are
// resolved against the directory of the config file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "tunesmith/bpe.hpp"
#include "tunesmith/dataset.hpp"
#include "tunesmith/document.hpp"
#include "tunesmith/error.hpp"
#include "tunesmith/estimator.hpp"
#include "tunesmith/llm_client.hpp"

namespace tunesmith {

inline constexpr const char* kConfigEnv = "TUNESMITH_CONFIG";

struct Config {
  PromptTemplate tmpl;
  std::optional<std::string> stoplist_path;
  std::optional<std::string> calibration_path;
  SpecialTokens specials;
  bool add_bos = true;
  bool add_eos = true;
  ClientConfig client;
  double query_temperature = 0.7;
  double summary_temperature = 0.0;
  std::size_t max_in_flight = 4;
  HardwareProfile hardware;
};

namespace detail {

inline std::string unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      char c = s[++i];
      out.push_back(c == 'n' ? '\n' : c == 't' ? '\t' : c);
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

}  // namespace detail

inline Config parse_config(std::istream& in, const std::string& name = "config",
                           const std::filesystem::path& base_dir = {}) {
  Config cfg;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    return LoadError(name + " line " + std::to_string(lineno) + ": " + why);
  };
  auto path_of = [&](const std::string& v) {
    std::filesystem::path p(v);
    return (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
  };
  auto as_int = [&](const std::string& v) -> long long {
    try {
      std::size_t used = 0;
      long long x = std::stoll(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw fail("expected an integer, got '" + v + "'");
    }
  };
  auto as_double = [&](const std::string& v) {
    try {
      std::size_t used = 0;
      double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw fail("expected a number, got '" + v + "'");
    }
  };
  auto as_bool = [&](const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw fail("expected true or false, got '" + v + "'");
  };
  auto gb = [&](const std::string& v) { return static_cast<std::int64_t>(std::llround(as_double(v) * kGB)); };

  const std::map<std::string, std::function<void(const std::string&)>> setters{
      {"template.name", [&](const std::string& v) { cfg.tmpl.name = v; }},
      {"template.with_context", [&](const std::string& v) { cfg.tmpl.with_context = v; }},
      {"template.without_context", [&](const std::string& v) { cfg.tmpl.without_context = v; }},
      {"template.raw", [&](const std::string& v) { cfg.tmpl.raw = v; }},
      {"stoplist", [&](const std::string& v) { cfg.stoplist_path = path_of(v); }},
      {"calibration", [&](const std::string& v) { cfg.calibration_path = path_of(v); }},
      {"tokenizer.unk_id", [&](const std::string& v) { cfg.specials.unk_id = static_cast<TokenId>(as_int(v)); }},
      {"tokenizer.bos_id", [&](const std::string& v) { cfg.specials.bos_id = static_cast<TokenId>(as_int(v)); }},
      {"tokenizer.eos_id", [&](const std::string& v) { cfg.specials.eos_id = static_cast<TokenId>(as_int(v)); }},
      {"tokenizer.add_bos", [&](const std::string& v) { cfg.add_bos = as_bool(v); }},
      {"tokenizer.add_eos", [&](const std::string& v) { cfg.add_eos = as_bool(v); }},
      {"client.base_url", [&](const std::string& v) { cfg.client.base_url = v; }},
      {"client.api_key_env", [&](const std::string& v) { cfg.client.api_key_env = v; }},
      {"client.model_name", [&](const std::string& v) { cfg.client.model_name = v; }},
      {"client.max_retries", [&](const std::string& v) { cfg.client.max_retries = static_cast<int>(as_int(v)); }},
      {"client.timeout_seconds", [&](const std::string& v) { cfg.client.timeout_seconds = as_double(v); }},
      {"client.backoff_initial_ms", [&](const std::string& v) { cfg.client.backoff_initial_ms = static_cast<int>(as_int(v)); }},
      {"client.backoff_max_ms", [&](const std::string& v) { cfg.client.backoff_max_ms = static_cast<int>(as_int(v)); }},
      {"client.query_temperature", [&](const std::string& v) { cfg.query_temperature = as_double(v); }},
      {"client.summary_temperature", [&](const std::string& v) { cfg.summary_temperature = as_double(v); }},
      {"client.max_in_flight", [&](const std::string& v) { cfg.max_in_flight = static_cast<std::size_t>(as_int(v)); }},
      {"hardware.name", [&](const std::string& v) { cfg.hardware.name = v; }},
      {"hardware.gpu_gb", [&](const std::string& v) { cfg.hardware.gpu_bytes = gb(v); }},
      {"hardware.cpu_gb", [&](const std::string& v) { cfg.hardware.cpu_bytes = gb(v); }},
      {"hardware.gpu_count", [&](const std::string& v) { cfg.hardware.gpu_count = static_cast<int>(as_int(v)); }},
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) throw fail("expected key = value");
    std::string key(detail::trim(t.substr(0, eq)));
    std::string value = detail::unescape(detail::trim(t.substr(eq + 1)));
    auto it = setters.find(key);
    if (it == setters.end()) throw fail("unknown key '" + key + "'");
    it->second(value);
  }
  try {
    cfg.tmpl.validate();
    cfg.client.validate();
    cfg.hardware.validate();
  } catch (const ValidationError& e) {
    throw LoadError(name + ": " + e.what());
  }
  if (cfg.max_in_flight < 1) throw LoadError(name + ": client.max_in_flight must be >= 1");
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  return parse_config(in, path, std::filesystem::path(path).parent_path());
}

// Explicit path, else $TUNESMITH_CONFIG, else defaults.
inline Config resolve_config(const std::optional<std::string>& path) {
  if (path && !path->empty()) return load_config(*path);
  if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') return load_config(env);
  return Config{};
}

}  // namespace tunesmith

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tunesmith/error.hpp"

namespace tunesmith {

enum class Recipe { raw, keyword, heading, query, code_summary, code_metadata, code_tokenized };

inline constexpr std::array<std::pair<Recipe, std::string_view>, 7> kRecipeNames{{
    {Recipe::raw, "raw"},
    {Recipe::keyword, "keyword"},
    {Recipe::heading, "heading"},
    {Recipe::query, "query"},
    {Recipe::code_summary, "code_summary"},
    {Recipe::code_metadata, "code_metadata"},
    {Recipe::code_tokenized, "code_tokenized"},
}};

inline std::string_view to_string(Recipe r) {
  for (const auto& [rec, name] : kRecipeNames) {
    if (rec == r) return name;
  }
  return "raw";
}

// Accepts both `code_summary` and the CLI spelling `code-summary`.
inline std::optional<Recipe> parse_recipe(std::string_view s) {
  std::string norm(s);
  for (auto& c : norm) {
    if (c == '-') c = '_';
  }
  for (const auto& [rec, name] : kRecipeNames) {
    if (name == norm) return rec;
  }
  return std::nullopt;
}

// Rows of these recipes carry neither instruction nor context.
inline bool is_unpaired(Recipe r) { return r == Recipe::raw || r == Recipe::code_tokenized; }

struct DatasetRow {
  Recipe recipe = Recipe::raw;
  std::optional<std::string> instruction;
  std::optional<std::string> context;
  std::string response;
  std::string rendered;

  bool operator==(const DatasetRow&) const = default;
};

// Format strings with `{instruction}`, `{context}` and `{response}` slots.
// `{response}` must be the last slot of each format so the text before it is
// the prompt and everything from it on is the training target.
class PromptTemplate {
 public:
  std::string name = "alpaca";
  std::string with_context =
      "Below is an instruction that describes a task, paired with an input that provides further context. "
      "Write a response that appropriately completes the request.\n\n"
      "### Instruction:\n{instruction}\n\n### Input:\n{context}\n\n### Response:\n{response}";
  std::string without_context =
      "Below is an instruction that describes a task. Write a response that appropriately completes the "
      "request.\n\n### Instruction:\n{instruction}\n\n### Response:\n{response}";
  std::string raw = "{response}";

  void validate() const {
    check(with_context, {"instruction", "context", "response"}, "with_context");
    check(without_context, {"instruction", "response"}, "without_context");
    check(raw, {"response"}, "raw");
  }

  // Prompt part and target part of the rendered row.
  struct Split {
    std::string prompt;
    std::string target;
  };

  Split split(const DatasetRow& row) const {
    const std::string& fmt = format_for(row);
    auto pos = fmt.find("{response}");
    std::string prefix = fmt.substr(0, pos);
    std::string suffix = fmt.substr(pos + 10);
    return {fill(prefix, row), row.response + suffix};
  }

  std::string render(const DatasetRow& row) const {
    auto s = split(row);
    return s.prompt + s.target;
  }

  // Recovers (instruction, context, response) from rendered text.
  DatasetRow parse(Recipe recipe, std::string_view rendered, bool has_context) const {
    DatasetRow row;
    row.recipe = recipe;
    row.rendered = std::string(rendered);
    const std::string& fmt = is_unpaired(recipe) ? raw : has_context ? with_context : without_context;
    std::size_t f = 0, r = 0;
    while (f < fmt.size()) {
      auto open = fmt.find('{', f);
      std::string_view literal = std::string_view(fmt).substr(f, open == std::string::npos ? std::string::npos : open - f);
      if (rendered.substr(r, literal.size()) != literal) throw ValidationError("rendered text does not match template");
      r += literal.size();
      if (open == std::string::npos) break;
      auto close = fmt.find('}', open);
      std::string slot = fmt.substr(open + 1, close - open - 1);
      f = close + 1;
      if (!is_slot(slot)) {
        if (rendered.substr(r, slot.size() + 2) != fmt.substr(open, slot.size() + 2)) {
          throw ValidationError("rendered text does not match template");
        }
        r += slot.size() + 2;
        continue;
      }
      // Value runs to the next literal segment (or to the fixed suffix).
      auto next_open = fmt.find('{', f);
      std::string_view next_lit = std::string_view(fmt).substr(f, next_open == std::string::npos ? std::string::npos : next_open - f);
      std::size_t end;
      if (slot == "response") {
        if (rendered.size() < r + next_lit.size() || rendered.substr(rendered.size() - next_lit.size()) != next_lit) {
          throw ValidationError("rendered text does not match template suffix");
        }
        end = rendered.size() - next_lit.size();
      } else {
        end = next_lit.empty() ? rendered.size() : rendered.find(next_lit, r);
        if (end == std::string_view::npos) throw ValidationError("rendered text does not match template");
      }
      std::string value(rendered.substr(r, end - r));
      if (slot == "instruction") row.instruction = value;
      else if (slot == "context") row.context = value;
      else row.response = value;
      r = end;
    }
    return row;
  }

 private:
  static bool is_slot(std::string_view s) { return s == "instruction" || s == "context" || s == "response"; }

  const std::string& format_for(const DatasetRow& row) const {
    if (!row.instruction) return raw;
    return row.context ? with_context : without_context;
  }

  static std::string fill(std::string_view fmt, const DatasetRow& row) {
    std::string out;
    std::size_t i = 0;
    while (i < fmt.size()) {
      auto open = fmt.find('{', i);
      if (open == std::string_view::npos) {
        out.append(fmt.substr(i));
        break;
      }
      out.append(fmt.substr(i, open - i));
      auto close = fmt.find('}', open);
      std::string_view slot = close == std::string_view::npos ? std::string_view{} : fmt.substr(open + 1, close - open - 1);
      if (slot == "instruction") {
        out += row.instruction.value_or("");
      } else if (slot == "context") {
        out += row.context.value_or("");
      } else {
        out.push_back('{');
        i = open + 1;
        continue;
      }
      i = close + 1;
    }
    return out;
  }

  static void check(const std::string& fmt, std::initializer_list<std::string_view> slots, std::string_view which) {
    std::size_t last_pos = 0;
    for (auto slot : slots) {
      std::string marker = "{" + std::string(slot) + "}";
      auto first = fmt.find(marker);
      if (first == std::string::npos || fmt.find(marker, first + 1) != std::string::npos) {
        throw ValidationError("template " + std::string(which) + " must contain " + marker + " exactly once");
      }
      last_pos = std::max(last_pos, first);
    }
    for (auto other : {"instruction", "context", "response"}) {
      bool expected = false;
      for (auto s : slots) expected |= s == other;
      if (!expected && fmt.find("{" + std::string(other) + "}") != std::string::npos) {
        throw ValidationError("template " + std::string(which) + " must not contain {" + other + "}");
      }
    }
    if (fmt.find("{response}") != last_pos) {
      throw ValidationError("template " + std::string(which) + " must end with the {response} slot");
    }
  }
};

inline DatasetRow make_row(Recipe recipe, std::optional<std::string> instruction, std::optional<std::string> context,
                           std::string response, const PromptTemplate& tmpl) {
  DatasetRow row{recipe, std::move(instruction), std::move(context), std::move(response), {}};
  if (is_unpaired(recipe)) {
    row.instruction.reset();
    row.context.reset();
  }
  row.rendered = tmpl.render(row);
  return row;
}

}  // namespace tunesmith

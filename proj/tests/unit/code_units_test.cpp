#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace tunesmith;

namespace {

const CodeUnit& find(const std::vector<CodeUnit>& units, const std::string& name) {
  for (const auto& u : units) {
    if (u.qualified_name == name) return u;
  }
  FAIL("no unit " << name);
  throw std::logic_error("unreachable");
}

// Lines [start, end] (1-based) of a source text, joined with '\n'.
std::string line_range(const std::string& src, int start, int end) {
  auto lines = support::lines_of(src);
  std::string out;
  for (int i = start; i <= end; ++i) {
    if (i > start) out += '\n';
    out += lines[static_cast<std::size_t>(i - 1)];
  }
  return out;
}

}  // namespace

TEST_CASE("empty directory yields no units") {
  support::TempDir tmp;
  auto r = extract_code_units(tmp.path());
  CHECK(r.units.empty());
  CHECK(r.skipped.empty());
}

TEST_CASE("java fixture: three methods with spans, docs and comments") {
  auto r = extract_code_units(support::fixture("repo"), {Language::java});
  REQUIRE(r.units.size() == 3);
  CHECK(r.units[0].qualified_name == "DbHelper.getConnection");
  CHECK(r.units[1].qualified_name == "DbHelper.getTcById");
  CHECK(r.units[2].qualified_name == "DbHelper.close");
  CHECK(r.units[0].line_span == LineSpan{19, 24});
  CHECK(r.units[1].line_span == LineSpan{28, 38});
  CHECK(r.units[2].line_span == LineSpan{41, 49});
  CHECK(r.units[0].docstring == "Opens a connection to the test case database.");
  CHECK_FALSE(r.units[0].leading_comments);
  CHECK(r.units[1].leading_comments == "Looks up one test case row by its id.\nReturns null when no row matches.");
  CHECK(r.units[2].leading_comments == "closes pool");
  CHECK(r.units[0].signature == "public Connection getConnection() throws SQLException");
  for (const auto& u : r.units) {
    CHECK(u.language == Language::java);
    CHECK(u.file_path == "java/DbHelper.java");
  }
}

TEST_CASE("bodies are verbatim source between the span bounds") {
  for (auto lang : {Language::java, Language::python}) {
    auto r = extract_code_units(support::fixture("repo"), {lang});
    REQUIRE_FALSE(r.units.empty());
    for (const auto& u : r.units) {
      const auto src = support::read_text(support::fixture("repo/" + u.file_path));
      const auto lines = support::lines_of(src);
      REQUIRE(u.line_span.start >= 1);
      REQUIRE(u.line_span.end >= u.line_span.start);
      REQUIRE(static_cast<std::size_t>(u.line_span.end) <= lines.size());
      CHECK(src.find(u.body) != std::string::npos);
      if (lang == Language::python) CHECK(u.body == line_range(src, u.line_span.start, u.line_span.end));
      CHECK_FALSE(u.qualified_name.empty());
    }
    for (std::size_t i = 1; i < r.units.size(); ++i) {
      if (r.units[i].file_path == r.units[i - 1].file_path) {
        CHECK(r.units[i].line_span.start > r.units[i - 1].line_span.end);
      }
    }
  }
}

TEST_CASE("java literals and comments do not confuse brace matching") {
  auto r = extract_code_units(support::fixture("repo"), {Language::java});
  const auto& tc = find(r.units, "DbHelper.getTcById");
  CHECK(tc.body.find("/* { */") != std::string::npos);
  CHECK(tc.body.ends_with("return null;\n    }"));
  const auto& close = find(r.units, "DbHelper.close");
  CHECK(close.body.find("'}'") != std::string::npos);
}

TEST_CASE("python fixture: functions, methods and docstrings") {
  auto r = extract_code_units(support::fixture("repo"), {Language::python});
  std::vector<std::string> names;
  for (const auto& u : r.units) names.push_back(u.qualified_name);
  CHECK(names == std::vector<std::string>{"add", "scale", "Stats.__init__", "Stats.push", "Stats.mean"});
  CHECK(find(r.units, "add").docstring == "Adds.");
  CHECK(find(r.units, "scale").leading_comments == "Scales a vector in place.");
  CHECK(find(r.units, "scale").body.find("def _mul") != std::string::npos);
  CHECK(find(r.units, "Stats.push").docstring == "Records one value.\n\nValues are accumulated into the running total.");
  CHECK_FALSE(find(r.units, "Stats.mean").docstring);
}

TEST_CASE("python docstring is the first statement only") {
  auto units = extract_code_units_from_source(
      "def f():\n    x = 1\n    \"\"\"not a docstring\"\"\"\n    return x\n", Language::python, "f.py");
  REQUIRE(units.size() == 1);
  CHECK_FALSE(units[0].docstring);
}

TEST_CASE("python decorators belong to the unit") {
  auto units = extract_code_units_from_source("@cache\n@trace(level=2)\ndef g(a,\n      b):\n    return a\n",
                                                      Language::python, "g.py");
  REQUIRE(units.size() == 1);
  CHECK(units[0].line_span == LineSpan{1, 5});
  CHECK(units[0].signature == "def g(a, b):");
}

TEST_CASE("java constructors, generics and interfaces") {
  const std::string src =
      "class Box<T> {\n"
      "  private final T value;\n"
      "  Box(T value) { this.value = value; }\n"
      "  @Override\n"
      "  public <R> Box<R> map(java.util.function.Function<T, R> f) {\n"
      "    return new Box<>(f.apply(value));\n"
      "  }\n"
      "  interface Visitor { void visit(Object o); }\n"
      "}\n";
  auto units = extract_code_units_from_source(src, Language::java, "Box.java");
  std::vector<std::string> names;
  for (const auto& u : units) names.push_back(u.qualified_name);
  CHECK(names == std::vector<std::string>{"Box.Box", "Box.map"});
}

TEST_CASE("malformed files are reported and skipped") {
  support::TempDir tmp;
  support::write_text(tmp.file("Bad.java"), "class Bad {\n  void f() {\n    if (x) {\n  }\n");
  support::write_text(tmp.file("ok.py"), "def ok():\n    return 1\n");
  auto r = extract_code_units(tmp.path());
  REQUIRE(r.units.size() == 1);
  CHECK(r.units[0].qualified_name == "ok");
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped.entries()[0].subject == "Bad.java");
}

TEST_CASE("extraction is deterministic") {
  auto a = extract_code_units(support::fixture("repo"), {Language::java, Language::python}, 1);
  auto b = extract_code_units(support::fixture("repo"), {Language::java, Language::python}, 8);
  CHECK(a.units == b.units);
}

TEST_CASE("corpus stats") {
  CHECK(corpus_stats({}) == CorpusStats{});
  auto java = extract_code_units(support::fixture("repo"), {Language::java});
  auto s = corpus_stats(java.units);
  CHECK(s.function_count == 3);
  CHECK(s.java_count == 3);
  CHECK(s.python_count == 0);
  std::size_t bytes = 0;
  for (const auto& u : java.units) bytes += u.body.size();
  CHECK(s.total_bytes == bytes);
}

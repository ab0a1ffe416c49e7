#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace tunesmith;
using Catch::Matchers::ContainsSubstring;

namespace {

const PromptTemplate kTmpl;

DatasetRow raw(std::string text) { return make_row(Recipe::raw, std::nullopt, std::nullopt, std::move(text), kTmpl); }
DatasetRow pair(std::string instr, std::string resp) {
  return make_row(Recipe::heading, std::move(instr), std::nullopt, std::move(resp), kTmpl);
}

}  // namespace

TEST_CASE("instruction rows: prompt masked, response and eos learned") {
  const auto& m = support::fixture_model();
  const auto& sp = m.specials();
  auto row = pair("A > B", "the body");
  auto ds = tokenize_rows({row}, m, kTmpl, {256, true, true, true});
  REQUIRE(ds.examples.size() == 1);
  CHECK(ds.packed_rows == 0);
  const auto& ex = ds.examples[0];
  auto split = kTmpl.split(row);
  const auto prompt = m.encode(split.prompt);
  CHECK(ex.prompt_len == prompt.size() + 1);
  CHECK(ex.input_ids[0] == sp.bos_id);
  std::vector<TokenId> learned;
  for (auto l : ex.labels) {
    if (l >= 0) learned.push_back(l);
  }
  REQUIRE_FALSE(learned.empty());
  CHECK(learned.back() == sp.eos_id);
  learned.pop_back();
  CHECK(m.decode(learned) == "the body");
  CHECK(ex.input_ids.size() == 256);
  CHECK_NOTHROW(validate_example(ex, sp.pad_id));
}

TEST_CASE("bos/eos can be switched off") {
  const auto& m = support::fixture_model();
  auto ds = tokenize_rows({pair("i", "r")}, m, kTmpl, {128, false, false, true});
  const auto& ex = ds.examples[0];
  CHECK(ex.input_ids[0] != m.specials().bos_id);
  CHECK(ex.prompt_len == m.encode(kTmpl.split(pair("i", "r")).prompt).size());
}

TEST_CASE("unpaired rows are packed with separators") {
  const auto& m = support::fixture_model();
  const auto& sp = m.specials();
  std::vector<DatasetRow> rows{raw("alpha beta"), raw("gamma"), raw("delta epsilon")};
  std::size_t a = m.count_tokens("alpha beta"), b = m.count_tokens("gamma"), c = m.count_tokens("delta epsilon");
  // Room for the first two items plus one separator, bos and eos.
  const std::size_t seq_len = a + b + 1 + 2;
  auto ds = tokenize_rows(rows, m, kTmpl, {seq_len, true, true, true});
  REQUIRE(ds.examples.size() == 2);
  CHECK(ds.packed_rows == 2);
  std::vector<TokenId> expected{sp.bos_id};
  for (auto id : m.encode("alpha beta")) expected.push_back(id);
  expected.push_back(sp.eos_id);
  for (auto id : m.encode("gamma")) expected.push_back(id);
  expected.push_back(sp.eos_id);
  CHECK(ds.examples[0].input_ids == expected);
  CHECK(ds.examples[0].prompt_len == 0);
  CHECK(ds.examples[0].labels == std::vector<TokenId>(expected.begin(), expected.end()));
  CHECK(ds.examples[1].input_ids[c + 1] == sp.eos_id);

  auto unpacked = tokenize_rows(rows, m, kTmpl, {seq_len, true, true, false});
  CHECK(unpacked.examples.size() == 3);
}

TEST_CASE("packing runs do not cross instruction rows") {
  const auto& m = support::fixture_model();
  auto ds = tokenize_rows({raw("a"), pair("i", "r"), raw("b"), raw("c")}, m, kTmpl, {512, true, true, true});
  REQUIRE(ds.examples.size() == 3);
  CHECK(ds.examples[0].prompt_len == 0);
  CHECK(ds.examples[1].prompt_len > 0);
  CHECK(ds.examples[2].prompt_len == 0);
  CHECK(ds.packed_rows == 2);
}

TEST_CASE("overflow names the offending row") {
  const auto& m = support::fixture_model();
  std::vector<DatasetRow> rows{pair("short", "ok"), pair("heading", std::string(400, 'x'))};
  CHECK_THROWS_AS(tokenize_rows(rows, m, kTmpl, {128, true, true, true}), OverflowError);
  CHECK_THROWS_WITH(tokenize_rows(rows, m, kTmpl, {128, true, true, true}), ContainsSubstring("row 1 (heading)"));
  CHECK_THROWS_WITH(tokenize_rows({raw("a"), raw(std::string(400, 'y'))}, m, kTmpl, {64, true, true, true}),
                    ContainsSubstring("row 1 (raw)"));
  CHECK_THROWS_AS(tokenize_rows({raw("a")}, m, kTmpl, {2, true, true, true}), ValidationError);
}

TEST_CASE("fixture guide through the heading recipe fits at 512") {
  const auto& m = support::fixture_model();
  auto doc = parse_markdown(support::read_text(support::fixture("docs/userguide.md")), "userguide.md");
  auto rows = recipe_heading(doc, {512, &m}).rows;
  auto ds = tokenize_rows(rows, m, kTmpl, {1024, true, true, true});
  CHECK(ds.examples.size() == rows.size());
  for (const auto& ex : ds.examples) CHECK_NOTHROW(validate_example(ex, m.specials().pad_id));
}

TEST_CASE("windows become fully learned examples") {
  auto ex = examples_from_windows({{1, 2, 3}, {4}}, 3, 0);
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].labels == std::vector<TokenId>{1, 2, 3});
  CHECK(ex[1].input_ids == std::vector<TokenId>{4, 0, 0});
  CHECK(ex[1].labels == std::vector<TokenId>{4, -100, -100});
  CHECK_THROWS_AS(examples_from_windows({{1, 2, 3, 4}}, 3, 0), OverflowError);
}

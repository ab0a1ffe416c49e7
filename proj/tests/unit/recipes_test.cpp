#include <catch_amalgamated.hpp>

#include <atomic>
#include <functional>
#include <mutex>

#include "support.hpp"

using namespace tunesmith;
using Catch::Matchers::ContainsSubstring;

namespace {

class FakeClient : public LlmClient {
 public:
  using Reply = std::function<std::string(std::string_view user)>;
  explicit FakeClient(Reply reply) : reply_(std::move(reply)) {}

  std::string complete(std::string_view system, std::string_view user, std::optional<double> temperature) override {
    {
      std::lock_guard lock(mu_);
      systems.emplace_back(system);
      users.emplace_back(user);
      temperatures.push_back(temperature);
    }
    int now = ++in_flight_;
    int seen = max_in_flight.load();
    while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    --in_flight_;
    return reply_(user);
  }

  std::mutex mu_;
  std::vector<std::string> systems, users;
  std::vector<std::optional<double>> temperatures;
  std::atomic<int> max_in_flight{0};

 private:
  Reply reply_;
  std::atomic<int> in_flight_{0};
};

Chunk chunk(std::string text, std::string doc = "doc") {
  Chunk c;
  c.text = std::move(text);
  c.doc_id = std::move(doc);
  return c;
}

std::vector<Chunk> three_chunks() { return {chunk("alpha text"), chunk("beta text"), chunk("gamma text")}; }

CodeUnit unit(std::string name, std::string body, std::optional<std::string> doc = std::nullopt,
              std::optional<std::string> comments = std::nullopt) {
  CodeUnit u;
  u.file_path = "A.java";
  u.qualified_name = std::move(name);
  u.body = std::move(body);
  u.docstring = std::move(doc);
  u.leading_comments = std::move(comments);
  return u;
}

}  // namespace

TEST_CASE("raw recipe: one verbatim row per chunk") {
  auto rows = recipe_raw(three_chunks());
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rows[i].recipe == Recipe::raw);
    CHECK_FALSE(rows[i].instruction);
    CHECK_FALSE(rows[i].context);
    CHECK(rows[i].rendered == three_chunks()[i].text);
    CHECK(rows[i].response == three_chunks()[i].text);
  }
  CHECK(recipe_raw({}).empty());
}

TEST_CASE("raw recipe on the fixture guide: rows equal chunks") {
  const auto& m = support::fixture_model();
  auto doc = parse_markdown(support::read_text(support::fixture("docs/userguide.md")), "userguide.md");
  auto chunks = split_chunks(doc, ChunkSpec{512, 64}, m);
  CHECK(recipe_raw(chunks).size() == chunks.size());
}

TEST_CASE("keyword recipe") {
  RakeConfig cfg;
  cfg.stopwords = {"the"};
  auto r = recipe_keyword({chunk("AION provides model monitoring")}, cfg);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].recipe == Recipe::keyword);
  CHECK_THAT(*r.rows[0].instruction, ContainsSubstring("aion provides model monitoring"));
  CHECK(r.rows[0].response == "AION provides model monitoring");
  CHECK(r.report.empty());

  auto fb = recipe_keyword({chunk("it is what it is"), chunk("red apple")}, RakeConfig{});
  REQUIRE(fb.rows.size() == 2);
  CHECK(fb.rows[0].recipe == Recipe::raw);
  CHECK(fb.rows[0].rendered == "it is what it is");
  CHECK(fb.rows[1].recipe == Recipe::keyword);
  REQUIRE(fb.report.size() == 1);
  CHECK(fb.report.entries()[0].subject == "doc#0");
}

TEST_CASE("heading recipe joins the path") {
  Document doc{"d", "", {{{{1, "A"}, {2, "B"}}, "t"}}};
  auto r = recipe_heading(doc);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].instruction == "A > B");
  CHECK(r.rows[0].response == "t");
  CHECK(heading_instruction({}).empty());
}

TEST_CASE("headingless document falls back to raw") {
  auto doc = parse_markdown("just text\n\nmore text\n", "plain.md");
  auto r = recipe_heading(doc);
  REQUIRE_FALSE(r.rows.empty());
  for (const auto& row : r.rows) CHECK(row.recipe == Recipe::raw);
  CHECK(r.report.size() == doc.blocks.size());
}

TEST_CASE("heading recipe on the fixture guide") {
  auto doc = parse_markdown(support::read_text(support::fixture("docs/userguide.md")), "userguide.md");
  HeadingOptions opts;
  opts.model = &support::fixture_model();
  auto r = recipe_heading(doc, opts);
  const std::vector<std::string> expected{
      "Getting Started",
      "Getting Started > Installation",
      "Getting Started > Signing In",
      "Building Models",
      "Building Models > Data Ingestion",
      "Building Models > Training Configuration",
      "Deployment",
      "Deployment > Model Monitoring",
  };
  std::vector<std::string> got;
  for (const auto& row : r.rows) got.push_back(row.instruction.value_or("<none>"));
  CHECK(got == expected);
  for (std::size_t i = 0; i < r.rows.size(); ++i) CHECK(r.rows[i].response == doc.blocks[i].text);
}

TEST_CASE("oversized heading blocks are split and repeat the instruction") {
  const auto& m = support::fixture_model();
  std::string text;
  for (int i = 0; i < 40; ++i) text += "model monitoring tracks drift. ";
  Document doc{"d", "", {{{{1, "Big"}}, text}}};
  HeadingOptions opts;
  opts.model = &m;
  opts.max_response_tokens = 16;
  auto r = recipe_heading(doc, opts);
  REQUIRE(r.rows.size() > 1);
  std::string joined;
  for (const auto& row : r.rows) {
    CHECK(row.instruction == "Big");
    CHECK(m.count_tokens(row.response) <= 16);
    joined += row.response;
  }
  CHECK(joined == text);
  REQUIRE(r.report.size() == 1);
  CHECK_THAT(r.report.entries()[0].reason, ContainsSubstring("split into"));
}

TEST_CASE("query prompt text") {
  CHECK(query_prompt(2, "P") ==
        "Generate 2 distinct questions a user could ask that are answered by the following passage. Number them "
        "1..2.\n\nP");
}

TEST_CASE("numbered list parsing") {
  CHECK(parse_numbered_list("1. What is X?\n2. How does X work?") ==
        std::vector<std::string>{"What is X?", "How does X work?"});
  CHECK(parse_numbered_list("Sure!\n 1) a \n\n2: b\n3. a\n- c\n") == std::vector<std::string>{"a", "b"});
  CHECK(parse_numbered_list("no list here").empty());
  CHECK(parse_numbered_list("1.\n2.   ").empty());
}

TEST_CASE("query recipe fans out per chunk") {
  FakeClient client([](std::string_view) { return "1. What is X?\n2. How does X work?"; });
  QueryOptions opts;
  opts.queries_per_chunk = 2;
  auto r = recipe_query(three_chunks(), client, opts);
  REQUIRE(r.rows.size() == 6);
  CHECK(r.report.empty());
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(r.rows[i].recipe == Recipe::query);
    CHECK(r.rows[i].instruction == (i % 2 == 0 ? "What is X?" : "How does X work?"));
    CHECK(r.rows[i].response == three_chunks()[i / 2].text);
  }
  REQUIRE(client.users.size() == 3);
  for (const auto& s : client.systems) CHECK(s == kQuerySystemPrompt);
  for (const auto& t : client.temperatures) CHECK(t == 0.7);
}

TEST_CASE("query recipe reports shortfall, garbage and failures") {
  FakeClient client([](std::string_view user) -> std::string {
    if (user.find("alpha") != std::string_view::npos) return "1. Only one?";
    if (user.find("beta") != std::string_view::npos) return "I cannot help with that.";
    throw RequestError(500, "boom");
  });
  QueryOptions opts;
  opts.queries_per_chunk = 2;
  auto r = recipe_query(three_chunks(), client, opts);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].instruction == "Only one?");
  REQUIRE(r.report.size() == 3);
  CHECK(r.report.entries()[0].reason == "shortfall: 1 of 2 queries");
  CHECK(r.report.entries()[1].reason == "skipped: no numbered questions in reply");
  CHECK_THAT(r.report.entries()[2].reason, ContainsSubstring("skipped:"));
  CHECK_THAT(r.report.entries()[2].reason, ContainsSubstring("500"));
}

TEST_CASE("query recipe truncates long lists and bounds concurrency") {
  FakeClient client([](std::string_view) { return "1. a\n2. b\n3. c\n4. d"; });
  std::vector<Chunk> chunks;
  for (int i = 0; i < 20; ++i) chunks.push_back(chunk("c" + std::to_string(i)));
  QueryOptions opts;
  opts.queries_per_chunk = 2;
  opts.max_in_flight = 3;
  auto r = recipe_query(chunks, client, opts);
  CHECK(r.rows.size() == 40);
  CHECK(client.max_in_flight.load() <= 3);
  for (std::size_t i = 0; i < r.rows.size(); ++i) CHECK(r.rows[i].response == chunks[i / 2].text);
  opts.queries_per_chunk = 0;
  CHECK_THROWS_AS(recipe_query(chunks, client, opts), ValidationError);
}

TEST_CASE("code summary recipe") {
  FakeClient client([](std::string_view user) {
    auto pos = user.rfind("name:");
    return "  Summary of " + std::string(user.substr(pos + 5, user.find('\n', pos) - pos - 5)) + "\n";
  });
  std::vector<CodeUnit> units{unit("a", "name:a\nbody a"), unit("b", "name:b\nbody b"), unit("c", "name:c\nbody c")};
  auto r = recipe_code_summary(units, client);
  REQUIRE(r.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.rows[i].recipe == Recipe::code_summary);
    CHECK(r.rows[i].instruction == "Summary of " + units[i].qualified_name);
    CHECK(r.rows[i].response == units[i].body);
  }
  CHECK(client.users[0].starts_with(
      "Summarize what the following function does as an imperative step-by-step description.\n\n"));
  for (const auto& t : client.temperatures) CHECK(t == 0.0);
}

TEST_CASE("code summary skips failed units") {
  FakeClient client([](std::string_view user) -> std::string {
    if (user.find("bad") != std::string_view::npos) throw RequestError(503, "down");
    if (user.find("blank") != std::string_view::npos) return "   \n";
    return "Do it.";
  });
  auto r = recipe_code_summary({unit("ok", "ok"), unit("bad", "bad"), unit("blank", "blank")}, client);
  REQUIRE(r.rows.size() == 1);
  REQUIRE(r.report.size() == 2);
  CHECK(r.report.entries()[0].subject == "A.java:bad");
  CHECK(r.report.entries()[1].reason == "skipped: empty summary");
}

TEST_CASE("code summary on the fixture repo has the database-connection shape") {
  auto units = extract_code_units(support::fixture("repo"), {Language::java}).units;
  REQUIRE(units.size() == 3);
  FakeClient client([](std::string_view user) -> std::string {
    if (user.find("getConnection()") != std::string_view::npos) {
      return "A connection object is created to connect to a database.\nThe open connection is returned.";
    }
    return "Something else.";
  });
  auto r = recipe_code_summary(units, client);
  REQUIRE(r.rows.size() == 3);
  CHECK_THAT(*r.rows[0].instruction, ContainsSubstring("A connection object is created to connect to a database"));
  CHECK(r.rows[0].response == units[0].body);
  CHECK_THAT(r.rows[0].response, ContainsSubstring("public Connection getConnection()"));
  CHECK(r.rows[0].response.back() == '}');
}

TEST_CASE("code metadata recipe") {
  std::vector<CodeUnit> units{unit("add", "int add(){}", "Adds two ints"), unit("close", "void close(){}", std::nullopt, "closes pool"),
                              unit("bare", "void bare(){}")};
  auto r = recipe_code_metadata(units);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].instruction == "Adds two ints");
  CHECK(r.rows[0].response == "int add(){}");
  CHECK(r.rows[1].instruction == "closes pool");
  REQUIRE(r.report.size() == 1);
  CHECK(r.report.entries()[0].reason == "excluded: no docstring or comments");
  CHECK(r.rows.size() + r.report.size() == units.size());
}

TEST_CASE("code metadata on the fixture repo from leading comments") {
  auto units = extract_code_units(support::fixture("repo")).units;
  auto r = recipe_code_metadata(units);
  CHECK(r.rows.size() + r.report.size() == units.size());
  bool found = false;
  for (const auto& row : r.rows) {
    if (row.response.find("getTcById") != std::string::npos) {
      found = true;
      CHECK_THAT(*row.instruction, ContainsSubstring("Looks up one test case row by its id."));
    }
  }
  CHECK(found);
}

TEST_CASE("oversized units are excluded, not truncated") {
  const auto& m = support::fixture_model();
  CodeRecipeOptions opts;
  opts.model = &m;
  opts.max_body_tokens = 5;
  std::string big = "int f() { return 1 + 2 + 3 + 4 + 5 + 6 + 7; }";
  auto r = recipe_code_metadata({unit("f", big, "doc"), unit("g", "g()", "doc")}, opts);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].response == "g()");
  REQUIRE(r.report.size() == 1);
  CHECK_THAT(r.report.entries()[0].reason, ContainsSubstring("excluded: body has"));

  FakeClient client([](std::string_view) { return "x"; });
  auto s = recipe_code_summary({unit("f", big)}, client, opts);
  CHECK(s.rows.empty());
  CHECK(client.users.empty());
}

TEST_CASE("code tokenized: two files, ten tokens, one separator") {
  auto m = TokenizerModel::from_tables({{"a", 0}, {"b", 1}, {"ab", 2}, {"<unk>", 3}, {"</s>", 4}}, {{"a", "b"}});
  support::TempDir tmp;
  support::write_text(tmp.file("x.txt"), "aaaaa");
  support::write_text(tmp.file("y.txt"), "bbbbb");
  auto r = recipe_code_tokenized(tmp.path(), m, 4);
  CHECK(r.token_count == 11);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.windows[2].size() == 3);
  CHECK(r.rows[0].rendered == "aaaa");
  CHECK(r.rows[1].rendered == "abb");
  CHECK(r.rows[2].rendered == "bbb");
  CHECK(r.files == std::vector<std::string>{"x.txt", "y.txt"});
}

TEST_CASE("code tokenized: empty repo and binary files") {
  const auto& m = support::fixture_model();
  support::TempDir tmp;
  CHECK(recipe_code_tokenized(tmp.path(), m, 16).rows.empty());
  support::write_text(tmp.file("bin.dat"), std::string("ab\0cd", 5));
  auto r = recipe_code_tokenized(tmp.path(), m, 16);
  CHECK(r.rows.empty());
  REQUIRE(r.report.size() == 1);
  CHECK(r.report.entries()[0].reason == "binary file");
  CHECK_THROWS_AS(recipe_code_tokenized(tmp.path(), m, 0), ValidationError);
}

TEST_CASE("code tokenized on the fixture repo is lossless") {
  const auto& m = support::fixture_model();
  const std::size_t seq_len = 128;
  auto r = recipe_code_tokenized(support::fixture("repo"), m, seq_len);
  REQUIRE(r.files.size() == 3);
  CHECK(r.rows.size() == (r.token_count + seq_len - 1) / seq_len);
  std::string corpus, joined;
  for (const auto& f : r.files) corpus += support::read_text(support::fixture("repo/" + f));
  for (const auto& row : r.rows) joined += row.response;
  CHECK(joined == corpus);
  std::vector<TokenId> stream;
  for (const auto& w : r.windows) stream.insert(stream.end(), w.begin(), w.end());
  CHECK(std::count(stream.begin(), stream.end(), m.specials().eos_id) == 2);
}

TEST_CASE("rendered rows re-parse to their fields") {
  PromptTemplate tmpl;
  std::mt19937 rng(21);
  const std::string alphabet = "ab #:\n{}.";
  auto rand_text = [&] {
    std::string s;
    for (std::size_t i = 1 + rng() % 30; i > 0; --i) s.push_back(alphabet[rng() % alphabet.size()]);
    return s;
  };
  for (int iter = 0; iter < 500; ++iter) {
    std::string instr = rand_text();
    if (instr.find("\n\n### Response:\n") != std::string::npos) continue;
    auto row = make_row(Recipe::query, instr, std::nullopt, rand_text(), tmpl);
    auto back = tmpl.parse(Recipe::query, row.rendered, false);
    REQUIRE(back == row);
    auto raw = make_row(Recipe::raw, std::nullopt, std::nullopt, rand_text(), tmpl);
    REQUIRE(tmpl.parse(Recipe::raw, raw.rendered, false) == raw);
  }
  auto ctx = make_row(Recipe::heading, "i", "c", "r", tmpl);
  CHECK(tmpl.parse(Recipe::heading, ctx.rendered, true) == ctx);
}

TEST_CASE("template validation") {
  PromptTemplate t;
  CHECK_NOTHROW(t.validate());
  t.without_context = "{response}{instruction}";
  CHECK_THROWS_AS(t.validate(), ValidationError);
  t = {};
  t.raw = "{response}{response}";
  CHECK_THROWS_AS(t.validate(), ValidationError);
  t = {};
  t.without_context = "{instruction} {context} {response}";
  CHECK_THROWS_AS(t.validate(), ValidationError);
  CHECK(parse_recipe("code-summary") == Recipe::code_summary);
  CHECK_FALSE(parse_recipe("nope"));
}

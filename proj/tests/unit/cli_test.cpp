#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace tunesmith;
using Catch::Matchers::ContainsSubstring;
using support::run_cli;

namespace {

std::string tokenizer_arg() {
  return support::fixture("tokenizer/vocab.txt") + "," + support::fixture("tokenizer/merges.txt");
}

std::string ingest_fixture(const support::TempDir& tmp) {
  auto r = run_cli({"ingest", "--docs", support::fixture("docs"), "--code", support::fixture("repo"), "--out",
                    tmp.file("manifest.jsonl"), "--report", tmp.file("ingest.tsv")});
  REQUIRE(r.exit_code == 0);
  return tmp.file("manifest.jsonl");
}

}  // namespace

TEST_CASE("cli: ingest writes a manifest") {
  support::TempDir tmp;
  auto manifest = read_manifest(ingest_fixture(tmp));
  CHECK(manifest.documents.size() == 1);
  CHECK(manifest.code_units.size() == 8);
  CHECK(std::filesystem::path(manifest.docs_root).is_absolute());
}

TEST_CASE("cli: ingest of an empty directory succeeds with nothing") {
  support::TempDir tmp;
  std::filesystem::create_directories(tmp.path() / "empty");
  auto r = run_cli({"ingest", "--docs", (tmp.path() / "empty").string(), "--out", tmp.file("m.jsonl")});
  CHECK(r.exit_code == 0);
  auto m = read_manifest(tmp.file("m.jsonl"));
  CHECK(m.documents.empty());
  CHECK(m.code_units.empty());
}

TEST_CASE("cli: usage errors exit 2") {
  support::TempDir tmp;
  CHECK(run_cli({}).exit_code == 2);
  CHECK(run_cli({"bogus"}).exit_code == 2);
  CHECK(run_cli({"ingest", "--docs", "/no/such/dir", "--out", tmp.file("m.jsonl")}).exit_code == 2);
  auto manifest = ingest_fixture(tmp);
  auto r = run_cli({"prepare", "--manifest", manifest, "--recipe", "query", "--tokenizer", tokenizer_arg(),
                    "--seq-len", "1024", "--out", tmp.file("q.jsonl")});
  CHECK(r.exit_code == 2);
  CHECK_THAT(r.err, ContainsSubstring("--endpoint"));
  CHECK(run_cli({"prepare", "--manifest", manifest, "--recipe", "nope", "--tokenizer", tokenizer_arg(), "--seq-len",
                 "1024", "--out", tmp.file("x.jsonl")})
            .exit_code == 2);
  CHECK(run_cli({"estimate", "--precision", "fp99"}).exit_code == 2);
}

TEST_CASE("cli: prepare raw and heading") {
  support::TempDir tmp;
  auto manifest = ingest_fixture(tmp);
  auto r = run_cli({"prepare", "--manifest", manifest, "--recipe", "raw", "--tokenizer", tokenizer_arg(), "--seq-len",
                    "1024", "--out", tmp.file("raw.jsonl"), "--tokenized-out", tmp.file("raw.tok.jsonl")});
  REQUIRE(r.exit_code == 0);
  CHECK(read_jsonl(tmp.file("raw.jsonl")).size() == 4);
  auto tok = read_tokenized(tmp.file("raw.tok.jsonl"));
  CHECK_FALSE(tok.empty());
  for (const auto& ex : tok) CHECK(ex.input_ids.size() == 1024);

  r = run_cli({"prepare", "--manifest", manifest, "--recipe", "heading", "--tokenizer", tokenizer_arg(), "--seq-len",
               "1024", "--out", tmp.file("h.csv"), "--format", "csv"});
  REQUIRE(r.exit_code == 0);
  CHECK(read_csv(tmp.file("h.csv")).size() == 8);
}

TEST_CASE("cli: overflowing rows exit 1 naming the row") {
  support::TempDir tmp;
  auto manifest = ingest_fixture(tmp);
  auto r = run_cli({"prepare", "--manifest", manifest, "--recipe", "heading", "--tokenizer", tokenizer_arg(),
                    "--seq-len", "100", "--out", tmp.file("h.jsonl")});
  CHECK(r.exit_code == 1);
  CHECK_THAT(r.err, ContainsSubstring("row 0 (heading)"));
}

TEST_CASE("cli: data errors exit 1") {
  support::TempDir tmp;
  support::write_text(tmp.file("bad.jsonl"), "garbage\n");
  auto r = run_cli({"prepare", "--manifest", tmp.file("bad.jsonl"), "--recipe", "raw", "--tokenizer", tokenizer_arg(),
                    "--seq-len", "512", "--out", tmp.file("o.jsonl")});
  CHECK(r.exit_code == 1);
  CHECK_THAT(r.err, ContainsSubstring("bad.jsonl"));
}

TEST_CASE("cli: estimate feasible and infeasible") {
  auto ok = run_cli({"estimate", "--model", "7b", "--method", "lora", "--precision", "fp16", "--rows", "33"});
  CHECK(ok.exit_code == 0);
  CHECK_THAT(ok.out, ContainsSubstring("17.2 GB"));
  CHECK_THAT(ok.out, ContainsSubstring("15.0"));

  auto warn = run_cli({"estimate", "--model", "7b", "--rank", "16", "--alpha", "32", "--rows", "33"});
  CHECK(warn.exit_code == 0);
  CHECK_THAT(warn.err, ContainsSubstring("warning [rank-alpha]"));

  auto bad = run_cli({"estimate", "--model", "70b", "--method", "lora", "--precision", "fp16"});
  CHECK(bad.exit_code == 3);

  auto q = run_cli({"estimate", "--model", "70b", "--method", "qlora", "--precision", "nf4"});
  CHECK(q.exit_code == 0);
}

TEST_CASE("cli: global config file") {
  support::TempDir tmp;
  support::write_text(tmp.file("small.conf"), "hardware.gpu_gb = 10\n");
  auto r = run_cli({"--config", tmp.file("small.conf"), "estimate", "--model", "7b"});
  CHECK(r.exit_code == 3);
  support::write_text(tmp.file("broken.conf"), "nope = 1\n");
  CHECK(run_cli({"--config", tmp.file("broken.conf"), "estimate", "--model", "7b"}).exit_code == 1);
}

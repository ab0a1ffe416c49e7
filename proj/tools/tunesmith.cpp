// tunesmith: corpus ingestion, dataset preparation and compute estimation.
//
// Exit codes: 0 success, 1 data error, 2 usage error, 3 infeasible estimate.

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tunesmith/tunesmith.hpp"

namespace fs = std::filesystem;
using namespace tunesmith;

namespace {

constexpr int kOk = 0;
constexpr int kDataError = 1;
constexpr int kUsageError = 2;
constexpr int kInfeasible = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_report(const Report& report, const std::string& path) {
  if (path.empty()) {
    report.write(std::cerr);
  } else {
    report.write(path);
  }
}

// ---- ingest ----

struct IngestArgs {
  std::string docs;
  std::string code;
  std::string out;
  std::string report;
  std::vector<std::string> languages{"java", "python"};
};

int cmd_ingest(const IngestArgs& a) {
  if (a.docs.empty() && a.code.empty()) throw UsageError("ingest needs --docs and/or --code");
  for (const auto& dir : {a.docs, a.code}) {
    if (!dir.empty() && !fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
  }
  std::vector<Language> langs;
  for (const auto& l : a.languages) {
    auto lang = parse_language(l);
    if (!lang) throw UsageError("unknown language '" + l + "' (expected java or python)");
    langs.push_back(*lang);
  }

  Manifest m;
  Report skipped;
  if (!a.docs.empty()) {
    m.docs_root = fs::absolute(a.docs).lexically_normal().generic_string();
    auto docs = ingest_documents(m.docs_root);
    m.documents = std::move(docs.documents);
    skipped.append(docs.skipped);
  }
  if (!a.code.empty()) {
    m.code_root = fs::absolute(a.code).lexically_normal().generic_string();
    auto code = extract_code_units(m.code_root, langs);
    m.code_units = std::move(code.units);
    skipped.append(code.skipped);
  }
  write_manifest(m, a.out);

  std::size_t blocks = 0;
  for (const auto& d : m.documents) blocks += d.blocks.size();
  auto stats = corpus_stats(m.code_units);
  std::cerr << "documents: " << m.documents.size() << " (" << blocks << " blocks)\n"
            << "code units: " << stats.function_count << " (java " << stats.java_count << ", python "
            << stats.python_count << ", " << stats.total_bytes << " bytes)\n"
            << "skipped files: " << skipped.size() << "\n";
  write_report(skipped, a.report);
  return kOk;
}

// ---- prepare ----

struct PrepareArgs {
  std::string manifest;
  std::string recipe;
  std::string tokenizer;
  std::size_t seq_len = 0;
  std::size_t chunk = 512;
  std::size_t overlap = 64;
  std::size_t top_k = 5;
  std::size_t queries_per_chunk = 3;
  std::string endpoint;
  std::string out;
  std::string format = "jsonl";
  std::string tokenized_out;
  std::string report;
  std::optional<std::string> config;
  bool no_pack = false;
};

std::vector<Chunk> chunk_documents(const Manifest& m, const ChunkSpec& spec, const TokenizerModel& model) {
  std::vector<Chunk> chunks;
  for (const auto& d : m.documents) {
    auto c = split_chunks(d, spec, model);
    chunks.insert(chunks.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
  }
  return chunks;
}

int cmd_prepare(const PrepareArgs& a) {
  const auto recipe = parse_recipe(a.recipe);
  if (!recipe) throw UsageError("unknown recipe '" + a.recipe + "'");
  const bool needs_llm = *recipe == Recipe::query || *recipe == Recipe::code_summary;
  if (needs_llm && a.endpoint.empty()) {
    throw UsageError("recipe " + a.recipe + " needs an LLM endpoint: pass --endpoint URL");
  }
  auto comma = a.tokenizer.find(',');
  if (comma == std::string::npos) throw UsageError("--tokenizer expects VOCAB,MERGES");
  const std::string vocab_path = a.tokenizer.substr(0, comma), merges_path = a.tokenizer.substr(comma + 1);
  for (const auto& p : {a.manifest, vocab_path, merges_path}) {
    if (!fs::is_regular_file(p)) throw UsageError("no such file: " + p);
  }
  if (a.format != "jsonl" && a.format != "csv") throw UsageError("--format must be jsonl or csv");
  if (a.seq_len < 1) throw UsageError("--seq-len must be >= 1");
  ChunkSpec spec{a.chunk, a.overlap};
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }

  const Config cfg = resolve_config(a.config);
  const auto model = load_tokenizer(vocab_path, merges_path, cfg.specials);
  const Manifest m = read_manifest(a.manifest);
  const PromptTemplate& tmpl = cfg.tmpl;
  const std::size_t overhead = (cfg.add_bos ? 1 : 0) + (cfg.add_eos ? 1 : 0);
  if (a.seq_len <= overhead) throw UsageError("--seq-len must exceed the bos/eos overhead");

  ClientConfig client_cfg = cfg.client;
  if (!a.endpoint.empty()) client_cfg.base_url = a.endpoint;

  RecipeResult result;
  std::vector<TokenizedExample> examples;
  bool tokenized_done = false;
  switch (*recipe) {
    case Recipe::raw:
      result.rows = recipe_raw(chunk_documents(m, spec, model), tmpl);
      break;
    case Recipe::keyword: {
      RakeConfig rake;
      if (cfg.stoplist_path) rake.stopwords = load_stoplist(*cfg.stoplist_path);
      rake.top_k = a.top_k;
      rake.validate();
      result = recipe_keyword(chunk_documents(m, spec, model), rake, tmpl);
      break;
    }
    case Recipe::heading:
      for (const auto& d : m.documents) {
        auto r = recipe_heading(d, HeadingOptions{a.chunk, &model}, tmpl);
        result.rows.insert(result.rows.end(), r.rows.begin(), r.rows.end());
        result.report.append(r.report);
      }
      break;
    case Recipe::query: {
      HttpLlmClient client(client_cfg);
      QueryOptions q{a.queries_per_chunk, cfg.max_in_flight, cfg.query_temperature};
      result = recipe_query(chunk_documents(m, spec, model), client, q, tmpl);
      break;
    }
    case Recipe::code_summary:
    case Recipe::code_metadata: {
      // Body budget: what is left of a row after bos/eos and the template
      // scaffolding around an empty instruction.
      DatasetRow probe{Recipe::code_metadata, std::string(), std::nullopt, std::string(), {}};
      const std::size_t scaffold = model.count_tokens(tmpl.render(probe));
      CodeRecipeOptions o;
      o.model = &model;
      o.max_body_tokens = a.seq_len > overhead + scaffold ? a.seq_len - overhead - scaffold : 1;
      o.max_in_flight = cfg.max_in_flight;
      o.temperature = cfg.summary_temperature;
      if (*recipe == Recipe::code_summary) {
        HttpLlmClient client(client_cfg);
        result = recipe_code_summary(m.code_units, client, o, tmpl);
      } else {
        result = recipe_code_metadata(m.code_units, o, tmpl);
      }
      break;
    }
    case Recipe::code_tokenized: {
      if (m.code_root.empty()) throw UsageError("manifest has no code root; run ingest with --code");
      auto corpus = recipe_code_tokenized(m.code_root, model, a.seq_len, tmpl);
      result.rows = std::move(corpus.rows);
      result.report = std::move(corpus.report);
      examples = examples_from_windows(corpus.windows, a.seq_len, model.specials().pad_id);
      tokenized_done = true;
      break;
    }
  }

  if (!tokenized_done) {
    TokenizeOptions t{a.seq_len, cfg.add_bos, cfg.add_eos, !a.no_pack};
    examples = tokenize_rows(result.rows, model, tmpl, t).examples;
  }

  if (a.format == "csv") {
    write_csv(result.rows, a.out);
  } else {
    write_jsonl(result.rows, a.out);
  }
  if (!a.tokenized_out.empty()) write_tokenized(examples, model.specials().pad_id, a.tokenized_out);

  std::cerr << "recipe " << to_string(*recipe) << ": " << result.rows.size() << " rows, " << examples.size()
            << " examples, " << result.report.size() << " report entries\n";
  write_report(result.report, a.report);
  return kOk;
}

// ---- estimate ----

struct EstimateArgs {
  std::string model = "7b";
  std::string method = "lora";
  std::string precision;
  std::string task = "text";
  std::int64_t rank = 1;
  std::int64_t alpha = 16;
  std::int64_t batch = 1;
  std::int64_t accum = 1;
  std::int64_t seq_len = 4096;
  std::int64_t rows = 0;
  std::int64_t epochs = 3;
  std::optional<std::int64_t> steps;
  std::optional<std::int64_t> dataset_bytes;
  std::optional<double> gpu_gb;
  std::optional<double> cpu_gb;
  std::optional<int> gpu_count;
  std::string calibration;
  std::optional<std::string> config;
};

int cmd_estimate(const EstimateArgs& a) {
  const Config cfg = resolve_config(a.config);
  ModelSpec spec;
  if (a.model.ends_with(".json")) {
    if (!fs::is_regular_file(a.model)) throw UsageError("no such model spec: " + a.model);
    spec = load_model_spec(a.model);
  } else {
    try {
      spec = model_preset(a.model);
    } catch (const ValidationError& e) {
      throw UsageError(e.what());
    }
  }

  TuneConfig tc;
  auto method = parse_method(a.method);
  if (!method) throw UsageError("--method must be full, lora or qlora");
  tc.method = *method;
  if (a.precision.empty()) {
    tc.precision = tc.method == Method::qlora ? Precision::nf4 : Precision::fp16;
  } else {
    auto p = parse_precision(a.precision);
    if (!p) throw UsageError("--precision must be fp32, fp16, bf16, int8 or nf4");
    tc.precision = *p;
  }
  auto task = parse_task(a.task);
  if (!task) throw UsageError("--task must be text or code");
  tc.task = *task;
  tc.rank = a.rank;
  tc.alpha = a.alpha;
  tc.batch = a.batch;
  tc.grad_accum = a.accum;
  tc.seq_len = a.seq_len;
  tc.dataset_rows = a.rows;
  tc.epochs = a.epochs;
  tc.dataset_bytes = a.dataset_bytes;
  HardwareProfile hw = cfg.hardware;
  if (a.gpu_gb) hw.gpu_bytes = static_cast<std::int64_t>(std::llround(*a.gpu_gb * kGB));
  if (a.cpu_gb) hw.cpu_bytes = static_cast<std::int64_t>(std::llround(*a.cpu_gb * kGB));
  if (a.gpu_count) hw.gpu_count = *a.gpu_count;
  try {
    tc.validate();
    hw.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }

  auto est = training_memory(spec, tc, hw);
  if (a.steps) est.steps = *a.steps;

  std::string cal_path = !a.calibration.empty() ? a.calibration : cfg.calibration_path.value_or("");
  const CalibrationTable cal = cal_path.empty() ? CalibrationTable::seeded() : CalibrationTable::load(cal_path);
  try {
    est.minutes = time_for_steps(est.steps, spec.name, tc, cal);
  } catch (const CalibrationError& e) {
    std::cerr << "note: " << e.what() << "\n";
  }

  auto row = [](const std::string& k, const std::string& v) {
    std::cout << std::left << std::setw(20) << k << v << "\n";
  };
  row("model", spec.name);
  row("method", std::string(to_string(tc.method)) + " / " + std::string(to_string(tc.precision)));
  row("hardware", hw.name + " (" + format_gb(hw.gpu_bytes) + " GPU, " + format_gb(hw.cpu_bytes) + " CPU)");
  row("trainable params", std::to_string(est.trainable_params));
  row("weights", format_gb(est.weight_bytes));
  row("adapters", format_gb(est.adapter_bytes));
  row("gradients", format_gb(est.gradient_bytes));
  row("optimizer", format_gb(est.optimizer_bytes));
  row("activations", format_gb(est.activation_bytes));
  row("offloaded to CPU", format_gb(est.offloaded_bytes));
  row("GPU total", format_gb(est.gpu_total_bytes));
  row("CPU total", format_gb(est.cpu_total_bytes));
  row("steps", std::to_string(est.steps));
  if (est.minutes) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << *est.minutes;
    row("minutes", os.str());
  } else {
    row("minutes", "n/a");
  }
  row("feasible", est.feasible ? "yes" : "no");
  for (const auto& n : est.notes) std::cerr << "note: " << n << "\n";
  for (const auto& f : lint_config(spec, tc, est, hw)) std::cerr << "warning [" << f.code << "]: " << f.message << "\n";
  return est.feasible ? kOk : kInfeasible;
}

// ---- stub-server ----

struct StubArgs {
  std::string script;
  std::string host = "127.0.0.1";
  int port = 8080;
};

int cmd_stub_server(const StubArgs& a) {
  if (!fs::is_regular_file(a.script)) throw UsageError("no such script: " + a.script);
  StubServer server(StubServer::load_script(a.script));
  std::cerr << "stub server on http://" << a.host << ":" << a.port << "\n";
  server.run(a.host, a.port);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dataset preparation and compute planning for LLM fine-tuning"};
  app.require_subcommand(1);
  std::optional<std::string> config;
  app.add_option("--config", config, "Config file (default: $TUNESMITH_CONFIG)");

  IngestArgs ingest;
  auto* ing = app.add_subcommand("ingest", "Parse documents and code into a corpus manifest");
  ing->add_option("--docs", ingest.docs, "Directory of .md/.txt documents");
  ing->add_option("--code", ingest.code, "Code repository root");
  ing->add_option("--out", ingest.out, "Manifest path (JSONL)")->required();
  ing->add_option("--report", ingest.report, "Skipped-file report path (default: stderr)");
  ing->add_option("--languages", ingest.languages, "Languages to extract")->delimiter(',');

  PrepareArgs prep;
  auto* pre = app.add_subcommand("prepare", "Build a dataset from a manifest with one recipe");
  pre->add_option("--manifest", prep.manifest, "Corpus manifest from ingest")->required();
  pre->add_option("--recipe", prep.recipe,
                  "raw|keyword|heading|query|code-summary|code-metadata|code-tokenized")->required();
  pre->add_option("--tokenizer", prep.tokenizer, "VOCAB,MERGES")->required();
  pre->add_option("--seq-len", prep.seq_len, "Model sequence length")->required();
  pre->add_option("--chunk", prep.chunk, "Chunk size in tokens (also the heading split size)");
  pre->add_option("--overlap", prep.overlap, "Chunk overlap in tokens");
  pre->add_option("--top-k", prep.top_k, "Keyword phrases per chunk");
  pre->add_option("--queries-per-chunk", prep.queries_per_chunk, "Generated queries per chunk");
  pre->add_option("--endpoint", prep.endpoint, "Chat-completion base URL");
  pre->add_option("--out", prep.out, "Dataset output path")->required();
  pre->add_option("--format", prep.format, "jsonl or csv");
  pre->add_option("--tokenized-out", prep.tokenized_out, "Tokenized examples output path (JSONL)");
  pre->add_option("--report", prep.report, "Report path (default: stderr)");
  pre->add_flag("--no-pack", prep.no_pack, "One example per unpaired row");

  EstimateArgs est;
  auto* es = app.add_subcommand("estimate", "Predict memory, steps and time for a fine-tuning run");
  es->add_option("--model", est.model, "7b, 13b, 70b or a model spec .json");
  es->add_option("--method", est.method, "full, lora or qlora");
  es->add_option("--precision", est.precision, "fp32, fp16, bf16, int8 or nf4");
  es->add_option("--task", est.task, "text or code");
  es->add_option("--rank", est.rank, "LoRA rank");
  es->add_option("--alpha", est.alpha, "LoRA alpha");
  es->add_option("--batch", est.batch, "Per-device batch size");
  es->add_option("--accum", est.accum, "Gradient accumulation steps");
  es->add_option("--seq-len", est.seq_len, "Sequence length");
  es->add_option("--rows", est.rows, "Dataset rows");
  es->add_option("--epochs", est.epochs, "Epochs");
  es->add_option("--steps", est.steps, "Use this step count instead of deriving it from rows");
  es->add_option("--dataset-bytes", est.dataset_bytes, "Dataset size in bytes (for guideline checks)");
  es->add_option("--gpu", est.gpu_gb, "GPU memory budget in GB");
  es->add_option("--cpu", est.cpu_gb, "CPU memory budget in GB");
  es->add_option("--gpu-count", est.gpu_count, "GPUs in the profile");
  es->add_option("--calibration", est.calibration, "Calibration table (TSV)");

  StubArgs stub;
  auto* st = app.add_subcommand("stub-server", "Serve scripted chat completions");
  st->add_option("--script", stub.script, "Script file, one JSON response per line")->required();
  st->add_option("--host", stub.host, "Bind address");
  st->add_option("--port", stub.port, "Port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kUsageError;
  }

  try {
    if (*ing) return cmd_ingest(ingest);
    prep.config = config;
    est.config = config;
    if (*pre) return cmd_prepare(prep);
    if (*es) return cmd_estimate(est);
    if (*st) return cmd_stub_server(stub);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

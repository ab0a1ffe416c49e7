#pragma once

// Memory, step and time estimates for full / LoRA / QLoRA fine-tuning, plus a
// linter for configuration guidelines. All sizes are bytes; reports use
// decimal GB (1 GB = 1e9 bytes).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tunesmith/error.hpp"

namespace tunesmith {

enum class Precision { fp32, fp16, bf16, int8, nf4 };
enum class Method { full, lora, qlora };
enum class Task { text, code };

inline constexpr double kGB = 1e9;

inline std::string_view to_string(Precision p) {
  switch (p) {
    case Precision::fp32: return "fp32";
    case Precision::fp16: return "fp16";
    case Precision::bf16: return "bf16";
    case Precision::int8: return "int8";
    case Precision::nf4: return "nf4";
  }
  return "fp32";
}

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::full: return "full";
    case Method::lora: return "lora";
    case Method::qlora: return "qlora";
  }
  return "full";
}

inline std::string_view to_string(Task t) { return t == Task::text ? "text" : "code"; }

inline std::optional<Precision> parse_precision(std::string_view s) {
  for (auto p : {Precision::fp32, Precision::fp16, Precision::bf16, Precision::int8, Precision::nf4}) {
    if (to_string(p) == s) return p;
  }
  if (s == "int4" || s == "4bit") return Precision::nf4;
  return std::nullopt;
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (auto m : {Method::full, Method::lora, Method::qlora}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

inline std::optional<Task> parse_task(std::string_view s) {
  if (s == "text") return Task::text;
  if (s == "code") return Task::code;
  return std::nullopt;
}

// Storage bytes per parameter.
inline double bytes_per_param(Precision p) {
  switch (p) {
    case Precision::fp32: return 4.0;
    case Precision::fp16:
    case Precision::bf16: return 2.0;
    case Precision::int8: return 1.0;
    case Precision::nf4: return 0.5;
  }
  return 4.0;
}

// Bytes per activation element: quantized weights still compute in 16 bit.
inline double compute_bytes(Precision p) { return p == Precision::fp32 ? 4.0 : 2.0; }

inline bool is_quantized(Precision p) { return p == Precision::int8 || p == Precision::nf4; }

struct TargetModule {
  std::string name;
  std::int64_t d_out = 0;
  std::int64_t d_in = 0;
};

struct ModelSpec {
  std::string name;
  std::int64_t params = 0;
  std::int64_t layers = 0;
  std::int64_t hidden_dim = 0;
  std::vector<TargetModule> target_modules;  // per layer

  void validate() const {
    if (params <= 0) throw ValidationError("model " + name + ": params must be positive");
    if (layers <= 0) throw ValidationError("model " + name + ": layers must be positive");
    if (hidden_dim <= 0) throw ValidationError("model " + name + ": hidden_dim must be positive");
    for (const auto& m : target_modules) {
      if (m.d_out <= 0 || m.d_in <= 0) throw ValidationError("model " + name + ": module " + m.name + " has a non-positive shape");
    }
  }
};

// LLaMA-2 shaped presets with q_proj and v_proj as LoRA targets. The 70B
// model uses grouped-query attention, so v_proj projects to 8 KV heads.
inline ModelSpec model_preset(std::string_view name) {
  if (name == "7b") return {"7b", 7'000'000'000, 32, 4096, {{"q_proj", 4096, 4096}, {"v_proj", 4096, 4096}}};
  if (name == "13b") return {"13b", 13'000'000'000, 40, 5120, {{"q_proj", 5120, 5120}, {"v_proj", 5120, 5120}}};
  if (name == "70b") return {"70b", 70'000'000'000, 80, 8192, {{"q_proj", 8192, 8192}, {"v_proj", 1024, 8192}}};
  throw ValidationError("unknown model preset '" + std::string(name) + "' (expected 7b, 13b or 70b)");
}

// {"name": ..., "params": ..., "layers": ..., "hidden_dim": ...,
//  "target_modules": [{"name": ..., "d_out": ..., "d_in": ...}, ...]}
inline ModelSpec load_model_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model spec " + path);
  ModelSpec spec;
  try {
    auto j = nlohmann::json::parse(in);
    spec.name = j.value("name", std::string("custom"));
    spec.params = j.at("params").get<std::int64_t>();
    spec.layers = j.at("layers").get<std::int64_t>();
    spec.hidden_dim = j.at("hidden_dim").get<std::int64_t>();
    for (const auto& m : j.value("target_modules", nlohmann::json::array())) {
      spec.target_modules.push_back({m.value("name", std::string()), m.at("d_out").get<std::int64_t>(),
                                     m.at("d_in").get<std::int64_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("model spec " + path + ": " + e.what());
  }
  spec.validate();
  return spec;
}

struct TuneConfig {
  Precision precision = Precision::fp16;
  Method method = Method::lora;
  Task task = Task::text;
  std::int64_t rank = 1;
  std::int64_t alpha = 16;
  std::int64_t batch = 1;
  std::int64_t grad_accum = 1;
  std::int64_t seq_len = 4096;
  std::int64_t epochs = 3;
  std::int64_t dataset_rows = 0;
  std::optional<std::int64_t> dataset_bytes;

  void validate() const {
    if (batch < 1) throw ValidationError("batch must be >= 1");
    if (grad_accum < 1) throw ValidationError("grad_accum must be >= 1");
    if (seq_len < 1) throw ValidationError("seq_len must be >= 1");
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (dataset_rows < 0) throw ValidationError("dataset_rows must be >= 0");
    if (method != Method::full) {
      if (rank < 1) throw ValidationError("rank must be >= 1");
      if (alpha < 1) throw ValidationError("alpha must be >= 1");
    }
    if (method == Method::qlora && !is_quantized(precision)) {
      throw ValidationError("qlora requires int8 or nf4 precision");
    }
    if (method == Method::full && is_quantized(precision)) {
      throw ValidationError("full fine-tuning requires fp32, fp16 or bf16 precision");
    }
  }
};

struct HardwareProfile {
  std::string name = "a100-80gb";
  std::int64_t gpu_bytes = 80'000'000'000;
  std::int64_t cpu_bytes = 170'000'000'000;
  int gpu_count = 1;

  void validate() const {
    if (gpu_bytes <= 0 || cpu_bytes <= 0) throw ValidationError("hardware memory budgets must be positive");
    if (gpu_count < 1) throw ValidationError("gpu_count must be >= 1");
  }
};

struct ResourceEstimate {
  std::int64_t weight_bytes = 0;
  std::int64_t adapter_bytes = 0;
  std::int64_t gradient_bytes = 0;
  std::int64_t optimizer_bytes = 0;
  std::int64_t activation_bytes = 0;
  std::int64_t offloaded_bytes = 0;  // gradient/optimizer state held in CPU memory
  std::int64_t gpu_total_bytes = 0;
  std::int64_t cpu_total_bytes = 0;
  std::int64_t trainable_params = 0;
  std::int64_t steps = 0;
  std::optional<double> minutes;
  bool feasible = false;
  std::vector<std::string> notes;
};

// Constants of the memory model.
struct MemoryModel {
  double activation_factor = 3.0;        // activations per token per layer, in hidden_dim units
  double dequant_surcharge = 0.10;       // extra working set for quantized base weights
  double optimizer_bytes_per_param = 8;  // two fp32 Adam moments
  double adapter_bytes_per_param = 4;    // adapters and their gradients stay in fp32
  std::int64_t cpu_base_bytes = 6'000'000'000;  // host process, loader, CUDA context
};

inline std::int64_t weight_memory(std::int64_t params, Precision p) {
  return static_cast<std::int64_t>(std::llround(static_cast<double>(params) * bytes_per_param(p)));
}

// Formula value and the upper end of the runtime overhead band (quantized
// weights carry scales and outlier columns on top of the packed values).
struct ByteBand {
  std::int64_t low = 0;
  std::int64_t high = 0;
};

inline ByteBand weight_memory_band(std::int64_t params, Precision p) {
  std::int64_t base = weight_memory(params, p);
  double factor = is_quantized(p) ? 1.15 : 1.0;
  return {base, static_cast<std::int64_t>(std::llround(static_cast<double>(base) * factor))};
}

inline std::int64_t lora_trainable_params(const ModelSpec& spec, std::int64_t r) {
  if (r < 1) throw ValidationError("rank must be >= 1");
  std::int64_t per_layer = 0;
  for (const auto& m : spec.target_modules) per_layer += r * (m.d_in + m.d_out);
  return per_layer * spec.layers;
}

inline std::int64_t step_count(const TuneConfig& cfg) {
  if (cfg.batch < 1 || cfg.grad_accum < 1) throw ValidationError("batch and grad_accum must be >= 1");
  const std::int64_t eff = cfg.batch * cfg.grad_accum;
  return (cfg.dataset_rows + eff - 1) / eff * cfg.epochs;
}

inline std::string format_gb(std::int64_t bytes) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << static_cast<double>(bytes) / kGB << " GB";
  return os.str();
}

// Memory breakdown and feasibility. Full fine-tuning that does not fit falls
// back to a paged optimizer (optimizer state spills to CPU, the GPU fills to
// its budget) and then to gradient offload as well; LoRA/QLoRA never offload.
inline ResourceEstimate training_memory(const ModelSpec& spec, const TuneConfig& cfg, const HardwareProfile& hw = {},
                                        const MemoryModel& mm = {}) {
  spec.validate();
  cfg.validate();
  hw.validate();
  ResourceEstimate est;
  auto bytes = [](double v) { return static_cast<std::int64_t>(std::llround(v)); };

  double weights = static_cast<double>(spec.params) * bytes_per_param(cfg.precision);
  if (is_quantized(cfg.precision)) weights *= 1.0 + mm.dequant_surcharge;
  est.weight_bytes = bytes(weights);
  est.activation_bytes = bytes(mm.activation_factor * static_cast<double>(cfg.batch) *
                               static_cast<double>(cfg.seq_len) * static_cast<double>(spec.hidden_dim) *
                               static_cast<double>(spec.layers) * compute_bytes(cfg.precision));

  if (cfg.method == Method::full) {
    est.trainable_params = spec.params;
    est.gradient_bytes = bytes(static_cast<double>(spec.params) * bytes_per_param(cfg.precision));
    est.optimizer_bytes = bytes(static_cast<double>(spec.params) * mm.optimizer_bytes_per_param);
  } else {
    est.trainable_params = lora_trainable_params(spec, cfg.rank);
    const double t = static_cast<double>(est.trainable_params);
    est.adapter_bytes = bytes(t * mm.adapter_bytes_per_param);
    est.gradient_bytes = bytes(t * mm.adapter_bytes_per_param);
    est.optimizer_bytes = bytes(t * mm.optimizer_bytes_per_param);
  }

  const std::int64_t budget = hw.gpu_bytes;
  const std::int64_t resident = est.weight_bytes + est.adapter_bytes + est.activation_bytes;
  const std::int64_t all = resident + est.gradient_bytes + est.optimizer_bytes;
  est.gpu_total_bytes = all;
  if (cfg.method == Method::full && all > budget) {
    if (resident + est.gradient_bytes <= budget) {
      est.offloaded_bytes = all - budget;
      est.gpu_total_bytes = budget;
      est.notes.push_back("paged optimizer assumed");
    } else if (resident <= budget) {
      est.offloaded_bytes = all - budget;
      est.gpu_total_bytes = budget;
      est.notes.push_back("paged optimizer and gradient offload assumed");
    }
  }
  est.cpu_total_bytes = mm.cpu_base_bytes + est.offloaded_bytes;

  est.feasible = est.gpu_total_bytes <= budget && est.cpu_total_bytes <= hw.cpu_bytes;
  if (est.gpu_total_bytes > budget) {
    est.notes.push_back("GPU requirement " + format_gb(est.gpu_total_bytes) + " exceeds " + format_gb(budget));
  }
  if (est.cpu_total_bytes > hw.cpu_bytes) {
    est.notes.push_back("CPU requirement " + format_gb(est.cpu_total_bytes) + " exceeds " + format_gb(hw.cpu_bytes));
  }
  est.steps = step_count(cfg);
  return est;
}

struct CalibrationEntry {
  std::string model_class;
  Precision precision = Precision::fp32;
  std::int64_t seq_len = 0;
  double sec_per_step = 0;
  std::string source;
  Method method = Method::full;
  std::int64_t effective_batch = 1;  // batch x grad_accum the rate was measured at

  double sec_per_sample() const { return sec_per_step / static_cast<double>(effective_batch); }
};

// Measured step times. File format: tab-separated
//   model_class  precision  seq_len  sec_per_step  source  [method  effective_batch]
// with `#` comments; a first line starting with `model_class` is a header.
class CalibrationTable {
 public:
  CalibrationTable() = default;
  explicit CalibrationTable(std::vector<CalibrationEntry> entries) : entries_(std::move(entries)) {}

  static CalibrationTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open calibration table " + path);
    std::vector<CalibrationEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#' || line.starts_with("model_class")) continue;
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, '\t')) f.push_back(cell);
      auto fail = [&](const std::string& why) {
        return LoadError("calibration table " + path + " line " + std::to_string(lineno) + ": " + why);
      };
      if (f.size() < 5) throw fail("expected at least 5 tab-separated fields");
      CalibrationEntry e;
      e.model_class = f[0];
      auto p = parse_precision(f[1]);
      if (!p) throw fail("unknown precision '" + f[1] + "'");
      e.precision = *p;
      try {
        e.seq_len = std::stoll(f[2]);
        e.sec_per_step = std::stod(f[3]);
        if (f.size() > 6 && !f[6].empty()) e.effective_batch = std::stoll(f[6]);
      } catch (const std::exception&) {
        throw fail("bad number");
      }
      e.source = f[4];
      if (f.size() > 5 && !f[5].empty()) {
        auto m = parse_method(f[5]);
        if (!m) throw fail("unknown method '" + f[5] + "'");
        e.method = *m;
      }
      if (e.seq_len < 1 || !(e.sec_per_step > 0) || e.effective_batch < 1) throw fail("values must be positive");
      entries.push_back(std::move(e));
    }
    return CalibrationTable(std::move(entries));
  }

  // Rates measured on an A100 80 GB, derived from reported step counts and
  // wall-clock minutes: sec_per_step = minutes * 60 / steps. The LoRA rows
  // assume 33 rows x 3 epochs at batch 1 (99 steps).
  static CalibrationTable seeded() {
    auto rate = [](double minutes, double steps) { return minutes * 60.0 / steps; };
    return CalibrationTable({
        {"7b", Precision::fp32, 4096, rate(57, 254), "full FT 7B fp32 b1x2: 254 steps, 57 min", Method::full, 2},
        {"7b", Precision::fp16, 4096, rate(33, 63), "full FT 7B fp16 b2x4: 63 steps, 33 min", Method::full, 8},
        {"7b", Precision::fp16, 2048, rate(10, 16), "full FT 7B fp16 b4x8: 16 steps, 10 min", Method::full, 32},
        {"13b", Precision::fp32, 4096, rate(110, 254), "full FT 13B fp32 b1x2: 254 steps, 110 min", Method::full, 2},
        {"13b", Precision::fp16, 4096, rate(75, 127), "full FT 13B fp16 b2x4: 127 steps, 75 min", Method::full, 8},
        {"13b", Precision::fp16, 2048, rate(25, 16), "full FT 13B fp16 b4x8: 16 steps, 25 min", Method::full, 32},
        {"7b", Precision::fp16, 4096, rate(15, 99), "LoRA 7B: 60 KB, 3 epochs, 15 min", Method::lora, 1},
        {"13b", Precision::fp16, 4096, rate(25, 99), "LoRA 13B: 60 KB, 3 epochs, 25 min", Method::lora, 1},
        {"70b", Precision::nf4, 4096, rate(40, 99), "QLoRA 70B: 60 KB, 3 epochs, 40 min", Method::qlora, 1},
    });
  }

  const std::vector<CalibrationEntry>& entries() const noexcept { return entries_; }

  std::vector<std::string> classes() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
      if (std::find(out.begin(), out.end(), e.model_class) == out.end()) out.push_back(e.model_class);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Seconds per optimizer step for (class, cfg). Candidates are narrowed to
  // the same method family (full vs. adapter), then the same precision
  // (otherwise scaled by the compute-width ratio); per-sample time is
  // interpolated linearly in seq_len when bracketed, scaled proportionally
  // otherwise, and multiplied by batch x grad_accum.
  double sec_per_step(const std::string& model_class, const TuneConfig& cfg) const {
    std::vector<const CalibrationEntry*> pool;
    for (const auto& e : entries_) {
      if (e.model_class == model_class) pool.push_back(&e);
    }
    if (pool.empty()) {
      std::string avail;
      for (const auto& c : classes()) avail += (avail.empty() ? "" : ", ") + c;
      throw CalibrationError("no calibration for model class '" + model_class + "'; available: " +
                             (avail.empty() ? std::string("none") : avail));
    }
    auto family = [](Method m) { return m == Method::full ? 0 : 1; };
    narrow(pool, [&](const CalibrationEntry* e) { return e->method == cfg.method; });
    narrow(pool, [&](const CalibrationEntry* e) { return family(e->method) == family(cfg.method); });
    narrow(pool, [&](const CalibrationEntry* e) { return e->precision == cfg.precision; });
    narrow(pool, [&](const CalibrationEntry* e) { return compute_bytes(e->precision) == compute_bytes(cfg.precision); });

    // Per-sample seconds at each measured seq_len (averaged when repeated).
    std::map<std::int64_t, std::pair<double, int>> by_len;
    for (const auto* e : pool) {
      double s = e->sec_per_sample() * compute_bytes(cfg.precision) / compute_bytes(e->precision);
      auto& [sum, n] = by_len[e->seq_len];
      sum += s;
      ++n;
    }
    auto at = [&](auto it) { return it->second.first / it->second.second; };
    const double len = static_cast<double>(cfg.seq_len);
    double per_sample;
    auto hi = by_len.lower_bound(cfg.seq_len);
    if (hi != by_len.end() && hi->first == cfg.seq_len) {
      per_sample = at(hi);
    } else if (hi != by_len.end() && hi != by_len.begin()) {
      auto lo = std::prev(hi);
      double t = (len - static_cast<double>(lo->first)) / static_cast<double>(hi->first - lo->first);
      per_sample = at(lo) + t * (at(hi) - at(lo));
    } else {
      auto near = hi == by_len.end() ? std::prev(hi) : hi;
      per_sample = at(near) * len / static_cast<double>(near->first);
    }
    return per_sample * static_cast<double>(cfg.batch * cfg.grad_accum);
  }

 private:
  template <typename Pred>
  static void narrow(std::vector<const CalibrationEntry*>& pool, Pred pred) {
    std::vector<const CalibrationEntry*> kept;
    for (const auto* e : pool) {
      if (pred(e)) kept.push_back(e);
    }
    if (!kept.empty()) pool = std::move(kept);
  }

  std::vector<CalibrationEntry> entries_;
};

// Minutes for an explicit step count (step counts reported by training runs
// need not follow from row counts).
inline double time_for_steps(std::int64_t steps, const std::string& model_class, const TuneConfig& cfg,
                             const CalibrationTable& cal) {
  if (steps <= 0) return 0.0;
  return static_cast<double>(steps) * cal.sec_per_step(model_class, cfg) / 60.0;
}

inline double time_estimate(const std::string& model_class, const TuneConfig& cfg, const CalibrationTable& cal) {
  return time_for_steps(step_count(cfg), model_class, cfg, cal);
}

struct Finding {
  std::string code;
  std::string message;

  bool operator==(const Finding&) const = default;
};

inline std::vector<Finding> lint_config(const ModelSpec& spec, const TuneConfig& cfg, const ResourceEstimate& est,
                                        const HardwareProfile& hw = {}) {
  (void)spec;
  std::vector<Finding> out;
  if (cfg.method != Method::full && cfg.task == Task::text && cfg.rank > 8 && cfg.alpha < 4 * cfg.rank) {
    out.push_back({"rank-alpha", "rank " + std::to_string(cfg.rank) + " with alpha " + std::to_string(cfg.alpha) +
                                     " for knowledge injection; prefer a lower rank and alpha >= 4 x rank"});
  }
  if (static_cast<double>(est.gpu_total_bytes) > 0.95 * static_cast<double>(hw.gpu_bytes)) {
    out.push_back({"gpu-headroom", "GPU use " + format_gb(est.gpu_total_bytes) + " is above 95% of " +
                                       format_gb(hw.gpu_bytes) + "; lower the batch size"});
  }
  if (cfg.grad_accum > 8 && hw.gpu_count == 1) {
    out.push_back({"grad-accum", "gradient accumulation " + std::to_string(cfg.grad_accum) +
                                     " on a single GPU saves memory at the cost of much longer training"});
  }
  if (cfg.method == Method::full && cfg.dataset_bytes && *cfg.dataset_bytes < 1'000'000) {
    out.push_back({"full-small-data", "full fine-tuning on " + std::to_string(*cfg.dataset_bytes) +
                                          " bytes of data; parameter-efficient fine-tuning is preferable"});
  }
  return out;
}

}  // namespace tunesmith

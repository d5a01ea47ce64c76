#include "grposim/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "grposim/errors.hpp"
#include "grposim/rng.hpp"

namespace grposim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ConfigError("config: " + key + ": not a number: \"" + v + "\"");
  return out;
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ConfigError("config: " + key + ": not an integer: \"" + v + "\"");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ConfigError("config: " + key + ": not an unsigned integer: \"" + v +
                      "\"");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: " + key + ": not a boolean: \"" + v + "\"");
}

std::vector<double> to_double_list(const std::string& key,
                                   const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(to_double(key, trim(part)));
  if (out.empty()) throw ConfigError("config: " + key + ": empty list");
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        ": expected key = value");
    entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return entries;
}

RunConfig build_run_config(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  RunConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"seed", [&](auto& k, auto& v) { cfg.seed = to_u64(k, v); }},
      {"data.path", [&](auto&, auto& v) { cfg.dataset_path = v; }},
      {"data.synth.dimension",
       [&](auto& k, auto& v) {
         cfg.use_synth = true;
         cfg.synth.dimension = static_cast<std::size_t>(to_long(k, v));
       }},
      {"data.synth.classes",
       [&](auto& k, auto& v) {
         cfg.use_synth = true;
         cfg.synth.num_classes = static_cast<std::size_t>(to_long(k, v));
       }},
      {"data.synth.per_class",
       [&](auto& k, auto& v) {
         cfg.use_synth = true;
         cfg.synth.questions_per_class = static_cast<std::size_t>(to_long(k, v));
       }},
      {"data.synth.options",
       [&](auto& k, auto& v) {
         cfg.use_synth = true;
         cfg.synth.options_per_question = static_cast<std::size_t>(to_long(k, v));
       }},
      {"data.synth.margins",
       [&](auto& k, auto& v) {
         cfg.use_synth = true;
         cfg.synth.margins = to_double_list(k, v);
       }},
      {"data.synth.seed",
       [&](auto& k, auto& v) {
         cfg.use_synth = true;
         cfg.synth_seed = to_u64(k, v);
       }},
      {"data.min_difficulty",
       [&](auto& k, auto& v) { cfg.min_difficulty = to_double(k, v); }},
      {"data.max_difficulty",
       [&](auto& k, auto& v) { cfg.max_difficulty = to_double(k, v); }},
      {"provider.kind", [&](auto&, auto& v) { cfg.provider_kind = v; }},
      {"provider.seed",
       [&](auto& k, auto& v) { cfg.provider_seed = to_u64(k, v); }},
      {"provider.table", [&](auto&, auto& v) { cfg.provider_table = v; }},
      {"score.mode", [&](auto&, auto& v) { cfg.score_mode = v; }},
      {"policy.temperature",
       [&](auto& k, auto& v) { cfg.temperature = to_double(k, v); }},
      {"grpo.group_size",
       [&](auto& k, auto& v) { cfg.grpo.group_size = static_cast<int>(to_long(k, v)); }},
      {"grpo.clip_epsilon",
       [&](auto& k, auto& v) { cfg.grpo.clip_epsilon = to_double(k, v); }},
      {"grpo.kl_beta",
       [&](auto& k, auto& v) { cfg.grpo.kl_beta = to_double(k, v); }},
      {"grpo.learning_rate",
       [&](auto& k, auto& v) { cfg.grpo.learning_rate = to_double(k, v); }},
      {"grpo.std_floor",
       [&](auto& k, auto& v) { cfg.grpo.std_floor = to_double(k, v); }},
      {"grpo.strategy",
       [&](auto&, auto& v) { cfg.grpo.strategy = parse_strategy(v); }},
      {"grpo.dapo_max_retries",
       [&](auto& k, auto& v) {
         cfg.grpo.dapo_max_retries = static_cast<int>(to_long(k, v));
       }},
      {"grpo.gpg_scale_mode",
       [&](auto&, auto& v) { cfg.grpo.gpg_scale_mode = v; }},
      {"grpo.steps", [&](auto& k, auto& v) { cfg.grpo.steps = to_long(k, v); }},
      {"grpo.old_refresh_every",
       [&](auto& k, auto& v) { cfg.grpo.old_refresh_every = to_long(k, v); }},
      {"grpo.ref_refresh_every",
       [&](auto& k, auto& v) { cfg.grpo.ref_refresh_every = to_long(k, v); }},
      {"augment.num_text_variants",
       [&](auto& k, auto& v) {
         cfg.augment.num_text_variants = static_cast<int>(to_long(k, v));
       }},
      {"augment.noise_sigma",
       [&](auto& k, auto& v) { cfg.augment.noise_sigma = to_double(k, v); }},
      {"augment.min_cosine",
       [&](auto& k, auto& v) { cfg.augment.min_cosine = to_double(k, v); }},
      {"augment.max_rejections",
       [&](auto& k, auto& v) {
         cfg.augment.max_rejections = static_cast<int>(to_long(k, v));
       }},
      {"augment.include_original",
       [&](auto& k, auto& v) { cfg.augment.include_original = to_bool(k, v); }},
      {"augment.text_gamma",
       [&](auto& k, auto& v) { cfg.augment.text_gamma = to_double(k, v); }},
      {"augment.template_file",
       [&](auto&, auto& v) { cfg.template_file = v; }},
      {"curriculum.enabled",
       [&](auto& k, auto& v) { cfg.curriculum.enabled = to_bool(k, v); }},
      {"curriculum.num_bins",
       [&](auto& k, auto& v) {
         cfg.curriculum.num_bins = static_cast<int>(to_long(k, v));
       }},
      {"curriculum.strategy",
       [&](auto&, auto& v) { cfg.curriculum.strategy = parse_bin_strategy(v); }},
      {"curriculum.threshold",
       [&](auto& k, auto& v) { cfg.curriculum.threshold = to_double(k, v); }},
      {"curriculum.window",
       [&](auto& k, auto& v) {
         cfg.curriculum.window = static_cast<int>(to_long(k, v));
       }},
      {"curriculum.replay_fraction",
       [&](auto& k, auto& v) {
         cfg.curriculum.replay_fraction = to_double(k, v);
       }},
      {"metrics.curve_window",
       [&](auto& k, auto& v) { cfg.curve_window = static_cast<int>(to_long(k, v)); }},
      {"eval.samples",
       [&](auto& k, auto& v) { cfg.eval_samples = static_cast<int>(to_long(k, v)); }},
  };

  for (const auto& [key, value] : entries) {
    auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError("config: unknown key \"" + key + "\"");
    it->second(key, value);
  }
  return cfg;
}

void validate_run_config(const RunConfig& cfg_in) {
  const RunConfig& cfg = cfg_in;
  if (cfg.dataset_path.empty() && !cfg.use_synth)
    throw ConfigError("config: set data.path or data.synth.* keys");
  if (!cfg.dataset_path.empty() && cfg.use_synth)
    throw ConfigError("config: data.path and data.synth.* are exclusive");

  if (cfg.provider_kind != "hash" && cfg.provider_kind != "table")
    throw ConfigError("config: provider.kind must be hash or table");
  if (cfg.provider_kind == "table" && cfg.provider_table.empty())
    throw ConfigError("config: provider.table path required for table provider");
  if (cfg.score_mode != "features" && cfg.score_mode != "provider")
    throw ConfigError("config: score.mode must be features or provider");

  if (!(cfg.temperature > 0.0))
    throw ConfigError("config: policy.temperature must be > 0");
  if (cfg.grpo.group_size < 2)
    throw ConfigError("config: grpo.group_size must be >= 2");
  if (!(cfg.grpo.clip_epsilon > 0.0))
    throw ConfigError("config: grpo.clip_epsilon must be > 0");
  if (cfg.grpo.kl_beta < 0.0)
    throw ConfigError("config: grpo.kl_beta must be >= 0");
  if (!(cfg.grpo.learning_rate > 0.0))
    throw ConfigError("config: grpo.learning_rate must be > 0");
  if (!(cfg.grpo.std_floor > 0.0))
    throw ConfigError("config: grpo.std_floor must be > 0");
  if (cfg.grpo.dapo_max_retries < 1)
    throw ConfigError("config: grpo.dapo_max_retries must be >= 1");
  if (cfg.grpo.gpg_scale_mode != "batch-rescale")
    throw ConfigError("config: grpo.gpg_scale_mode must be batch-rescale");
  if (cfg.grpo.steps < 0) throw ConfigError("config: grpo.steps must be >= 0");

  if (cfg.augment.num_text_variants < 0)
    throw ConfigError("config: augment.num_text_variants must be >= 0");
  if (cfg.augment.noise_sigma < 0.0)
    throw ConfigError("config: augment.noise_sigma must be >= 0");
  if (!(cfg.augment.min_cosine > 0.0 && cfg.augment.min_cosine <= 1.0))
    throw ConfigError("config: augment.min_cosine must be in (0, 1]");
  if (cfg.augment.max_rejections < 1)
    throw ConfigError("config: augment.max_rejections must be >= 1");
  if (cfg.augment.text_gamma < 0.0)
    throw ConfigError("config: augment.text_gamma must be >= 0");

  if (cfg.curriculum.num_bins < 1)
    throw ConfigError("config: curriculum.num_bins must be >= 1");
  if (!(cfg.curriculum.threshold >= 0.0 && cfg.curriculum.threshold <= 1.0))
    throw ConfigError("config: curriculum.threshold must be in [0, 1]");
  if (cfg.curriculum.window < 1)
    throw ConfigError("config: curriculum.window must be >= 1");
  if (!(cfg.curriculum.replay_fraction >= 0.0 &&
        cfg.curriculum.replay_fraction < 1.0))
    throw ConfigError("config: curriculum.replay_fraction must be in [0, 1)");

  if (cfg.curve_window < 1)
    throw ConfigError("config: metrics.curve_window must be >= 1");
  if (cfg.eval_samples < 5)
    throw ConfigError("config: eval.samples must be >= 5");

  if (cfg.use_synth) {
    if (cfg.synth.margins.empty())
      throw ConfigError("config: data.synth.margins is required");
    if (cfg.synth.margins.size() != 1 &&
        cfg.synth.margins.size() != cfg.synth.num_classes)
      throw ConfigError(
          "config: data.synth.margins must have one value or one per class");
    for (double m : cfg.synth.margins)
      if (!(m > 0.0 && m <= 2.0))
        throw ConfigError("config: data.synth.margins values must be in (0, 2]");
  }
}

std::string canonical_config_text(const RunConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["seed"] = std::to_string(cfg.seed);
  if (cfg.use_synth) {
    kv["data.synth.dimension"] = std::to_string(cfg.synth.dimension);
    kv["data.synth.classes"] = std::to_string(cfg.synth.num_classes);
    kv["data.synth.per_class"] = std::to_string(cfg.synth.questions_per_class);
    kv["data.synth.options"] = std::to_string(cfg.synth.options_per_question);
    std::string margins;
    for (std::size_t i = 0; i < cfg.synth.margins.size(); ++i)
      margins += (i ? "," : "") + fmt_double(cfg.synth.margins[i]);
    kv["data.synth.margins"] = margins;
    kv["data.synth.seed"] = std::to_string(cfg.synth_seed);
  } else {
    kv["data.path"] = cfg.dataset_path;
  }
  kv["data.min_difficulty"] = fmt_double(cfg.min_difficulty);
  kv["data.max_difficulty"] = fmt_double(cfg.max_difficulty);
  kv["provider.kind"] = cfg.provider_kind;
  kv["provider.seed"] = std::to_string(cfg.provider_seed);
  if (!cfg.provider_table.empty()) kv["provider.table"] = cfg.provider_table;
  kv["score.mode"] = cfg.score_mode;
  kv["policy.temperature"] = fmt_double(cfg.temperature);
  kv["grpo.group_size"] = std::to_string(cfg.grpo.group_size);
  kv["grpo.clip_epsilon"] = fmt_double(cfg.grpo.clip_epsilon);
  kv["grpo.kl_beta"] = fmt_double(cfg.grpo.kl_beta);
  kv["grpo.learning_rate"] = fmt_double(cfg.grpo.learning_rate);
  kv["grpo.std_floor"] = fmt_double(cfg.grpo.std_floor);
  kv["grpo.strategy"] = to_string(cfg.grpo.strategy);
  kv["grpo.dapo_max_retries"] = std::to_string(cfg.grpo.dapo_max_retries);
  kv["grpo.gpg_scale_mode"] = cfg.grpo.gpg_scale_mode;
  kv["grpo.steps"] = std::to_string(cfg.grpo.steps);
  kv["grpo.old_refresh_every"] = std::to_string(cfg.grpo.old_refresh_every);
  kv["grpo.ref_refresh_every"] = std::to_string(cfg.grpo.ref_refresh_every);
  kv["augment.num_text_variants"] =
      std::to_string(cfg.augment.num_text_variants);
  kv["augment.noise_sigma"] = fmt_double(cfg.augment.noise_sigma);
  kv["augment.min_cosine"] = fmt_double(cfg.augment.min_cosine);
  kv["augment.max_rejections"] = std::to_string(cfg.augment.max_rejections);
  kv["augment.include_original"] =
      cfg.augment.include_original ? "true" : "false";
  kv["augment.text_gamma"] = fmt_double(cfg.augment.text_gamma);
  if (!cfg.template_file.empty()) kv["augment.template_file"] = cfg.template_file;
  kv["curriculum.enabled"] = cfg.curriculum.enabled ? "true" : "false";
  kv["curriculum.num_bins"] = std::to_string(cfg.curriculum.num_bins);
  kv["curriculum.strategy"] = to_string(cfg.curriculum.strategy);
  kv["curriculum.threshold"] = fmt_double(cfg.curriculum.threshold);
  kv["curriculum.window"] = std::to_string(cfg.curriculum.window);
  kv["curriculum.replay_fraction"] = fmt_double(cfg.curriculum.replay_fraction);
  kv["metrics.curve_window"] = std::to_string(cfg.curve_window);
  kv["eval.samples"] = std::to_string(cfg.eval_samples);

  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string config_hash_hex(const RunConfig& cfg) {
  const std::uint64_t h = fnv1a64(canonical_config_text(cfg));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string output_header(const RunConfig& cfg) {
  return "# config_hash=" + config_hash_hex(cfg) +
         " seed=" + std::to_string(cfg.seed);
}

}  // namespace grposim

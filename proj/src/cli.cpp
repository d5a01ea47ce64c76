#include "grposim/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "grposim/errors.hpp"
#include "grposim/svg.hpp"

namespace grposim {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir);
}

void echo_config(const RunConfig& cfg, const std::string& out_dir) {
  std::ofstream out(fs::path(out_dir) / "effective_config.txt");
  if (!out) throw DataError("cannot write effective_config.txt in " + out_dir);
  out << output_header(cfg) << "\n" << canonical_config_text(cfg);
}

AugmentConfig effective_augment(const RunConfig& cfg) {
  AugmentConfig acfg = cfg.augment;
  if (!cfg.template_file.empty())
    acfg.templates = load_template_file(cfg.template_file);
  return acfg;
}

}  // namespace

RunAssets load_assets(const RunConfig& cfg) {
  validate_run_config(cfg);
  RunAssets assets;
  if (cfg.use_synth) {
    SynthSpec spec = cfg.synth;
    if (spec.margins.size() == 1 && spec.num_classes > 1)
      spec.margins.assign(spec.num_classes, spec.margins[0]);
    assets.dataset = synth_generate(spec, cfg.synth_seed);
  } else {
    assets.dataset = load_dataset(cfg.dataset_path);
  }

  if (cfg.provider_kind == "table") {
    assets.provider =
        std::make_unique<TableProvider>(TableProvider::load(cfg.provider_table));
  } else {
    assets.provider =
        std::make_unique<HashProvider>(assets.dataset.dimension,
                                       cfg.provider_seed);
  }

  if (cfg.min_difficulty > -2.0 || cfg.max_difficulty < 2.0) {
    const auto scores = compute_scores(cfg, assets);
    Dataset filtered;
    filtered.dimension = assets.dataset.dimension;
    for (std::size_t i = 0; i < assets.dataset.records.size(); ++i) {
      if (scores[i].score >= cfg.min_difficulty &&
          scores[i].score <= cfg.max_difficulty)
        filtered.records.push_back(assets.dataset.records[i]);
    }
    if (filtered.records.empty())
      throw DataError("difficulty filter removed every record");
    assets.dataset = std::move(filtered);
  }
  return assets;
}

std::vector<DifficultyScore> compute_scores(const RunConfig& cfg,
                                            const RunAssets& assets) {
  const EmbeddingProvider* provider =
      cfg.score_mode == "provider" ? assets.provider.get() : nullptr;
  return score_dataset(assets.dataset, provider);
}

MethodSpec parse_method(const std::string& name) {
  if (name == "asc") return {"asc", GroupStrategy::Vanilla, true};
  return {name, parse_strategy(name), false};
}

RunConfig apply_method(RunConfig cfg, const MethodSpec& method) {
  cfg.grpo.strategy = method.strategy;
  cfg.curriculum.enabled = method.curriculum;
  return cfg;
}

TrainOutput train_run(const RunConfig& cfg, const RunAssets& assets) {
  PolicyParams initial;
  initial.theta.assign(assets.dataset.dimension, 0.0);
  initial.temperature = cfg.temperature;

  GrpoConfig gcfg = cfg.grpo;
  gcfg.seed = cfg.seed;
  const AugmentConfig acfg = effective_augment(cfg);

  std::unique_ptr<CurriculumState> curriculum;
  if (cfg.curriculum.enabled) {
    const auto scores = compute_scores(cfg, assets);
    auto bins = partition_bins(scores, cfg.curriculum.num_bins,
                               cfg.curriculum.strategy);
    curriculum = std::make_unique<CurriculumState>(
        assets.dataset, std::move(bins), cfg.curriculum.threshold,
        static_cast<std::size_t>(cfg.curriculum.window),
        cfg.curriculum.replay_fraction);
  }

  TrainOutput out;
  out.log = run_training(assets.dataset, initial, gcfg, acfg, curriculum.get(),
                         *assets.provider, &out.final_params);
  return out;
}

int cmd_score(const RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const RunAssets assets = load_assets(cfg);
  echo_config(cfg, out_dir);
  auto scores = compute_scores(cfg, assets);
  std::sort(scores.begin(), scores.end(),
            [](const DifficultyScore& a, const DifficultyScore& b) {
              if (a.score != b.score) return a.score < b.score;
              return a.question_id < b.question_id;
            });
  std::ofstream out(fs::path(out_dir) / "scores.csv");
  if (!out) throw DataError("cannot write scores.csv in " + out_dir);
  out << output_header(cfg) << "\n";
  out << "question_id,score\n";
  for (const auto& s : scores) out << s.question_id << ',' << fmt(s.score) << "\n";
  std::cout << "scored " << scores.size() << " questions -> "
            << (fs::path(out_dir) / "scores.csv").string() << "\n";
  return 0;
}

int cmd_bin(const RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const RunAssets assets = load_assets(cfg);
  echo_config(cfg, out_dir);
  const auto scores = compute_scores(cfg, assets);
  const auto bins =
      partition_bins(scores, cfg.curriculum.num_bins, cfg.curriculum.strategy);
  write_curriculum_export(bins, (fs::path(out_dir) / "bins.jsonl").string(),
                          output_header(cfg));
  for (const auto& b : bins) {
    std::cout << "bin " << b.index << ": " << b.question_ids.size()
              << " questions, score range [" << fmt(b.lower) << ", "
              << fmt(b.upper) << "], mean " << fmt(b.mean_score) << "\n";
  }
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  const RunAssets assets = load_assets(cfg);
  echo_config(cfg, out_dir);
  const TrainOutput out = train_run(cfg, assets);
  const std::string header = output_header(cfg);

  write_metrics_csv(out.log, (fs::path(out_dir) / "metrics.csv").string(), header);
  write_curves_csv(out.log, (fs::path(out_dir) / "curves.csv").string(), header,
                   cfg.curve_window);
  save_checkpoint(out.final_params,
                  (fs::path(out_dir) / "checkpoint.txt").string(), header);

  double tail = 0.0;
  const std::size_t n = out.log.rows.size();
  const std::size_t w = std::min<std::size_t>(n, 100);
  for (std::size_t i = n - w; i < n; ++i) tail += out.log.rows[i].reward_mean;
  std::cout << "trained " << n << " steps (" << to_string(cfg.grpo.strategy)
            << (cfg.curriculum.enabled ? ", curriculum" : "")
            << "); final reward (last " << w
            << " steps): " << (w ? fmt(tail / w) : "n/a")
            << "; perturb fallbacks: " << out.log.perturb_fallbacks << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& out_dir,
             const std::string& checkpoint_path) {
  ensure_dir(out_dir);
  const RunAssets assets = load_assets(cfg);
  echo_config(cfg, out_dir);
  const PolicyParams params = load_checkpoint(checkpoint_path);
  const EvalResult result = eval_run(cfg, assets, params);
  const std::string header = output_header(cfg);
  write_eval_csv(result, (fs::path(out_dir) / "eval.csv").string(), header);
  write_summary_csv(result, (fs::path(out_dir) / "summary.csv").string(), header);
  std::cout << "avg@5 " << fmt(result.overall.avg_at_5) << ", pass@1 "
            << fmt(result.overall.pass_at_1) << ", major@5 "
            << fmt(result.overall.major_at_5) << " over " << result.overall.n
            << " questions\n";
  return 0;
}

EvalResult eval_run(const RunConfig& cfg, const RunAssets& assets,
                    const PolicyParams& params) {
  Rng eval_rng(mix_seed(cfg.seed, 0xE7A1));
  return evaluate(params, assets.dataset, *assets.provider,
                  cfg.augment.text_gamma, eval_rng, cfg.eval_samples);
}

int cmd_compare(const RunConfig& cfg, const std::string& out_dir,
                const std::vector<std::string>& methods) {
  if (methods.empty()) throw ConfigError("compare: no methods given");
  ensure_dir(out_dir);
  const RunAssets assets = load_assets(cfg);
  echo_config(cfg, out_dir);

  std::ofstream summary(fs::path(out_dir) / "summary.csv");
  if (!summary) throw DataError("cannot write summary.csv in " + out_dir);
  summary << output_header(cfg) << "\n";
  summary << "method,avg_at_5,pass_at_1,major_at_5\n";

  std::vector<double> steps;
  std::vector<SvgSeries> reward_series, invalid_series;

  for (const auto& name : methods) {
    const MethodSpec method = parse_method(name);
    const RunConfig mcfg = apply_method(cfg, method);
    const std::string mdir = (fs::path(out_dir) / method.name).string();
    ensure_dir(mdir);

    const TrainOutput out = train_run(mcfg, assets);
    const std::string header = output_header(mcfg);
    write_metrics_csv(out.log, (fs::path(mdir) / "metrics.csv").string(), header);
    write_curves_csv(out.log, (fs::path(mdir) / "curves.csv").string(), header,
                     mcfg.curve_window);
    save_checkpoint(out.final_params,
                    (fs::path(mdir) / "checkpoint.txt").string(), header);

    const EvalResult result = eval_run(mcfg, assets, out.final_params);
    summary << method.name << ',' << fmt(result.overall.avg_at_5) << ','
            << fmt(result.overall.pass_at_1) << ','
            << fmt(result.overall.major_at_5) << "\n";
    std::cout << method.name << ": avg@5 " << fmt(result.overall.avg_at_5)
              << ", pass@1 " << fmt(result.overall.pass_at_1) << ", major@5 "
              << fmt(result.overall.major_at_5) << "\n";

    if (steps.empty())
      for (const auto& r : out.log.rows) steps.push_back(static_cast<double>(r.step));
    std::vector<double> rewards;
    for (const auto& r : out.log.rows) rewards.push_back(r.reward_mean);
    reward_series.push_back(
        {method.name, rolling_mean(rewards, mcfg.curve_window)});
    invalid_series.push_back(
        {method.name, invalid_ratio(out.log, mcfg.curve_window, false).overall});
  }

  write_line_chart((fs::path(out_dir) / "reward.svg").string(),
                   "rolling mean reward", steps, reward_series);
  write_line_chart((fs::path(out_dir) / "invalid.svg").string(),
                   "rolling invalid-group ratio", steps, invalid_series);
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"group-relative policy optimization simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", strategy, checkpoint;
  std::string strategies_csv = "vanilla,dapo_resample,gpg_scale,gdqa,asc";
  std::vector<std::string> overrides;
  long long seed_flag = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--seed", seed_flag, "run seed (overrides config)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--set", overrides, "override: key=value (repeatable)");
  };

  auto* score = app.add_subcommand("score", "write per-question difficulty");
  add_common(score);
  auto* bin = app.add_subcommand("bin", "partition questions into bins");
  add_common(bin);
  auto* train = app.add_subcommand("train", "run training");
  add_common(train);
  train->add_option("--strategy", strategy, "group strategy");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  auto* compare = app.add_subcommand("compare", "train and compare methods");
  add_common(compare);
  compare->add_option("--strategies", strategies_csv,
                      "comma-separated methods");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::vector<std::pair<std::string, std::string>> entries;
    if (!config_path.empty()) entries = read_config_file(config_path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos)
        throw ConfigError("--set expects key=value, got \"" + o + "\"");
      entries.emplace_back(o.substr(0, eq), o.substr(eq + 1));
    }
    RunConfig cfg = build_run_config(entries);
    if (seed_flag >= 0) cfg.seed = static_cast<std::uint64_t>(seed_flag);
    if (!strategy.empty()) cfg.grpo.strategy = parse_strategy(strategy);
    validate_run_config(cfg);

    if (*score) return cmd_score(cfg, out_dir);
    if (*bin) return cmd_bin(cfg, out_dir);
    if (*train) return cmd_train(cfg, out_dir);
    if (*eval) return cmd_eval(cfg, out_dir, checkpoint);
    if (*compare) {
      std::vector<std::string> methods;
      std::stringstream ss(strategies_csv);
      std::string part;
      while (std::getline(ss, part, ',')) {
        if (!part.empty()) methods.push_back(part);
      }
      return cmd_compare(cfg, out_dir, methods);
    }
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace grposim

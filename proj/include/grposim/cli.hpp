#ifndef GRPOSIM_CLI_HPP_
#define GRPOSIM_CLI_HPP_

#include <memory>
#include <string>
#include <vector>

#include "grposim/config.hpp"
#include "grposim/grpo.hpp"
#include "grposim/metrics.hpp"

namespace grposim {

struct RunAssets {
  Dataset dataset;
  std::unique_ptr<EmbeddingProvider> provider;
};

// Builds the dataset (file or synthetic), applies difficulty filters and
// constructs the embedding provider.
RunAssets load_assets(const RunConfig& cfg);

// S(q) for every record, per cfg.score_mode (stored features or provider).
std::vector<DifficultyScore> compute_scores(const RunConfig& cfg,
                                            const RunAssets& assets);

// A comparable training method: a group strategy plus the curriculum switch.
// Known names: vanilla, dapo_resample, gpg_scale, gdqa, asc.
struct MethodSpec {
  std::string name;
  GroupStrategy strategy = GroupStrategy::Vanilla;
  bool curriculum = false;
};
MethodSpec parse_method(const std::string& name);
RunConfig apply_method(RunConfig cfg, const MethodSpec& method);

struct TrainOutput {
  MetricsLog log;
  PolicyParams final_params;
};

// Full training run per the config (strategy, curriculum, seeds).
TrainOutput train_run(const RunConfig& cfg, const RunAssets& assets);

EvalResult eval_run(const RunConfig& cfg, const RunAssets& assets,
                    const PolicyParams& params);

int cmd_score(const RunConfig& cfg, const std::string& out_dir);
int cmd_bin(const RunConfig& cfg, const std::string& out_dir);
int cmd_train(const RunConfig& cfg, const std::string& out_dir);
int cmd_eval(const RunConfig& cfg, const std::string& out_dir,
             const std::string& checkpoint_path);
int cmd_compare(const RunConfig& cfg, const std::string& out_dir,
                const std::vector<std::string>& methods);

int run_cli(int argc, char** argv);

}  // namespace grposim

#endif  // GRPOSIM_CLI_HPP_

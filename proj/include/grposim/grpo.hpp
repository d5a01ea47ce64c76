#ifndef GRPOSIM_GRPO_HPP_
#define GRPOSIM_GRPO_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grposim/augment.hpp"
#include "grposim/curriculum.hpp"
#include "grposim/dataset.hpp"
#include "grposim/metrics.hpp"
#include "grposim/policy.hpp"
#include "grposim/rng.hpp"

namespace grposim {

enum class GroupStrategy { Vanilla, DapoResample, GpgScale, Gdqa };

GroupStrategy parse_strategy(const std::string& name);
std::string to_string(GroupStrategy s);

struct GrpoConfig {
  int group_size = 8;          // G
  double clip_epsilon = 0.2;   // importance-ratio clip
  double kl_beta = 0.04;       // reference-KL coefficient
  double learning_rate = 0.05;
  double std_floor = 1e-8;     // below this, a group counts as degenerate
  GroupStrategy strategy = GroupStrategy::Vanilla;
  int dapo_max_retries = 3;    // total sampling attempts per group
  std::string gpg_scale_mode = "batch-rescale";
  long steps = 2000;
  std::uint64_t seed = 42;
  long old_refresh_every = 1;  // sampling-snapshot cadence; 1 = on-policy
  long ref_refresh_every = 0;  // 0 = reference fixed at run start
};

// G prompts, responses, rewards and advantages sharing one normalization.
struct RolloutGroup {
  std::string question_id;
  std::vector<VariantPrompt> prompts;
  std::vector<ResponseSample> responses;
  std::vector<double> rewards;
  std::vector<double> advantages;
  bool invalid = false;  // all responses incorrect
  int dapo_attempts = 1;
};

/// Binary correctness reward.
double reward(const ResponseSample& response, const QuestionRecord& q);

/// Group-relative advantages (R_i - mean) / std with population std; when
/// std < std_floor the group is degenerate and all advantages are zero.
std::vector<double> compute_advantages(const std::vector<double>& rewards,
                                       double std_floor);

/// True iff every reward is zero. All-correct groups are degenerate but not
/// invalid.
bool is_invalid_group(const std::vector<double>& rewards);

double population_std(const std::vector<double>& values);

/// Clipped importance-weighted objective with a reference-KL penalty,
/// averaged over the group. Probabilities are evaluated against the exact
/// prompts used at rollout.
double surrogate_objective(const PolicyParams& params_new,
                           const PolicySnapshot& snap_old,
                           const PolicySnapshot& snap_ref,
                           const RolloutGroup& group, const GrpoConfig& cfg);

/// Exact gradient of surrogate_objective with respect to params_new.theta.
/// Terms where the min selects a saturated clip branch contribute zero
/// policy gradient; the KL term is differentiated exactly.
std::vector<double> grad_surrogate(const PolicyParams& params_new,
                                   const PolicySnapshot& snap_old,
                                   const PolicySnapshot& snap_ref,
                                   const RolloutGroup& group,
                                   const GrpoConfig& cfg);

/// Rolls out one group for a question under the configured strategy.
/// vanilla/gpg_scale: G samples of the unmodified prompt. dapo_resample:
/// regenerates the whole group until the reward std clears the floor or the
/// attempt cap is reached, returning the last attempt. gdqa: one sample per
/// augmented prompt variant.
RolloutGroup build_group(const QuestionRecord& q, const PolicyParams& params,
                         const GrpoConfig& cfg, const AugmentConfig& acfg,
                         const EmbeddingProvider& provider, Rng& rng,
                         long* fallback_counter = nullptr);

struct TrainState {
  PolicyParams params;
  PolicySnapshot snap_old;
  PolicySnapshot snap_ref;
  long step = 0;
  long perturb_fallbacks = 0;
  long degenerate_batches = 0;

  explicit TrainState(PolicyParams initial)
      : params(initial), snap_old(initial), snap_ref(std::move(initial)) {}
};

/// One gradient-ascent step over a batch of groups (mean aggregation).
/// Under gpg_scale, degenerate groups are dropped and surviving gradients
/// are rescaled by batch_size / surviving_count before the mean; an
/// all-degenerate batch yields a zero update and is counted.
void train_step(TrainState& state, const std::vector<RolloutGroup>& batch,
                const GrpoConfig& cfg);

/// Full training loop: sample a question (curriculum when given, uniform
/// otherwise), roll out a group, update, log. Deterministic given cfg.seed.
/// The trained parameters are copied into *final_params when given.
MetricsLog run_training(const Dataset& dataset, const PolicyParams& initial,
                        const GrpoConfig& cfg, const AugmentConfig& acfg,
                        CurriculumState* curriculum,
                        const EmbeddingProvider& provider,
                        PolicyParams* final_params = nullptr);

}  // namespace grposim

#endif  // GRPOSIM_GRPO_HPP_

#include "grposim/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "grposim/errors.hpp"

namespace grposim {

GroupStrategy parse_strategy(const std::string& name) {
  if (name == "vanilla") return GroupStrategy::Vanilla;
  if (name == "dapo_resample") return GroupStrategy::DapoResample;
  if (name == "gpg_scale") return GroupStrategy::GpgScale;
  if (name == "gdqa") return GroupStrategy::Gdqa;
  throw ConfigError("unknown strategy \"" + name +
                    "\" (expected vanilla, dapo_resample, gpg_scale or gdqa)");
}

std::string to_string(GroupStrategy s) {
  switch (s) {
    case GroupStrategy::Vanilla: return "vanilla";
    case GroupStrategy::DapoResample: return "dapo_resample";
    case GroupStrategy::GpgScale: return "gpg_scale";
    case GroupStrategy::Gdqa: return "gdqa";
  }
  return "vanilla";
}

double reward(const ResponseSample& response, const QuestionRecord& q) {
  return response.option_index == q.correct_index ? 1.0 : 0.0;
}

double population_std(const std::vector<double>& values) {
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / values.size());
}

std::vector<double> compute_advantages(const std::vector<double>& rewards,
                                       double std_floor) {
  if (rewards.size() < 2)
    throw std::invalid_argument("compute_advantages: need at least 2 rewards");
  const double mean =
      std::accumulate(rewards.begin(), rewards.end(), 0.0) / rewards.size();
  const double sd = population_std(rewards);
  std::vector<double> adv(rewards.size(), 0.0);
  if (sd < std_floor) return adv;  // degenerate group
  for (std::size_t i = 0; i < rewards.size(); ++i)
    adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

bool is_invalid_group(const std::vector<double>& rewards) {
  return std::all_of(rewards.begin(), rewards.end(),
                     [](double r) { return r == 0.0; });
}

double surrogate_objective(const PolicyParams& params_new,
                           const PolicySnapshot& snap_old,
                           const PolicySnapshot& snap_ref,
                           const RolloutGroup& group, const GrpoConfig& cfg) {
  const std::size_t g = group.prompts.size();
  double total = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    const auto& prompt = group.prompts[i];
    const int o = group.responses[i].option_index;
    const double a = group.advantages[i];

    const double lp_new = logprob(params_new, prompt, o);
    const double lp_old = logprob(snap_old.params(), prompt, o);
    const double ratio = std::exp(lp_new - lp_old);
    const double clipped =
        std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
    total += std::min(ratio * a, clipped * a);

    if (cfg.kl_beta != 0.0) {
      const auto p_new = action_probs(option_logits(params_new, prompt));
      const auto p_ref = action_probs(option_logits(snap_ref.params(), prompt));
      total -= cfg.kl_beta * kl_divergence(p_new, p_ref);
    }
  }
  return total / static_cast<double>(g);
}

std::vector<double> grad_surrogate(const PolicyParams& params_new,
                                   const PolicySnapshot& snap_old,
                                   const PolicySnapshot& snap_ref,
                                   const RolloutGroup& group,
                                   const GrpoConfig& cfg) {
  const std::size_t g = group.prompts.size();
  const std::size_t dim = params_new.theta.size();
  std::vector<double> grad(dim, 0.0);

  for (std::size_t i = 0; i < g; ++i) {
    const auto& prompt = group.prompts[i];
    const int o = group.responses[i].option_index;
    const double a = group.advantages[i];

    if (a != 0.0) {
      const double lp_new = logprob(params_new, prompt, o);
      const double lp_old = logprob(snap_old.params(), prompt, o);
      const double ratio = std::exp(lp_new - lp_old);
      const double clipped =
          std::clamp(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
      // When the min selects a saturated clip branch the policy gradient of
      // this term is zero; otherwise d/dtheta [ratio * a] = a * ratio * dlogp.
      if (ratio * a <= clipped * a) {
        const auto dlp = grad_logprob(params_new, prompt, o);
        const double w = a * ratio;
        for (std::size_t k = 0; k < dim; ++k) grad[k] += w * dlp[k];
      }
    }

    if (cfg.kl_beta != 0.0) {
      // d KL(p||q) / dtheta = sum_j p_j * log(p_j / q_j) * dlogp_j
      const auto logits = option_logits(params_new, prompt);
      const auto p = action_probs(logits);
      const auto lp = action_logprobs(logits);
      const auto lq =
          action_logprobs(option_logits(snap_ref.params(), prompt));
      const std::size_t K = p.size();

      // dlogp_j = (x_j - sum_k p_k x_k) / T
      std::vector<double> xbar(dim, 0.0);
      std::vector<Embedding> xs(K);
      for (std::size_t j = 0; j < K; ++j) {
        xs[j].resize(dim);
        for (std::size_t k = 0; k < dim; ++k)
          xs[j][k] = prompt.stimulus[k] * prompt.options()[j].feature[k];
        for (std::size_t k = 0; k < dim; ++k) xbar[k] += p[j] * xs[j][k];
      }
      for (std::size_t j = 0; j < K; ++j) {
        const double w = cfg.kl_beta * p[j] * (lp[j] - lq[j]);
        if (w == 0.0) continue;
        for (std::size_t k = 0; k < dim; ++k)
          grad[k] -= w * (xs[j][k] - xbar[k]) / params_new.temperature;
      }
    }
  }

  for (auto& v : grad) v /= static_cast<double>(g);
  return grad;
}

namespace {

RolloutGroup finish_group(RolloutGroup group, const QuestionRecord& q,
                          const GrpoConfig& cfg) {
  group.rewards.resize(group.responses.size());
  for (std::size_t i = 0; i < group.responses.size(); ++i)
    group.rewards[i] = reward(group.responses[i], q);
  group.advantages = compute_advantages(group.rewards, cfg.std_floor);
  group.invalid = is_invalid_group(group.rewards);
  return group;
}

std::vector<ResponseSample> sample_members(
    const std::vector<VariantPrompt>& prompts, const PolicyParams& params,
    Rng& rng) {
  std::vector<ResponseSample> out;
  out.reserve(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    Rng member = rng.child(0x1000 + i);
    out.push_back(sample_response(params, prompts[i], member));
  }
  return out;
}

}  // namespace

RolloutGroup build_group(const QuestionRecord& q, const PolicyParams& params,
                         const GrpoConfig& cfg, const AugmentConfig& acfg,
                         const EmbeddingProvider& provider, Rng& rng,
                         long* fallback_counter) {
  if (cfg.group_size < 2)
    throw std::invalid_argument("build_group: group size must be >= 2");

  RolloutGroup group;
  group.question_id = q.id;

  switch (cfg.strategy) {
    case GroupStrategy::Vanilla:
    case GroupStrategy::GpgScale: {
      group.prompts.assign(static_cast<std::size_t>(cfg.group_size),
                           make_base_prompt(q, provider, acfg.text_gamma));
      group.responses = sample_members(group.prompts, params, rng);
      return finish_group(std::move(group), q, cfg);
    }
    case GroupStrategy::Gdqa: {
      Rng augment_rng = rng.child(0x3000);
      group.prompts = build_variant_group(q, cfg.group_size, acfg, provider,
                                          augment_rng, fallback_counter);
      group.responses = sample_members(group.prompts, params, rng);
      return finish_group(std::move(group), q, cfg);
    }
    case GroupStrategy::DapoResample: {
      group.prompts.assign(static_cast<std::size_t>(cfg.group_size),
                           make_base_prompt(q, provider, acfg.text_gamma));
      for (int attempt = 0; attempt < cfg.dapo_max_retries; ++attempt) {
        Rng attempt_rng =
            attempt == 0 ? rng : rng.child(0x2000 + static_cast<std::uint64_t>(attempt));
        group.responses = sample_members(group.prompts, params, attempt_rng);
        group.dapo_attempts = attempt + 1;
        std::vector<double> rewards(group.responses.size());
        for (std::size_t i = 0; i < rewards.size(); ++i)
          rewards[i] = reward(group.responses[i], q);
        if (population_std(rewards) >= cfg.std_floor) break;
      }
      return finish_group(std::move(group), q, cfg);
    }
  }
  throw std::logic_error("build_group: unhandled strategy");
}

void train_step(TrainState& state, const std::vector<RolloutGroup>& batch,
                const GrpoConfig& cfg) {
  if (batch.empty())
    throw std::invalid_argument("train_step: empty batch");

  const std::size_t dim = state.params.theta.size();
  const std::size_t b = batch.size();
  const bool gpg = cfg.strategy == GroupStrategy::GpgScale;

  std::size_t surviving = 0;
  if (gpg) {
    for (const auto& g : batch)
      if (population_std(g.rewards) >= cfg.std_floor) ++surviving;
    if (surviving == 0) ++state.degenerate_batches;
  }

  std::vector<double> update(dim, 0.0);
  for (const auto& g : batch) {
    if (gpg) {
      if (population_std(g.rewards) < cfg.std_floor) continue;  // excluded
      const auto grad =
          grad_surrogate(state.params, state.snap_old, state.snap_ref, g, cfg);
      const double scale =
          static_cast<double>(b) / static_cast<double>(surviving);
      for (std::size_t k = 0; k < dim; ++k) update[k] += scale * grad[k];
    } else {
      const auto grad =
          grad_surrogate(state.params, state.snap_old, state.snap_ref, g, cfg);
      for (std::size_t k = 0; k < dim; ++k) update[k] += grad[k];
    }
  }

  for (std::size_t k = 0; k < dim; ++k)
    state.params.theta[k] +=
        cfg.learning_rate * update[k] / static_cast<double>(b);

  if (!all_finite(state.params.theta))
    throw NumericalError("train_step: non-finite theta after step " +
                         std::to_string(state.step));

  ++state.step;
  if (cfg.old_refresh_every > 0 && state.step % cfg.old_refresh_every == 0)
    state.snap_old = PolicySnapshot(state.params);
  if (cfg.ref_refresh_every > 0 && state.step % cfg.ref_refresh_every == 0)
    state.snap_ref = PolicySnapshot(state.params);
}

MetricsLog run_training(const Dataset& dataset, const PolicyParams& initial,
                        const GrpoConfig& cfg, const AugmentConfig& acfg,
                        CurriculumState* curriculum,
                        const EmbeddingProvider& provider,
                        PolicyParams* final_params) {
  if (dataset.records.empty())
    throw DataError("run_training: dataset has no records");
  if (initial.theta.size() != dataset.dimension)
    throw std::invalid_argument("run_training: theta dimension " +
                                std::to_string(initial.theta.size()) +
                                " does not match dataset dimension " +
                                std::to_string(dataset.dimension));

  TrainState state(initial);
  MetricsLog log;
  log.rows.reserve(static_cast<std::size_t>(std::max(cfg.steps, 0L)));
  Rng root(cfg.seed);

  for (long step = 0; step < cfg.steps; ++step) {
    Rng step_rng = root.child(static_cast<std::uint64_t>(step));
    Rng question_rng = step_rng.child(0);
    Rng group_rng = step_rng.child(1);

    const QuestionRecord& q =
        curriculum ? curriculum->sample_question(question_rng)
                   : dataset.records[question_rng.uniform_index(
                         dataset.records.size())];

    RolloutGroup group;
    const std::string at_step = " (at step " + std::to_string(step) + ")";
    try {
      group = build_group(q, state.snap_old.params(), cfg, acfg, provider,
                          group_rng, &state.perturb_fallbacks);
    } catch (const DataError& e) {
      throw DataError(e.what() + at_step);
    } catch (const NumericalError& e) {
      throw NumericalError(e.what() + at_step);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(e.what() + at_step);
    }

    StepRecord row;
    row.step = step;
    row.question_id = q.id;
    row.anatomy_label = q.anatomy_label;
    row.strategy = to_string(cfg.strategy);
    row.reward_mean =
        std::accumulate(group.rewards.begin(), group.rewards.end(), 0.0) /
        group.rewards.size();
    row.reward_std = population_std(group.rewards);
    row.invalid = group.invalid;

    double kl_sum = 0.0;
    for (const auto& prompt : group.prompts) {
      const auto p_now = action_probs(option_logits(state.params, prompt));
      const auto p_ref =
          action_probs(option_logits(state.snap_ref.params(), prompt));
      kl_sum += kl_divergence(p_now, p_ref);
    }
    row.kl_mean = kl_sum / group.prompts.size();
    if (!std::isfinite(row.kl_mean))
      throw NumericalError("run_training: non-finite KL at step " +
                           std::to_string(step));

    train_step(state, {group}, cfg);
    row.theta_norm = norm(state.params.theta);

    if (curriculum) {
      curriculum->record_outcome(row.reward_mean);
      curriculum->maybe_promote();
      row.active_bin = curriculum->active_index();
      row.bin_mean_sq = curriculum->active_bin().mean_score;
      row.bin_upper = curriculum->active_bin().upper;
    } else {
      row.active_bin = -1;
      row.bin_mean_sq = std::numeric_limits<double>::quiet_NaN();
      row.bin_upper = std::numeric_limits<double>::quiet_NaN();
    }

    log.rows.push_back(std::move(row));
  }

  log.perturb_fallbacks = state.perturb_fallbacks;
  log.degenerate_batches = state.degenerate_batches;
  if (final_params) *final_params = state.params;
  return log;
}

}  // namespace grposim

#ifndef GRPOSIM_METRICS_HPP_
#define GRPOSIM_METRICS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "grposim/dataset.hpp"
#include "grposim/embedding.hpp"
#include "grposim/policy.hpp"
#include "grposim/rng.hpp"

namespace grposim {

// One training step's telemetry.
struct StepRecord {
  long step = 0;
  std::string question_id;
  std::string anatomy_label;
  std::string strategy;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  bool invalid = false;      // every response in the group was incorrect
  int active_bin = -1;       // -1 when training without a curriculum
  double bin_mean_sq = 0.0;  // mean difficulty of the active bin (NaN if none)
  double bin_upper = 0.0;    // upper difficulty edge of the active bin
  double kl_mean = 0.0;      // mean KL(current || reference) over the group
  double theta_norm = 0.0;
};

struct MetricsLog {
  std::vector<StepRecord> rows;
  long perturb_fallbacks = 0;
  long degenerate_batches = 0;
};

// metrics.csv: raw per-step rows.
void write_metrics_csv(const MetricsLog& log, const std::string& path,
                       const std::string& header_comment);

// curves.csv: rolling reward mean, rolling invalid ratios (overall and per
// anatomy), active bin, bin mean difficulty and bin upper edge.
void write_curves_csv(const MetricsLog& log, const std::string& path,
                      const std::string& header_comment, int window);

struct InvalidCurves {
  std::vector<double> overall;
  std::map<std::string, std::vector<double>> per_anatomy;
  std::map<std::string, std::vector<int>> counts;  // window populations
};

/// Rolling fraction of invalid groups over the trailing `window` steps.
/// Early steps use the available prefix. Per-anatomy ratios are taken over
/// the same trailing step window, so their count-weighted mean reproduces
/// the overall ratio exactly.
InvalidCurves invalid_ratio(const MetricsLog& log, int window,
                            bool group_by_anatomy);

std::vector<double> rolling_mean(const std::vector<double>& values, int window);

// ---- evaluation ----

double pass_at_k(const std::vector<std::vector<int>>& samples,
                 const std::vector<int>& truths, int k);
double pass_at_1(const std::vector<std::vector<int>>& samples,
                 const std::vector<int>& truths);
double avg_at_5(const std::vector<std::vector<int>>& samples,
                const std::vector<int>& truths);
/// Majority vote over the first five samples; ties broken by the smallest
/// option index.
double major_at_5(const std::vector<std::vector<int>>& samples,
                  const std::vector<int>& truths);

struct QuestionEval {
  std::string question_id;
  std::string anatomy_label;
  int correct_index = 0;
  std::vector<int> samples;
  std::vector<bool> correct;
};

struct Aggregates {
  double avg_at_5 = 0.0;
  double pass_at_1 = 0.0;
  double major_at_5 = 0.0;
  std::size_t n = 0;
};

struct EvalResult {
  std::vector<QuestionEval> per_question;
  Aggregates overall;
  std::map<std::string, Aggregates> per_anatomy;
};

/// Samples `samples_per_question` responses per question on the unmodified
/// prompt (no augmentation) and computes all aggregates. Deterministic given
/// the rng seed; per-question streams are derived, not sequential.
EvalResult evaluate(const PolicyParams& params, const Dataset& dataset,
                    const EmbeddingProvider& provider, double text_gamma,
                    Rng& rng, int samples_per_question = 5);

void write_eval_csv(const EvalResult& result, const std::string& path,
                    const std::string& header_comment);
void write_summary_csv(const EvalResult& result, const std::string& path,
                       const std::string& header_comment);

}  // namespace grposim

#endif  // GRPOSIM_METRICS_HPP_

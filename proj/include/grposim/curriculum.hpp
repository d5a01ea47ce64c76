#ifndef GRPOSIM_CURRICULUM_HPP_
#define GRPOSIM_CURRICULUM_HPP_

#include <string>
#include <unordered_map>
#include <vector>

#include "grposim/dataset.hpp"
#include "grposim/embedding.hpp"
#include "grposim/rng.hpp"

namespace grposim {

enum class BinStrategy { EqualWidth, Quantile };

BinStrategy parse_bin_strategy(const std::string& name);
std::string to_string(BinStrategy s);

struct CurriculumBin {
  int index = 0;
  double lower = 0.0;
  double upper = 0.0;
  double mean_score = 0.0;
  std::vector<std::string> question_ids;
};

/// Partitions scored questions into difficulty bins. Equal-width splits the
/// score range evenly; quantile balances populations to within one question,
/// breaking score ties by ascending id so the partition is deterministic.
std::vector<CurriculumBin> partition_bins(
    const std::vector<DifficultyScore>& scores, int num_bins,
    BinStrategy strategy);

// Promotion gate over difficulty bins: training stays on the active bin until
// the rolling mean of the last `window_size` group rewards reaches the
// threshold, then advances. The active index never decreases.
class CurriculumState {
 public:
  CurriculumState(const Dataset& dataset, std::vector<CurriculumBin> bins,
                  double threshold, std::size_t window_size,
                  double replay_fraction);

  // group_mean_reward must lie in [0, 1]
  void record_outcome(double group_mean_reward);

  // Promotes iff the window is full, its mean meets the threshold and a
  // harder bin exists; clears the window on promotion.
  bool maybe_promote();

  // Draws from the active bin, or (with probability replay_fraction) from
  // the union of all earlier bins.
  const QuestionRecord& sample_question(Rng& rng) const;

  int active_index() const { return active_; }
  const std::vector<CurriculumBin>& bins() const { return bins_; }
  const CurriculumBin& active_bin() const { return bins_[active_]; }
  std::size_t window_fill() const { return window_count_; }
  double window_mean() const;
  double threshold() const { return threshold_; }
  double replay_fraction() const { return replay_fraction_; }

 private:
  const Dataset* dataset_;
  std::vector<CurriculumBin> bins_;
  std::unordered_map<std::string, std::size_t> record_index_;
  int active_ = 0;
  std::vector<double> window_;
  std::size_t window_size_;
  std::size_t window_count_ = 0;
  std::size_t window_pos_ = 0;
  double threshold_;
  double replay_fraction_;
};

void write_curriculum_export(const std::vector<CurriculumBin>& bins,
                             const std::string& path,
                             const std::string& header_comment);

}  // namespace grposim

#endif  // GRPOSIM_CURRICULUM_HPP_

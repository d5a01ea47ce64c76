#include "grposim/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "grposim/errors.hpp"

namespace grposim {

BinStrategy parse_bin_strategy(const std::string& name) {
  if (name == "equal_width" || name == "equal-width")
    return BinStrategy::EqualWidth;
  if (name == "quantile") return BinStrategy::Quantile;
  throw ConfigError("unknown bin strategy \"" + name +
                    "\" (expected equal_width or quantile)");
}

std::string to_string(BinStrategy s) {
  return s == BinStrategy::EqualWidth ? "equal_width" : "quantile";
}

std::vector<CurriculumBin> partition_bins(
    const std::vector<DifficultyScore>& scores, int num_bins,
    BinStrategy strategy) {
  if (scores.empty())
    throw std::invalid_argument("partition_bins: no scores given");
  if (num_bins < 1)
    throw std::invalid_argument("partition_bins: num_bins must be >= 1");

  // sort by (score, id); id tie-break keeps quantile splits deterministic
  std::vector<const DifficultyScore*> sorted;
  sorted.reserve(scores.size());
  for (const auto& s : scores) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const DifficultyScore* a, const DifficultyScore* b) {
              if (a->score != b->score) return a->score < b->score;
              return a->question_id < b->question_id;
            });

  const double lo = sorted.front()->score;
  const double hi = sorted.back()->score;
  std::vector<CurriculumBin> bins(static_cast<std::size_t>(num_bins));

  if (strategy == BinStrategy::EqualWidth) {
    const double width = (hi - lo) / num_bins;
    for (int b = 0; b < num_bins; ++b) {
      bins[b].index = b;
      bins[b].lower = lo + b * width;
      bins[b].upper = b + 1 == num_bins ? hi : lo + (b + 1) * width;
    }
    for (const auto* s : sorted) {
      int b = width > 0.0
                  ? std::min(num_bins - 1,
                             static_cast<int>((s->score - lo) / width))
                  : 0;
      bins[b].question_ids.push_back(s->question_id);
      bins[b].mean_score += s->score;
    }
  } else {
    std::size_t distinct = 1;
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (sorted[i]->score != sorted[i - 1]->score) ++distinct;
    if (static_cast<std::size_t>(num_bins) > distinct)
      throw std::invalid_argument(
          "partition_bins: quantile strategy cannot form " +
          std::to_string(num_bins) + " non-empty bins from " +
          std::to_string(distinct) + " distinct scores");

    const std::size_t n = sorted.size();
    const std::size_t base = n / static_cast<std::size_t>(num_bins);
    const std::size_t extra = n % static_cast<std::size_t>(num_bins);
    std::size_t pos = 0;
    for (int b = 0; b < num_bins; ++b) {
      const std::size_t take = base + (static_cast<std::size_t>(b) < extra);
      bins[b].index = b;
      bins[b].lower = sorted[pos]->score;
      bins[b].upper = sorted[pos + take - 1]->score;
      for (std::size_t i = 0; i < take; ++i) {
        bins[b].question_ids.push_back(sorted[pos + i]->question_id);
        bins[b].mean_score += sorted[pos + i]->score;
      }
      pos += take;
    }
  }

  for (auto& b : bins)
    if (!b.question_ids.empty()) b.mean_score /= b.question_ids.size();
  return bins;
}

CurriculumState::CurriculumState(const Dataset& dataset,
                                 std::vector<CurriculumBin> bins,
                                 double threshold, std::size_t window_size,
                                 double replay_fraction)
    : dataset_(&dataset),
      bins_(std::move(bins)),
      window_(window_size, 0.0),
      window_size_(window_size),
      threshold_(threshold),
      replay_fraction_(replay_fraction) {
  if (bins_.empty())
    throw std::invalid_argument("curriculum: need at least one bin");
  if (window_size == 0)
    throw std::invalid_argument("curriculum: window size must be positive");
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw std::invalid_argument("curriculum: threshold must be in [0, 1]");
  if (!(replay_fraction >= 0.0 && replay_fraction < 1.0))
    throw std::invalid_argument("curriculum: replay fraction must be in [0, 1)");
  for (std::size_t i = 0; i < dataset.records.size(); ++i)
    record_index_[dataset.records[i].id] = i;
  for (const auto& b : bins_)
    for (const auto& id : b.question_ids)
      if (!record_index_.count(id))
        throw DataError("curriculum: bin " + std::to_string(b.index) +
                        " references unknown question id " + id);
}

void CurriculumState::record_outcome(double group_mean_reward) {
  if (!(group_mean_reward >= 0.0 && group_mean_reward <= 1.0))
    throw std::invalid_argument("record_outcome: group mean reward " +
                                std::to_string(group_mean_reward) +
                                " outside [0, 1]");
  window_[window_pos_] = group_mean_reward;
  window_pos_ = (window_pos_ + 1) % window_size_;
  if (window_count_ < window_size_) ++window_count_;
}

double CurriculumState::window_mean() const {
  if (window_count_ == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < window_count_; ++i) s += window_[i];
  return s / static_cast<double>(window_count_);
}

bool CurriculumState::maybe_promote() {
  if (window_count_ < window_size_) return false;
  if (window_mean() < threshold_) return false;
  if (active_ + 1 >= static_cast<int>(bins_.size())) return false;
  ++active_;
  window_count_ = 0;
  window_pos_ = 0;
  return true;
}

const QuestionRecord& CurriculumState::sample_question(Rng& rng) const {
  const auto& active = bins_[static_cast<std::size_t>(active_)];
  if (active.question_ids.empty())
    throw DataError("curriculum: active bin " + std::to_string(active_) +
                    " is empty");

  const std::string* id = nullptr;
  if (active_ > 0 && rng.uniform() < replay_fraction_) {
    std::size_t total = 0;
    for (int b = 0; b < active_; ++b) total += bins_[b].question_ids.size();
    if (total > 0) {
      std::size_t pick = rng.uniform_index(total);
      for (int b = 0; b < active_ && !id; ++b) {
        const auto& ids = bins_[b].question_ids;
        if (pick < ids.size())
          id = &ids[pick];
        else
          pick -= ids.size();
      }
    }
  }
  if (!id) id = &active.question_ids[rng.uniform_index(active.question_ids.size())];
  return dataset_->records[record_index_.at(*id)];
}

void write_curriculum_export(const std::vector<CurriculumBin>& bins,
                             const std::string& path,
                             const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw DataError("curriculum export: cannot write " + path);
  out << header_comment << "\n";
  for (const auto& b : bins) {
    nlohmann::json j{{"index", b.index},
                     {"lower", b.lower},
                     {"upper", b.upper},
                     {"mean_score", b.mean_score},
                     {"question_ids", b.question_ids}};
    out << j.dump() << "\n";
  }
}

}  // namespace grposim

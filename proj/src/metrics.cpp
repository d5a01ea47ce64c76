#include "grposim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "grposim/augment.hpp"
#include "grposim/errors.hpp"

namespace grposim {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void check_samples(const std::vector<std::vector<int>>& samples,
                   const std::vector<int>& truths, std::size_t min_count) {
  if (samples.empty())
    throw std::invalid_argument("metrics: empty question set");
  if (samples.size() != truths.size())
    throw std::invalid_argument("metrics: samples/truths length mismatch");
  for (const auto& row : samples)
    if (row.size() < min_count)
      throw std::invalid_argument("metrics: a question has only " +
                                  std::to_string(row.size()) +
                                  " samples, need " +
                                  std::to_string(min_count));
}

}  // namespace

double pass_at_k(const std::vector<std::vector<int>>& samples,
                 const std::vector<int>& truths, int k) {
  if (k < 1) throw std::invalid_argument("pass_at_k: k must be >= 1");
  check_samples(samples, truths, static_cast<std::size_t>(k));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (int j = 0; j < k; ++j) {
      if (samples[i][static_cast<std::size_t>(j)] == truths[i]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double pass_at_1(const std::vector<std::vector<int>>& samples,
                 const std::vector<int>& truths) {
  return pass_at_k(samples, truths, 1);
}

double avg_at_5(const std::vector<std::vector<int>>& samples,
                const std::vector<int>& truths) {
  check_samples(samples, truths, 5);
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    int correct = 0;
    for (std::size_t j = 0; j < 5; ++j) correct += samples[i][j] == truths[i];
    total += correct / 5.0;
  }
  return total / static_cast<double>(samples.size());
}

double major_at_5(const std::vector<std::vector<int>>& samples,
                  const std::vector<int>& truths) {
  check_samples(samples, truths, 5);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::map<int, int> counts;
    for (std::size_t j = 0; j < 5; ++j) ++counts[samples[i][j]];
    int mode = samples[i][0];
    int best = 0;
    for (const auto& [option, count] : counts) {
      // std::map iterates in ascending option order, so ties keep the
      // smallest option index
      if (count > best) {
        best = count;
        mode = option;
      }
    }
    hits += mode == truths[i];
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

std::vector<double> rolling_mean(const std::vector<double>& values,
                                 int window) {
  if (window < 1) throw std::invalid_argument("rolling_mean: window must be >= 1");
  std::vector<double> out(values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += values[i];
    if (i >= static_cast<std::size_t>(window))
      acc -= values[i - static_cast<std::size_t>(window)];
    const std::size_t n = std::min<std::size_t>(i + 1, window);
    out[i] = acc / static_cast<double>(n);
  }
  return out;
}

InvalidCurves invalid_ratio(const MetricsLog& log, int window,
                            bool group_by_anatomy) {
  if (window < 1)
    throw std::invalid_argument("invalid_ratio: window must be >= 1");

  InvalidCurves curves;
  const std::size_t n = log.rows.size();
  const std::size_t w = static_cast<std::size_t>(window);

  std::vector<double> invalid(n);
  for (std::size_t i = 0; i < n; ++i) invalid[i] = log.rows[i].invalid ? 1.0 : 0.0;
  curves.overall = rolling_mean(invalid, window);

  if (!group_by_anatomy) return curves;

  std::set<std::string> labels;
  for (const auto& r : log.rows) labels.insert(r.anatomy_label);
  for (const auto& label : labels) {
    auto& ratio = curves.per_anatomy[label];
    auto& count = curves.counts[label];
    ratio.assign(n, 0.0);
    count.assign(n, 0);
    long in_window = 0, bad = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (log.rows[i].anatomy_label == label) {
        ++in_window;
        bad += log.rows[i].invalid;
      }
      if (i >= w && log.rows[i - w].anatomy_label == label) {
        --in_window;
        bad -= log.rows[i - w].invalid;
      }
      count[i] = static_cast<int>(in_window);
      ratio[i] = in_window > 0
                     ? static_cast<double>(bad) / static_cast<double>(in_window)
                     : 0.0;
    }
  }
  return curves;
}

void write_metrics_csv(const MetricsLog& log, const std::string& path,
                       const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw DataError("metrics: cannot write " + path);
  out << header_comment << "\n";
  out << "step,question_id,anatomy_label,strategy,reward_mean,reward_std,"
         "invalid,active_bin,bin_mean_sq,kl_mean,theta_norm\n";
  for (const auto& r : log.rows) {
    out << r.step << ',' << r.question_id << ',' << r.anatomy_label << ','
        << r.strategy << ',' << fmt(r.reward_mean) << ',' << fmt(r.reward_std)
        << ',' << (r.invalid ? 1 : 0) << ',' << r.active_bin << ','
        << fmt(r.bin_mean_sq) << ',' << fmt(r.kl_mean) << ','
        << fmt(r.theta_norm) << "\n";
  }
}

void write_curves_csv(const MetricsLog& log, const std::string& path,
                      const std::string& header_comment, int window) {
  std::ofstream out(path);
  if (!out) throw DataError("curves: cannot write " + path);

  std::vector<double> rewards(log.rows.size());
  for (std::size_t i = 0; i < log.rows.size(); ++i)
    rewards[i] = log.rows[i].reward_mean;
  const auto reward_curve = rolling_mean(rewards, window);
  const auto inv = invalid_ratio(log, window, true);

  out << header_comment << "\n";
  out << "step,reward_mean,invalid_ratio";
  for (const auto& [label, _] : inv.per_anatomy) out << ",invalid_ratio_" << label;
  out << ",active_bin,bin_mean_sq,bin_upper\n";

  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    out << log.rows[i].step << ',' << fmt(reward_curve[i]) << ','
        << fmt(inv.overall[i]);
    for (const auto& [_, ratio] : inv.per_anatomy) out << ',' << fmt(ratio[i]);
    out << ',' << log.rows[i].active_bin << ',' << fmt(log.rows[i].bin_mean_sq)
        << ',' << fmt(log.rows[i].bin_upper) << "\n";
  }
}

namespace {

Aggregates aggregate(const std::vector<const QuestionEval*>& rows) {
  std::vector<std::vector<int>> samples;
  std::vector<int> truths;
  samples.reserve(rows.size());
  for (const auto* r : rows) {
    samples.push_back(r->samples);
    truths.push_back(r->correct_index);
  }
  Aggregates a;
  a.n = rows.size();
  a.avg_at_5 = avg_at_5(samples, truths);
  a.pass_at_1 = pass_at_1(samples, truths);
  a.major_at_5 = major_at_5(samples, truths);
  return a;
}

}  // namespace

EvalResult evaluate(const PolicyParams& params, const Dataset& dataset,
                    const EmbeddingProvider& provider, double text_gamma,
                    Rng& rng, int samples_per_question) {
  if (dataset.records.empty())
    throw DataError("evaluate: dataset has no records");
  if (samples_per_question < 5)
    throw std::invalid_argument(
        "evaluate: need at least 5 samples per question");

  EvalResult result;
  result.per_question.reserve(dataset.records.size());
  for (std::size_t qi = 0; qi < dataset.records.size(); ++qi) {
    const auto& q = dataset.records[qi];
    const VariantPrompt prompt = make_base_prompt(q, provider, text_gamma);
    Rng q_rng = rng.child(qi);

    QuestionEval row;
    row.question_id = q.id;
    row.anatomy_label = q.anatomy_label;
    row.correct_index = q.correct_index;
    for (int s = 0; s < samples_per_question; ++s) {
      const auto sample = sample_response(params, prompt, q_rng);
      row.samples.push_back(sample.option_index);
      row.correct.push_back(sample.option_index == q.correct_index);
    }
    result.per_question.push_back(std::move(row));
  }

  std::vector<const QuestionEval*> all;
  std::map<std::string, std::vector<const QuestionEval*>> by_label;
  for (const auto& r : result.per_question) {
    all.push_back(&r);
    by_label[r.anatomy_label].push_back(&r);
  }
  result.overall = aggregate(all);
  for (const auto& [label, rows] : by_label)
    result.per_anatomy[label] = aggregate(rows);
  return result;
}

void write_eval_csv(const EvalResult& result, const std::string& path,
                    const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw DataError("eval: cannot write " + path);
  out << header_comment << "\n";
  const std::size_t k =
      result.per_question.empty() ? 5 : result.per_question[0].samples.size();
  out << "question_id,anatomy_label,correct_index";
  for (std::size_t j = 1; j <= k; ++j) out << ",s" << j;
  for (std::size_t j = 1; j <= k; ++j) out << ",c" << j;
  out << "\n";
  for (const auto& r : result.per_question) {
    out << r.question_id << ',' << r.anatomy_label << ',' << r.correct_index;
    for (int s : r.samples) out << ',' << s;
    for (bool c : r.correct) out << ',' << (c ? 1 : 0);
    out << "\n";
  }
}

void write_summary_csv(const EvalResult& result, const std::string& path,
                       const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw DataError("summary: cannot write " + path);
  out << header_comment << "\n";
  out << "# avg_at_5 is mean binary correctness over 5 samples; an expert "
         "1-5 rating scale is not modeled\n";
  out << "scope,avg_at_5,pass_at_1,major_at_5,n\n";
  auto emit = [&](const std::string& scope, const Aggregates& a) {
    out << scope << ',' << fmt(a.avg_at_5) << ',' << fmt(a.pass_at_1) << ','
        << fmt(a.major_at_5) << ',' << a.n << "\n";
  };
  emit("overall", result.overall);
  for (const auto& [label, agg] : result.per_anatomy) emit(label, agg);
}

}  // namespace grposim

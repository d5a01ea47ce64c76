#include <algorithm>
#include <set>

#include <doctest.h>

#include "grposim/curriculum.hpp"
#include "grposim/errors.hpp"
#include "test_util.hpp"

using namespace grposim;

namespace {

std::vector<DifficultyScore> scores_of(std::initializer_list<double> vals) {
  std::vector<DifficultyScore> out;
  int i = 0;
  for (double v : vals) out.push_back({"q" + std::to_string(i++), v});
  return out;
}

Dataset dataset_for(const std::vector<DifficultyScore>& scores) {
  Dataset d;
  d.dimension = 2;
  for (const auto& s : scores) {
    auto q = testutil::tiny_question(2, 2);
    q.id = s.question_id;
    d.records.push_back(std::move(q));
  }
  return d;
}

}  // namespace

TEST_CASE("equal-width partition splits the range") {
  const auto scores = scores_of({0.1, 0.2, 0.8, 0.9});
  const auto bins = partition_bins(scores, 2, BinStrategy::EqualWidth);
  REQUIRE(bins.size() == 2);
  CHECK(bins[0].question_ids == std::vector<std::string>{"q0", "q1"});
  CHECK(bins[1].question_ids == std::vector<std::string>{"q2", "q3"});
  CHECK(bins[0].lower == doctest::Approx(0.1));
  CHECK(bins[1].upper == doctest::Approx(0.9));
}

TEST_CASE("quantile partition balances populations") {
  const auto scores = scores_of({0.1, 0.2, 0.8, 0.9});
  const auto bins = partition_bins(scores, 2, BinStrategy::Quantile);
  REQUIRE(bins.size() == 2);
  CHECK(bins[0].question_ids.size() == 2);
  CHECK(bins[1].question_ids.size() == 2);
  CHECK(bins[0].question_ids == std::vector<std::string>{"q0", "q1"});

  SUBCASE("populations differ by at most one") {
    const auto s7 = scores_of({0.1, 0.15, 0.2, 0.5, 0.8, 0.85, 0.9});
    const auto b3 = partition_bins(s7, 3, BinStrategy::Quantile);
    std::vector<std::size_t> sizes;
    for (const auto& b : b3) sizes.push_back(b.question_ids.size());
    CHECK(*std::max_element(sizes.begin(), sizes.end()) -
              *std::min_element(sizes.begin(), sizes.end()) <=
          1);
  }
}

TEST_CASE("one bin is the identity partition") {
  const auto scores = scores_of({0.3, 0.1, 0.7});
  const auto bins = partition_bins(scores, 1, BinStrategy::Quantile);
  REQUIRE(bins.size() == 1);
  CHECK(bins[0].question_ids.size() == 3);
}

TEST_CASE("quantile rejects more bins than distinct scores") {
  const auto scores = scores_of({0.5, 0.5, 0.5});
  CHECK_THROWS_AS(partition_bins(scores, 2, BinStrategy::Quantile),
                  std::invalid_argument);
  CHECK_NOTHROW(partition_bins(scores, 1, BinStrategy::Quantile));
}

TEST_CASE("partition covers every id exactly once") {
  Rng rng(4242);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<DifficultyScore> scores;
    const int n = 5 + static_cast<int>(rng.uniform_index(60));
    for (int i = 0; i < n; ++i)
      scores.push_back({"q" + std::to_string(i), rng.uniform(-1.0, 1.0)});
    const auto strategy =
        trial % 2 ? BinStrategy::EqualWidth : BinStrategy::Quantile;
    const int num_bins = 1 + static_cast<int>(rng.uniform_index(4));
    const auto bins = partition_bins(scores, num_bins, strategy);

    std::set<std::string> seen;
    std::size_t total = 0;
    for (const auto& b : bins) {
      total += b.question_ids.size();
      for (const auto& id : b.question_ids) CHECK(seen.insert(id).second);
    }
    CHECK(total == scores.size());

    // membership respects score ordering across bins
    double prev_max = -2.0;
    for (const auto& b : bins) {
      for (const auto& id : b.question_ids) {
        const auto it = std::find_if(
            scores.begin(), scores.end(),
            [&](const DifficultyScore& s) { return s.question_id == id; });
        CHECK(it->score >= prev_max - 1e-12);
      }
      for (const auto& id : b.question_ids) {
        const auto it = std::find_if(
            scores.begin(), scores.end(),
            [&](const DifficultyScore& s) { return s.question_id == id; });
        prev_max = std::max(prev_max, it->score);
      }
    }
  }
}

TEST_CASE("rolling window records and evicts") {
  const auto scores = scores_of({0.1, 0.9});
  const auto ds = dataset_for(scores);
  CurriculumState state(ds, partition_bins(scores, 2, BinStrategy::Quantile),
                        0.7, 3, 0.0);

  state.record_outcome(0.5);
  CHECK(state.window_fill() == 1);
  CHECK(state.window_mean() == doctest::Approx(0.5));

  state.record_outcome(0.1);
  state.record_outcome(0.3);
  CHECK(state.window_fill() == 3);
  state.record_outcome(0.8);  // evicts the oldest (0.5)
  CHECK(state.window_fill() == 3);
  CHECK(state.window_mean() == doctest::Approx((0.1 + 0.3 + 0.8) / 3.0));

  CHECK_THROWS_AS(state.record_outcome(1.2), std::invalid_argument);
  CHECK_THROWS_AS(state.record_outcome(-0.1), std::invalid_argument);
}

TEST_CASE("promotion requires a full window above threshold") {
  const auto scores = scores_of({0.1, 0.3, 0.6, 0.9});
  const auto ds = dataset_for(scores);
  CurriculumState state(ds, partition_bins(scores, 4, BinStrategy::Quantile),
                        0.7, 2, 0.0);

  SUBCASE("half-full window never promotes") {
    state.record_outcome(1.0);
    CHECK_FALSE(state.maybe_promote());
    CHECK(state.active_index() == 0);
  }

  SUBCASE("full window above threshold promotes and clears") {
    state.record_outcome(0.7);
    state.record_outcome(0.8);
    CHECK(state.maybe_promote());
    CHECK(state.active_index() == 1);
    CHECK(state.window_fill() == 0);
    // idempotent when the condition is false
    CHECK_FALSE(state.maybe_promote());
    CHECK(state.active_index() == 1);
  }

  SUBCASE("full window below threshold does not promote") {
    state.record_outcome(0.69);
    state.record_outcome(0.7);
    CHECK_FALSE(state.maybe_promote());
  }

  SUBCASE("terminal bin never promotes") {
    for (int i = 0; i < 3; ++i) {
      state.record_outcome(1.0);
      state.record_outcome(1.0);
      state.maybe_promote();
    }
    CHECK(state.active_index() == 3);
    state.record_outcome(1.0);
    state.record_outcome(1.0);
    CHECK_FALSE(state.maybe_promote());
    CHECK(state.active_index() == 3);
  }
}

TEST_CASE("sampling draws from the active bin with replay") {
  const auto scores = scores_of({0.1, 0.9});
  const auto ds = dataset_for(scores);

  SUBCASE("single-question bin with no replay") {
    CurriculumState state(ds, partition_bins(scores, 2, BinStrategy::Quantile),
                          0.7, 2, 0.0);
    Rng rng(1);
    for (int i = 0; i < 20; ++i)
      CHECK(state.sample_question(rng).id == "q0");
  }

  SUBCASE("replay falls back to the active bin at index 0") {
    CurriculumState state(ds, partition_bins(scores, 2, BinStrategy::Quantile),
                          0.7, 2, 0.5);
    Rng rng(2);
    for (int i = 0; i < 50; ++i)
      CHECK(state.sample_question(rng).id == "q0");
  }

  SUBCASE("replay rate matches the configured fraction") {
    CurriculumState state(ds, partition_bins(scores, 2, BinStrategy::Quantile),
                          0.7, 2, 0.25);
    state.record_outcome(1.0);
    state.record_outcome(1.0);
    REQUIRE(state.maybe_promote());
    Rng rng(3);
    int earlier = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
      earlier += state.sample_question(rng).id == "q0";
    const double rate = static_cast<double>(earlier) / draws;
    CHECK(rate == doctest::Approx(0.25).epsilon(0.08));
    CHECK(std::abs(rate - 0.25) <= 0.02);
  }
}

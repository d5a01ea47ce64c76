#include <cmath>

#include <doctest.h>

#include "grposim/metrics.hpp"
#include "grposim/rng.hpp"
#include "test_util.hpp"

using namespace grposim;

TEST_CASE("pass_at_k counts prefix hits") {
  // question 0: first sample correct; question 1: all wrong
  const std::vector<std::vector<int>> samples = {{2, 0, 0, 0, 0},
                                                 {1, 1, 1, 1, 1}};
  const std::vector<int> truths = {2, 0};
  CHECK(pass_at_k(samples, truths, 1) == doctest::Approx(0.5));
  CHECK(pass_at_k(samples, truths, 5) == doctest::Approx(0.5));

  SUBCASE("a late hit counts only for large k") {
    const std::vector<std::vector<int>> s = {{0, 0, 0, 0, 3}};
    const std::vector<int> t = {3};
    CHECK(pass_at_k(s, t, 1) == 0.0);
    CHECK(pass_at_k(s, t, 4) == 0.0);
    CHECK(pass_at_k(s, t, 5) == 1.0);
  }

  SUBCASE("all-correct samples pass at every k") {
    const std::vector<std::vector<int>> s = {{1, 1, 1, 1, 1}, {0, 0, 0, 0, 0}};
    const std::vector<int> t = {1, 0};
    for (int k = 1; k <= 5; ++k) CHECK(pass_at_k(s, t, k) == 1.0);
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(pass_at_k({}, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(pass_at_k(samples, truths, 6), std::invalid_argument);
    CHECK_THROWS_AS(pass_at_k(samples, truths, 0), std::invalid_argument);
  }
}

TEST_CASE("pass_at_k is monotone in k") {
  Rng rng(19);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.uniform_index(20);
    std::vector<std::vector<int>> samples(n);
    std::vector<int> truths(n);
    for (std::size_t i = 0; i < n; ++i) {
      truths[i] = static_cast<int>(rng.uniform_index(4));
      for (int j = 0; j < 5; ++j)
        samples[i].push_back(static_cast<int>(rng.uniform_index(4)));
    }
    double prev = 0.0;
    for (int k = 1; k <= 5; ++k) {
      const double v = pass_at_k(samples, truths, k);
      CHECK(v >= prev);
      prev = v;
    }
    CHECK(pass_at_1(samples, truths) <= prev);
  }
}

TEST_CASE("pass_at_1 equals first-sample accuracy") {
  Rng rng(23);
  std::vector<std::vector<int>> samples;
  std::vector<int> truths;
  for (int i = 0; i < 50; ++i) {
    truths.push_back(static_cast<int>(rng.uniform_index(3)));
    samples.push_back({static_cast<int>(rng.uniform_index(3)),
                       static_cast<int>(rng.uniform_index(3))});
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    acc += samples[i][0] == truths[i];
  CHECK(pass_at_1(samples, truths) == doctest::Approx(acc / samples.size()));
}

TEST_CASE("avg_at_5 is mean per-sample correctness") {
  const std::vector<std::vector<int>> one = {{1, 0, 1, 0, 0}};
  CHECK(avg_at_5(one, {1}) == doctest::Approx(0.4));

  const std::vector<std::vector<int>> all = {{2, 2, 2, 2, 2}, {0, 0, 0, 0, 0}};
  CHECK(avg_at_5(all, {2, 0}) == doctest::Approx(1.0));

  SUBCASE("matrix identity") {
    Rng rng(29);
    std::vector<std::vector<int>> samples;
    std::vector<int> truths;
    double correct = 0.0;
    for (int i = 0; i < 40; ++i) {
      truths.push_back(static_cast<int>(rng.uniform_index(4)));
      samples.push_back({});
      for (int j = 0; j < 5; ++j) {
        samples.back().push_back(static_cast<int>(rng.uniform_index(4)));
        correct += samples.back().back() == truths.back();
      }
    }
    CHECK(avg_at_5(samples, truths) ==
          doctest::Approx(correct / (40.0 * 5.0)));
  }
}

TEST_CASE("major_at_5 majority vote with smallest-index ties") {
  CHECK(major_at_5({{2, 2, 2, 0, 1}}, {2}) == 1.0);
  CHECK(major_at_5({{0, 0, 1, 1, 2}}, {1}) == 0.0);  // tie {0,1} picks 0
  CHECK(major_at_5({{0, 0, 1, 1, 2}}, {0}) == 1.0);
  CHECK(major_at_5({{3, 3, 3, 3, 3}}, {1}) == 0.0);  // unanimous but wrong
}

TEST_CASE("invalid ratio curves") {
  MetricsLog log;
  auto push = [&](bool invalid, const std::string& label) {
    StepRecord r;
    r.step = static_cast<long>(log.rows.size());
    r.invalid = invalid;
    r.anatomy_label = label;
    log.rows.push_back(r);
  };

  SUBCASE("all valid is a zero curve") {
    for (int i = 0; i < 10; ++i) push(false, "a");
    const auto c = invalid_ratio(log, 4, false);
    for (double v : c.overall) CHECK(v == 0.0);
  }

  SUBCASE("alternating groups at window two settle at one half") {
    for (int i = 0; i < 10; ++i) push(i % 2 == 0, "a");
    const auto c = invalid_ratio(log, 2, false);
    for (std::size_t i = 1; i < c.overall.size(); ++i)
      CHECK(c.overall[i] == doctest::Approx(0.5));
  }

  SUBCASE("per-anatomy ratios recombine to the overall ratio") {
    Rng rng(31);
    const std::vector<std::string> labels = {"liver", "kidney", "spleen"};
    for (int i = 0; i < 200; ++i)
      push(rng.uniform() < 0.3, labels[rng.uniform_index(3)]);
    const int window = 16;
    const auto c = invalid_ratio(log, window, true);
    for (std::size_t i = 0; i < log.rows.size(); ++i) {
      double weighted = 0.0;
      int total = 0;
      for (const auto& [label, ratio] : c.per_anatomy) {
        const int n = c.counts.at(label)[i];
        weighted += ratio[i] * n;
        total += n;
      }
      REQUIRE(total == std::min<int>(window, static_cast<int>(i) + 1));
      CHECK(std::abs(weighted / total - c.overall[i]) < 1e-12);
    }
  }
}

TEST_CASE("evaluate on a known policy") {
  SynthSpec spec;
  spec.dimension = 8;
  spec.num_classes = 2;
  spec.questions_per_class = 10;
  spec.margins = {1.5, 0.8};
  const Dataset ds = synth_generate(spec, 21);
  HashProvider provider(ds.dimension, 7);

  SUBCASE("deterministic seed gives identical results") {
    PolicyParams params;
    params.theta.assign(ds.dimension, 0.25);
    Rng r1(77), r2(77);
    const auto a = evaluate(params, ds, provider, 0.2, r1);
    const auto b = evaluate(params, ds, provider, 0.2, r2);
    REQUIRE(a.per_question.size() == b.per_question.size());
    for (std::size_t i = 0; i < a.per_question.size(); ++i)
      CHECK(a.per_question[i].samples == b.per_question[i].samples);
    CHECK(a.overall.avg_at_5 == b.overall.avg_at_5);
  }

  SUBCASE("aggregates are recomputable from per-question rows") {
    PolicyParams params;
    params.theta.assign(ds.dimension, 0.1);
    Rng rng(78);
    const auto r = evaluate(params, ds, provider, 0.2, rng);
    std::vector<std::vector<int>> samples;
    std::vector<int> truths;
    for (const auto& row : r.per_question) {
      samples.push_back(row.samples);
      truths.push_back(row.correct_index);
    }
    CHECK(r.overall.avg_at_5 == doctest::Approx(avg_at_5(samples, truths)));
    CHECK(r.overall.pass_at_1 == doctest::Approx(pass_at_1(samples, truths)));
    CHECK(r.overall.major_at_5 == doctest::Approx(major_at_5(samples, truths)));
    CHECK(r.overall.n == r.per_question.size());
  }
}

TEST_CASE("uniform policy accuracy approaches one over options") {
  SynthSpec spec;
  spec.dimension = 4;
  spec.num_classes = 4;
  spec.questions_per_class = 500;  // N = 2000
  spec.options_per_question = 4;
  spec.margins = {1.0, 1.0, 1.0, 1.0};
  const Dataset ds = synth_generate(spec, 33);
  HashProvider provider(ds.dimension, 7);

  PolicyParams uniform;
  uniform.theta.assign(ds.dimension, 0.0);  // all logits zero
  Rng rng(79);
  const auto r = evaluate(uniform, ds, provider, 0.0, rng);
  CHECK(std::abs(r.overall.pass_at_1 - 0.25) <= 0.02);
}

TEST_CASE("rolling mean warms up over the prefix") {
  const auto m = rolling_mean({1, 0, 1, 0}, 2);
  CHECK(m[0] == doctest::Approx(1.0));
  CHECK(m[1] == doctest::Approx(0.5));
  CHECK(m[2] == doctest::Approx(0.5));
  CHECK(m[3] == doctest::Approx(0.5));
}

#include <fstream>

#include <doctest.h>

#include "grposim/dataset.hpp"
#include "grposim/embedding.hpp"
#include "grposim/errors.hpp"
#include "test_util.hpp"

using namespace grposim;

namespace {

Dataset two_record_dataset() {
  Dataset d;
  d.dimension = 3;
  for (int i = 0; i < 2; ++i) {
    QuestionRecord q;
    q.id = "q" + std::to_string(i);
    q.text = "What is shown in image " + std::to_string(i) + "?";
    q.anatomy_label = i == 0 ? "liver" : "spleen";
    q.image_feature = {0.5, -1.25, static_cast<double>(i)};
    q.correct_index = i;
    q.options = {{"liver", {1.0, 0.0, 0.0}},
                 {"spleen", {0.0, 1.0, 0.0}},
                 {"kidney", {0.0, 0.125, 1.0}}};
    if (i == 0) q.text_variants = {"Name the organ in image 0."};
    d.records.push_back(std::move(q));
  }
  return d;
}

double mean_score(const Dataset& ds) {
  double s = 0.0;
  for (const auto& sc : score_dataset(ds, nullptr)) s += sc.score;
  return s / static_cast<double>(ds.records.size());
}

}  // namespace

TEST_CASE("dataset round trip") {
  testutil::TempDir tmp("ds_roundtrip");
  const Dataset d = two_record_dataset();
  save_dataset(d, tmp.path("d.jsonl"));
  const Dataset loaded = load_dataset(tmp.path("d.jsonl"));
  CHECK(loaded == d);
  CHECK(loaded.records[0].id == "q0");  // original order preserved
  CHECK(loaded.records[1].id == "q1");
}

TEST_CASE("header-only file gives an empty dataset") {
  testutil::TempDir tmp("ds_empty");
  {
    std::ofstream out(tmp.path("d.jsonl"));
    out << "{\"dimension\": 5}\n";
  }
  const Dataset d = load_dataset(tmp.path("d.jsonl"));
  CHECK(d.dimension == 5);
  CHECK(d.records.empty());
}

TEST_CASE("validation names the record and the invariant") {
  testutil::TempDir tmp("ds_invalid");
  Dataset d = two_record_dataset();

  SUBCASE("correct_index out of range") {
    d.records[1].correct_index = 4;
    save_dataset(d, tmp.path("d.jsonl"));
    CHECK_THROWS_WITH_AS(load_dataset(tmp.path("d.jsonl")),
                         doctest::Contains("q1"), DataError);
  }
  SUBCASE("duplicate id") {
    d.records[1].id = "q0";
    save_dataset(d, tmp.path("d.jsonl"));
    CHECK_THROWS_WITH_AS(load_dataset(tmp.path("d.jsonl")),
                         doctest::Contains("duplicate id"), DataError);
  }
  SUBCASE("dimension mismatch") {
    d.records[0].image_feature.push_back(1.0);
    save_dataset(d, tmp.path("d.jsonl"));
    CHECK_THROWS_WITH_AS(load_dataset(tmp.path("d.jsonl")),
                         doctest::Contains("q0"), DataError);
  }
  SUBCASE("duplicate option text") {
    d.records[0].options[2].text = "liver";
    save_dataset(d, tmp.path("d.jsonl"));
    CHECK_THROWS_WITH_AS(load_dataset(tmp.path("d.jsonl")),
                         doctest::Contains("liver"), DataError);
  }
}

TEST_CASE("parse errors carry the line number") {
  testutil::TempDir tmp("ds_parse");
  {
    std::ofstream out(tmp.path("d.jsonl"));
    out << "{\"dimension\": 3}\n";
    out << "{not json\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(tmp.path("d.jsonl")),
                       doctest::Contains("line 2"), DataError);

  CHECK_THROWS_AS(load_dataset(tmp.path("missing.jsonl")), DataError);
}

TEST_CASE("synthetic generation is a pure function of spec and seed") {
  SynthSpec spec;
  spec.dimension = 8;
  spec.num_classes = 4;
  spec.questions_per_class = 5;
  spec.margins = {1.0, 1.0, 1.0, 1.0};

  const Dataset a = synth_generate(spec, 42);
  const Dataset b = synth_generate(spec, 42);
  CHECK(a == b);

  testutil::TempDir tmp("ds_synth");
  save_dataset(a, tmp.path("a.jsonl"));
  save_dataset(b, tmp.path("b.jsonl"));
  CHECK(testutil::slurp(tmp.path("a.jsonl")) ==
        testutil::slurp(tmp.path("b.jsonl")));

  CHECK(a != synth_generate(spec, 43));
}

TEST_CASE("synthetic records are well formed") {
  SynthSpec spec;
  spec.dimension = 16;
  spec.num_classes = 3;
  spec.questions_per_class = 4;
  spec.margins = {1.6, 1.0, 0.4};
  const Dataset d = synth_generate(spec, 9);
  REQUIRE(d.records.size() == 12);
  for (const auto& q : d.records) {
    CHECK(q.options.size() == 4);
    CHECK(q.text_variants.size() >= 3);
    CHECK(std::abs(norm(q.options[q.correct_index].feature) - 1.0) < 1e-9);
  }
}

TEST_CASE("margin controls the difficulty score") {
  SynthSpec spec;
  spec.dimension = 16;
  spec.num_classes = 1;
  spec.questions_per_class = 40;

  SUBCASE("tiny margin means near-duplicate distractors") {
    spec.margins = {0.02};
    for (const auto& s : score_dataset(synth_generate(spec, 42), nullptr))
      CHECK(s.score >= 0.95);
  }
  SUBCASE("wide margin means distinct distractors") {
    spec.margins = {1.9};
    for (const auto& s : score_dataset(synth_generate(spec, 42), nullptr))
      CHECK(s.score <= 0.15);
  }
}

TEST_CASE("mean difficulty is monotone in the margin") {
  double prev = 2.0;
  for (double margin : {0.1, 0.5, 1.0, 1.5}) {
    SynthSpec spec;
    spec.dimension = 16;
    spec.num_classes = 1;
    spec.questions_per_class = 25;
    spec.margins = {margin};
    const double m = mean_score(synth_generate(spec, 17));
    CHECK(m <= prev);
    prev = m;
  }
}

TEST_CASE("synthetic spec validation") {
  SynthSpec spec;
  spec.dimension = 8;
  spec.num_classes = 1;
  spec.questions_per_class = 2;

  spec.margins = {2.5};
  CHECK_THROWS_AS(synth_generate(spec, 1), std::invalid_argument);
  spec.margins = {0.0};
  CHECK_THROWS_AS(synth_generate(spec, 1), std::invalid_argument);
  spec.margins = {1.0};
  spec.options_per_question = 1;
  CHECK_THROWS_AS(synth_generate(spec, 1), std::invalid_argument);
  spec.options_per_question = 4;
  spec.margins = {1.0, 0.5};  // wrong count
  CHECK_THROWS_AS(synth_generate(spec, 1), std::invalid_argument);
}

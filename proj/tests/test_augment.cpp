#include <algorithm>
#include <cmath>
#include <set>

#include <doctest.h>

#include "grposim/augment.hpp"
#include "grposim/embedding.hpp"
#include "grposim/errors.hpp"
#include "test_util.hpp"

using namespace grposim;

TEST_CASE("rewrite_text draws stored variants first") {
  auto q = testutil::tiny_question();
  q.text_variants = {"v a", "v b", "v c", "v d", "v e"};
  Rng rng(1);

  CHECK(rewrite_text(q, 0, rng).empty());

  const auto three = rewrite_text(q, 3, rng);
  REQUIRE(three.size() == 3);
  std::set<std::string> uniq(three.begin(), three.end());
  CHECK(uniq.size() == 3);
  for (const auto& s : three) {
    CHECK(s != q.text);
    CHECK(std::count(q.text_variants.begin(), q.text_variants.end(), s) == 1);
  }
}

TEST_CASE("rewrite_text falls back to the template bank") {
  auto q = testutil::tiny_question();
  REQUIRE(q.text_variants.empty());
  Rng rng(2);
  const auto three = rewrite_text(q, 3, rng);
  REQUIRE(three.size() == 3);
  std::set<std::string> uniq(three.begin(), three.end());
  CHECK(uniq.size() == 3);
  for (const auto& s : three) {
    CHECK(s != q.text);
    CHECK(s.find(q.text) != std::string::npos);  // parameterized by the text
  }

  SUBCASE("stored variants are topped up with templates") {
    q.text_variants = {"stored one", "stored two"};
    const auto five = rewrite_text(q, 5, rng);
    CHECK(five.size() == 5);
    CHECK(std::count(five.begin(), five.end(), "stored one") == 1);
    CHECK(std::count(five.begin(), five.end(), "stored two") == 1);
  }

  SUBCASE("asking beyond the pool reports the shortfall") {
    const int too_many = 3 + static_cast<int>(builtin_templates().size());
    CHECK_THROWS_WITH_AS(rewrite_text(q, too_many, rng),
                         doctest::Contains("short by"), std::invalid_argument);
  }
}

TEST_CASE("perturb_image respects sigma and the preservation guard") {
  Rng seed_rng(3);
  Embedding stimulus(8);
  for (auto& v : stimulus) v = seed_rng.normal();
  const double n = norm(stimulus);
  for (auto& v : stimulus) v /= n;

  AugmentConfig cfg;

  SUBCASE("zero sigma is the identity") {
    cfg.noise_sigma = 0.0;
    Rng rng(4);
    CHECK(perturb_image(stimulus, cfg, rng) == stimulus);
  }

  SUBCASE("tiny sigma passes a tight guard on the first draw") {
    cfg.noise_sigma = 1e-4;
    cfg.min_cosine = 0.99;
    long fallbacks = 0;
    for (int t = 0; t < 200; ++t) {
      Rng rng(100 + t);
      const auto out = perturb_image(stimulus, cfg, rng, &fallbacks);
      CHECK(out != stimulus);
      CHECK(cosine_similarity(stimulus, out) >= 0.99);
    }
    CHECK(fallbacks == 0);
  }

  SUBCASE("unreachable guard falls back to the original") {
    cfg.noise_sigma = 0.5;
    cfg.min_cosine = 1.0;
    cfg.max_rejections = 4;
    long fallbacks = 0;
    Rng rng(5);
    CHECK(perturb_image(stimulus, cfg, rng, &fallbacks) == stimulus);
    CHECK(fallbacks == 1);
  }

  SUBCASE("accepted outputs always satisfy the guard") {
    cfg.noise_sigma = 0.3;
    cfg.min_cosine = 0.9;
    cfg.max_rejections = 64;
    Rng rng(6);
    for (int t = 0; t < 200; ++t) {
      const auto out = perturb_image(stimulus, cfg, rng);
      CHECK(cosine_similarity(stimulus, out) >= 0.9 - 1e-12);
    }
  }
}

TEST_CASE("build_variant_group produces G tagged prompts") {
  auto q = testutil::tiny_question(4, 3);
  q.text_variants = {"first rewording", "second rewording", "third rewording"};
  HashProvider provider(4, 7);
  AugmentConfig cfg;

  SUBCASE("original plus distinct variants") {
    cfg.num_text_variants = 3;
    Rng rng(8);
    const auto group = build_variant_group(q, 4, cfg, provider, rng);
    REQUIRE(group.size() == 4);
    CHECK(group[0].variant_tag == "orig");
    CHECK(group[0].text == q.text);
    std::set<std::string> tags;
    for (const auto& p : group) {
      tags.insert(p.variant_tag);
      CHECK(p.question_id == q.id);
      CHECK(p.correct_index() == q.correct_index);
      CHECK(&p.options() == &q.options);
    }
    CHECK(tags == std::set<std::string>{"orig", "v1", "v2", "v3"});
  }

  SUBCASE("texts cycle when fewer variants than slots") {
    cfg.num_text_variants = 2;
    Rng rng(9);
    const auto group = build_variant_group(q, 4, cfg, provider, rng);
    REQUIRE(group.size() == 4);
    CHECK(group[1].text == group[3].text);  // v1 and v3 share a rewrite
    CHECK(group[1].text != group[2].text);
    CHECK(group[1].stimulus != group[3].stimulus);  // independent noise
    std::set<std::string> tags;
    for (const auto& p : group) tags.insert(p.variant_tag);
    CHECK(tags.size() == 4);
  }

  SUBCASE("zeroed augmentation degenerates to identical prompts") {
    cfg.num_text_variants = 0;
    cfg.noise_sigma = 0.0;
    Rng rng(10);
    const auto group = build_variant_group(q, 4, cfg, provider, rng);
    REQUIRE(group.size() == 4);
    for (const auto& p : group) {
      CHECK(p.text == q.text);
      CHECK(p.stimulus == group[0].stimulus);
    }
    CHECK(group[0].variant_tag == "orig");
    CHECK(group[3].variant_tag == "v3");
  }

  SUBCASE("group size below two is rejected") {
    Rng rng(11);
    CHECK_THROWS_AS(build_variant_group(q, 1, cfg, provider, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("text coupling shifts the stimulus by gamma") {
  auto q = testutil::tiny_question(4, 2);
  HashProvider provider(4, 7);
  const auto base = make_base_prompt(q, provider, 0.2);
  const auto bare = make_base_prompt(q, provider, 0.0);
  CHECK(bare.stimulus == q.image_feature);
  const auto text_vec = provider.embed(q.text);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(base.stimulus[i] ==
          doctest::Approx(q.image_feature[i] + 0.2 * text_vec[i]));
}

TEST_CASE("template override file is validated") {
  testutil::TempDir tmp("templates");
  {
    std::ofstream out(tmp.path("t.txt"));
    out << "Alpha: {question}\n";
    out << "Beta: {question}\n";
  }
  const auto bank = load_template_file(tmp.path("t.txt"));
  CHECK(bank.size() == 2);

  {
    std::ofstream out(tmp.path("bad.txt"));
    out << "no placeholder here\n";
  }
  CHECK_THROWS_AS(load_template_file(tmp.path("bad.txt")), ConfigError);
}

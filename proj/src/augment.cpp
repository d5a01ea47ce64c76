#include "grposim/augment.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "grposim/errors.hpp"

namespace grposim {

const std::vector<std::string>& builtin_templates() {
  static const std::vector<std::string> bank = {
      "Can you identify the following: {question}",
      "Please take another look and answer: {question}",
      "Consider the image once more. {question}",
      "Restated for clarity: {question}",
      "In other words: {question}",
      "Here is the question again, phrased differently: {question}",
      "Focusing on the highlighted region: {question}",
      "From what is visible in the image: {question}",
      "Answer carefully: {question}",
      "Paying attention to fine structures: {question}",
  };
  return bank;
}

namespace {

std::string instantiate(const std::string& tmpl, const std::string& question) {
  std::string out = tmpl;
  const std::string placeholder = "{question}";
  std::size_t pos;
  while ((pos = out.find(placeholder)) != std::string::npos)
    out.replace(pos, placeholder.size(), question);
  return out;
}

// deterministic Fisher-Yates partial shuffle picking k of n
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k,
                                          Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

std::vector<std::string> rewrite_text(const QuestionRecord& q, int k, Rng& rng,
                                      const std::vector<std::string>& templates) {
  if (k < 0) throw std::invalid_argument("rewrite_text: k must be >= 0");
  if (k == 0) return {};

  std::vector<std::string> pool;
  std::set<std::string> seen{q.text};
  for (const auto& v : q.text_variants)
    if (seen.insert(v).second) pool.push_back(v);

  if (static_cast<std::size_t>(k) > pool.size()) {
    const auto& bank = templates.empty() ? builtin_templates() : templates;
    std::vector<std::string> extras;
    for (const auto& t : bank) {
      std::string s = instantiate(t, q.text);
      if (seen.insert(s).second) extras.push_back(std::move(s));
    }
    const std::size_t need = static_cast<std::size_t>(k) - pool.size();
    if (need > extras.size())
      throw std::invalid_argument(
          "rewrite_text: question " + q.id + " needs " + std::to_string(k) +
          " variants but only " + std::to_string(pool.size() + extras.size()) +
          " are available (stored + templates), short by " +
          std::to_string(need - extras.size()));
    auto picked = sample_without_replacement(std::move(extras), need, rng);
    pool.insert(pool.end(), picked.begin(), picked.end());
    return pool;
  }
  return sample_without_replacement(std::move(pool),
                                    static_cast<std::size_t>(k), rng);
}

Embedding perturb_image(const Embedding& stimulus, const AugmentConfig& cfg,
                        Rng& rng, long* fallback_counter) {
  if (cfg.noise_sigma < 0.0)
    throw std::invalid_argument("perturb_image: noise_sigma must be >= 0");
  if (cfg.noise_sigma == 0.0) return stimulus;

  for (int attempt = 0; attempt < cfg.max_rejections; ++attempt) {
    Embedding out(stimulus.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = stimulus[i] + cfg.noise_sigma * rng.normal();
    if (cosine_similarity(stimulus, out) >= cfg.min_cosine) return out;
  }
  if (fallback_counter) ++(*fallback_counter);
  return stimulus;
}

namespace {

Embedding effective_stimulus(const Embedding& image, const std::string& text,
                             const EmbeddingProvider& provider, double gamma) {
  if (gamma == 0.0) return image;
  Embedding stim = image;
  const Embedding t = provider.embed(text);
  if (t.size() != stim.size())
    throw DataError("prompt stimulus: provider dimension " +
                    std::to_string(t.size()) + " does not match image " +
                    std::to_string(stim.size()));
  for (std::size_t i = 0; i < stim.size(); ++i) stim[i] += gamma * t[i];
  return stim;
}

}  // namespace

VariantPrompt make_base_prompt(const QuestionRecord& q,
                               const EmbeddingProvider& provider,
                               double text_gamma) {
  VariantPrompt p;
  p.question_id = q.id;
  p.variant_tag = "orig";
  p.text = q.text;
  p.stimulus = effective_stimulus(q.image_feature, q.text, provider, text_gamma);
  p.question = &q;
  return p;
}

std::vector<VariantPrompt> build_variant_group(
    const QuestionRecord& q, int group_size, const AugmentConfig& cfg,
    const EmbeddingProvider& provider, Rng& rng, long* fallback_counter) {
  if (group_size < 2)
    throw std::invalid_argument("build_variant_group: group size must be >= 2");

  std::vector<VariantPrompt> prompts;
  prompts.reserve(static_cast<std::size_t>(group_size));
  if (cfg.include_original)
    prompts.push_back(make_base_prompt(q, provider, cfg.text_gamma));

  std::vector<std::string> rewrites;
  if (cfg.num_text_variants > 0)
    rewrites = rewrite_text(q, cfg.num_text_variants, rng, cfg.templates);

  int vi = 0;
  while (static_cast<int>(prompts.size()) < group_size) {
    VariantPrompt p;
    p.question_id = q.id;
    p.variant_tag = "v" + std::to_string(vi + 1);
    p.text = rewrites.empty() ? q.text
                              : rewrites[static_cast<std::size_t>(vi) %
                                         rewrites.size()];
    Rng member_rng = rng.child(0x9000 + static_cast<std::uint64_t>(vi));
    const Embedding perturbed =
        perturb_image(q.image_feature, cfg, member_rng, fallback_counter);
    p.stimulus = effective_stimulus(perturbed, p.text, provider, cfg.text_gamma);
    p.question = &q;
    prompts.push_back(std::move(p));
    ++vi;
  }
  return prompts;
}

std::vector<std::string> load_template_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("template file: cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.find("{question}") == std::string::npos)
      throw ConfigError("template file: line " + std::to_string(lineno) +
                        " lacks a {question} placeholder");
    out.push_back(line);
  }
  if (out.empty()) throw ConfigError("template file: no templates in " + path);
  return out;
}

}  // namespace grposim

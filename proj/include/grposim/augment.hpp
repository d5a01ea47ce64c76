#ifndef GRPOSIM_AUGMENT_HPP_
#define GRPOSIM_AUGMENT_HPP_

#include <string>
#include <vector>

#include "grposim/dataset.hpp"
#include "grposim/embedding.hpp"
#include "grposim/rng.hpp"

namespace grposim {

// One presentation of a question to the policy. The stimulus is the
// effective input vector: the (possibly noise-perturbed) image feature plus
// text_gamma times the embedding of the prompt text, so distinct phrasings
// reach the policy as distinct stimuli. Answer preservation is structural:
// options and correct index always come from the source record.
struct VariantPrompt {
  std::string question_id;
  std::string variant_tag;  // "orig" for the unmodified prompt
  std::string text;
  Embedding stimulus;
  const QuestionRecord* question = nullptr;

  const std::vector<OptionEntry>& options() const { return question->options; }
  int correct_index() const { return question->correct_index; }
};

struct AugmentConfig {
  int num_text_variants = 3;
  double noise_sigma = 0.1;
  double min_cosine = 0.9;    // preservation guard on perturbed stimuli
  int max_rejections = 8;
  bool include_original = true;
  double text_gamma = 0.2;    // weight of the prompt-text term in the stimulus
  std::vector<std::string> templates;  // override bank; empty = built-in
};

// Built-in rewrite templates, each containing a {question} placeholder.
const std::vector<std::string>& builtin_templates();

/// k distinct rewrites of q.text: drawn without replacement from the stored
/// text_variants first, topped up from the template bank. Throws when fewer
/// than k distinct candidates exist, stating the shortfall.
std::vector<std::string> rewrite_text(const QuestionRecord& q, int k, Rng& rng,
                                      const std::vector<std::string>& templates = {});

/// Componentwise Gaussian noise, rejection-sampled until the perturbed vector
/// keeps cosine >= cfg.min_cosine with the input. Falls back to the input
/// unchanged when max_rejections is exhausted (counted, not an error).
/// noise_sigma == 0 returns the input exactly.
Embedding perturb_image(const Embedding& stimulus, const AugmentConfig& cfg,
                        Rng& rng, long* fallback_counter = nullptr);

// The canonical presentation: original text, unperturbed image.
VariantPrompt make_base_prompt(const QuestionRecord& q,
                               const EmbeddingProvider& provider,
                               double text_gamma);

/// Exactly G prompts for one question: the original (when include_original)
/// plus variants cycling through text rewrites, each paired with an
/// independent image perturbation. Tags are unique within the group.
std::vector<VariantPrompt> build_variant_group(
    const QuestionRecord& q, int group_size, const AugmentConfig& cfg,
    const EmbeddingProvider& provider, Rng& rng,
    long* fallback_counter = nullptr);

std::vector<std::string> load_template_file(const std::string& path);

}  // namespace grposim

#endif  // GRPOSIM_AUGMENT_HPP_

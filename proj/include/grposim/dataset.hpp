#ifndef GRPOSIM_DATASET_HPP_
#define GRPOSIM_DATASET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "grposim/embedding.hpp"

namespace grposim {

struct OptionEntry {
  std::string text;
  Embedding feature;

  bool operator==(const OptionEntry&) const = default;
};

// One multiple-choice instance. `image_feature` is the vector stimulus that
// stands in for the image; `text_variants` are optional precomputed
// paraphrases of `text` (they take precedence over generated rewrites).
struct QuestionRecord {
  std::string id;
  std::string text;
  Embedding image_feature;
  std::vector<OptionEntry> options;  // length >= 2
  int correct_index = 0;
  std::string anatomy_label;
  std::vector<std::string> text_variants;

  bool operator==(const QuestionRecord&) const = default;
};

struct Dataset {
  std::size_t dimension = 0;
  std::vector<QuestionRecord> records;

  bool operator==(const Dataset&) const = default;
};

// Throws DataError naming the offending record and invariant.
void validate_dataset(const Dataset& d);

// Line-delimited file: line 1 is a header {"dimension": <int>}, then one
// JSON record per line. Record order is preserved.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& d, const std::string& path);

// Synthetic task family with difficulty controlled by construction: the
// strongest distractor of a class-c question sits at cosine 1 - margin/2
// from the correct option, so smaller margins give harder questions.
struct SynthSpec {
  std::size_t dimension = 16;
  std::size_t num_classes = 4;
  std::size_t questions_per_class = 50;
  std::size_t options_per_question = 4;
  std::vector<double> margins;  // one per class, each in (0, 2]
};

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

}  // namespace grposim

#endif  // GRPOSIM_DATASET_HPP_

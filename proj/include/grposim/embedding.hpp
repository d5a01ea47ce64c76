#ifndef GRPOSIM_EMBEDDING_HPP_
#define GRPOSIM_EMBEDDING_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace grposim {

using Embedding = std::vector<double>;

struct QuestionRecord;
struct Dataset;

double dot(const Embedding& a, const Embedding& b);
double norm(const Embedding& a);
bool all_finite(const Embedding& a);

/// Cosine similarity (a.b)/(|a||b|), clamped to [-1, 1] to absorb rounding.
/// Throws on dimension mismatch or a zero-norm input.
double cosine_similarity(const Embedding& a, const Embedding& b);

// Text-to-vector source. Stands in for an external text encoder: either a
// lookup table loaded from file or a seeded hash generator, so the whole
// pipeline runs with or without real encoder assets.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Embedding embed(const std::string& text) const = 0;
  virtual std::size_t dimension() const = 0;
};

// Deterministic pseudo-random unit vector derived from (text, seed).
class HashProvider final : public EmbeddingProvider {
 public:
  HashProvider(std::size_t dimension, std::uint64_t seed);
  Embedding embed(const std::string& text) const override;
  std::size_t dimension() const override { return dim_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Exact string-to-vector table; lookup misses raise DataError naming the key.
class TableProvider final : public EmbeddingProvider {
 public:
  TableProvider(std::size_t dimension, std::map<std::string, Embedding> table);
  static TableProvider load(const std::string& path);

  Embedding embed(const std::string& text) const override;
  std::size_t dimension() const override { return dim_; }
  std::size_t size() const { return table_.size(); }

 private:
  std::size_t dim_;
  std::map<std::string, Embedding> table_;
};

struct DifficultyScore {
  std::string question_id;
  double score = 0.0;  // in [-1, 1]
};

/// Difficulty of a question: the maximum cosine similarity between the
/// correct option and any distractor. With a provider, option texts are
/// embedded; with provider == nullptr the stored option features are used.
DifficultyScore difficulty_score(const QuestionRecord& q,
                                 const EmbeddingProvider* provider);

/// One score per record, order preserved. Per-record failures are rethrown
/// with the record id attached.
std::vector<DifficultyScore> score_dataset(const Dataset& d,
                                           const EmbeddingProvider* provider);

}  // namespace grposim

#endif  // GRPOSIM_EMBEDDING_HPP_

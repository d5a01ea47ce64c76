#include "grposim/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "grposim/dataset.hpp"
#include "grposim/errors.hpp"
#include "grposim/rng.hpp"

namespace grposim {

double dot(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dot: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Embedding& a) { return std::sqrt(dot(a, a)); }

bool all_finite(const Embedding& a) {
  return std::all_of(a.begin(), a.end(),
                     [](double v) { return std::isfinite(v); });
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine_similarity: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  const double na = norm(a);
  const double nb = norm(b);
  if (na <= 0.0 || nb <= 0.0)
    throw std::invalid_argument(
        "cosine_similarity: zero-norm vector (degenerate embedding)");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

HashProvider::HashProvider(std::size_t dimension, std::uint64_t seed)
    : dim_(dimension), seed_(seed) {
  if (dimension == 0)
    throw std::invalid_argument("HashProvider: dimension must be positive");
}

Embedding HashProvider::embed(const std::string& text) const {
  Rng rng(mix_seed(seed_, fnv1a64(text)));
  Embedding v(dim_);
  double n = 0.0;
  // regenerate in the astronomically unlikely near-zero case
  do {
    for (auto& c : v) c = rng.normal();
    n = norm(v);
  } while (n < 1e-12);
  for (auto& c : v) c /= n;
  return v;
}

TableProvider::TableProvider(std::size_t dimension,
                             std::map<std::string, Embedding> table)
    : dim_(dimension), table_(std::move(table)) {
  for (const auto& [text, vec] : table_) {
    if (vec.size() != dim_)
      throw DataError("embedding table: entry \"" + text +
                      "\" has dimension " + std::to_string(vec.size()) +
                      ", expected " + std::to_string(dim_));
    if (!all_finite(vec))
      throw DataError("embedding table: entry \"" + text +
                      "\" has non-finite components");
  }
}

TableProvider TableProvider::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("embedding table: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw DataError("embedding table: missing header line in " + path);

  std::size_t dim = 0;
  try {
    auto header = nlohmann::json::parse(line);
    dim = header.at("dimension").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("embedding table: bad header in " + path + ": " +
                    e.what());
  }
  if (dim == 0) throw DataError("embedding table: dimension must be positive");

  std::map<std::string, Embedding> table;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      table[j.at("text").get<std::string>()] =
          j.at("vector").get<Embedding>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError("embedding table: parse error at line " +
                      std::to_string(lineno) + ": " + e.what());
    }
  }
  return TableProvider(dim, std::move(table));
}

Embedding TableProvider::embed(const std::string& text) const {
  auto it = table_.find(text);
  if (it == table_.end())
    throw DataError("embedding table: no entry for \"" + text + "\"");
  return it->second;
}

DifficultyScore difficulty_score(const QuestionRecord& q,
                                 const EmbeddingProvider* provider) {
  if (q.options.size() < 2)
    throw std::invalid_argument("difficulty_score: question " + q.id +
                                " has fewer than 2 options");
  const auto& correct = q.options[static_cast<std::size_t>(q.correct_index)];
  const Embedding correct_vec =
      provider ? provider->embed(correct.text) : correct.feature;

  double best = -1.0;
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    if (static_cast<int>(i) == q.correct_index) continue;
    const Embedding d =
        provider ? provider->embed(q.options[i].text) : q.options[i].feature;
    best = std::max(best, cosine_similarity(correct_vec, d));
  }
  return DifficultyScore{q.id, best};
}

std::vector<DifficultyScore> score_dataset(const Dataset& d,
                                           const EmbeddingProvider* provider) {
  std::vector<DifficultyScore> out;
  out.reserve(d.records.size());
  for (const auto& q : d.records) {
    try {
      out.push_back(difficulty_score(q, provider));
    } catch (const std::exception& e) {
      throw DataError("scoring record " + q.id + ": " + e.what());
    }
  }
  return out;
}

}  // namespace grposim

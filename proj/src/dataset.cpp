#include "grposim/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "grposim/errors.hpp"
#include "grposim/rng.hpp"

namespace grposim {

namespace {

using nlohmann::json;

void check_vector(const Embedding& v, std::size_t dim, const std::string& id,
                  const std::string& what) {
  if (v.size() != dim)
    throw DataError("record " + id + ": " + what + " has dimension " +
                    std::to_string(v.size()) + ", expected " +
                    std::to_string(dim));
  if (!all_finite(v))
    throw DataError("record " + id + ": " + what +
                    " has non-finite components");
}

json record_to_json(const QuestionRecord& r) {
  json j;
  j["id"] = r.id;
  j["text"] = r.text;
  j["image_feature"] = r.image_feature;
  json opts = json::array();
  for (const auto& o : r.options)
    opts.push_back(json{{"text", o.text}, {"feature", o.feature}});
  j["options"] = std::move(opts);
  j["correct_index"] = r.correct_index;
  j["anatomy_label"] = r.anatomy_label;
  if (!r.text_variants.empty()) j["text_variants"] = r.text_variants;
  return j;
}

QuestionRecord record_from_json(const json& j, std::size_t lineno) {
  static const std::set<std::string> known = {
      "id",            "text",          "image_feature", "options",
      "correct_index", "anatomy_label", "text_variants"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key))
      throw DataError("line " + std::to_string(lineno) +
                      ": unknown record field \"" + key + "\"");
  }
  QuestionRecord r;
  r.id = j.at("id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.image_feature = j.at("image_feature").get<Embedding>();
  for (const auto& o : j.at("options")) {
    OptionEntry e;
    e.text = o.at("text").get<std::string>();
    e.feature = o.at("feature").get<Embedding>();
    r.options.push_back(std::move(e));
  }
  r.correct_index = j.at("correct_index").get<int>();
  r.anatomy_label = j.at("anatomy_label").get<std::string>();
  if (j.contains("text_variants"))
    r.text_variants = j.at("text_variants").get<std::vector<std::string>>();
  return r;
}

}  // namespace

void validate_dataset(const Dataset& d) {
  if (d.dimension == 0) throw DataError("dataset: dimension must be positive");
  std::set<std::string> seen;
  for (const auto& r : d.records) {
    if (r.id.empty()) throw DataError("dataset: record with empty id");
    if (!seen.insert(r.id).second)
      throw DataError("record " + r.id + ": duplicate id");
    if (r.options.size() < 2)
      throw DataError("record " + r.id + ": fewer than 2 options");
    if (r.correct_index < 0 ||
        r.correct_index >= static_cast<int>(r.options.size()))
      throw DataError("record " + r.id + ": correct_index " +
                      std::to_string(r.correct_index) +
                      " out of range for " + std::to_string(r.options.size()) +
                      " options");
    check_vector(r.image_feature, d.dimension, r.id, "image_feature");
    std::set<std::string> texts;
    for (const auto& o : r.options) {
      if (!texts.insert(o.text).second)
        throw DataError("record " + r.id + ": duplicate option text \"" +
                        o.text + "\"");
      check_vector(o.feature, d.dimension, r.id,
                   "option \"" + o.text + "\" feature");
    }
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("dataset: cannot open " + path);

  std::string line;
  if (!std::getline(in, line))
    throw DataError("dataset: missing header line in " + path);

  Dataset d;
  try {
    auto header = json::parse(line);
    d.dimension = header.at("dimension").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError("dataset: bad header at line 1: " + std::string(e.what()));
  }

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      d.records.push_back(record_from_json(json::parse(line), lineno));
    } catch (const json::exception& e) {
      throw DataError("dataset: parse error at line " +
                      std::to_string(lineno) + ": " + e.what());
    }
  }
  validate_dataset(d);
  return d;
}

void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("dataset: cannot write " + path);
  out << json{{"dimension", d.dimension}}.dump() << "\n";
  for (const auto& r : d.records) out << record_to_json(r).dump() << "\n";
}

namespace {

// Construction constants for the synthetic family. The per-question wobble
// keeps distractors within a class from being identical; the confuser
// coupling points part of each class's strongest-distractor direction at the
// mean of all easier classes' correct directions, so the more easier classes
// are mastered the more plausible the harder classes' distractors become.
// TUNING HACK (temporary): allow env overrides while calibrating
inline double env_or(const char* name, double fallback) {
  const char* v = std::getenv(name);
  return v ? std::atof(v) : fallback;
}
static const double kConfuserCoupling = env_or("TUNE_COUPLING", 0.95);
static const double kConfuserWobble = env_or("TUNE_WOBBLE", 0.3);
static const double kImageJitter = env_or("TUNE_JITTER", 0.02);
static const double kAnchorNoise = env_or("TUNE_ANCHNOISE", 0.8);
static const double kAltGapLo = env_or("TUNE_ALTLO", 0.5);
static const double kAltGapHi = env_or("TUNE_ALTHI", 1.0);

Embedding random_unit(Rng& rng, std::size_t dim) {
  Embedding v(dim);
  double n = 0.0;
  do {
    for (auto& c : v) c = rng.normal();
    n = norm(v);
  } while (n < 1e-12);
  for (auto& c : v) c /= n;
  return v;
}

// v minus its projection onto each unit vector in basis, renormalized.
Embedding project_out(Embedding v, const std::vector<Embedding>& basis) {
  for (const auto& b : basis) {
    const double p = dot(v, b);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * b[i];
  }
  const double n = norm(v);
  if (n < 1e-9) return {};
  for (auto& c : v) c /= n;
  return v;
}

std::vector<Embedding> orthonormal_set(Rng& rng, std::size_t dim,
                                       std::size_t count) {
  std::vector<Embedding> basis;
  while (basis.size() < count) {
    Embedding v = project_out(random_unit(rng, dim), basis);
    if (!v.empty()) basis.push_back(std::move(v));
  }
  return basis;
}

// unit vector at exact cosine alpha to unit `anchor`, using unit `normal`
// orthogonal to anchor
Embedding at_cosine(const Embedding& anchor, const Embedding& normal,
                    double alpha) {
  const double beta = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
  Embedding v(anchor.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = alpha * anchor[i] + beta * normal[i];
  return v;
}

}  // namespace

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.dimension == 0)
    throw std::invalid_argument("synth: dimension must be positive");
  if (spec.num_classes == 0)
    throw std::invalid_argument("synth: need at least one class");
  if (spec.options_per_question < 2)
    throw std::invalid_argument("synth: options per question must be >= 2");
  if (spec.margins.size() != spec.num_classes)
    throw std::invalid_argument(
        "synth: need one margin per class (got " +
        std::to_string(spec.margins.size()) + " for " +
        std::to_string(spec.num_classes) + " classes)");
  for (double m : spec.margins)
    if (!(m > 0.0 && m <= 2.0))
      throw std::invalid_argument("synth: margin " + std::to_string(m) +
                                  " outside (0, 2]");

  const std::size_t C = spec.num_classes;
  const std::size_t dim = spec.dimension;
  Rng rng(mix_seed(seed, 0x5e7a9));

  // per class: a correct direction, a confuser direction for the strongest
  // distractor, a direction for the remaining distractors and a noise
  // direction for per-question variation, mutually orthogonal when the
  // dimension allows; keeping every feature inside its class subspace stops
  // option suppression from bleeding across classes
  const std::size_t want = std::min(4 * C, dim);
  std::vector<Embedding> basis = orthonormal_set(rng, dim, want);
  std::vector<Embedding> correct_dir(C), fresh_dir(C), alt_dir(C), noise_dir(C);
  auto perp_unit = [&](const Embedding& anchor) {
    Embedding f = project_out(random_unit(rng, dim), {anchor});
    while (f.empty()) f = project_out(random_unit(rng, dim), {anchor});
    return f;
  };
  for (std::size_t c = 0; c < C; ++c) {
    correct_dir[c] = c < basis.size() ? basis[c] : random_unit(rng, dim);
    fresh_dir[c] =
        C + c < basis.size() ? basis[C + c] : perp_unit(correct_dir[c]);
    alt_dir[c] =
        2 * C + c < basis.size() ? basis[2 * C + c] : fresh_dir[c];
    noise_dir[c] =
        3 * C + c < basis.size() ? basis[3 * C + c] : perp_unit(correct_dir[c]);
  }

  // Anchor classes (margin >= 1.0, or the easiest class when none qualify)
  // have no shared distractor direction: their strongest distractors flip
  // sign per question, so the only way to separate them is through the
  // correct direction itself. Harder classes' confusers lean on the mean of
  // the anchor classes' correct directions, which makes their strongest
  // distractors grow more plausible as the anchor classes are mastered.
  std::vector<bool> anchor(C, false);
  bool any_anchor = false;
  for (std::size_t c = 0; c < C; ++c) {
    anchor[c] = spec.margins[c] >= 1.0;
    any_anchor = any_anchor || anchor[c];
  }
  if (!any_anchor) {
    std::size_t easiest = 0;
    for (std::size_t c = 1; c < C; ++c)
      if (spec.margins[c] > spec.margins[easiest]) easiest = c;
    anchor[easiest] = true;
  }

  Embedding anchor_mean(dim, 0.0);
  {
    std::size_t count = 0;
    for (std::size_t c = 0; c < C; ++c) {
      if (!anchor[c]) continue;
      ++count;
      for (std::size_t i = 0; i < dim; ++i)
        anchor_mean[i] += correct_dir[c][i];
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(count));
    for (auto& v : anchor_mean) v *= scale;
  }

  std::vector<Embedding> confuser(C);
  for (std::size_t c = 0; c < C; ++c) {
    if (anchor[c]) {
      confuser[c] = noise_dir[c];
      continue;
    }
    const double a = kConfuserCoupling;
    const double fresh_w = std::sqrt(std::max(0.0, 1.0 - a * a));
    Embedding v(dim);
    for (std::size_t i = 0; i < dim; ++i)
      v[i] = a * anchor_mean[i] + fresh_w * fresh_dir[c][i];
    v = project_out(std::move(v), {correct_dir[c]});
    confuser[c] = v.empty() ? fresh_dir[c] : std::move(v);
  }

  Dataset d;
  d.dimension = dim;
  char buf[64];

  for (std::size_t c = 0; c < C; ++c) {
    const double alpha = 1.0 - spec.margins[c] / 2.0;  // target S(q)
    std::snprintf(buf, sizeof(buf), "anatomy_%02zu", c);
    const std::string label = buf;
    Rng class_rng = rng.child(0x100 + c);

    for (std::size_t qi = 0; qi < spec.questions_per_class; ++qi) {
      Rng q_rng = class_rng.child(qi);
      QuestionRecord r;
      std::snprintf(buf, sizeof(buf), "c%02zu_q%03zu", c, qi);
      r.id = buf;
      r.anatomy_label = label;
      r.text = "What anatomical structure is highlighted in scan " + r.id + "?";
      r.text_variants = {
          "Can you identify the anatomy shown in scan " + r.id + "?",
          "Which structure does scan " + r.id + " display?",
          "Name the anatomical structure visible in scan " + r.id + ".",
      };

      // stimulus: near-uniform gain with a small per-question tilt
      r.image_feature.assign(dim, 1.0);
      const Embedding tilt = random_unit(q_rng, dim);
      for (std::size_t i = 0; i < dim; ++i)
        r.image_feature[i] += kImageJitter * tilt[i];

      const std::size_t K = spec.options_per_question;
      r.correct_index = static_cast<int>(q_rng.uniform_index(K));
      r.options.resize(K);
      r.options[static_cast<std::size_t>(r.correct_index)] =
          OptionEntry{label, correct_dir[c]};

      // strongest distractor at exact cosine alpha; anchor classes flip its
      // perpendicular part per question, harder classes share their confuser
      const double flip = qi % 2 == 0 ? 1.0 : -1.0;
      Embedding w(dim);
      if (anchor[c]) {
        for (std::size_t i = 0; i < dim; ++i)
          w[i] = flip * noise_dir[c][i] + kConfuserWobble * fresh_dir[c][i] *
                                              (q_rng.uniform() - 0.5) * 2.0;
      } else {
        const double wob = kConfuserWobble * (q_rng.uniform() - 0.5) * 2.0;
        for (std::size_t i = 0; i < dim; ++i)
          w[i] = confuser[c][i] + wob * noise_dir[c][i];
      }
      w = project_out(std::move(w), {correct_dir[c]});
      while (w.empty())
        w = project_out(random_unit(q_rng, dim), {correct_dir[c]});

      std::size_t slot = 0;
      auto next_slot = [&]() {
        while (static_cast<int>(slot) == r.correct_index) ++slot;
        return slot++;
      };

      std::snprintf(buf, sizeof(buf), "%s_near_q%03zu", label.c_str(), qi);
      r.options[next_slot()] = OptionEntry{buf, at_cosine(correct_dir[c], w, alpha)};

      // remaining distractors strictly less similar than the strongest one,
      // wobbling around the class's own alternate direction
      for (std::size_t k = 2; k < K; ++k) {
        const double a =
            std::max(-0.9, alpha - q_rng.uniform(kAltGapLo, kAltGapHi));
        const double wob = kConfuserWobble * (q_rng.uniform() - 0.5) * 2.0;
        Embedding wk(dim);
        for (std::size_t i = 0; i < dim; ++i)
          wk[i] = alt_dir[c][i] * (k % 2 == 0 ? -1.0 : 1.0) +
                  wob * noise_dir[c][i];
        wk = project_out(std::move(wk), {correct_dir[c]});
        while (wk.empty())
          wk = project_out(random_unit(q_rng, dim), {correct_dir[c]});
        std::snprintf(buf, sizeof(buf), "%s_alt%zu_q%03zu", label.c_str(),
                      k - 1, qi);
        r.options[next_slot()] = OptionEntry{buf, at_cosine(correct_dir[c], wk, a)};
      }

      d.records.push_back(std::move(r));
    }
  }

  validate_dataset(d);
  return d;
}

}  // namespace grposim

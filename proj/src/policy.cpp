#include "grposim/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "grposim/errors.hpp"

namespace grposim {

namespace {

// x_j = stimulus * feature_j (elementwise)
Embedding option_input(const VariantPrompt& prompt, std::size_t j) {
  const Embedding& s = prompt.stimulus;
  const Embedding& f = prompt.options()[j].feature;
  if (s.size() != f.size())
    throw std::invalid_argument("policy: stimulus dimension " +
                                std::to_string(s.size()) +
                                " does not match option feature " +
                                std::to_string(f.size()));
  Embedding x(s.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = s[i] * f[i];
  return x;
}

}  // namespace

std::vector<double> option_logits(const PolicyParams& params,
                                  const VariantPrompt& prompt) {
  if (params.theta.size() != prompt.stimulus.size())
    throw std::invalid_argument(
        "policy: theta dimension " + std::to_string(params.theta.size()) +
        " does not match prompt stimulus " +
        std::to_string(prompt.stimulus.size()));
  if (!(params.temperature > 0.0))
    throw std::invalid_argument("policy: temperature must be positive");

  const auto& options = prompt.options();
  std::vector<double> logits(options.size());
  for (std::size_t j = 0; j < options.size(); ++j)
    logits[j] = dot(params.theta, option_input(prompt, j)) / params.temperature;
  return logits;
}

std::vector<double> action_probs(const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] = std::exp(logits[j] - mx);
    z += p[j];
  }
  for (auto& v : p) v /= z;
  return p;
}

std::vector<double> action_logprobs(const std::vector<double>& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double lse = mx + std::log(z);
  std::vector<double> lp(logits.size());
  for (std::size_t j = 0; j < lp.size(); ++j) lp[j] = logits[j] - lse;
  return lp;
}

ResponseSample sample_response(const PolicyParams& params,
                               const VariantPrompt& prompt, Rng& rng) {
  const auto logits = option_logits(params, prompt);
  const auto probs = action_probs(logits);
  const auto lps = action_logprobs(logits);

  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t pick = probs.size() - 1;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    cum += probs[j];
    if (u < cum) {
      pick = j;
      break;
    }
  }
  return ResponseSample{static_cast<int>(pick), lps[pick]};
}

double logprob(const PolicyParams& params, const VariantPrompt& prompt,
               int option_index) {
  const auto lps = action_logprobs(option_logits(params, prompt));
  if (option_index < 0 || option_index >= static_cast<int>(lps.size()))
    throw std::invalid_argument("logprob: option index " +
                                std::to_string(option_index) +
                                " out of range");
  return lps[static_cast<std::size_t>(option_index)];
}

std::vector<double> grad_logprob(const PolicyParams& params,
                                 const VariantPrompt& prompt,
                                 int option_index) {
  const auto& options = prompt.options();
  if (option_index < 0 || option_index >= static_cast<int>(options.size()))
    throw std::invalid_argument("grad_logprob: option index " +
                                std::to_string(option_index) +
                                " out of range");
  const auto probs = action_probs(option_logits(params, prompt));

  Embedding grad = option_input(prompt, static_cast<std::size_t>(option_index));
  for (std::size_t j = 0; j < options.size(); ++j) {
    const Embedding xj = option_input(prompt, j);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] -= probs[j] * xj[i];
  }
  for (auto& g : grad) g /= params.temperature;
  return grad;
}

double kl_divergence(const std::vector<double>& p_new,
                     const std::vector<double>& p_ref) {
  if (p_new.size() != p_ref.size())
    throw std::invalid_argument("kl_divergence: length mismatch");
  double kl = 0.0;
  for (std::size_t j = 0; j < p_new.size(); ++j) {
    if (p_new[j] == 0.0) continue;
    if (p_ref[j] <= 0.0)
      throw NumericalError(
          "kl_divergence: reference probability is zero where the new policy "
          "has mass (infinite KL; snapshot/params mismatch?)");
    kl += p_new[j] * std::log(p_new[j] / p_ref[j]);
  }
  return kl;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw DataError("checkpoint: bad " + what + " value \"" + s + "\"");
  return v;
}

}  // namespace

void save_checkpoint(const PolicyParams& params, const std::string& path,
                     const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  out << header_comment << "\n";
  out << "dimension " << params.theta.size() << "\n";
  out << "temperature " << format_double(params.temperature) << "\n";
  for (double t : params.theta) out << format_double(t) << "\n";
}

PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint: cannot open " + path);

  PolicyParams params;
  std::size_t dim = 0;
  std::string line;
  bool have_dim = false, have_temp = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (!have_dim) {
      std::string key;
      ls >> key;
      if (key != "dimension") throw DataError("checkpoint: expected dimension line");
      ls >> dim;
      have_dim = true;
    } else if (!have_temp) {
      std::string key, val;
      ls >> key >> val;
      if (key != "temperature")
        throw DataError("checkpoint: expected temperature line");
      params.temperature = parse_double(val, "temperature");
      have_temp = true;
    } else {
      params.theta.push_back(parse_double(line, "theta"));
    }
  }
  if (!have_dim || !have_temp)
    throw DataError("checkpoint: truncated file " + path);
  if (params.theta.size() != dim)
    throw DataError("checkpoint: expected " + std::to_string(dim) +
                    " components, found " +
                    std::to_string(params.theta.size()));
  if (!(params.temperature > 0.0))
    throw DataError("checkpoint: temperature must be positive");
  if (!all_finite(params.theta))
    throw DataError("checkpoint: non-finite theta component");
  return params;
}

}  // namespace grposim

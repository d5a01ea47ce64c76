#ifndef GRPOSIM_POLICY_HPP_
#define GRPOSIM_POLICY_HPP_

#include <string>
#include <vector>

#include "grposim/augment.hpp"
#include "grposim/rng.hpp"

namespace grposim {

// The simulated student: a categorical softmax policy over a prompt's
// options with a shared parameter vector. The score of option j is
// theta . (stimulus * option_feature_j) / temperature (elementwise product),
// which keeps log-probabilities, gradients and KL closed-form.
struct PolicyParams {
  std::vector<double> theta;
  double temperature = 1.0;
};

// Frozen copy of policy parameters; serves as the sampling-time policy
// (importance-ratio denominator) and as the KL anchor.
class PolicySnapshot {
 public:
  explicit PolicySnapshot(PolicyParams p) : params_(std::move(p)) {}
  const PolicyParams& params() const { return params_; }

 private:
  PolicyParams params_;
};

struct ResponseSample {
  int option_index = 0;
  double logprob = 0.0;  // log-probability of option_index under the sampler
};

std::vector<double> option_logits(const PolicyParams& params,
                                  const VariantPrompt& prompt);

/// Softmax with max subtraction; components sum to 1 within 1e-12.
std::vector<double> action_probs(const std::vector<double>& logits);

/// Stable log-softmax of the logits.
std::vector<double> action_logprobs(const std::vector<double>& logits);

ResponseSample sample_response(const PolicyParams& params,
                               const VariantPrompt& prompt, Rng& rng);

double logprob(const PolicyParams& params, const VariantPrompt& prompt,
               int option_index);

/// d log pi(option | prompt) / d theta, closed form:
/// (x_j - sum_k p_k x_k) / temperature with x_k = stimulus * feature_k.
std::vector<double> grad_logprob(const PolicyParams& params,
                                 const VariantPrompt& prompt,
                                 int option_index);

/// KL(p_new || p_ref) over one option set. Terms with p_new = 0 contribute
/// zero; a zero in p_ref under positive p_new raises NumericalError.
double kl_divergence(const std::vector<double>& p_new,
                     const std::vector<double>& p_ref);

// Text checkpoint: header comment, dimension, temperature, then theta
// components in round-trip-exact decimal.
void save_checkpoint(const PolicyParams& params, const std::string& path,
                     const std::string& header_comment);
PolicyParams load_checkpoint(const std::string& path);

}  // namespace grposim

#endif  // GRPOSIM_POLICY_HPP_

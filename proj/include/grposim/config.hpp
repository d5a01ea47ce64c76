#ifndef GRPOSIM_CONFIG_HPP_
#define GRPOSIM_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "grposim/augment.hpp"
#include "grposim/curriculum.hpp"
#include "grposim/dataset.hpp"
#include "grposim/grpo.hpp"

namespace grposim {

struct CurriculumSettings {
  bool enabled = false;
  int num_bins = 4;
  BinStrategy strategy = BinStrategy::Quantile;
  double threshold = 0.7;
  int window = 50;
  double replay_fraction = 0.1;
};

// Everything a run needs, assembled from a flat key-value config file plus
// command-line overrides. A run is a pure function of this struct.
struct RunConfig {
  std::uint64_t seed = 42;

  std::string dataset_path;  // exactly one of dataset_path / synth
  bool use_synth = false;
  SynthSpec synth;
  std::uint64_t synth_seed = 42;
  double min_difficulty = -2.0;  // optional S(q) filters on the loaded set
  double max_difficulty = 2.0;

  std::string provider_kind = "hash";  // hash | table
  std::uint64_t provider_seed = 7;
  std::string provider_table;
  std::string score_mode = "features";  // features | provider

  double temperature = 1.0;
  GrpoConfig grpo;
  AugmentConfig augment;
  std::string template_file;
  CurriculumSettings curriculum;
  int curve_window = 50;
  int eval_samples = 5;
};

// `key = value` lines; '#' lines are comments. Returns pairs in file order.
std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path);

// Applies entries onto defaults; unknown keys raise ConfigError.
RunConfig build_run_config(
    const std::vector<std::pair<std::string, std::string>>& entries);

void validate_run_config(const RunConfig& cfg);

// Sorted `key = value` dump of every setting; hashing it identifies the run.
std::string canonical_config_text(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);
std::string output_header(const RunConfig& cfg);  // "# config_hash=... seed=..."

}  // namespace grposim

#endif  // GRPOSIM_CONFIG_HPP_

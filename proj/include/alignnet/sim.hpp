#pragma once

#include <string>
#include <utility>
#include <vector>

#include "alignnet/cubic.hpp"
#include "alignnet/dataset.hpp"

namespace alignnet {

// One synthetic listening experiment.  Scores live on [1, 5]; severity
// controls how far the experiment's score scale is warped away from the
// reference scale.
struct ExperimentSpec {
  std::string name;
  int n_files = 0;
  int votes_per_file = 0;
  double severity = 0.0;
  double vote_noise_sd = 0.5;
  double feature_noise_sd = 0.05;
  double condition_lo = 1.0;
  double condition_hi = 5.0;
  bool is_reference = false;
  // Fraction of this experiment's files whose latent quality is copied from
  // the reference experiment ("the same recording rated in both tests").
  double common_fraction = 0.0;

  void validate() const;
};

struct SimConfig {
  std::uint64_t seed = 0;
  int feature_dim = 0;
  std::vector<ExperimentSpec> experiments;

  void validate() const;
};

// The 4-experiment desk benchmark: one clean reference plus three
// experiments with increasingly warped scales, overlapping files, and the
// vote-count contrast.
SimConfig default_benchmark_config();

// Random strictly increasing cubic with p(s) = s + severity * q(s).
// q is drawn from the seed alone, so for a fixed seed the deviation scales
// linearly with severity; severity 0 returns the exact identity and
// severity 1 always deviates by at least 2.5 somewhere on [1, 5] while
// keeping p([1,5]) inside [0.5, 5.5].
MonotoneCubic make_distortion(double severity, std::uint64_t seed);

// Uniform latent quality draws over the experiment's condition range.
std::vector<double> sample_latent(const ExperimentSpec& spec,
                                  std::uint64_t seed);

// Mean of votes_per_file Normal(distortion(latent), vote_noise_sd) draws,
// clipped to [1, 5].
double simulate_votes(double latent, const ExperimentSpec& spec,
                      const MonotoneCubic& distortion, RngStream& rng);

// Fixed nonlinear embedding of the latent value plus per-experiment noise.
// The noiseless part depends only on the latent, never on the experiment,
// which is what makes cross-experiment file sharing meaningful.
std::vector<double> feature_core(double latent, int feature_dim);
Matrix synthesize_features(std::span<const double> latents, int feature_dim,
                           double noise_sd, RngStream& rng);

// Everything the training side must never see: latents, the generating
// distortions, and which files are shared with the reference.
struct OracleDataset {
  std::string name;
  double severity = 0.0;
  MonotoneCubic distortion;
  std::vector<double> latents;                 // aligned with dataset rows
  std::vector<std::pair<int, int>> common;     // (own row, reference row)
};

struct OracleBundle {
  std::uint64_t seed = 0;
  std::vector<OracleDataset> datasets;

  const OracleDataset& for_dataset(const std::string& name) const;
};

struct SimResult {
  DatasetCollection collection;
  OracleBundle oracle;
};

// Generates the full benchmark: latents (with common-file injection),
// votes, features, deterministic splits, and the oracle bundle.
SimResult build_collection(const SimConfig& config);

}  // namespace alignnet

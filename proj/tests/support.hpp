#pragma once

// Shared fixtures for the unit tests: scratch directories that clean up
// after themselves and small deterministic dataset collections.

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "alignnet/dataset.hpp"
#include "alignnet/rng.hpp"
#include "alignnet/sim.hpp"

namespace testsupport {

// Unique temp directory, removed on destruction.
struct ScratchDir {
  std::filesystem::path path;

  ScratchDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("alignnet-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

// A dataset with a learnable linear rule y = 3 + x0 - 0.5 * x1 and a little
// noise.  All rows land in both the train and validation splits so loop
// tests see clean convergence; the last quarter doubles as the test split.
inline alignnet::RatedDataset linear_dataset(const std::string& name,
                                             bool is_reference, int rows,
                                             int feature_dim,
                                             std::uint64_t seed,
                                             double noise_sd = 0.0) {
  alignnet::RngStream rng(seed);
  alignnet::RatedDataset ds;
  ds.name = name;
  ds.is_reference = is_reference;
  ds.features = alignnet::Matrix(rows, feature_dim);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < feature_dim; ++j) {
      ds.features.at(i, j) = rng.uniform(-1.0, 1.0);
    }
    double y = 3.0 + ds.features.at(i, 0) - 0.5 * ds.features.at(i, 1);
    if (noise_sd > 0.0) y += rng.normal(0.0, noise_sd);
    ds.scores.push_back(y);
    char id[16];
    std::snprintf(id, sizeof(id), "f%05d", i);
    ds.file_ids.push_back(id);
  }
  for (int i = 0; i < rows; ++i) {
    ds.train_idx.push_back(i);
    ds.val_idx.push_back(i);
    if (i >= rows - rows / 4) ds.test_idx.push_back(i);
  }
  return ds;
}

// Two datasets with byte-identical inputs but contradictory targets: the
// reference labels every row 2.0, the other labels the same rows 4.0.  A
// single shared net must compromise; a per-dataset alignment map need not.
inline alignnet::DatasetCollection conflict_pair(int rows = 48,
                                                 int feature_dim = 4,
                                                 std::uint64_t seed = 99) {
  alignnet::DatasetCollection c;
  alignnet::RatedDataset a =
      linear_dataset("low", true, rows, feature_dim, seed);
  alignnet::RatedDataset b = a;
  b.name = "high";
  b.is_reference = false;
  for (int i = 0; i < rows; ++i) {
    a.scores[static_cast<std::size_t>(i)] = 2.0;
    b.scores[static_cast<std::size_t>(i)] = 4.0;
  }
  c.datasets = {a, b};
  c.reference_index = 0;
  c.feature_dim = feature_dim;
  c.validate();
  return c;
}

// Small simulated corpus (one reference study, two distorted studies) for
// end-to-end trainer tests.  ~300 files total, so full regimens stay fast.
inline alignnet::SimResult tiny_corpus(std::uint64_t seed = 11) {
  alignnet::SimConfig cfg;
  cfg.seed = seed;
  cfg.feature_dim = 6;
  alignnet::ExperimentSpec ref;
  ref.name = "base";
  ref.n_files = 160;
  ref.votes_per_file = 8;
  ref.severity = 0.0;
  ref.is_reference = true;
  alignnet::ExperimentSpec warp;
  warp.name = "warp";
  warp.n_files = 70;
  warp.votes_per_file = 6;
  warp.severity = 0.7;
  warp.common_fraction = 0.2;
  alignnet::ExperimentSpec drift;
  drift.name = "drift";
  drift.n_files = 70;
  drift.votes_per_file = 6;
  drift.severity = 0.4;
  drift.condition_lo = 1.5;
  drift.condition_hi = 4.5;
  cfg.experiments = {ref, warp, drift};
  cfg.validate();
  return alignnet::build_collection(cfg);
}

}  // namespace testsupport

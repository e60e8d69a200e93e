#pragma once

#include <string>
#include <vector>

#include "alignnet/matrix.hpp"
#include "alignnet/rng.hpp"

namespace alignnet {

// One rated listening experiment as the trainers see it: features plus the
// subjective score per file.  Latent quality values deliberately do not
// appear here; they live only in the simulator's oracle bundle.
struct RatedDataset {
  std::string name;
  bool is_reference = false;
  Matrix features;                    // n x feature_dim
  std::vector<double> scores;         // length n
  std::vector<std::string> file_ids;  // length n

  std::vector<int> train_idx;
  std::vector<int> val_idx;
  std::vector<int> test_idx;

  int size() const { return features.rows; }
};

struct DatasetCollection {
  std::vector<RatedDataset> datasets;
  int reference_index = -1;
  int feature_dim = 0;

  int count() const { return static_cast<int>(datasets.size()); }
  const RatedDataset& reference() const { return datasets[reference_index]; }
  int index_of(const std::string& name) const;
  void validate() const;  // exactly one reference, consistent widths
};

// Deterministic 80/10/10 split: a seeded shuffle of the row order, with
// floor(n/10) rows each for test and validation and the rest for training.
// Index vectors come back sorted.
void assign_splits(RatedDataset& ds, std::uint64_t seed);

// Gathers the rows named by idx.
Matrix gather_rows(const Matrix& m, const std::vector<int>& idx);
std::vector<double> gather(const std::vector<double>& v,
                           const std::vector<int>& idx);

}  // namespace alignnet

#include "alignnet/dataset.hpp"

#include <algorithm>
#include <numeric>

namespace alignnet {

int DatasetCollection::index_of(const std::string& name) const {
  for (int i = 0; i < count(); ++i) {
    if (datasets[static_cast<std::size_t>(i)].name == name) return i;
  }
  throw ConfigError("unknown dataset: " + name);
}

void DatasetCollection::validate() const {
  if (datasets.empty()) throw ConfigError("collection has no datasets");
  int refs = 0;
  for (int i = 0; i < count(); ++i) {
    const RatedDataset& d = datasets[static_cast<std::size_t>(i)];
    if (d.is_reference) {
      ++refs;
      if (reference_index != i) {
        throw ConfigError("reference_index does not match reference flag");
      }
    }
    if (d.features.cols != feature_dim) {
      throw ShapeError("dataset " + d.name + ": feature width mismatch");
    }
    if (d.features.rows != static_cast<int>(d.scores.size()) ||
        d.features.rows != static_cast<int>(d.file_ids.size())) {
      throw ShapeError("dataset " + d.name + ": row count mismatch");
    }
  }
  if (refs != 1) throw ConfigError("collection must have exactly one reference");
}

void assign_splits(RatedDataset& ds, std::uint64_t seed) {
  int n = ds.size();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(seed);
  rng.shuffle(order);
  int n_test = n / 10;
  int n_val = n / 10;
  ds.test_idx.assign(order.begin(), order.begin() + n_test);
  ds.val_idx.assign(order.begin() + n_test, order.begin() + n_test + n_val);
  ds.train_idx.assign(order.begin() + n_test + n_val, order.end());
  std::sort(ds.test_idx.begin(), ds.test_idx.end());
  std::sort(ds.val_idx.begin(), ds.val_idx.end());
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
}

Matrix gather_rows(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<int>(idx.size()), m.cols);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy_n(m.data.begin() +
                    static_cast<std::size_t>(idx[r]) * m.cols,
                m.cols, out.data.begin() + r * m.cols);
  }
  return out;
}

std::vector<double> gather(const std::vector<double>& v,
                           const std::vector<int>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out[i] = v[static_cast<std::size_t>(idx[i])];
  }
  return out;
}

}  // namespace alignnet

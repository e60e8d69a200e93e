#include "alignnet/model.hpp"

#include <algorithm>

namespace alignnet {

DatasetIndicator AlignModel::indicator(int index) const {
  if (index < 0 || index >= dataset_count()) {
    throw IndicatorError("dataset index out of range");
  }
  return {index, index == reference_index};
}

void AlignModel::validate() const {
  if (dataset_names.empty()) throw ConfigError("model has no datasets");
  if (reference_index < 0 || reference_index >= dataset_count()) {
    throw IndicatorError("reference index out of range");
  }
  if (head.embeddings.dataset_count() != dataset_count()) {
    throw ShapeError("embedding table row count != dataset count");
  }
  if (head.embeddings.dim != head.embeddings.rows.cols) {
    throw ShapeError("embedding table dim mismatch");
  }
  if (head.mlp.layout.input_width() != 1 + head.embeddings.dim) {
    throw ShapeError("alignment head input width must be 1 + embedding dim");
  }
  if (head.mlp.layout.output_width() != 1) {
    throw ShapeError("alignment head must produce a single score");
  }
}

AlignModel make_align_model(ParamVector audio, int embedding_dim,
                            const std::vector<int>& head_hidden,
                            const std::vector<std::string>& dataset_names,
                            int reference_index, std::uint64_t seed) {
  AlignModel m;
  m.audio = std::move(audio);
  m.reference_index = reference_index;
  m.dataset_names = dataset_names;
  Layout head_layout = Layout::mlp(1 + embedding_dim, head_hidden, 1);
  RngStream mlp_rng(derive_seed(seed, "head/mlp"));
  m.head.mlp = ParamVector::glorot(head_layout, mlp_rng);
  m.head.embeddings.dim = embedding_dim;
  m.head.embeddings.rows =
      Matrix(static_cast<int>(dataset_names.size()), embedding_dim);
  RngStream emb_rng(derive_seed(seed, "head/embeddings"));
  for (double& x : m.head.embeddings.rows.data) {
    x = emb_rng.uniform(-0.5, 0.5);
  }
  m.validate();
  return m;
}

std::vector<double> audionet_estimate(const AlignModel& m,
                                      const Matrix& features) {
  return mlp_forward(m.audio, features);
}

namespace {

void check_indicator(const AlignModel& m, const DatasetIndicator& ind) {
  if (ind.index < 0 || ind.index >= m.dataset_count()) {
    throw IndicatorError("dataset index out of range");
  }
  if (ind.is_reference != (ind.index == m.reference_index)) {
    throw IndicatorError("indicator reference flag inconsistent with model");
  }
}

}  // namespace

// Builds the head input block for one dataset: column 0 is the intermediate
// score, the rest is that dataset's embedding row repeated per sample.
Matrix head_inputs(const AlignModel& m, std::span<const double> intermediate,
                   int dataset_index) {
  int n = static_cast<int>(intermediate.size());
  int dim = m.head.embeddings.dim;
  Matrix z(n, 1 + dim);
  std::span<const double> emb = m.head.embeddings.rows.row(dataset_index);
  for (int r = 0; r < n; ++r) {
    double* zr = z.data.data() + static_cast<std::size_t>(r) * z.cols;
    zr[0] = intermediate[static_cast<std::size_t>(r)];
    std::copy(emb.begin(), emb.end(), zr + 1);
  }
  return z;
}

std::vector<double> align(const AlignModel& m,
                          std::span<const double> intermediate,
                          const DatasetIndicator& ind) {
  check_indicator(m, ind);
  if (ind.is_reference) {
    return {intermediate.begin(), intermediate.end()};
  }
  return mlp_forward(m.head.mlp, head_inputs(m, intermediate, ind.index));
}

std::vector<double> alignnet_forward(const AlignModel& m,
                                     const Matrix& features,
                                     const DatasetIndicator& ind) {
  return align(m, audionet_estimate(m, features), ind);
}

AlignmentCurve sample_alignment_curve(const AlignModel& m,
                                      const DatasetIndicator& ind,
                                      std::span<const double> grid) {
  check_indicator(m, ind);
  if (grid.empty()) throw ShapeError("alignment curve grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] < grid[i - 1]) {
      throw ShapeError("alignment curve grid must be sorted ascending");
    }
  }
  AlignmentCurve c;
  c.dataset_name = m.dataset_names[static_cast<std::size_t>(ind.index)];
  c.input.assign(grid.begin(), grid.end());
  c.output = align(m, c.input, ind);
  return c;
}

int alignment_head_param_count(const AlignModel& m) {
  return m.head.mlp.layout.param_count() +
         m.head.embeddings.rows.rows * m.head.embeddings.rows.cols;
}

int total_param_count(const AlignModel& m) {
  return m.audio.layout.param_count() + alignment_head_param_count(m);
}

AlignModel Checkpoint::to_model() const {
  if (kind != "alignnet" || !head.has_value()) {
    throw ConfigError("checkpoint does not contain an alignment model");
  }
  AlignModel m;
  m.audio = audio;
  m.head = *head;
  m.reference_index = reference_index;
  m.dataset_names = dataset_names;
  m.validate();
  return m;
}

}  // namespace alignnet

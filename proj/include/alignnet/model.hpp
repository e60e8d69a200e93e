#pragma once

#include <optional>
#include <string>
#include <vector>

#include "alignnet/cubic.hpp"
#include "alignnet/dataset.hpp"
#include "alignnet/net.hpp"

namespace alignnet {

// Which dataset a batch of scores belongs to.  The reference flag is what
// gates the identity bypass, so the two fields must agree with the owning
// model's reference index.
struct DatasetIndicator {
  int index = 0;
  bool is_reference = false;
};

// Per-dataset embedding rows consumed by the alignment head.
struct EmbeddingTable {
  int dim = 0;
  Matrix rows;  // dataset_count x dim

  int dataset_count() const { return rows.rows; }
};

struct AlignmentHead {
  ParamVector mlp;           // input width 1 + embedding dim, one output
  EmbeddingTable embeddings;
};

// Full model: a score estimator (AudioNet role) plus a small alignment head
// that maps (intermediate score, dataset embedding) onto each dataset's own
// scale.  Reference-dataset scores bypass the head entirely, bit for bit.
struct AlignModel {
  ParamVector audio;
  AlignmentHead head;
  int reference_index = 0;
  std::vector<std::string> dataset_names;

  int dataset_count() const { return static_cast<int>(dataset_names.size()); }
  DatasetIndicator indicator(int index) const;
  void validate() const;
};

// Builds a model with a freshly initialised head around existing audio
// parameters.  Embeddings are uniform in +-0.5; the head MLP uses the same
// Glorot rule as everything else.
AlignModel make_align_model(ParamVector audio, int embedding_dim,
                            const std::vector<int>& head_hidden,
                            const std::vector<std::string>& dataset_names,
                            int reference_index, std::uint64_t seed);

// Intermediate (pre-alignment) scores: plain forward through the audio net.
std::vector<double> audionet_estimate(const AlignModel& m,
                                      const Matrix& features);

// Maps intermediate scores onto the indicated dataset's scale.  For the
// reference indicator this returns the input unchanged (bitwise); otherwise
// each score is concatenated with the dataset's embedding row and pushed
// through the head MLP.
std::vector<double> align(const AlignModel& m,
                          std::span<const double> intermediate,
                          const DatasetIndicator& ind);

// audionet_estimate followed by align.
std::vector<double> alignnet_forward(const AlignModel& m,
                                     const Matrix& features,
                                     const DatasetIndicator& ind);

struct AlignmentCurve {
  std::string dataset_name;
  std::vector<double> input;   // intermediate-score grid
  std::vector<double> output;  // aligned scores
  // Monotone cubic summary of the sampled map, filled by the metrics side.
  std::optional<MonotoneCubic> fitted;
};

// Samples the alignment map on a grid of intermediate scores (must be
// non-decreasing and non-empty).
AlignmentCurve sample_alignment_curve(const AlignModel& m,
                                      const DatasetIndicator& ind,
                                      std::span<const double> grid);

// Head input block for one dataset: column 0 holds the intermediate scores,
// the remaining columns repeat that dataset's embedding row.  Exposed for
// the trainer, which needs gradients w.r.t. this block.
Matrix head_inputs(const AlignModel& m, std::span<const double> intermediate,
                   int dataset_index);

// Head size bookkeeping: MLP parameters plus embedding entries.  Reported in
// checkpoints and eval output; the acceptance suite audits it.
int alignment_head_param_count(const AlignModel& m);
int total_param_count(const AlignModel& m);

// Serializable training product.  kind "audio" carries only the score net
// (pretraining and the head-free regimens); kind "alignnet" carries the
// full model.
struct Checkpoint {
  std::string kind;  // "audio" | "alignnet"
  std::vector<std::string> dataset_names;
  int reference_index = 0;
  ParamVector audio;
  std::optional<AlignmentHead> head;

  AlignModel to_model() const;  // kind must be "alignnet"
};

}  // namespace alignnet

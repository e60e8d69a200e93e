#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "alignnet/dataset.hpp"
#include "alignnet/model.hpp"
#include "alignnet/net.hpp"

namespace alignnet {

enum class RegimenKind { Individual, All, AllBal, AllMdf, AllMdfAlignnet };

RegimenKind regimen_from_string(const std::string& s);
std::string regimen_to_string(RegimenKind k);

struct TrainConfig {
  int epochs_pretrain = 300;
  int epochs_finetune = 300;
  int freeze_epochs = 1;   // audio net frozen for this many finetune epochs
  int batch_size = 64;
  double step_size = 1e-3;
  double r_th = 0.6;       // training-LCC gate for the scale/shift loss
  int patience = 30;       // epochs without validation improvement
  std::uint64_t seed = 1;

  // Desk-scale architecture defaults.
  std::vector<int> audio_hidden = {64, 64, 32};
  int embedding_dim = 10;
  std::vector<int> head_hidden = {16, 16, 16, 16, 16};

  void validate() const;
};

// Per-dataset affine correction fitted once per epoch by the bias-aware
// loss.  Estimates enter the loss as a * estimate + b; identity means the
// correction is inactive.
struct ScaleShift {
  double a = 1.0;
  double b = 0.0;
  bool degenerate = false;  // estimator variance was ~0; pinned to identity

  bool is_identity() const { return a == 1.0 && b == 0.0; }
};

// Least squares over (target - (a * estimate + b))^2.  Degenerate estimate
// variance yields identity with the flag set rather than an error.
ScaleShift ls_fit_scale_shift(std::span<const double> targets,
                              std::span<const double> estimates);

// Mean over datasets of the per-dataset MSE, so each dataset counts equally
// regardless of its size.  Duplicating every sample of one dataset a
// power-of-two number of times reproduces the value bit-for-bit.
double weighted_loss(const std::vector<std::vector<double>>& predictions,
                     const std::vector<std::vector<double>>& targets);

// Gradient of the same loss for a bare score net: per-dataset tree-reduced
// backward passes merged in dataset order.  Same duplication guarantee.
BackwardResult weighted_loss_backward(const ParamVector& p,
                                      const std::vector<Batch>& batches);

struct EpochRecord {
  int epoch = 0;  // 1-based
  std::vector<double> per_dataset_train_loss;
  double val_weighted_loss = 0.0;
  double train_lcc = 0.0;      // pooled, raw (pre-correction) estimates
  bool frozen = false;         // audio net held fixed during this epoch
  bool bal_active = false;     // corrections in effect after this epoch's refit
  std::uint64_t audio_hash = 0;
  std::vector<ScaleShift> transforms;  // empty unless the BAL gate is on
};

struct BareTrainResult {
  ParamVector audio;  // best-validation parameters
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  std::vector<std::string> dataset_names;
  int reference_index = -1;
};

struct AlignTrainResult {
  AlignModel model;  // best-validation parameters
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

// Trains a fresh score net on the reference dataset alone.
BareTrainResult pretrain(const Layout& audio_layout,
                         const DatasetCollection& collection,
                         const TrainConfig& config);

// Same loop on an arbitrary single dataset (per-dataset baselines).
BareTrainResult train_individual(const Layout& audio_layout,
                                 const DatasetCollection& collection,
                                 int dataset_index, const TrainConfig& config);

// Pooled training over all datasets with the size-agnostic loss.
BareTrainResult train_conventional(const Layout& audio_layout,
                                   const DatasetCollection& collection,
                                   const TrainConfig& config);

// Pooled training with per-epoch least-squares scale/shift corrections in
// the loss, gated on pooled training LCC > r_th (reference stays identity).
// With r_th = 1 the gate never opens and the run matches train_conventional
// step for step.
BareTrainResult train_bal(const Layout& audio_layout,
                          const DatasetCollection& collection,
                          const TrainConfig& config);

// Multi-dataset finetuning of a pretrained score net over all datasets
// (reference included).  With with_alignnet, an alignment head is attached
// and the audio net is frozen for the first freeze_epochs epochs; optimizer
// state never carries over from pretraining.
struct MdfResult {
  std::optional<BareTrainResult> bare;    // with_alignnet == false
  std::optional<AlignTrainResult> align;  // with_alignnet == true
};

MdfResult finetune_mdf(const BareTrainResult& pretrained,
                       const DatasetCollection& collection,
                       const TrainConfig& config, bool with_alignnet);

}  // namespace alignnet

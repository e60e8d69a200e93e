#include "alignnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "alignnet/metrics.hpp"

namespace alignnet {

RegimenKind regimen_from_string(const std::string& s) {
  if (s == "individual") return RegimenKind::Individual;
  if (s == "all") return RegimenKind::All;
  if (s == "all-bal") return RegimenKind::AllBal;
  if (s == "all-mdf") return RegimenKind::AllMdf;
  if (s == "all-mdf-alignnet") return RegimenKind::AllMdfAlignnet;
  throw ConfigError("unknown regimen: " + s);
}

std::string regimen_to_string(RegimenKind k) {
  switch (k) {
    case RegimenKind::Individual: return "individual";
    case RegimenKind::All: return "all";
    case RegimenKind::AllBal: return "all-bal";
    case RegimenKind::AllMdf: return "all-mdf";
    case RegimenKind::AllMdfAlignnet: return "all-mdf-alignnet";
  }
  throw ConfigError("unknown regimen kind");
}

void TrainConfig::validate() const {
  if (epochs_pretrain < 1 || epochs_finetune < 1) {
    throw ConfigError("epoch budgets must be >= 1");
  }
  if (freeze_epochs < 0) throw ConfigError("freeze_epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(step_size > 0.0)) throw ConfigError("step_size must be positive");
  // r_th = 1 is allowed: the strict > gate then never opens, which is the
  // documented way to disable the correction.
  if (!(r_th > 0.0) || r_th > 1.0) throw ConfigError("r_th must be in (0, 1]");
  if (patience < 0) throw ConfigError("patience must be >= 0");
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
  if (audio_hidden.empty() || head_hidden.empty()) {
    throw ConfigError("hidden layer lists must be non-empty");
  }
}

ScaleShift ls_fit_scale_shift(std::span<const double> targets,
                              std::span<const double> estimates) {
  if (targets.size() != estimates.size()) {
    throw ShapeError("ls_fit_scale_shift: length mismatch");
  }
  if (targets.size() < 2) {
    throw ShapeError("ls_fit_scale_shift: need at least 2 points");
  }
  double n = static_cast<double>(targets.size());
  double me = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    me += estimates[i];
    mt += targets[i];
  }
  me /= n;
  mt /= n;
  double see = 0.0, set = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    double de = estimates[i] - me;
    see += de * de;
    set += de * (targets[i] - mt);
  }
  if (see / n < 1e-18) {
    ScaleShift s;
    s.degenerate = true;
    return s;
  }
  ScaleShift s;
  s.a = set / see;
  s.b = mt - s.a * me;
  return s;
}

double weighted_loss(const std::vector<std::vector<double>>& predictions,
                     const std::vector<std::vector<double>>& targets) {
  if (predictions.size() != targets.size()) {
    throw ShapeError("weighted_loss: dataset count mismatch");
  }
  if (predictions.empty()) throw ShapeError("weighted_loss: no datasets");
  double sum = 0.0;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    sum += mse(predictions[j], targets[j]);
  }
  return sum / static_cast<double>(predictions.size());
}

BackwardResult weighted_loss_backward(const ParamVector& p,
                                      const std::vector<Batch>& batches) {
  if (batches.empty()) throw ShapeError("weighted_loss_backward: no batches");
  double w = 1.0 / static_cast<double>(batches.size());
  BackwardResult total;
  total.grads.values.assign(
      static_cast<std::size_t>(p.layout.param_count()), 0.0);
  for (const Batch& b : batches) {
    BackwardResult r = backward(p, b, w);
    total.loss += r.loss;
    for (std::size_t i = 0; i < total.grads.values.size(); ++i) {
      total.grads.values[i] += r.grads.values[i];
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Internal training machinery.
// ---------------------------------------------------------------------------

namespace {

struct DataView {
  int collection_index = 0;
  std::string name;
  bool is_reference = false;
  Matrix x_train;
  std::vector<double> y_train;
  Matrix x_val;
  std::vector<double> y_val;

  int n_train() const { return x_train.rows; }
};

std::vector<DataView> build_views(const DatasetCollection& c,
                                  const std::vector<int>& indices) {
  std::vector<DataView> views;
  for (int idx : indices) {
    const RatedDataset& d = c.datasets[static_cast<std::size_t>(idx)];
    if (d.train_idx.empty() || d.val_idx.empty()) {
      throw ConfigError("dataset " + d.name + " has no train/val split");
    }
    DataView v;
    v.collection_index = idx;
    v.name = d.name;
    v.is_reference = d.is_reference;
    v.x_train = gather_rows(d.features, d.train_idx);
    v.y_train = gather(d.scores, d.train_idx);
    v.x_val = gather_rows(d.features, d.val_idx);
    v.y_val = gather(d.scores, d.val_idx);
    views.push_back(std::move(v));
  }
  return views;
}

std::vector<int> all_indices(const DatasetCollection& c) {
  std::vector<int> idx(static_cast<std::size_t>(c.count()));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

// Draws fixed-size minibatches from a reshuffled row order; the tail short
// of a full batch is dropped and the order reshuffled.
class BatchSampler {
 public:
  BatchSampler(const DataView& view, int batch_size, std::uint64_t seed)
      : view_(view),
        batch_(std::min(batch_size, view.n_train())),
        rng_(seed),
        order_(static_cast<std::size_t>(view.n_train())) {
    std::iota(order_.begin(), order_.end(), 0);
    rng_.shuffle(order_);
  }

  Batch next() {
    if (cursor_ + static_cast<std::size_t>(batch_) > order_.size()) {
      rng_.shuffle(order_);
      cursor_ = 0;
    }
    Batch b;
    b.dataset_index = view_.collection_index;
    b.inputs = Matrix(batch_, view_.x_train.cols);
    b.targets.resize(static_cast<std::size_t>(batch_));
    for (int r = 0; r < batch_; ++r) {
      int src = order_[cursor_ + static_cast<std::size_t>(r)];
      std::copy_n(view_.x_train.data.begin() +
                      static_cast<std::size_t>(src) * view_.x_train.cols,
                  view_.x_train.cols,
                  b.inputs.data.begin() +
                      static_cast<std::size_t>(r) * b.inputs.cols);
      b.targets[static_cast<std::size_t>(r)] =
          view_.y_train[static_cast<std::size_t>(src)];
    }
    cursor_ += static_cast<std::size_t>(batch_);
    return b;
  }

 private:
  const DataView& view_;
  int batch_;
  RngStream rng_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
};

constexpr int kLeafRows = 64;

Matrix slice_rows(const Matrix& m, int lo, int hi) {
  Matrix out(hi - lo, m.cols);
  std::copy(m.data.begin() + static_cast<std::size_t>(lo) * m.cols,
            m.data.begin() + static_cast<std::size_t>(hi) * m.cols,
            out.data.begin());
  return out;
}

// Tree-reduced backward for a bare net under an affine output correction:
// loss contribution sum over rows of (a*f(x) + b - y)^2 (times the caller's
// delta_scale for gradients).  Only invoked once the correction gate is
// open, so the identity path never touches this code.
double reduce_affine_backward(const ParamVector& p, const Matrix& X,
                              std::span<const double> y, ScaleShift t,
                              double delta_scale, int lo, int hi,
                              std::vector<double>& grad_out) {
  grad_out.assign(static_cast<std::size_t>(p.layout.param_count()), 0.0);
  int n = hi - lo;
  if (n <= kLeafRows) {
    Matrix xb = slice_rows(X, lo, hi);
    MlpTrace trace;
    Matrix out = mlp_forward_matrix(p, xb, &trace);
    std::vector<double> sq(static_cast<std::size_t>(n));
    Matrix dout(n, 1);
    for (int r = 0; r < n; ++r) {
      double corrected = t.a * out.data[static_cast<std::size_t>(r)] + t.b;
      double d = corrected - y[static_cast<std::size_t>(lo + r)];
      sq[static_cast<std::size_t>(r)] = d * d;
      dout.data[static_cast<std::size_t>(r)] = delta_scale * d * t.a;
    }
    mlp_backward_matrix(p, trace, dout, grad_out);
    return pairwise_sum(sq);
  }
  int mid = lo + (n + 1) / 2;
  double s1 =
      reduce_affine_backward(p, X, y, t, delta_scale, lo, mid, grad_out);
  std::vector<double> right;
  double s2 =
      reduce_affine_backward(p, X, y, t, delta_scale, mid, hi, right);
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad_out[i] += right[i];
  return s1 + s2;
}

struct ComposedGrads {
  std::vector<double> audio;
  std::vector<double> head_mlp;
  std::vector<double> emb_row;
  double sq_sum = 0.0;
};

// Tree-reduced backward through head and audio net for one (non-reference)
// dataset.  Reference batches never come here; their gradients flow through
// the plain audio backward because the bypass is structural.
ComposedGrads reduce_composed_backward(const AlignModel& m, const Matrix& X,
                                       std::span<const double> y,
                                       int dataset_index, double delta_scale,
                                       int lo, int hi) {
  int n = hi - lo;
  if (n <= kLeafRows) {
    ComposedGrads g;
    g.audio.assign(static_cast<std::size_t>(m.audio.layout.param_count()),
                   0.0);
    g.head_mlp.assign(
        static_cast<std::size_t>(m.head.mlp.layout.param_count()), 0.0);
    g.emb_row.assign(static_cast<std::size_t>(m.head.embeddings.dim), 0.0);

    Matrix xb = slice_rows(X, lo, hi);
    MlpTrace audio_trace;
    Matrix inter = mlp_forward_matrix(m.audio, xb, &audio_trace);
    Matrix z = head_inputs(
        m, std::span<const double>(inter.data.data(), inter.data.size()),
        dataset_index);
    MlpTrace head_trace;
    Matrix out = mlp_forward_matrix(m.head.mlp, z, &head_trace);

    std::vector<double> sq(static_cast<std::size_t>(n));
    Matrix dout(n, 1);
    for (int r = 0; r < n; ++r) {
      double d = out.data[static_cast<std::size_t>(r)] -
                 y[static_cast<std::size_t>(lo + r)];
      sq[static_cast<std::size_t>(r)] = d * d;
      dout.data[static_cast<std::size_t>(r)] = delta_scale * d;
    }
    Matrix dz = mlp_backward_matrix(m.head.mlp, head_trace, dout, g.head_mlp);

    Matrix dinter(n, 1);
    int dim = m.head.embeddings.dim;
    for (int r = 0; r < n; ++r) {
      dinter.data[static_cast<std::size_t>(r)] =
          dz.data[static_cast<std::size_t>(r) * dz.cols];
    }
    // Pairwise over rows, like every other parameter reduction.
    std::vector<double> per_row(static_cast<std::size_t>(n));
    for (int k = 0; k < dim; ++k) {
      for (int r = 0; r < n; ++r) {
        per_row[static_cast<std::size_t>(r)] =
            dz.data[static_cast<std::size_t>(r) * dz.cols + 1 + k];
      }
      g.emb_row[static_cast<std::size_t>(k)] = pairwise_sum(per_row);
    }
    mlp_backward_matrix(m.audio, audio_trace, dinter, g.audio);
    g.sq_sum = pairwise_sum(sq);
    return g;
  }
  int mid = lo + (n + 1) / 2;
  ComposedGrads g =
      reduce_composed_backward(m, X, y, dataset_index, delta_scale, lo, mid);
  ComposedGrads r =
      reduce_composed_backward(m, X, y, dataset_index, delta_scale, mid, hi);
  for (std::size_t i = 0; i < g.audio.size(); ++i) g.audio[i] += r.audio[i];
  for (std::size_t i = 0; i < g.head_mlp.size(); ++i) {
    g.head_mlp[i] += r.head_mlp[i];
  }
  for (std::size_t i = 0; i < g.emb_row.size(); ++i) {
    g.emb_row[i] += r.emb_row[i];
  }
  g.sq_sum += r.sq_sum;
  return g;
}

int steps_per_epoch(const std::vector<DataView>& views, int batch_size) {
  int max_n = 0;
  for (const DataView& v : views) max_n = std::max(max_n, v.n_train());
  return (max_n + batch_size - 1) / batch_size;
}

double pooled_lcc_or_nan(const std::vector<double>& est,
                         const std::vector<double>& tgt) {
  try {
    return lcc(est, tgt);
  } catch (const StatError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// Shared epoch-loop skeleton for bare-net regimens.  `bal_enabled` switches
// on the per-epoch scale/shift machinery; until the gate opens the step
// path is literally the conventional one.
BareTrainResult run_bare_loop(ParamVector params,
                              const std::vector<DataView>& views,
                              const TrainConfig& config, int max_epochs,
                              bool bal_enabled, const std::string& phase,
                              int reference_view) {
  config.validate();
  std::size_t n_params = params.values.size();
  Optimizer opt(OptimizerConfig{}, n_params);

  std::vector<BatchSampler> samplers;
  samplers.reserve(views.size());
  for (std::size_t j = 0; j < views.size(); ++j) {
    samplers.emplace_back(views[j], config.batch_size,
                          derive_seed(config.seed, phase + "/shuffle", j));
  }

  int steps = steps_per_epoch(views, config.batch_size);
  double w = 1.0 / static_cast<double>(views.size());

  bool bal_active = false;
  std::vector<ScaleShift> transforms(views.size());

  BareTrainResult result;
  for (const DataView& v : views) result.dataset_names.push_back(v.name);
  result.reference_index = reference_view;

  ParamVector best = params;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int since_improvement = 0;

  std::vector<double> grad(n_params);
  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    for (int s = 0; s < steps; ++s) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t j = 0; j < views.size(); ++j) {
        Batch b = samplers[j].next();
        if (bal_active && !transforms[j].is_identity()) {
          std::vector<double> g;
          double scale = (2.0 * w) / static_cast<double>(b.inputs.rows);
          reduce_affine_backward(params, b.inputs, b.targets, transforms[j],
                                 scale, 0, b.inputs.rows, g);
          for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
        } else {
          BackwardResult r = backward(params, b, w);
          for (std::size_t i = 0; i < grad.size(); ++i) {
            grad[i] += r.grads.values[i];
          }
        }
      }
      opt.step(params.values, grad, config.step_size);
    }

    // Epoch-end bookkeeping on the full splits.
    EpochRecord rec;
    rec.epoch = epoch;
    std::vector<double> pooled_est;
    std::vector<double> pooled_tgt;
    std::vector<std::vector<double>> raw_train(views.size());
    for (std::size_t j = 0; j < views.size(); ++j) {
      raw_train[j] = mlp_forward(params, views[j].x_train);
      pooled_est.insert(pooled_est.end(), raw_train[j].begin(),
                        raw_train[j].end());
      pooled_tgt.insert(pooled_tgt.end(), views[j].y_train.begin(),
                        views[j].y_train.end());
    }
    rec.train_lcc = pooled_lcc_or_nan(pooled_est, pooled_tgt);

    if (bal_enabled) {
      if (!bal_active && std::isfinite(rec.train_lcc) &&
          rec.train_lcc > config.r_th) {
        bal_active = true;  // latches; corrections persist from here on
      }
      if (bal_active) {
        for (std::size_t j = 0; j < views.size(); ++j) {
          if (static_cast<int>(j) == reference_view) continue;  // identity
          transforms[j] = ls_fit_scale_shift(views[j].y_train, raw_train[j]);
          if (transforms[j].degenerate) transforms[j] = ScaleShift{};
        }
      }
      rec.transforms = transforms;
    }
    rec.bal_active = bal_active;

    double val_sum = 0.0;
    for (std::size_t j = 0; j < views.size(); ++j) {
      std::vector<double> est_train = raw_train[j];
      std::vector<double> est_val = mlp_forward(params, views[j].x_val);
      if (bal_active && !transforms[j].is_identity()) {
        for (double& e : est_train) e = transforms[j].a * e + transforms[j].b;
        for (double& e : est_val) e = transforms[j].a * e + transforms[j].b;
      }
      rec.per_dataset_train_loss.push_back(mse(est_train, views[j].y_train));
      val_sum += mse(est_val, views[j].y_val);
    }
    rec.val_weighted_loss = val_sum * w;
    rec.frozen = false;
    rec.audio_hash = hash_values(params.values);
    result.history.push_back(rec);

    if (std::isfinite(rec.val_weighted_loss) &&
        rec.val_weighted_loss < best_val) {
      best_val = rec.val_weighted_loss;
      best = params;
      best_epoch = epoch;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    if (since_improvement >= config.patience) break;
  }

  result.audio = std::move(best);
  result.best_epoch = best_epoch;
  result.best_val_loss = best_val;
  return result;
}

std::vector<double> model_estimates(const AlignModel& m, const Matrix& x,
                                    int dataset_index) {
  return alignnet_forward(m, x, m.indicator(dataset_index));
}

AlignTrainResult run_align_loop(AlignModel model,
                                const std::vector<DataView>& views,
                                const TrainConfig& config) {
  config.validate();
  std::size_t n_audio = model.audio.values.size();
  std::size_t n_mlp = model.head.mlp.values.size();
  std::size_t n_emb = model.head.embeddings.rows.data.size();
  Optimizer audio_opt(OptimizerConfig{}, n_audio);
  Optimizer head_opt(OptimizerConfig{}, n_mlp + n_emb);

  std::vector<BatchSampler> samplers;
  samplers.reserve(views.size());
  for (std::size_t j = 0; j < views.size(); ++j) {
    samplers.emplace_back(views[j], config.batch_size,
                          derive_seed(config.seed, "finetune/shuffle", j));
  }

  int steps = steps_per_epoch(views, config.batch_size);
  double w = 1.0 / static_cast<double>(views.size());

  AlignTrainResult result;
  AlignModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int since_improvement = 0;

  std::vector<double> audio_grad(n_audio);
  std::vector<double> head_grad(n_mlp + n_emb);
  for (int epoch = 1; epoch <= config.epochs_finetune; ++epoch) {
    bool frozen = epoch <= config.freeze_epochs;
    for (int s = 0; s < steps; ++s) {
      std::fill(audio_grad.begin(), audio_grad.end(), 0.0);
      std::fill(head_grad.begin(), head_grad.end(), 0.0);
      for (std::size_t j = 0; j < views.size(); ++j) {
        Batch b = samplers[j].next();
        int ds = views[j].collection_index;
        double scale = (2.0 * w) / static_cast<double>(b.inputs.rows);
        if (ds == model.reference_index) {
          // Bypass: the head never sees reference rows.
          BackwardResult r = backward(model.audio, b, w);
          for (std::size_t i = 0; i < n_audio; ++i) {
            audio_grad[i] += r.grads.values[i];
          }
        } else {
          ComposedGrads g = reduce_composed_backward(
              model, b.inputs, b.targets, ds, scale, 0, b.inputs.rows);
          for (std::size_t i = 0; i < n_audio; ++i) audio_grad[i] += g.audio[i];
          for (std::size_t i = 0; i < n_mlp; ++i) head_grad[i] += g.head_mlp[i];
          std::size_t emb_off =
              n_mlp + static_cast<std::size_t>(ds) *
                          static_cast<std::size_t>(model.head.embeddings.dim);
          for (std::size_t k = 0; k < g.emb_row.size(); ++k) {
            head_grad[emb_off + k] += g.emb_row[k];
          }
        }
      }
      // Pack head parameters (MLP then embedding rows), step, unpack.
      std::vector<double> head_params;
      head_params.reserve(n_mlp + n_emb);
      head_params.insert(head_params.end(), model.head.mlp.values.begin(),
                         model.head.mlp.values.end());
      head_params.insert(head_params.end(),
                         model.head.embeddings.rows.data.begin(),
                         model.head.embeddings.rows.data.end());
      head_opt.step(head_params, head_grad, config.step_size);
      std::copy_n(head_params.begin(), n_mlp, model.head.mlp.values.begin());
      std::copy_n(head_params.begin() + static_cast<std::ptrdiff_t>(n_mlp),
                  n_emb, model.head.embeddings.rows.data.begin());
      if (!frozen) {
        audio_opt.step(model.audio.values, audio_grad, config.step_size);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.frozen = frozen;
    std::vector<double> pooled_est;
    std::vector<double> pooled_tgt;
    double val_sum = 0.0;
    for (std::size_t j = 0; j < views.size(); ++j) {
      int ds = views[j].collection_index;
      std::vector<double> est_train = model_estimates(model, views[j].x_train, ds);
      std::vector<double> est_val = model_estimates(model, views[j].x_val, ds);
      rec.per_dataset_train_loss.push_back(mse(est_train, views[j].y_train));
      val_sum += mse(est_val, views[j].y_val);
      pooled_est.insert(pooled_est.end(), est_train.begin(), est_train.end());
      pooled_tgt.insert(pooled_tgt.end(), views[j].y_train.begin(),
                        views[j].y_train.end());
    }
    rec.val_weighted_loss = val_sum * w;
    rec.train_lcc = pooled_lcc_or_nan(pooled_est, pooled_tgt);
    rec.audio_hash = hash_values(model.audio.values);
    result.history.push_back(rec);

    if (std::isfinite(rec.val_weighted_loss) &&
        rec.val_weighted_loss < best_val) {
      best_val = rec.val_weighted_loss;
      best = model;
      best_epoch = epoch;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    if (since_improvement >= config.patience) break;
  }

  result.model = std::move(best);
  result.best_epoch = best_epoch;
  result.best_val_loss = best_val;
  return result;
}

}  // namespace

BareTrainResult pretrain(const Layout& audio_layout,
                         const DatasetCollection& collection,
                         const TrainConfig& config) {
  collection.validate();
  if (collection.reference_index < 0) {
    throw ConfigError("pretrain: collection has no reference dataset");
  }
  RngStream init_rng(derive_seed(config.seed, "pretrain/init"));
  ParamVector params = ParamVector::glorot(audio_layout, init_rng);
  std::vector<DataView> views =
      build_views(collection, {collection.reference_index});
  return run_bare_loop(std::move(params), views, config,
                       config.epochs_pretrain, false, "pretrain", 0);
}

BareTrainResult train_individual(const Layout& audio_layout,
                                 const DatasetCollection& collection,
                                 int dataset_index,
                                 const TrainConfig& config) {
  if (dataset_index < 0 || dataset_index >= collection.count()) {
    throw ConfigError("train_individual: dataset index out of range");
  }
  RngStream init_rng(derive_seed(config.seed, "individual/init"));
  ParamVector params = ParamVector::glorot(audio_layout, init_rng);
  std::vector<DataView> views = build_views(collection, {dataset_index});
  bool is_ref = collection.datasets[static_cast<std::size_t>(dataset_index)]
                    .is_reference;
  return run_bare_loop(std::move(params), views, config,
                       config.epochs_finetune, false, "individual",
                       is_ref ? 0 : -1);
}

BareTrainResult train_conventional(const Layout& audio_layout,
                                   const DatasetCollection& collection,
                                   const TrainConfig& config) {
  collection.validate();
  RngStream init_rng(derive_seed(config.seed, "pool/init"));
  ParamVector params = ParamVector::glorot(audio_layout, init_rng);
  std::vector<DataView> views = build_views(collection, all_indices(collection));
  return run_bare_loop(std::move(params), views, config,
                       config.epochs_finetune, false, "pool",
                       collection.reference_index);
}

BareTrainResult train_bal(const Layout& audio_layout,
                          const DatasetCollection& collection,
                          const TrainConfig& config) {
  collection.validate();
  RngStream init_rng(derive_seed(config.seed, "pool/init"));
  ParamVector params = ParamVector::glorot(audio_layout, init_rng);
  std::vector<DataView> views = build_views(collection, all_indices(collection));
  return run_bare_loop(std::move(params), views, config,
                       config.epochs_finetune, true, "pool",
                       collection.reference_index);
}

MdfResult finetune_mdf(const BareTrainResult& pretrained,
                       const DatasetCollection& collection,
                       const TrainConfig& config, bool with_alignnet) {
  collection.validate();
  if (pretrained.reference_index < 0 ||
      pretrained.dataset_names.empty() ||
      pretrained.dataset_names[static_cast<std::size_t>(
          pretrained.reference_index)] != collection.reference().name) {
    throw ConfigError(
        "finetune_mdf: checkpoint was not pretrained on this collection's "
        "reference dataset");
  }
  if (pretrained.audio.layout.input_width() != collection.feature_dim) {
    throw ShapeError("finetune_mdf: feature width mismatch");
  }
  std::vector<DataView> views = build_views(collection, all_indices(collection));
  MdfResult result;
  if (!with_alignnet) {
    // Nothing but the audio net is trainable, so the freeze is skipped and
    // this reduces to pooled training from the pretrained weights.
    result.bare = run_bare_loop(pretrained.audio, views, config,
                                config.epochs_finetune, false, "finetune",
                                collection.reference_index);
    return result;
  }
  std::vector<std::string> names;
  for (const RatedDataset& d : collection.datasets) names.push_back(d.name);
  AlignModel model = make_align_model(
      pretrained.audio, config.embedding_dim, config.head_hidden, names,
      collection.reference_index, derive_seed(config.seed, "finetune/head"));
  result.align = run_align_loop(std::move(model), views, config);
  return result;
}

}  // namespace alignnet

#pragma once

#include <span>
#include <vector>

#include "alignnet/common.hpp"
#include "alignnet/matrix.hpp"
#include "alignnet/rng.hpp"

namespace alignnet {

enum class Activation { Linear, Relu };

struct LayerSpec {
  int in_width = 0;
  int out_width = 0;
  Activation act = Activation::Linear;

  bool operator==(const LayerSpec&) const = default;
};

// Describes a dense feed-forward net as a flat list of layers.  Parameters
// for layer k live in one contiguous block: in*out weights (input-major),
// then out biases.
class Layout {
 public:
  Layout() = default;
  explicit Layout(std::vector<LayerSpec> layers);

  // Hidden layers get ReLU, the final layer is linear.
  static Layout mlp(int input_width, const std::vector<int>& hidden,
                    int output_width);

  int layer_count() const { return static_cast<int>(layers_.size()); }
  const LayerSpec& layer(int i) const { return layers_[i]; }
  int param_count() const { return offsets_.empty() ? 0 : offsets_.back(); }
  // -1 when the layout is empty (an empty net passes input through).
  int input_width() const { return layers_.empty() ? -1 : layers_.front().in_width; }
  int output_width() const { return layers_.empty() ? -1 : layers_.back().out_width; }
  int weight_offset(int i) const { return offsets_[i]; }
  int bias_offset(int i) const {
    return offsets_[i] + layers_[i].in_width * layers_[i].out_width;
  }

  bool operator==(const Layout& o) const { return layers_ == o.layers_; }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<int> offsets_;  // offsets_[i] = start of layer i; back() = total
};

struct ParamVector {
  Layout layout;
  std::vector<double> values;

  static ParamVector zeros(const Layout& l);
  // Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static ParamVector glorot(const Layout& l, RngStream& rng);
};

struct GradientVector {
  std::vector<double> values;
};

struct Batch {
  Matrix inputs;
  std::vector<double> targets;
  int dataset_index = 0;
};

// Forward pass.  The matrix form keeps per-layer activations when `trace`
// is given, which backward passes consume.
struct MlpTrace {
  std::vector<Matrix> acts;  // acts[0] = input, acts[k+1] = output of layer k
  std::vector<Matrix> pre;   // pre[k] = pre-activation of layer k
};

Matrix mlp_forward_matrix(const ParamVector& p, const Matrix& inputs,
                          MlpTrace* trace = nullptr);

// One output per input row; requires the layout's output width to be 1
// (or an empty layout with single-column input).
std::vector<double> mlp_forward(const ParamVector& p, const Matrix& inputs);

// Mean squared error via pairwise summation (see matrix.hpp for why).
double mse(std::span<const double> estimates, std::span<const double> targets);

// Gradient of d(loss)/d(output) propagated back through the net described by
// trace; accumulates parameter gradients into grad (+=) and returns
// d(loss)/d(input).
Matrix mlp_backward_matrix(const ParamVector& p, const MlpTrace& trace,
                           const Matrix& dout, std::span<double> grad);

struct BackwardResult {
  double loss = 0.0;
  GradientVector grads;
};

// loss = loss_weight * mse(forward(inputs), targets), with gradients for
// every parameter.  All row reductions follow pairwise_sum's midpoint
// recursion (the batch tree bounds trace memory at 64 rows per leaf, and
// per-parameter sums inside a leaf are pairwise too), so duplicating the
// batch a power-of-two number of times reproduces loss and gradient
// bit-for-bit.
BackwardResult backward(const ParamVector& p, const Batch& batch,
                        double loss_weight);

// Central-difference audit of backward().  Returns the maximum over
// parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
// Kept deliberately independent of the backward implementation.
double finite_difference_check(const ParamVector& p, const Batch& batch,
                               double eps);

enum class OptimizerKind { GradientDescent, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment state lives here; step() applies one update in place.
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, std::size_t param_count);

  void step(std::vector<double>& params, std::span<const double> grads,
            double step_size);

 private:
  OptimizerConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

}  // namespace alignnet

#include "alignnet/net.hpp"

#include <cmath>
#include <cstdio>

namespace alignnet {

namespace {

void check_finite_or_throw(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(what) + ": non-finite value");
    }
  }
}

}  // namespace

Layout::Layout(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  offsets_.reserve(layers_.size() + 1);
  int off = 0;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const LayerSpec& l = layers_[k];
    if (l.in_width <= 0 || l.out_width <= 0) {
      throw ShapeError("Layout: layer widths must be positive");
    }
    if (k > 0 && layers_[k - 1].out_width != l.in_width) {
      throw ShapeError("Layout: adjacent layer widths do not chain");
    }
    offsets_.push_back(off);
    off += l.in_width * l.out_width + l.out_width;
  }
  offsets_.push_back(off);
}

Layout Layout::mlp(int input_width, const std::vector<int>& hidden,
                   int output_width) {
  std::vector<LayerSpec> layers;
  int in = input_width;
  for (int h : hidden) {
    layers.push_back({in, h, Activation::Relu});
    in = h;
  }
  layers.push_back({in, output_width, Activation::Linear});
  return Layout(std::move(layers));
}

ParamVector ParamVector::zeros(const Layout& l) {
  ParamVector p;
  p.layout = l;
  p.values.assign(static_cast<std::size_t>(l.param_count()), 0.0);
  return p;
}

ParamVector ParamVector::glorot(const Layout& l, RngStream& rng) {
  ParamVector p = zeros(l);
  for (int k = 0; k < l.layer_count(); ++k) {
    const LayerSpec& spec = l.layer(k);
    double limit = std::sqrt(6.0 / (spec.in_width + spec.out_width));
    int w0 = l.weight_offset(k);
    int nw = spec.in_width * spec.out_width;
    for (int i = 0; i < nw; ++i) {
      p.values[static_cast<std::size_t>(w0 + i)] = rng.uniform(-limit, limit);
    }
    // biases stay zero
  }
  return p;
}

Matrix mlp_forward_matrix(const ParamVector& p, const Matrix& inputs,
                          MlpTrace* trace) {
  const Layout& layout = p.layout;
  if (p.values.size() != static_cast<std::size_t>(layout.param_count())) {
    throw ShapeError("mlp_forward: parameter vector does not match layout");
  }
  if (layout.layer_count() == 0) {
    if (trace) {
      trace->acts.assign(1, inputs);
      trace->pre.clear();
    }
    return inputs;  // empty net passes input through
  }
  if (inputs.cols != layout.input_width()) {
    throw ShapeError("mlp_forward: input width mismatch");
  }
  if (trace) {
    trace->acts.clear();
    trace->pre.clear();
    trace->acts.push_back(inputs);
  }
  Matrix a = inputs;
  for (int k = 0; k < layout.layer_count(); ++k) {
    const LayerSpec& spec = layout.layer(k);
    const double* W = p.values.data() + layout.weight_offset(k);
    const double* b = p.values.data() + layout.bias_offset(k);
    Matrix z(a.rows, spec.out_width);
    for (int r = 0; r < a.rows; ++r) {
      const double* ar = a.data.data() + static_cast<std::size_t>(r) * a.cols;
      double* zr = z.data.data() + static_cast<std::size_t>(r) * z.cols;
      for (int o = 0; o < spec.out_width; ++o) zr[o] = b[o];
      for (int i = 0; i < spec.in_width; ++i) {
        double ai = ar[i];
        const double* Wi = W + static_cast<std::size_t>(i) * spec.out_width;
        for (int o = 0; o < spec.out_width; ++o) zr[o] += ai * Wi[o];
      }
    }
    if (trace) trace->pre.push_back(z);
    if (spec.act == Activation::Relu) {
      for (double& x : z.data) x = x > 0.0 ? x : 0.0;
    }
    if (trace) trace->acts.push_back(z);
    a = std::move(z);
  }
  return a;
}

std::vector<double> mlp_forward(const ParamVector& p, const Matrix& inputs) {
  Matrix out = mlp_forward_matrix(p, inputs);
  if (out.cols != 1) {
    throw ShapeError("mlp_forward: net does not produce one output per row");
  }
  return out.data;
}

double mse(std::span<const double> estimates, std::span<const double> targets) {
  if (estimates.size() != targets.size()) {
    throw ShapeError("mse: length mismatch");
  }
  if (estimates.empty()) throw ShapeError("mse: empty input");
  std::vector<double> sq(estimates.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    double d = estimates[i] - targets[i];
    sq[i] = d * d;
  }
  return pairwise_sum(sq) / static_cast<double>(sq.size());
}

Matrix mlp_backward_matrix(const ParamVector& p, const MlpTrace& trace,
                           const Matrix& dout, std::span<double> grad) {
  const Layout& layout = p.layout;
  if (grad.size() != static_cast<std::size_t>(layout.param_count())) {
    throw ShapeError("mlp_backward: gradient buffer size mismatch");
  }
  if (layout.layer_count() == 0) return dout;
  Matrix da = dout;
  for (int k = layout.layer_count() - 1; k >= 0; --k) {
    const LayerSpec& spec = layout.layer(k);
    const Matrix& a_in = trace.acts[static_cast<std::size_t>(k)];
    const Matrix& z = trace.pre[static_cast<std::size_t>(k)];
    if (!da.same_shape(z)) throw ShapeError("mlp_backward: shape mismatch");
    // d(loss)/d(pre-activation)
    Matrix dz = da;
    if (spec.act == Activation::Relu) {
      for (std::size_t i = 0; i < dz.data.size(); ++i) {
        if (z.data[i] <= 0.0) dz.data[i] = 0.0;
      }
    }
    double* gW = grad.data() + layout.weight_offset(k);
    double* gb = grad.data() + layout.bias_offset(k);
    const double* W = p.values.data() + layout.weight_offset(k);
    int rows = a_in.rows;
    // Each parameter's gradient is a sum over rows; reduce it pairwise so
    // that block-duplicated batches come out bit-identical (same midpoint
    // recursion as pairwise_sum, whatever the batch size).
    std::vector<double> per_row(static_cast<std::size_t>(rows));
    for (int o = 0; o < spec.out_width; ++o) {
      for (int r = 0; r < rows; ++r) {
        per_row[static_cast<std::size_t>(r)] =
            dz.data[static_cast<std::size_t>(r) * dz.cols + o];
      }
      gb[o] += pairwise_sum(per_row);
    }
    for (int i = 0; i < spec.in_width; ++i) {
      double* gWi = gW + static_cast<std::size_t>(i) * spec.out_width;
      for (int o = 0; o < spec.out_width; ++o) {
        for (int r = 0; r < rows; ++r) {
          per_row[static_cast<std::size_t>(r)] =
              a_in.data[static_cast<std::size_t>(r) * a_in.cols + i] *
              dz.data[static_cast<std::size_t>(r) * dz.cols + o];
        }
        gWi[o] += pairwise_sum(per_row);
      }
    }
    Matrix da_prev(rows, spec.in_width);
    for (int r = 0; r < rows; ++r) {
      const double* dzr =
          dz.data.data() + static_cast<std::size_t>(r) * dz.cols;
      double* dpr =
          da_prev.data.data() + static_cast<std::size_t>(r) * da_prev.cols;
      for (int i = 0; i < spec.in_width; ++i) {
        const double* Wi = W + static_cast<std::size_t>(i) * spec.out_width;
        double acc = 0.0;
        for (int o = 0; o < spec.out_width; ++o) acc += Wi[o] * dzr[o];
        dpr[i] = acc;
      }
    }
    da = std::move(da_prev);
  }
  return da;
}

namespace {

constexpr int kReduceLeafRows = 64;

Matrix slice_rows(const Matrix& m, int lo, int hi) {
  Matrix out(hi - lo, m.cols);
  std::copy(m.data.begin() + static_cast<std::size_t>(lo) * m.cols,
            m.data.begin() + static_cast<std::size_t>(hi) * m.cols,
            out.data.begin());
  return out;
}

// Tree-shaped reduction over batch rows.  delta_scale is the constant
// d(loss)/d(residual) factor (2 * weight / row_total); halving it under
// duplication is exact, and the midpoint split keeps the two copies of a
// duplicated block on separate subtrees, so their gradients double exactly.
double reduce_mse_backward(const ParamVector& p, const Matrix& X,
                           std::span<const double> y, double delta_scale,
                           int lo, int hi, std::vector<double>& grad_out) {
  grad_out.assign(static_cast<std::size_t>(p.layout.param_count()), 0.0);
  int n = hi - lo;
  if (n <= kReduceLeafRows) {
    Matrix xb = slice_rows(X, lo, hi);
    MlpTrace trace;
    Matrix out = mlp_forward_matrix(p, xb, &trace);
    if (out.cols != 1) {
      throw ShapeError("backward: net does not produce one output per row");
    }
    std::vector<double> sq(static_cast<std::size_t>(n));
    Matrix dout(n, 1);
    for (int r = 0; r < n; ++r) {
      double d = out.data[static_cast<std::size_t>(r)] -
                 y[static_cast<std::size_t>(lo + r)];
      sq[static_cast<std::size_t>(r)] = d * d;
      dout.data[static_cast<std::size_t>(r)] = delta_scale * d;
    }
    mlp_backward_matrix(p, trace, dout, grad_out);
    return pairwise_sum(sq);
  }
  int mid = lo + (n + 1) / 2;
  double s1 = reduce_mse_backward(p, X, y, delta_scale, lo, mid, grad_out);
  std::vector<double> right;
  double s2 = reduce_mse_backward(p, X, y, delta_scale, mid, hi, right);
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad_out[i] += right[i];
  return s1 + s2;
}

}  // namespace

BackwardResult backward(const ParamVector& p, const Batch& batch,
                        double loss_weight) {
  if (batch.inputs.rows == 0) throw ShapeError("backward: empty batch");
  if (batch.inputs.rows != static_cast<int>(batch.targets.size())) {
    throw ShapeError("backward: inputs/targets row mismatch");
  }
  int m = batch.inputs.rows;
  double delta_scale = (2.0 * loss_weight) / static_cast<double>(m);
  BackwardResult res;
  double sq = reduce_mse_backward(p, batch.inputs, batch.targets, delta_scale,
                                  0, m, res.grads.values);
  res.loss = (sq * loss_weight) / static_cast<double>(m);
  if (!std::isfinite(res.loss)) {
    throw NumericError("backward: non-finite loss");
  }
  check_finite_or_throw(res.grads.values, "backward gradient");
  return res;
}

double finite_difference_check(const ParamVector& p, const Batch& batch,
                               double eps) {
  if (eps <= 0.0) throw NumericError("finite_difference_check: eps <= 0");
  BackwardResult analytic = backward(p, batch, 1.0);
  if (p.values.empty()) return 0.0;
  ParamVector probe = p;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    double saved = probe.values[i];
    probe.values[i] = saved + eps;
    double up = mse(mlp_forward(probe, batch.inputs), batch.targets);
    probe.values[i] = saved - eps;
    double down = mse(mlp_forward(probe, batch.inputs), batch.targets);
    probe.values[i] = saved;
    double numeric = (up - down) / (2.0 * eps);
    double a = analytic.grads.values[i];
    double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-12});
    worst = std::max(worst, std::fabs(a - numeric) / denom);
  }
  return worst;
}

Optimizer::Optimizer(OptimizerConfig cfg, std::size_t param_count)
    : cfg_(cfg), m_(param_count, 0.0), v_(param_count, 0.0) {}

void Optimizer::step(std::vector<double>& params,
                     std::span<const double> grads, double step_size) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("optimizer step: size mismatch");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) {
      throw NumericError("optimizer step: non-finite gradient component");
    }
  }
  if (cfg_.kind == OptimizerKind::GradientDescent) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] -= step_size * grads[i];
    }
    return;
  }
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
    double mhat = m_[i] / bc1;
    double vhat = v_[i] / bc2;
    params[i] -= step_size * mhat / (std::sqrt(vhat) + cfg_.epsilon);
  }
}

}  // namespace alignnet

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alignnet/common.hpp"
#include "alignnet/cubic.hpp"
#include "alignnet/dataset.hpp"
#include "alignnet/model.hpp"
#include "alignnet/sim.hpp"

namespace alignnet {

// Pearson correlation.  Zero variance in either argument is an error, not a
// zero: a constant estimator has no rank information and silently scoring it
// 0 would corrupt regimen comparisons downstream.
double lcc(std::span<const double> x, std::span<const double> y);

double rmse(std::span<const double> estimates, std::span<const double> targets);

// Standard-normal quantile function (Acklam's rational approximation,
// relative error below 1.2e-9 — far tighter than anything the interval
// arithmetic here needs).
double inverse_normal_cdf(double p);

// Type-7 (linear interpolation) quantile of an already sorted sample.
double sorted_quantile(std::span<const double> sorted, double q);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool excludes_zero() const { return lo > 0.0 || hi < 0.0; }
};

// Confidence interval for r1 - r2 when both correlations share one side
// (two estimators scored against the same targets on the same items).
// Per-correlation Fisher limits are combined with the estimator-estimator
// correlation r12 carrying the dependence.
Interval zou_ci_lcc_diff(double r1, double r2, double r12, int n,
                         double level);

// Percentile interval for rmse(err_a) - rmse(err_b) under joint-index
// resampling of the paired error vectors.  Replicates are seeded
// independently, so the result is reproducible and replicate order is
// irrelevant.
Interval bootstrap_rmse_diff(std::span<const double> err_a,
                             std::span<const double> err_b, int n_boot,
                             double level, std::uint64_t seed);

// Least-squares cubic through the curve's points, nudged toward the
// least-squares line until it is strictly increasing on the observed range.
MonotoneCubic fit_monotone_cubic(const AlignmentCurve& curve);

struct DatasetScore {
  std::string name;
  int n = 0;
  double lcc = 0.0;
  bool lcc_defined = false;
  double rmse = 0.0;
  // Correlation of the intermediate (pre-alignment) scores with the
  // simulator's hidden quality values; present only when the caller hands
  // over the oracle bundle.
  std::optional<double> latent_lcc;
};

struct EvalReport {
  std::vector<DatasetScore> per_dataset;
  DatasetScore pooled;  // name "All", concatenation of every test pair

  // Flat per-item view in dataset order, the raw material for significance
  // comparisons between two runs over the same test sets.
  std::vector<std::string> item_dataset;
  std::vector<std::string> item_file_id;
  std::vector<double> item_target;
  std::vector<double> item_estimate;
};

// Produces per-row estimates for one dataset's feature block.  Bare score
// nets ignore the dataset index; aligned models dispatch on it.
using ScoreFn =
    std::function<std::vector<double>(const Matrix& features, int dataset_index)>;

// Scores the test split of every dataset plus the pooled concatenation.
// `intermediate` (when given, together with the oracle) supplies the
// pre-alignment scores used for the latent-recovery diagnostic; without it
// the estimates themselves are used.
EvalReport evaluate(const ScoreFn& score, const DatasetCollection& collection,
                    const OracleBundle* oracle = nullptr,
                    const ScoreFn* intermediate = nullptr);

struct PredictionItem {
  std::string dataset;
  std::string file_id;
  double target = 0.0;
  double estimate = 0.0;
};

using PredictionSet = std::vector<PredictionItem>;

PredictionSet predictions_of(const EvalReport& report);

// One row of an A-vs-B significance table.
struct ComparisonRow {
  std::string dataset;  // dataset name or "All"
  int n = 0;
  double lcc_a = 0.0;
  double lcc_b = 0.0;
  bool lcc_defined = false;  // both correlations and the Zou interval exist
  Interval lcc_ci;           // on lcc_a - lcc_b
  bool lcc_significant = false;
  double rmse_a = 0.0;
  double rmse_b = 0.0;
  Interval rmse_ci;  // on rmse_a - rmse_b
  bool rmse_significant = false;
};

struct Comparison {
  std::string label_a;
  std::string label_b;
  double level = 0.95;
  std::vector<ComparisonRow> rows;  // per dataset, then "All"
};

// Pairs up two prediction sets (same items in the same order, identical
// targets required) and tests the per-dataset and pooled differences.
Comparison compare_predictions(const PredictionSet& a, const PredictionSet& b,
                               const std::string& label_a,
                               const std::string& label_b, int n_boot,
                               double level, std::uint64_t seed);

}  // namespace alignnet

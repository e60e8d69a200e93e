#include "alignnet/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "alignnet/matrix.hpp"
#include "alignnet/rng.hpp"

namespace alignnet {

double lcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("lcc: length mismatch");
  if (x.size() < 3) throw StatError("lcc: need at least 3 points");
  double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx;
    double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw StatError("lcc: undefined for zero-variance input");
  }
  double r = sxy / std::sqrt(sxx * syy);
  // Rounding can push a perfect fit a hair past +-1; pin it back.
  return std::clamp(r, -1.0, 1.0);
}

double rmse(std::span<const double> estimates,
            std::span<const double> targets) {
  return std::sqrt(mse(estimates, targets));
}

double inverse_normal_cdf(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw StatError("inverse_normal_cdf: p must be in (0, 1)");
  }
  // Acklam's two-region rational approximation.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw StatError("sorted_quantile: empty sample");
  if (!(q >= 0.0) || !(q <= 1.0)) {
    throw StatError("sorted_quantile: q must be in [0, 1]");
  }
  double h = q * static_cast<double>(sorted.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted[sorted.size() - 1];
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

Interval zou_ci_lcc_diff(double r1, double r2, double r12, int n,
                         double level) {
  if (n < 10) throw StatError("zou_ci_lcc_diff: need n >= 10");
  if (!(level > 0.0) || !(level < 1.0)) {
    throw StatError("zou_ci_lcc_diff: level must be in (0, 1)");
  }
  if (std::abs(r1) >= 1.0 || std::abs(r2) >= 1.0) {
    throw StatError("zou_ci_lcc_diff: degenerate correlation (|r| = 1)");
  }
  if (std::abs(r12) > 1.0) {
    throw StatError("zou_ci_lcc_diff: r12 out of range");
  }
  double z_crit = inverse_normal_cdf(1.0 - (1.0 - level) / 2.0);
  double se = 1.0 / std::sqrt(static_cast<double>(n) - 3.0);
  auto fisher_limits = [&](double r, double& lo, double& hi) {
    double z = std::atanh(r);
    lo = std::tanh(z - z_crit * se);
    hi = std::tanh(z + z_crit * se);
  };
  double l1, u1, l2, u2;
  fisher_limits(r1, l1, u1);
  fisher_limits(r2, l2, u2);
  // Correlation between the two sample correlations (they share the target
  // side), which couples the per-correlation limits.
  double num = (r12 - r1 * r2 / 2.0) * (1.0 - r1 * r1 - r2 * r2 - r12 * r12) +
               r12 * r12 * r12;
  double den = (1.0 - r1 * r1) * (1.0 - r2 * r2);
  double corr = num / den;
  corr = std::clamp(corr, -1.0, 1.0);
  double diff = r1 - r2;
  Interval ci;
  ci.lo = diff - std::sqrt((r1 - l1) * (r1 - l1) + (u2 - r2) * (u2 - r2) -
                           2.0 * corr * (r1 - l1) * (u2 - r2));
  ci.hi = diff + std::sqrt((u1 - r1) * (u1 - r1) + (r2 - l2) * (r2 - l2) -
                           2.0 * corr * (u1 - r1) * (r2 - l2));
  return ci;
}

Interval bootstrap_rmse_diff(std::span<const double> err_a,
                             std::span<const double> err_b, int n_boot,
                             double level, std::uint64_t seed) {
  if (err_a.size() != err_b.size()) {
    throw ShapeError("bootstrap_rmse_diff: paired vectors differ in length");
  }
  if (err_a.empty()) throw ShapeError("bootstrap_rmse_diff: empty errors");
  if (n_boot < 1000) {
    throw ConfigError("bootstrap_rmse_diff: need at least 1000 replicates");
  }
  if (!(level > 0.0) || !(level < 1.0)) {
    throw StatError("bootstrap_rmse_diff: level must be in (0, 1)");
  }
  int n = static_cast<int>(err_a.size());
  std::vector<double> diffs(static_cast<std::size_t>(n_boot));
  for (int rep = 0; rep < n_boot; ++rep) {
    RngStream rng(derive_seed(seed, "bootstrap", static_cast<std::uint64_t>(rep)));
    double sa = 0.0, sb = 0.0;
    for (int i = 0; i < n; ++i) {
      int k = rng.uniform_int(n);  // joint index: both errors from item k
      double va = err_a[static_cast<std::size_t>(k)];
      double vb = err_b[static_cast<std::size_t>(k)];
      sa += va * va;
      sb += vb * vb;
    }
    diffs[static_cast<std::size_t>(rep)] =
        std::sqrt(sa / n) - std::sqrt(sb / n);
  }
  std::sort(diffs.begin(), diffs.end());
  double alpha = 1.0 - level;
  Interval ci;
  ci.lo = sorted_quantile(diffs, alpha / 2.0);
  ci.hi = sorted_quantile(diffs, 1.0 - alpha / 2.0);
  return ci;
}

namespace {

// Unconstrained least-squares polynomial fit via normal equations.
std::vector<double> ls_poly(std::span<const double> s,
                            std::span<const double> y, int degree) {
  int k = degree + 1;
  Matrix ata(k, k);
  std::vector<double> aty(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double pw[8];
    pw[0] = 1.0;
    for (int j = 1; j < k; ++j) pw[j] = pw[j - 1] * s[i];
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) ata.at(r, c) += pw[r] * pw[c];
      aty[static_cast<std::size_t>(r)] += pw[r] * y[i];
    }
  }
  return solve_dense(ata, aty);
}

}  // namespace

MonotoneCubic fit_monotone_cubic(const AlignmentCurve& curve) {
  const std::vector<double>& s = curve.input;
  const std::vector<double>& y = curve.output;
  if (s.size() != y.size()) throw ShapeError("fit_monotone_cubic: length mismatch");
  if (s.size() < 8) throw StatError("fit_monotone_cubic: need at least 8 points");
  double lo = *std::min_element(s.begin(), s.end());
  double hi = *std::max_element(s.begin(), s.end());
  if (!(hi - lo > 1e-9)) {
    throw StatError("fit_monotone_cubic: degenerate input range");
  }

  std::vector<double> cubic = ls_poly(s, y, 3);
  MonotoneCubic p;
  p.c = {cubic[0], cubic[1], cubic[2], cubic[3]};
  if (strictly_increasing_on(p, lo, hi)) return p;

  // The free fit dips somewhere.  Blend it toward the least-squares line
  // (slope forced positive if need be) until the grid check passes; the pure
  // line passes by construction, so this terminates.
  std::vector<double> line = ls_poly(s, y, 1);
  if (line[1] <= 0.0) {
    line[1] = 1e-6;
    double ms = 0.0, my = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      ms += s[i];
      my += y[i];
    }
    ms /= static_cast<double>(s.size());
    my /= static_cast<double>(s.size());
    line[0] = my - line[1] * ms;
  }
  for (int step = 1; step <= 20; ++step) {
    double t = static_cast<double>(step) / 20.0;
    MonotoneCubic q;
    q.c = {(1.0 - t) * cubic[0] + t * line[0],
           (1.0 - t) * cubic[1] + t * line[1], (1.0 - t) * cubic[2],
           (1.0 - t) * cubic[3]};
    if (strictly_increasing_on(q, lo, hi)) return q;
  }
  throw NumericError("fit_monotone_cubic: could not enforce monotonicity");
}

namespace {

DatasetScore score_pairs(const std::string& name,
                         const std::vector<double>& estimates,
                         const std::vector<double>& targets) {
  DatasetScore ds;
  ds.name = name;
  ds.n = static_cast<int>(targets.size());
  ds.rmse = rmse(estimates, targets);
  try {
    ds.lcc = lcc(estimates, targets);
    ds.lcc_defined = true;
  } catch (const StatError&) {
    ds.lcc = 0.0;
    ds.lcc_defined = false;
  }
  return ds;
}

}  // namespace

EvalReport evaluate(const ScoreFn& score, const DatasetCollection& collection,
                    const OracleBundle* oracle, const ScoreFn* intermediate) {
  collection.validate();
  if (!score) throw ConfigError("evaluate: no estimator supplied");
  EvalReport report;
  std::vector<double> pooled_est;
  std::vector<double> pooled_tgt;
  for (int j = 0; j < collection.count(); ++j) {
    const RatedDataset& d = collection.datasets[static_cast<std::size_t>(j)];
    if (d.test_idx.empty()) {
      throw ConfigError("evaluate: dataset " + d.name + " has no test split");
    }
    Matrix x = gather_rows(d.features, d.test_idx);
    std::vector<double> tgt = gather(d.scores, d.test_idx);
    std::vector<double> est = score(x, j);
    if (est.size() != tgt.size()) {
      throw ShapeError("evaluate: estimator returned wrong-length output");
    }
    DatasetScore ds = score_pairs(d.name, est, tgt);
    if (oracle != nullptr) {
      const OracleDataset& od = oracle->for_dataset(d.name);
      std::vector<double> latents = gather(od.latents, d.test_idx);
      std::vector<double> inter =
          (intermediate != nullptr && *intermediate) ? (*intermediate)(x, j)
                                                     : est;
      try {
        ds.latent_lcc = lcc(inter, latents);
      } catch (const StatError&) {
        ds.latent_lcc.reset();
      }
    }
    report.per_dataset.push_back(ds);
    for (std::size_t i = 0; i < tgt.size(); ++i) {
      report.item_dataset.push_back(d.name);
      report.item_file_id.push_back(
          d.file_ids[static_cast<std::size_t>(d.test_idx[i])]);
      report.item_target.push_back(tgt[i]);
      report.item_estimate.push_back(est[i]);
    }
    pooled_est.insert(pooled_est.end(), est.begin(), est.end());
    pooled_tgt.insert(pooled_tgt.end(), tgt.begin(), tgt.end());
  }
  report.pooled = score_pairs("All", pooled_est, pooled_tgt);
  return report;
}

PredictionSet predictions_of(const EvalReport& report) {
  PredictionSet set;
  set.reserve(report.item_target.size());
  for (std::size_t i = 0; i < report.item_target.size(); ++i) {
    set.push_back({report.item_dataset[i], report.item_file_id[i],
                   report.item_target[i], report.item_estimate[i]});
  }
  return set;
}

namespace {

ComparisonRow compare_group(const std::string& name,
                            const std::vector<double>& tgt,
                            const std::vector<double>& est_a,
                            const std::vector<double>& est_b, int n_boot,
                            double level, std::uint64_t seed) {
  ComparisonRow row;
  row.dataset = name;
  row.n = static_cast<int>(tgt.size());
  row.rmse_a = rmse(est_a, tgt);
  row.rmse_b = rmse(est_b, tgt);
  std::vector<double> err_a(tgt.size());
  std::vector<double> err_b(tgt.size());
  for (std::size_t i = 0; i < tgt.size(); ++i) {
    err_a[i] = est_a[i] - tgt[i];
    err_b[i] = est_b[i] - tgt[i];
  }
  row.rmse_ci = bootstrap_rmse_diff(err_a, err_b, n_boot, level,
                                    derive_seed(seed, name));
  row.rmse_significant = row.rmse_ci.excludes_zero();
  try {
    row.lcc_a = lcc(est_a, tgt);
    row.lcc_b = lcc(est_b, tgt);
    double r12 = lcc(est_a, est_b);
    row.lcc_ci = zou_ci_lcc_diff(row.lcc_a, row.lcc_b, r12,
                                 static_cast<int>(tgt.size()), level);
    row.lcc_defined = true;
    row.lcc_significant = row.lcc_ci.excludes_zero();
  } catch (const StatError&) {
    row.lcc_defined = false;
    row.lcc_significant = false;
  }
  return row;
}

}  // namespace

Comparison compare_predictions(const PredictionSet& a, const PredictionSet& b,
                               const std::string& label_a,
                               const std::string& label_b, int n_boot,
                               double level, std::uint64_t seed) {
  if (a.size() != b.size()) {
    throw StatError("compare: prediction sets cover different item counts");
  }
  if (a.empty()) throw StatError("compare: empty prediction sets");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].dataset != b[i].dataset || a[i].file_id != b[i].file_id ||
        a[i].target != b[i].target) {
      throw StatError("compare: test items are not paired (item " +
                      std::to_string(i) + " differs)");
    }
  }
  Comparison cmp;
  cmp.label_a = label_a;
  cmp.label_b = label_b;
  cmp.level = level;

  std::vector<std::string> order;
  for (const PredictionItem& item : a) {
    if (std::find(order.begin(), order.end(), item.dataset) == order.end()) {
      order.push_back(item.dataset);
    }
  }
  std::vector<double> all_tgt, all_a, all_b;
  for (const std::string& name : order) {
    std::vector<double> tgt, ea, eb;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].dataset != name) continue;
      tgt.push_back(a[i].target);
      ea.push_back(a[i].estimate);
      eb.push_back(b[i].estimate);
    }
    cmp.rows.push_back(
        compare_group(name, tgt, ea, eb, n_boot, level, seed));
    all_tgt.insert(all_tgt.end(), tgt.begin(), tgt.end());
    all_a.insert(all_a.end(), ea.begin(), ea.end());
    all_b.insert(all_b.end(), eb.begin(), eb.end());
  }
  cmp.rows.push_back(
      compare_group("All", all_tgt, all_a, all_b, n_boot, level, seed));
  return cmp;
}

}  // namespace alignnet

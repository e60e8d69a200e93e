#include "alignnet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace alignnet {

namespace {

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (!valid_name(name)) {
    throw ConfigError("experiment name must be [A-Za-z0-9_-]+: '" + name + "'");
  }
  if (n_files < 10) throw ConfigError(name + ": n_files must be >= 10");
  if (votes_per_file < 1) throw ConfigError(name + ": votes_per_file must be >= 1");
  if (severity < 0.0 || severity > 1.0) {
    throw ConfigError(name + ": severity outside [0, 1]");
  }
  if (vote_noise_sd < 0.0) throw ConfigError(name + ": vote_noise_sd < 0");
  if (feature_noise_sd < 0.0) throw ConfigError(name + ": feature_noise_sd < 0");
  if (!(condition_lo <= condition_hi) || condition_lo < 1.0 ||
      condition_hi > 5.0) {
    throw ConfigError(name + ": condition range must be within [1, 5]");
  }
  if (common_fraction < 0.0 || common_fraction >= 1.0) {
    throw ConfigError(name + ": common_fraction outside [0, 1)");
  }
  if (is_reference && severity != 0.0) {
    throw ConfigError("reference experiment must use severity 0");
  }
  if (is_reference && common_fraction != 0.0) {
    throw ConfigError("reference experiment cannot share files with itself");
  }
}

void SimConfig::validate() const {
  if (feature_dim < 2) throw ConfigError("feature_dim must be >= 2");
  if (experiments.empty()) throw ConfigError("no experiments configured");
  int refs = 0;
  for (const ExperimentSpec& e : experiments) {
    e.validate();
    if (e.is_reference) ++refs;
    for (const ExperimentSpec& o : experiments) {
      if (&e != &o && e.name == o.name) {
        throw ConfigError("duplicate experiment name: " + e.name);
      }
    }
  }
  if (refs != 1) throw ConfigError("exactly one experiment must be the reference");
}

SimConfig default_benchmark_config() {
  SimConfig c;
  c.seed = 17;
  c.feature_dim = 16;
  // One well-resourced reference panel (many files, many votes per file)
  // and three smaller, noisier panels with increasingly warped scales —
  // the regime where pretraining on the reference actually pays off.
  ExperimentSpec ref{"ref", 3000, 12, 0.0, 0.5, 0.05, 1.0, 5.0, true, 0.0};
  ExperimentSpec mild{"mild", 670, 8, 0.3, 0.5, 0.05, 1.0, 5.0, false, 0.2};
  ExperimentSpec medium{"medium", 670, 4, 0.6, 0.7, 0.05, 1.4, 4.6, false, 0.2};
  ExperimentSpec strong{"strong", 670, 4, 0.9, 0.7, 0.05, 1.8, 5.0, false, 0.2};
  c.experiments = {ref, mild, medium, strong};
  return c;
}

// The deviation curve q is drawn once per seed at full strength and scaled
// by severity afterwards, so a fixed seed gives a family p(s) = s + t*q(s)
// whose maximum deviation grows linearly in t.  q interpolates four node
// deviations; one end of the scale is pushed by at least 2.5 while the
// other stays nearly put, which compresses scale use the way real panels
// do, and acceptance keeps p strictly increasing and inside [0.5, 5.5].
MonotoneCubic make_distortion(double severity, std::uint64_t seed) {
  if (severity < 0.0 || severity > 1.0) {
    throw ConfigError("make_distortion: severity outside [0, 1]");
  }
  if (severity == 0.0) return MonotoneCubic{};  // exact identity

  static constexpr double kNodes[4] = {1.0, 7.0 / 3.0, 11.0 / 3.0, 5.0};
  RngStream rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    bool push_up = rng.uniform() < 0.5;
    double big = 2.5 + rng.uniform(0.0, 0.3);
    double u0, u3;
    if (push_up) {
      u0 = big;                       // bottom of the scale lifted hard
      u3 = rng.uniform(-0.25, 0.0);   // top pinned near 5
    } else {
      u0 = rng.uniform(0.0, 0.25);
      u3 = -big;                      // top of the scale dragged down
    }
    // Interior nodes follow a convex path between the ends so the large
    // deviation persists across a wide span of the scale.
    double u1 = u0 + (u3 - u0) * 0.25 + rng.uniform(-0.25, 0.25);
    double u2 = u0 + (u3 - u0) * 0.60 + rng.uniform(-0.25, 0.25);
    double u[4] = {u0, u1, u2, u3};

    bool increasing_nodes = true;
    for (int k = 0; k + 1 < 4; ++k) {
      if (kNodes[k + 1] + u[k + 1] < kNodes[k] + u[k] + 0.05) {
        increasing_nodes = false;
        break;
      }
    }
    if (!increasing_nodes) continue;

    // Interpolating cubic through (node, deviation).
    Matrix vand(4, 4);
    std::vector<double> rhs(4);
    for (int r = 0; r < 4; ++r) {
      double s = kNodes[r];
      vand.at(r, 0) = 1.0;
      vand.at(r, 1) = s;
      vand.at(r, 2) = s * s;
      vand.at(r, 3) = s * s * s;
      rhs[static_cast<std::size_t>(r)] = u[r];
    }
    std::vector<double> q = solve_dense(vand, rhs);

    MonotoneCubic full;  // p at severity 1
    full.c = {q[0], 1.0 + q[1], q[2], q[3]};
    if (!strictly_increasing_on(full, 1.0, 5.0)) continue;
    double max_dev = 0.0;
    double lo_val = 1e300, hi_val = -1e300;
    for (int i = 0; i < 1000; ++i) {
      double s = 1.0 + 4.0 * i / 999.0;
      double v = full(s);
      max_dev = std::max(max_dev, std::fabs(v - s));
      lo_val = std::min(lo_val, v);
      hi_val = std::max(hi_val, v);
    }
    if (max_dev < 2.5) continue;
    if (lo_val < 0.5 || hi_val > 5.5) continue;

    MonotoneCubic p;
    p.c = {severity * q[0], 1.0 + severity * q[1], severity * q[2],
           severity * q[3]};
    return p;
  }
  throw NumericError("make_distortion: no acceptable draw in 100 attempts");
}

std::vector<double> sample_latent(const ExperimentSpec& spec,
                                  std::uint64_t seed) {
  spec.validate();
  RngStream rng(seed);
  std::vector<double> latents(static_cast<std::size_t>(spec.n_files));
  for (double& l : latents) {
    l = rng.uniform(spec.condition_lo, spec.condition_hi);
  }
  return latents;
}

double simulate_votes(double latent, const ExperimentSpec& spec,
                      const MonotoneCubic& distortion, RngStream& rng) {
  if (latent < 1.0 || latent > 5.0) {
    throw ConfigError("simulate_votes: latent outside [1, 5]");
  }
  double center = distortion(latent);
  double sum = 0.0;
  for (int v = 0; v < spec.votes_per_file; ++v) {
    sum += rng.normal(center, spec.vote_noise_sd);
  }
  double mean = sum / spec.votes_per_file;
  return std::clamp(mean, 1.0, 5.0);
}

// Basis: one linear leak plus fixed sinusoids with incommensurate phases.
// Depends only on the latent value, never on the experiment.
std::vector<double> feature_core(double latent, int feature_dim) {
  if (feature_dim < 2) throw ConfigError("feature_dim must be >= 2");
  std::vector<double> f(static_cast<std::size_t>(feature_dim));
  f[0] = (latent - 3.0) / 2.0;
  for (int k = 1; k < feature_dim; ++k) {
    double omega = 0.9 + 0.53 * k;
    double psi = 2.399963229728653 * k;  // golden angle spacing
    f[static_cast<std::size_t>(k)] = std::sin(omega * latent + psi);
  }
  return f;
}

Matrix synthesize_features(std::span<const double> latents, int feature_dim,
                           double noise_sd, RngStream& rng) {
  Matrix out(static_cast<int>(latents.size()), feature_dim);
  for (int r = 0; r < out.rows; ++r) {
    std::vector<double> core =
        feature_core(latents[static_cast<std::size_t>(r)], feature_dim);
    double* dst = out.data.data() + static_cast<std::size_t>(r) * feature_dim;
    for (int c = 0; c < feature_dim; ++c) {
      dst[c] = core[static_cast<std::size_t>(c)] + rng.normal(0.0, noise_sd);
    }
  }
  return out;
}

const OracleDataset& OracleBundle::for_dataset(const std::string& name) const {
  for (const OracleDataset& d : datasets) {
    if (d.name == name) return d;
  }
  throw ConfigError("oracle bundle has no dataset: " + name);
}

SimResult build_collection(const SimConfig& config) {
  config.validate();
  SimResult result;
  result.oracle.seed = config.seed;
  result.collection.feature_dim = config.feature_dim;

  // Reference latents first; common-file injection copies from them.
  int ref_pos = -1;
  for (std::size_t i = 0; i < config.experiments.size(); ++i) {
    if (config.experiments[i].is_reference) ref_pos = static_cast<int>(i);
  }
  const ExperimentSpec& ref_spec =
      config.experiments[static_cast<std::size_t>(ref_pos)];
  std::vector<double> ref_latents = sample_latent(
      ref_spec, derive_seed(derive_seed(config.seed, ref_spec.name), "latent"));

  for (std::size_t j = 0; j < config.experiments.size(); ++j) {
    const ExperimentSpec& spec = config.experiments[j];
    std::uint64_t exp_seed = derive_seed(config.seed, spec.name);

    MonotoneCubic distortion =
        make_distortion(spec.severity, derive_seed(exp_seed, "distortion"));

    std::vector<double> latents;
    std::vector<std::pair<int, int>> common;
    if (spec.is_reference) {
      latents = ref_latents;
    } else {
      latents = sample_latent(spec, derive_seed(exp_seed, "latent"));
      int want = static_cast<int>(
          std::lround(spec.common_fraction * spec.n_files));
      if (want > 0) {
        // Only reference files whose quality lies inside this experiment's
        // condition range can plausibly appear in it.
        std::vector<int> eligible;
        for (int r = 0; r < static_cast<int>(ref_latents.size()); ++r) {
          double l = ref_latents[static_cast<std::size_t>(r)];
          if (l >= spec.condition_lo && l <= spec.condition_hi) {
            eligible.push_back(r);
          }
        }
        RngStream pick(derive_seed(exp_seed, "common"));
        pick.shuffle(eligible);
        int take = std::min<int>(want, static_cast<int>(eligible.size()));
        for (int i = 0; i < take; ++i) {
          int ref_row = eligible[static_cast<std::size_t>(i)];
          latents[static_cast<std::size_t>(i)] =
              ref_latents[static_cast<std::size_t>(ref_row)];
          common.emplace_back(i, ref_row);
        }
      }
    }

    RatedDataset ds;
    ds.name = spec.name;
    ds.is_reference = spec.is_reference;
    RngStream vote_rng(derive_seed(exp_seed, "votes"));
    ds.scores.resize(latents.size());
    for (std::size_t i = 0; i < latents.size(); ++i) {
      ds.scores[i] = simulate_votes(latents[i], spec, distortion, vote_rng);
    }
    RngStream feat_rng(derive_seed(exp_seed, "features"));
    ds.features = synthesize_features(latents, config.feature_dim,
                                      spec.feature_noise_sd, feat_rng);
    ds.file_ids.resize(latents.size());
    for (std::size_t i = 0; i < latents.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "f%05zu", i);
      ds.file_ids[i] = buf;
    }
    assign_splits(ds, derive_seed(exp_seed, "split"));

    if (spec.is_reference) {
      result.collection.reference_index =
          static_cast<int>(result.collection.datasets.size());
    }
    result.collection.datasets.push_back(std::move(ds));

    OracleDataset od;
    od.name = spec.name;
    od.severity = spec.severity;
    od.distortion = distortion;
    od.latents = std::move(latents);
    od.common = std::move(common);
    result.oracle.datasets.push_back(std::move(od));
  }

  result.collection.validate();
  return result;
}

}  // namespace alignnet

// Corpus simulator: distortion construction, vote synthesis, feature
// embedding, split bookkeeping, and the oracle bundle.

#include <algorithm>
#include <cmath>
#include <set>

#include "alignnet/sim.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace alignnet;

TEST_CASE("make_distortion: severity zero is the exact identity") {
  for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
    MonotoneCubic p = make_distortion(0.0, seed);
    CHECK(p.is_identity());
  }
}

TEST_CASE("make_distortion produces strictly increasing maps") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (double sev : {0.1, 0.3, 0.6, 0.9, 1.0}) {
      MonotoneCubic p = make_distortion(sev, seed);
      CAPTURE(seed);
      CAPTURE(sev);
      CHECK(strictly_increasing_on(p, 1.0, 5.0));
      // The warped scale must stay inside the plausible vote range.
      for (int i = 0; i <= 20; ++i) {
        double s = 1.0 + 4.0 * i / 20.0;
        CHECK(p(s) >= 0.5);
        CHECK(p(s) <= 5.5);
      }
    }
  }
}

TEST_CASE("make_distortion: deviation scales linearly with severity") {
  MonotoneCubic full = make_distortion(1.0, 31);
  MonotoneCubic half = make_distortion(0.5, 31);
  for (int i = 0; i <= 10; ++i) {
    double s = 1.0 + 0.4 * i;
    CHECK(half(s) - s == doctest::Approx(0.5 * (full(s) - s)).epsilon(1e-12));
  }

  SUBCASE("full severity moves some score by at least 2.5") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      MonotoneCubic p = make_distortion(1.0, seed);
      double dev = 0.0;
      for (int i = 0; i <= 400; ++i) {
        double s = 1.0 + 4.0 * i / 400.0;
        dev = std::max(dev, std::abs(p(s) - s));
      }
      CAPTURE(seed);
      CHECK(dev >= 2.5);
    }
  }
}

TEST_CASE("sample_latent stays inside the condition range") {
  ExperimentSpec spec;
  spec.name = "x";
  spec.n_files = 500;
  spec.votes_per_file = 1;
  spec.condition_lo = 1.5;
  spec.condition_hi = 4.25;
  std::vector<double> lat = sample_latent(spec, 77);
  REQUIRE(lat.size() == 500);
  for (double v : lat) {
    CHECK(v >= 1.5);
    CHECK(v < 4.25);
  }
  CHECK(sample_latent(spec, 77) == lat);
}

TEST_CASE("simulate_votes clips the panel mean to the vote scale") {
  ExperimentSpec spec;
  spec.name = "x";
  spec.n_files = 1;
  spec.votes_per_file = 3;
  spec.vote_noise_sd = 0.0;
  MonotoneCubic ident;
  RngStream rng(5);
  // Noise-free panel: vote equals the distorted latent exactly.
  CHECK(simulate_votes(3.25, spec, ident, rng) == 3.25);

  // A distortion pushing beyond the scale ends up clipped.
  MonotoneCubic hot{{2.0, 1.0, 0.0, 0.0}};  // p(s) = s + 2
  CHECK(simulate_votes(4.5, spec, hot, rng) == 5.0);
  MonotoneCubic cold{{-2.0, 1.0, 0.0, 0.0}};
  CHECK(simulate_votes(1.5, spec, cold, rng) == 1.0);

  SUBCASE("noisy votes stay within [1, 5]") {
    spec.vote_noise_sd = 2.0;
    for (int i = 0; i < 200; ++i) {
      double v = simulate_votes(3.0, spec, ident, rng);
      CHECK(v >= 1.0);
      CHECK(v <= 5.0);
    }
  }
}

TEST_CASE("feature_core depends only on the latent value") {
  std::vector<double> a = feature_core(2.7, 6);
  std::vector<double> b = feature_core(2.7, 6);
  std::vector<double> c = feature_core(2.8, 6);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.size() == 6);
}

TEST_CASE("build_collection assembles a coherent corpus") {
  SimResult sim = testsupport::tiny_corpus(11);
  const DatasetCollection& c = sim.collection;
  REQUIRE(c.count() == 3);
  CHECK(c.feature_dim == 6);
  CHECK(c.reference_index == 0);
  CHECK(c.datasets[0].name == "base");
  CHECK(c.datasets[0].size() == 160);
  CHECK(c.datasets[1].size() == 70);
  c.validate();

  SUBCASE("votes live on the rating scale") {
    for (const RatedDataset& d : c.datasets) {
      for (double s : d.scores) {
        CHECK(s >= 1.0);
        CHECK(s <= 5.0);
      }
    }
  }

  SUBCASE("splits are sorted, disjoint, and 80/10/10") {
    for (const RatedDataset& d : c.datasets) {
      int n = d.size();
      int tenth = n / 10;
      CHECK(static_cast<int>(d.test_idx.size()) == tenth);
      CHECK(static_cast<int>(d.val_idx.size()) == tenth);
      CHECK(static_cast<int>(d.train_idx.size()) == n - 2 * tenth);
      CHECK(std::is_sorted(d.train_idx.begin(), d.train_idx.end()));
      CHECK(std::is_sorted(d.val_idx.begin(), d.val_idx.end()));
      CHECK(std::is_sorted(d.test_idx.begin(), d.test_idx.end()));
      std::set<int> all;
      for (int i : d.train_idx) all.insert(i);
      for (int i : d.val_idx) all.insert(i);
      for (int i : d.test_idx) all.insert(i);
      CHECK(static_cast<int>(all.size()) == n);
      CHECK(*all.begin() == 0);
      CHECK(*all.rbegin() == n - 1);
    }
  }

  SUBCASE("oracle rows line up with dataset rows") {
    REQUIRE(sim.oracle.datasets.size() == 3);
    for (int j = 0; j < 3; ++j) {
      const OracleDataset& od = sim.oracle.datasets[static_cast<std::size_t>(j)];
      CHECK(od.name == c.datasets[static_cast<std::size_t>(j)].name);
      CHECK(od.latents.size() ==
            c.datasets[static_cast<std::size_t>(j)].scores.size());
    }
    CHECK(sim.oracle.for_dataset("warp").severity == 0.7);
    CHECK_THROWS_AS(sim.oracle.for_dataset("nope"), ConfigError);
  }

  SUBCASE("common files copy the reference latent") {
    const OracleDataset& warp = sim.oracle.for_dataset("warp");
    const OracleDataset& base = sim.oracle.for_dataset("base");
    // common_fraction 0.2 of 70 files
    CHECK(warp.common.size() == 14);
    for (auto [own, ref_row] : warp.common) {
      CHECK(warp.latents[static_cast<std::size_t>(own)] ==
            base.latents[static_cast<std::size_t>(ref_row)]);
    }
    CHECK(sim.oracle.for_dataset("drift").common.empty());
  }

  SUBCASE("same seed reproduces the corpus exactly") {
    SimResult again = testsupport::tiny_corpus(11);
    for (int j = 0; j < 3; ++j) {
      const auto& d1 = c.datasets[static_cast<std::size_t>(j)];
      const auto& d2 = again.collection.datasets[static_cast<std::size_t>(j)];
      CHECK(d1.scores == d2.scores);
      CHECK(d1.features.data == d2.features.data);
      CHECK(d1.train_idx == d2.train_idx);
    }
  }

  SUBCASE("different seed produces different data") {
    SimResult other = testsupport::tiny_corpus(12);
    CHECK(c.datasets[0].scores != other.collection.datasets[0].scores);
  }
}

TEST_CASE("higher severity hurts raw cross-dataset score agreement") {
  // Rank correlation between latent quality and recorded votes should drop
  // as the scale warps; the distortion is monotone, so within a dataset the
  // correlation stays high, but the mapping to the reference scale drifts.
  SimResult sim = testsupport::tiny_corpus(3);
  const OracleDataset& warp = sim.oracle.for_dataset("warp");
  double max_gap = 0.0;
  for (std::size_t i = 0; i < warp.latents.size(); ++i) {
    max_gap = std::max(max_gap,
                       std::abs(warp.distortion(warp.latents[i]) - warp.latents[i]));
  }
  CHECK(max_gap > 0.5);  // severity 0.7 visibly moves the scale
}

TEST_CASE("the bundled benchmark definition matches its documentation") {
  SimConfig cfg = default_benchmark_config();
  cfg.validate();
  REQUIRE(cfg.experiments.size() == 4);
  CHECK(cfg.feature_dim == 16);
  const ExperimentSpec& ref = cfg.experiments[0];
  CHECK(ref.name == "ref");
  CHECK(ref.is_reference);
  CHECK(ref.n_files == 3000);
  CHECK(ref.votes_per_file == 12);
  CHECK(ref.severity == 0.0);
  CHECK(cfg.experiments[1].severity == 0.3);
  CHECK(cfg.experiments[2].severity == 0.6);
  CHECK(cfg.experiments[3].severity == 0.9);
  // The two hardest experiments also have the small, noisy vote panels.
  CHECK(cfg.experiments[2].votes_per_file == 4);
  CHECK(cfg.experiments[3].votes_per_file == 4);
  CHECK(cfg.experiments[2].vote_noise_sd == 0.7);
  CHECK(cfg.experiments[3].vote_noise_sd == 0.7);
  for (int j = 1; j < 4; ++j) {
    CHECK(cfg.experiments[static_cast<std::size_t>(j)].n_files == 670);
    CHECK_FALSE(cfg.experiments[static_cast<std::size_t>(j)].is_reference);
    CHECK(cfg.experiments[static_cast<std::size_t>(j)].common_fraction == 0.2);
  }
}

TEST_CASE("experiment validation rejects nonsense") {
  ExperimentSpec e;
  e.name = "x";
  e.n_files = 10;
  e.votes_per_file = 1;
  SUBCASE("empty name") {
    e.name = "";
    CHECK_THROWS_AS(e.validate(), ConfigError);
  }
  SUBCASE("no files") {
    e.n_files = 0;
    CHECK_THROWS_AS(e.validate(), ConfigError);
  }
  SUBCASE("inverted condition range") {
    e.condition_lo = 4.0;
    e.condition_hi = 2.0;
    CHECK_THROWS_AS(e.validate(), ConfigError);
  }
  SUBCASE("severity out of range") {
    e.severity = 1.5;
    CHECK_THROWS_AS(e.validate(), ConfigError);
  }
  SUBCASE("common fraction out of range") {
    e.common_fraction = 1.5;
    CHECK_THROWS_AS(e.validate(), ConfigError);
  }
  SUBCASE("collection without a reference") {
    SimConfig cfg;
    cfg.feature_dim = 4;
    cfg.experiments = {e};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "alignnet/dataset.hpp"
#include "alignnet/metrics.hpp"
#include "alignnet/model.hpp"
#include "alignnet/sim.hpp"
#include "alignnet/train.hpp"

namespace alignnet {

// All numbers cross the file boundary as %.17g decimal literals, which
// round-trip IEEE doubles exactly — the CSV/checkpoint round-trip contracts
// and the byte-identical-rerun checks both lean on this.
std::string format_g17(double v);
double parse_double(const std::string& s);
long parse_long(const std::string& s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Flat `key = value` text with '#' comments, used for configs and manifests.
// Order-preserving so written files stay diffable.
struct KvFile {
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // missing-key error
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  long get_long(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
};

KvFile parse_kv_text(const std::string& text, const std::string& origin);
KvFile read_kv_file(const std::string& path);
std::string render_kv(const KvFile& kv, const std::string& header_comment);

// Comma-separated helpers for list-valued keys.
std::vector<std::string> split_list(const std::string& csv);
std::string join_list(const std::vector<std::string>& items);

// ---- simulator config ------------------------------------------------

SimConfig parse_sim_config(const KvFile& kv);
SimConfig read_sim_config(const std::string& path);
std::string render_sim_config(const SimConfig& config);

// ---- trainer config --------------------------------------------------

TrainConfig parse_train_config(const KvFile& kv);
TrainConfig read_train_config(const std::string& path);
std::string render_train_config(const TrainConfig& config);

// ---- dataset CSV -----------------------------------------------------
// Header `file_id,score,f0,...,f{D-1}`, UTF-8, LF endings, one row per file.

void write_dataset_csv(const std::string& path, const RatedDataset& ds);
RatedDataset read_dataset_csv(const std::string& path, const std::string& name,
                              bool is_reference);

// ---- manifest ---------------------------------------------------------

struct ManifestEntry {
  std::string name;
  std::string csv_path;  // relative to the manifest's directory
  bool is_reference = false;
};

struct Manifest {
  std::vector<ManifestEntry> datasets;
  int feature_dim = 0;
  std::string created_by;
  std::uint64_t seed = 0;
};

Manifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const Manifest& m);

// Loads every dataset named by the manifest and recreates the split
// assignment from the manifest seed, so training and evaluation always see
// the same 80/10/10 partition the simulator produced.
DatasetCollection load_collection(const Manifest& m,
                                  const std::string& manifest_dir);

// ---- oracle bundle ----------------------------------------------------
// Separate file, never touched by `train`; holds the simulator ground truth.

void write_oracle(const std::string& path, const OracleBundle& oracle);
OracleBundle read_oracle(const std::string& path);

// ---- checkpoints ------------------------------------------------------
// Self-describing text serialization of layouts, parameters, embeddings,
// reference index, and dataset names; value-exact round-trip.

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

// ---- training log -----------------------------------------------------

std::string render_train_log(const std::vector<EpochRecord>& history,
                             const std::vector<std::string>& dataset_names);

// ---- evaluation outputs ------------------------------------------------

std::string render_eval_report(const EvalReport& report);      // aligned table
std::string render_eval_tsv(const EvalReport& report);         // machine rows
std::string render_predictions_tsv(const EvalReport& report);  // per item
PredictionSet read_predictions_tsv(const std::string& path);

std::string render_comparison(const Comparison& cmp);      // aligned table
std::string render_comparison_tsv(const Comparison& cmp);  // machine rows

// ---- alignment curves ---------------------------------------------------

std::string render_curve_csv(const AlignmentCurve& curve);

// Self-contained SVG: axes, identity guide, one polyline per curve, plus
// optional dotted ground-truth overlays (one per curve, may be empty).
std::string render_curves_svg(
    const std::vector<AlignmentCurve>& curves,
    const std::vector<std::vector<std::pair<double, double>>>& overlays);

// ---- run-directory plumbing ---------------------------------------------

bool path_exists(const std::string& path);

// Creates the directory (parents included).  An existing non-empty
// directory is refused unless force is set — run directories are
// append-only by contract.
void ensure_run_dir(const std::string& path, bool force);

// Refuses to clobber an existing file unless force is set.
void require_writable(const std::string& path, bool force);

}  // namespace alignnet

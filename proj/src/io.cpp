#include "alignnet/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace alignnet {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw IoError("not a number: '" + s + "'");
  }
  return v;
}

long parse_long(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  long v = std::strtol(begin, &end, 10);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw IoError("not an integer: '" + s + "'");
  }
  return v;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw IoError("read failed on " + path);
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("write failed on " + path);
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      if (pos < text.size()) lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

bool KvFile::has(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return true;
  }
  return false;
}

const std::string& KvFile::get(const std::string& key) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  throw ConfigError("missing key: " + key);
}

std::string KvFile::get_or(const std::string& key,
                           const std::string& fallback) const {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  return fallback;
}

double KvFile::get_double(const std::string& key) const {
  try {
    return parse_double(get(key));
  } catch (const IoError& e) {
    throw ConfigError("key " + key + ": " + e.what());
  }
}

long KvFile::get_long(const std::string& key) const {
  try {
    return parse_long(get(key));
  } catch (const IoError& e) {
    throw ConfigError("key " + key + ": " + e.what());
  }
}

std::uint64_t KvFile::get_u64(const std::string& key) const {
  const std::string& s = get(key);
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  unsigned long long v = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw ConfigError("key " + key + ": not an unsigned integer: '" + s + "'");
  }
  return static_cast<std::uint64_t>(v);
}

bool KvFile::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("key " + key + ": expected true/false, got '" + s + "'");
}

void KvFile::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}

KvFile parse_kv_text(const std::string& text, const std::string& origin) {
  KvFile kv;
  int lineno = 0;
  for (const std::string& raw : split_lines(text)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (kv.has(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": duplicate key " + key);
    }
    kv.entries.emplace_back(key, value);
  }
  return kv;
}

KvFile read_kv_file(const std::string& path) {
  return parse_kv_text(read_text_file(path), path);
}

std::string render_kv(const KvFile& kv, const std::string& header_comment) {
  std::string out;
  if (!header_comment.empty()) out += "# " + header_comment + "\n";
  for (const auto& [k, v] : kv.entries) out += k + " = " + v + "\n";
  return out;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> items;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t comma = csv.find(',', pos);
    std::string item = trim(comma == std::string::npos
                                ? csv.substr(pos)
                                : csv.substr(pos, comma - pos));
    if (!item.empty()) items.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return items;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += items[i];
  }
  return out;
}

// ---- simulator config ------------------------------------------------

SimConfig parse_sim_config(const KvFile& kv) {
  SimConfig config;
  config.seed = kv.get_u64("seed");
  config.feature_dim = static_cast<int>(kv.get_long("feature_dim"));
  std::vector<std::string> names = split_list(kv.get("experiments"));
  for (const std::string& name : names) {
    ExperimentSpec spec;
    spec.name = name;
    spec.n_files = static_cast<int>(kv.get_long(name + ".files"));
    spec.votes_per_file = static_cast<int>(kv.get_long(name + ".votes"));
    spec.severity = kv.get_double(name + ".severity");
    spec.is_reference = kv.get_bool(name + ".reference");
    spec.vote_noise_sd = parse_double(kv.get_or(name + ".vote_noise_sd", "0.5"));
    spec.feature_noise_sd =
        parse_double(kv.get_or(name + ".feature_noise_sd", "0.05"));
    spec.condition_lo = parse_double(kv.get_or(name + ".condition_lo", "1"));
    spec.condition_hi = parse_double(kv.get_or(name + ".condition_hi", "5"));
    spec.common_fraction =
        parse_double(kv.get_or(name + ".common_fraction", "0"));
    config.experiments.push_back(spec);
  }
  config.validate();
  return config;
}

SimConfig read_sim_config(const std::string& path) {
  return parse_sim_config(read_kv_file(path));
}

std::string render_sim_config(const SimConfig& config) {
  KvFile kv;
  kv.set("seed", std::to_string(config.seed));
  kv.set("feature_dim", std::to_string(config.feature_dim));
  std::vector<std::string> names;
  for (const ExperimentSpec& e : config.experiments) names.push_back(e.name);
  kv.set("experiments", join_list(names));
  for (const ExperimentSpec& e : config.experiments) {
    kv.set(e.name + ".files", std::to_string(e.n_files));
    kv.set(e.name + ".votes", std::to_string(e.votes_per_file));
    kv.set(e.name + ".severity", format_g17(e.severity));
    kv.set(e.name + ".reference", e.is_reference ? "true" : "false");
    kv.set(e.name + ".vote_noise_sd", format_g17(e.vote_noise_sd));
    kv.set(e.name + ".feature_noise_sd", format_g17(e.feature_noise_sd));
    kv.set(e.name + ".condition_lo", format_g17(e.condition_lo));
    kv.set(e.name + ".condition_hi", format_g17(e.condition_hi));
    kv.set(e.name + ".common_fraction", format_g17(e.common_fraction));
  }
  return render_kv(kv, "synthetic listening-experiment corpus");
}

// ---- trainer config ----------------------------------------------------

namespace {

std::vector<int> parse_int_list(const std::string& csv,
                                const std::string& key) {
  std::vector<int> out;
  for (const std::string& item : split_list(csv)) {
    try {
      out.push_back(static_cast<int>(parse_long(item)));
    } catch (const IoError& e) {
      throw ConfigError("key " + key + ": " + e.what());
    }
  }
  return out;
}

std::string join_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

TrainConfig parse_train_config(const KvFile& kv) {
  TrainConfig c;  // file keys override the desk defaults
  if (kv.has("epochs_pretrain"))
    c.epochs_pretrain = static_cast<int>(kv.get_long("epochs_pretrain"));
  if (kv.has("epochs_finetune"))
    c.epochs_finetune = static_cast<int>(kv.get_long("epochs_finetune"));
  if (kv.has("freeze_epochs"))
    c.freeze_epochs = static_cast<int>(kv.get_long("freeze_epochs"));
  if (kv.has("batch_size"))
    c.batch_size = static_cast<int>(kv.get_long("batch_size"));
  if (kv.has("step_size")) c.step_size = kv.get_double("step_size");
  if (kv.has("r_th")) c.r_th = kv.get_double("r_th");
  if (kv.has("patience"))
    c.patience = static_cast<int>(kv.get_long("patience"));
  if (kv.has("seed")) c.seed = kv.get_u64("seed");
  if (kv.has("embedding_dim"))
    c.embedding_dim = static_cast<int>(kv.get_long("embedding_dim"));
  if (kv.has("audio_hidden"))
    c.audio_hidden = parse_int_list(kv.get("audio_hidden"), "audio_hidden");
  if (kv.has("head_hidden"))
    c.head_hidden = parse_int_list(kv.get("head_hidden"), "head_hidden");
  c.validate();
  return c;
}

TrainConfig read_train_config(const std::string& path) {
  return parse_train_config(read_kv_file(path));
}

std::string render_train_config(const TrainConfig& c) {
  KvFile kv;
  kv.set("epochs_pretrain", std::to_string(c.epochs_pretrain));
  kv.set("epochs_finetune", std::to_string(c.epochs_finetune));
  kv.set("freeze_epochs", std::to_string(c.freeze_epochs));
  kv.set("batch_size", std::to_string(c.batch_size));
  kv.set("step_size", format_g17(c.step_size));
  kv.set("r_th", format_g17(c.r_th));
  kv.set("patience", std::to_string(c.patience));
  kv.set("seed", std::to_string(c.seed));
  kv.set("embedding_dim", std::to_string(c.embedding_dim));
  kv.set("audio_hidden", join_int_list(c.audio_hidden));
  kv.set("head_hidden", join_int_list(c.head_hidden));
  return render_kv(kv, "training configuration");
}

// ---- dataset CSV ---------------------------------------------------------

void write_dataset_csv(const std::string& path, const RatedDataset& ds) {
  std::string out = "file_id,score";
  for (int k = 0; k < ds.features.cols; ++k) {
    out += ",f" + std::to_string(k);
  }
  out += "\n";
  for (int r = 0; r < ds.size(); ++r) {
    const std::string& id = ds.file_ids[static_cast<std::size_t>(r)];
    if (id.find_first_of(",\n\r") != std::string::npos) {
      throw IoError("file id contains a delimiter: '" + id + "'");
    }
    out += id;
    out += ",";
    out += format_g17(ds.scores[static_cast<std::size_t>(r)]);
    for (int c = 0; c < ds.features.cols; ++c) {
      out += ",";
      out += format_g17(ds.features.at(r, c));
    }
    out += "\n";
  }
  write_text_file(path, out);
}

RatedDataset read_dataset_csv(const std::string& path, const std::string& name,
                              bool is_reference) {
  std::vector<std::string> lines = split_lines(read_text_file(path));
  if (lines.empty()) throw IoError(path + ": empty dataset file");
  std::vector<std::string> header = split_list(lines[0]);
  if (header.size() < 3 || header[0] != "file_id" || header[1] != "score") {
    throw IoError(path + ": expected header file_id,score,f0,...");
  }
  int dim = static_cast<int>(header.size()) - 2;
  for (int k = 0; k < dim; ++k) {
    if (header[static_cast<std::size_t>(k + 2)] != "f" + std::to_string(k)) {
      throw IoError(path + ": unexpected feature column name");
    }
  }
  RatedDataset ds;
  ds.name = name;
  ds.is_reference = is_reference;
  std::vector<double> flat;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    std::vector<std::string> cells = split_list(lines[i]);
    if (static_cast<int>(cells.size()) != dim + 2) {
      throw IoError(path + ":" + std::to_string(i + 1) +
                    ": wrong number of columns");
    }
    ds.file_ids.push_back(cells[0]);
    try {
      ds.scores.push_back(parse_double(cells[1]));
      for (int k = 0; k < dim; ++k) {
        flat.push_back(parse_double(cells[static_cast<std::size_t>(k + 2)]));
      }
    } catch (const IoError& e) {
      throw IoError(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  ds.features = Matrix(static_cast<int>(ds.scores.size()), dim);
  ds.features.data = std::move(flat);
  return ds;
}

// ---- manifest --------------------------------------------------------------

Manifest read_manifest(const std::string& path) {
  KvFile kv = read_kv_file(path);
  Manifest m;
  m.created_by = kv.get_or("created_by", "");
  m.seed = kv.get_u64("seed");
  m.feature_dim = static_cast<int>(kv.get_long("feature_dim"));
  int ref_count = 0;
  for (const std::string& name : split_list(kv.get("datasets"))) {
    ManifestEntry e;
    e.name = name;
    e.csv_path = kv.get(name + ".csv");
    e.is_reference = kv.get_bool(name + ".reference");
    ref_count += e.is_reference ? 1 : 0;
    m.datasets.push_back(e);
  }
  if (m.datasets.empty()) throw ConfigError(path + ": no datasets listed");
  if (ref_count != 1) {
    throw ConfigError(path + ": exactly one dataset must be the reference");
  }
  return m;
}

void write_manifest(const std::string& path, const Manifest& m) {
  int refs = 0;
  for (const ManifestEntry& e : m.datasets) refs += e.is_reference ? 1 : 0;
  if (refs != 1) {
    throw ConfigError("manifest must name exactly one reference dataset");
  }
  KvFile kv;
  kv.set("created_by", m.created_by);
  kv.set("seed", std::to_string(m.seed));
  kv.set("feature_dim", std::to_string(m.feature_dim));
  std::vector<std::string> names;
  for (const ManifestEntry& e : m.datasets) names.push_back(e.name);
  kv.set("datasets", join_list(names));
  for (const ManifestEntry& e : m.datasets) {
    kv.set(e.name + ".csv", e.csv_path);
    kv.set(e.name + ".reference", e.is_reference ? "true" : "false");
  }
  write_text_file(path, render_kv(kv, "dataset roster"));
}

DatasetCollection load_collection(const Manifest& m,
                                  const std::string& manifest_dir) {
  DatasetCollection collection;
  collection.feature_dim = m.feature_dim;
  for (std::size_t j = 0; j < m.datasets.size(); ++j) {
    const ManifestEntry& e = m.datasets[j];
    fs::path p(e.csv_path);
    if (p.is_relative()) p = fs::path(manifest_dir) / p;
    RatedDataset ds = read_dataset_csv(p.string(), e.name, e.is_reference);
    if (ds.features.cols != m.feature_dim) {
      throw ConfigError(e.name + ": feature width " +
                        std::to_string(ds.features.cols) +
                        " does not match manifest feature_dim " +
                        std::to_string(m.feature_dim));
    }
    // Same derivation chain the simulator used, so the 80/10/10 partition
    // is identical no matter which command loads the data.
    assign_splits(ds, derive_seed(derive_seed(m.seed, e.name), "split"));
    if (e.is_reference) collection.reference_index = static_cast<int>(j);
    collection.datasets.push_back(std::move(ds));
  }
  collection.validate();
  return collection;
}

// ---- oracle bundle -----------------------------------------------------

void write_oracle(const std::string& path, const OracleBundle& oracle) {
  std::string out =
      "# simulator ground truth; for evaluation only, never for training\n";
  out += "seed = " + std::to_string(oracle.seed) + "\n";
  std::vector<std::string> names;
  for (const OracleDataset& d : oracle.datasets) names.push_back(d.name);
  out += "datasets = " + join_list(names) + "\n";
  for (const OracleDataset& d : oracle.datasets) {
    out += "dataset = " + d.name + "\n";
    out += "severity = " + format_g17(d.severity) + "\n";
    out += "distortion = " + format_g17(d.distortion.c[0]) + " " +
           format_g17(d.distortion.c[1]) + " " + format_g17(d.distortion.c[2]) +
           " " + format_g17(d.distortion.c[3]) + "\n";
    out += "latents = " + std::to_string(d.latents.size()) + "\n";
    for (double v : d.latents) out += format_g17(v) + "\n";
    out += "common = " + std::to_string(d.common.size()) + "\n";
    for (const auto& [own, ref] : d.common) {
      out += std::to_string(own) + " " + std::to_string(ref) + "\n";
    }
  }
  write_text_file(path, out);
}

namespace {

// Sequential line reader with one-line error context.
class LineReader {
 public:
  LineReader(std::vector<std::string> lines, std::string origin)
      : lines_(std::move(lines)), origin_(std::move(origin)) {}

  bool done() {
    skip_blank();
    return pos_ >= lines_.size();
  }

  std::string next() {
    skip_blank();
    if (pos_ >= lines_.size()) {
      throw IoError(origin_ + ": unexpected end of file");
    }
    return trim(lines_[pos_++]);
  }

  // Expects `key = ...` and returns the value.
  std::string expect(const std::string& key) {
    std::string line = next();
    std::string prefix = key + " =";
    if (line.rfind(prefix, 0) != 0) {
      throw IoError(origin_ + ":" + std::to_string(pos_) + ": expected '" +
                    key + " = ...'");
    }
    return trim(line.substr(prefix.size()));
  }

 private:
  void skip_blank() {
    while (pos_ < lines_.size()) {
      std::string t = trim(lines_[pos_]);
      if (!t.empty() && t[0] != '#') break;
      ++pos_;
    }
  }

  std::vector<std::string> lines_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

OracleBundle read_oracle(const std::string& path) {
  LineReader in(split_lines(read_text_file(path)), path);
  OracleBundle oracle;
  oracle.seed = static_cast<std::uint64_t>(
      std::strtoull(in.expect("seed").c_str(), nullptr, 10));
  std::vector<std::string> names = split_list(in.expect("datasets"));
  for (const std::string& name : names) {
    OracleDataset d;
    std::string got = in.expect("dataset");
    if (got != name) {
      throw IoError(path + ": dataset blocks out of order (expected " + name +
                    ", got " + got + ")");
    }
    d.name = name;
    d.severity = parse_double(in.expect("severity"));
    std::vector<std::string> coeff = split_ws(in.expect("distortion"));
    if (coeff.size() != 4) throw IoError(path + ": distortion needs 4 coefficients");
    for (int k = 0; k < 4; ++k) {
      d.distortion.c[static_cast<std::size_t>(k)] =
          parse_double(coeff[static_cast<std::size_t>(k)]);
    }
    long n_latents = parse_long(in.expect("latents"));
    d.latents.reserve(static_cast<std::size_t>(n_latents));
    for (long i = 0; i < n_latents; ++i) d.latents.push_back(parse_double(in.next()));
    long n_common = parse_long(in.expect("common"));
    for (long i = 0; i < n_common; ++i) {
      std::vector<std::string> pair = split_ws(in.next());
      if (pair.size() != 2) throw IoError(path + ": malformed common-file pair");
      d.common.emplace_back(static_cast<int>(parse_long(pair[0])),
                            static_cast<int>(parse_long(pair[1])));
    }
    oracle.datasets.push_back(std::move(d));
  }
  return oracle;
}

// ---- checkpoints ---------------------------------------------------------

namespace {

std::string layout_to_string(const Layout& l) {
  std::string out;
  for (int i = 0; i < l.layer_count(); ++i) {
    const LayerSpec& spec = l.layer(i);
    if (i) out += " ";
    out += std::to_string(spec.in_width) + "x" + std::to_string(spec.out_width) +
           ":" + (spec.act == Activation::Relu ? "relu" : "linear");
  }
  return out;
}

Layout layout_from_string(const std::string& s, const std::string& origin) {
  std::vector<LayerSpec> layers;
  for (const std::string& tok : split_ws(s)) {
    std::size_t x = tok.find('x');
    std::size_t colon = tok.find(':');
    if (x == std::string::npos || colon == std::string::npos || colon < x) {
      throw IoError(origin + ": malformed layer '" + tok + "'");
    }
    LayerSpec spec;
    spec.in_width = static_cast<int>(parse_long(tok.substr(0, x)));
    spec.out_width =
        static_cast<int>(parse_long(tok.substr(x + 1, colon - x - 1)));
    std::string act = tok.substr(colon + 1);
    if (act == "relu") {
      spec.act = Activation::Relu;
    } else if (act == "linear") {
      spec.act = Activation::Linear;
    } else {
      throw IoError(origin + ": unknown activation '" + act + "'");
    }
    layers.push_back(spec);
  }
  if (layers.empty()) throw IoError(origin + ": empty layout");
  return Layout(layers);
}

void append_values(std::string& out, const std::vector<double>& values) {
  for (double v : values) {
    out += format_g17(v);
    out += "\n";
  }
}

std::vector<double> read_values(LineReader& in, long n) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) values.push_back(parse_double(in.next()));
  return values;
}

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  if (ckpt.kind != "audio" && ckpt.kind != "alignnet") {
    throw IoError("checkpoint kind must be audio or alignnet");
  }
  if (ckpt.kind == "alignnet" && !ckpt.head.has_value()) {
    throw IoError("alignnet checkpoint is missing its head");
  }
  std::string out = "# trained model\n";
  out += "kind = " + ckpt.kind + "\n";
  out += "datasets = " + join_list(ckpt.dataset_names) + "\n";
  out += "reference_index = " + std::to_string(ckpt.reference_index) + "\n";
  out += "audio_layout = " + layout_to_string(ckpt.audio.layout) + "\n";
  out += "audio_values = " + std::to_string(ckpt.audio.values.size()) + "\n";
  append_values(out, ckpt.audio.values);
  if (ckpt.kind == "alignnet") {
    const AlignmentHead& head = *ckpt.head;
    out += "head_layout = " + layout_to_string(head.mlp.layout) + "\n";
    out += "head_values = " + std::to_string(head.mlp.values.size()) + "\n";
    append_values(out, head.mlp.values);
    out += "embedding_dim = " + std::to_string(head.embeddings.dim) + "\n";
    out += "embedding_rows = " + std::to_string(head.embeddings.rows.rows) + "\n";
    for (int r = 0; r < head.embeddings.rows.rows; ++r) {
      for (int c = 0; c < head.embeddings.dim; ++c) {
        if (c) out += " ";
        out += format_g17(head.embeddings.rows.at(r, c));
      }
      out += "\n";
    }
  }
  write_text_file(path, out);
}

Checkpoint read_checkpoint(const std::string& path) {
  LineReader in(split_lines(read_text_file(path)), path);
  Checkpoint ckpt;
  ckpt.kind = in.expect("kind");
  if (ckpt.kind != "audio" && ckpt.kind != "alignnet") {
    throw IoError(path + ": unknown checkpoint kind '" + ckpt.kind + "'");
  }
  ckpt.dataset_names = split_list(in.expect("datasets"));
  ckpt.reference_index =
      static_cast<int>(parse_long(in.expect("reference_index")));
  ckpt.audio.layout = layout_from_string(in.expect("audio_layout"), path);
  long n_audio = parse_long(in.expect("audio_values"));
  if (n_audio != ckpt.audio.layout.param_count()) {
    throw IoError(path + ": audio value count does not match layout");
  }
  ckpt.audio.values = read_values(in, n_audio);
  if (ckpt.kind == "alignnet") {
    AlignmentHead head;
    head.mlp.layout = layout_from_string(in.expect("head_layout"), path);
    long n_head = parse_long(in.expect("head_values"));
    if (n_head != head.mlp.layout.param_count()) {
      throw IoError(path + ": head value count does not match layout");
    }
    head.mlp.values = read_values(in, n_head);
    head.embeddings.dim = static_cast<int>(parse_long(in.expect("embedding_dim")));
    int rows = static_cast<int>(parse_long(in.expect("embedding_rows")));
    head.embeddings.rows = Matrix(rows, head.embeddings.dim);
    for (int r = 0; r < rows; ++r) {
      std::vector<std::string> cells = split_ws(in.next());
      if (static_cast<int>(cells.size()) != head.embeddings.dim) {
        throw IoError(path + ": embedding row has wrong width");
      }
      for (int c = 0; c < head.embeddings.dim; ++c) {
        head.embeddings.rows.at(r, c) =
            parse_double(cells[static_cast<std::size_t>(c)]);
      }
    }
    ckpt.head = std::move(head);
  }
  return ckpt;
}

// ---- training log -----------------------------------------------------

std::string render_train_log(const std::vector<EpochRecord>& history,
                             const std::vector<std::string>& dataset_names) {
  std::string out;
  char hash_buf[24];
  for (const EpochRecord& rec : history) {
    out += "epoch=" + std::to_string(rec.epoch);
    out += " frozen=" + std::string(rec.frozen ? "1" : "0");
    out += " bal_active=" + std::string(rec.bal_active ? "1" : "0");
    out += " train_lcc=" + format_g17(rec.train_lcc);
    out += " val_loss=" + format_g17(rec.val_weighted_loss);
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(rec.audio_hash));
    out += " audio_hash=" + std::string(hash_buf);
    for (std::size_t j = 0; j < rec.per_dataset_train_loss.size(); ++j) {
      out += " loss." + dataset_names[j] + "=" +
             format_g17(rec.per_dataset_train_loss[j]);
    }
    for (std::size_t j = 0; j < rec.transforms.size(); ++j) {
      out += " scale." + dataset_names[j] + "=" + format_g17(rec.transforms[j].a);
      out += " shift." + dataset_names[j] + "=" + format_g17(rec.transforms[j].b);
    }
    out += "\n";
  }
  return out;
}

// ---- evaluation outputs -------------------------------------------------

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  if (s.size() >= width) return s;
  return std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  if (s.size() >= width) return s;
  return s + std::string(width - s.size(), ' ');
}

}  // namespace

std::string render_eval_report(const EvalReport& report) {
  bool any_latent = false;
  for (const DatasetScore& ds : report.per_dataset) {
    if (ds.latent_lcc.has_value()) any_latent = true;
  }
  std::size_t name_w = 7;
  for (const DatasetScore& ds : report.per_dataset) {
    name_w = std::max(name_w, ds.name.size());
  }
  std::string out;
  out += pad_right("dataset", name_w) + pad_left("n", 7) + pad_left("LCC", 9) +
         pad_left("RMSE", 9);
  if (any_latent) out += pad_left("latent-LCC", 12);
  out += "\n";
  auto row = [&](const DatasetScore& ds) {
    out += pad_right(ds.name, name_w);
    out += pad_left(std::to_string(ds.n), 7);
    out += pad_left(ds.lcc_defined ? fixed4(ds.lcc) : "undef", 9);
    out += pad_left(fixed4(ds.rmse), 9);
    if (any_latent) {
      out += pad_left(ds.latent_lcc ? fixed4(*ds.latent_lcc) : "", 12);
    }
    out += "\n";
  };
  for (const DatasetScore& ds : report.per_dataset) row(ds);
  row(report.pooled);
  return out;
}

std::string render_eval_tsv(const EvalReport& report) {
  std::string out = "dataset\tn\tlcc\trmse\tlatent_lcc\n";
  auto row = [&](const DatasetScore& ds) {
    out += ds.name + "\t" + std::to_string(ds.n) + "\t";
    out += ds.lcc_defined ? format_g17(ds.lcc) : "undefined";
    out += "\t" + format_g17(ds.rmse) + "\t";
    if (ds.latent_lcc) out += format_g17(*ds.latent_lcc);
    out += "\n";
  };
  for (const DatasetScore& ds : report.per_dataset) row(ds);
  row(report.pooled);
  return out;
}

std::string render_predictions_tsv(const EvalReport& report) {
  std::string out = "dataset\tfile_id\ttarget\testimate\n";
  for (std::size_t i = 0; i < report.item_target.size(); ++i) {
    out += report.item_dataset[i] + "\t" + report.item_file_id[i] + "\t" +
           format_g17(report.item_target[i]) + "\t" +
           format_g17(report.item_estimate[i]) + "\n";
  }
  return out;
}

PredictionSet read_predictions_tsv(const std::string& path) {
  std::vector<std::string> lines = split_lines(read_text_file(path));
  if (lines.empty() || trim(lines[0]) != "dataset\tfile_id\ttarget\testimate") {
    throw IoError(path + ": not a predictions file");
  }
  PredictionSet set;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      std::size_t tab = lines[i].find('\t', pos);
      if (tab == std::string::npos) {
        cells.push_back(lines[i].substr(pos));
        break;
      }
      cells.push_back(lines[i].substr(pos, tab - pos));
      pos = tab + 1;
    }
    if (cells.size() != 4) {
      throw IoError(path + ":" + std::to_string(i + 1) + ": expected 4 columns");
    }
    PredictionItem item;
    item.dataset = cells[0];
    item.file_id = cells[1];
    item.target = parse_double(trim(cells[2]));
    item.estimate = parse_double(trim(cells[3]));
    set.push_back(std::move(item));
  }
  if (set.empty()) throw IoError(path + ": no prediction rows");
  return set;
}

namespace {

std::string interval_text(const Interval& ci) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "[%+.4f, %+.4f]", ci.lo, ci.hi);
  return buf;
}

}  // namespace

std::string render_comparison(const Comparison& cmp) {
  std::size_t name_w = 7;
  for (const ComparisonRow& row : cmp.rows) {
    name_w = std::max(name_w, row.dataset.size());
  }
  std::string out;
  out += "A = " + cmp.label_a + "\n";
  out += "B = " + cmp.label_b + "\n";
  char lvl[48];
  std::snprintf(lvl, sizeof(lvl), "confidence level = %g", cmp.level);
  out += std::string(lvl) + "  (* = interval excludes zero)\n\n";
  out += pad_right("dataset", name_w) + pad_left("n", 7) +
         pad_left("LCC(A)", 9) + pad_left("LCC(B)", 9) +
         pad_left("dLCC CI", 20) + pad_left("sig", 5) + pad_left("RMSE(A)", 10) +
         pad_left("RMSE(B)", 9) + pad_left("dRMSE CI", 20) + pad_left("sig", 5) +
         "\n";
  for (const ComparisonRow& row : cmp.rows) {
    out += pad_right(row.dataset, name_w);
    out += pad_left(std::to_string(row.n), 7);
    if (row.lcc_defined) {
      out += pad_left(fixed4(row.lcc_a), 9);
      out += pad_left(fixed4(row.lcc_b), 9);
      out += pad_left(interval_text(row.lcc_ci), 20);
      out += pad_left(row.lcc_significant ? "*" : "", 5);
    } else {
      out += pad_left("undef", 9) + pad_left("undef", 9) + pad_left("", 20) +
             pad_left("", 5);
    }
    out += pad_left(fixed4(row.rmse_a), 10);
    out += pad_left(fixed4(row.rmse_b), 9);
    out += pad_left(interval_text(row.rmse_ci), 20);
    out += pad_left(row.rmse_significant ? "*" : "", 5);
    out += "\n";
  }
  return out;
}

std::string render_comparison_tsv(const Comparison& cmp) {
  std::string out =
      "dataset\tn\tlcc_a\tlcc_b\tlcc_ci_lo\tlcc_ci_hi\tlcc_significant\t"
      "rmse_a\trmse_b\trmse_ci_lo\trmse_ci_hi\trmse_significant\n";
  for (const ComparisonRow& row : cmp.rows) {
    out += row.dataset + "\t" + std::to_string(row.n) + "\t";
    if (row.lcc_defined) {
      out += format_g17(row.lcc_a) + "\t" + format_g17(row.lcc_b) + "\t" +
             format_g17(row.lcc_ci.lo) + "\t" + format_g17(row.lcc_ci.hi) +
             "\t" + (row.lcc_significant ? "1" : "0");
    } else {
      out += "undefined\tundefined\t\t\t0";
    }
    out += "\t" + format_g17(row.rmse_a) + "\t" + format_g17(row.rmse_b) +
           "\t" + format_g17(row.rmse_ci.lo) + "\t" +
           format_g17(row.rmse_ci.hi) + "\t" +
           (row.rmse_significant ? "1" : "0") + "\n";
  }
  return out;
}

// ---- alignment curves -----------------------------------------------------

std::string render_curve_csv(const AlignmentCurve& curve) {
  std::string out;
  if (curve.fitted) {
    out += "# fitted_cubic " + format_g17(curve.fitted->c[0]) + " " +
           format_g17(curve.fitted->c[1]) + " " + format_g17(curve.fitted->c[2]) +
           " " + format_g17(curve.fitted->c[3]) + "\n";
  }
  out += "intermediate,aligned\n";
  for (std::size_t i = 0; i < curve.input.size(); ++i) {
    out += format_g17(curve.input[i]) + "," + format_g17(curve.output[i]) + "\n";
  }
  return out;
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

std::string render_curves_svg(
    const std::vector<AlignmentCurve>& curves,
    const std::vector<std::vector<std::pair<double, double>>>& overlays) {
  if (curves.empty()) throw ShapeError("render_curves_svg: no curves");
  double xmin = curves[0].input.front(), xmax = xmin;
  double ymin = curves[0].output.front(), ymax = ymin;
  for (const AlignmentCurve& c : curves) {
    for (double v : c.input) {
      xmin = std::min(xmin, v);
      xmax = std::max(xmax, v);
    }
    for (double v : c.output) {
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  for (const auto& overlay : overlays) {
    for (const auto& [x, y] : overlay) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  // Keep the identity guide in frame.
  ymin = std::min(ymin, xmin);
  ymax = std::max(ymax, xmax);
  double xpad = std::max(1e-9, 0.05 * (xmax - xmin));
  double ypad = std::max(1e-9, 0.05 * (ymax - ymin));
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;

  const double width = 720, height = 520;
  const double left = 62, right = 20, top = 20, bottom = 48;
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  auto sx = [&](double v) { return left + (v - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double v) { return top + (ymax - v) / (ymax - ymin) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" "
         "height=\"520\" viewBox=\"0 0 720 520\">\n";
  svg += "<rect width=\"720\" height=\"520\" fill=\"white\"/>\n";
  svg += "<clipPath id=\"plot\"><rect x=\"" + svg_num(left) + "\" y=\"" +
         svg_num(top) + "\" width=\"" + svg_num(pw) + "\" height=\"" +
         svg_num(ph) + "\"/></clipPath>\n";

  // Grid and ticks.
  const int n_ticks = 6;
  for (int i = 0; i < n_ticks; ++i) {
    double fx = xmin + (xmax - xmin) * i / (n_ticks - 1);
    double fy = ymin + (ymax - ymin) * i / (n_ticks - 1);
    svg += "<line x1=\"" + svg_num(sx(fx)) + "\" y1=\"" + svg_num(top) +
           "\" x2=\"" + svg_num(sx(fx)) + "\" y2=\"" + svg_num(top + ph) +
           "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + svg_num(left) + "\" y1=\"" + svg_num(sy(fy)) +
           "\" x2=\"" + svg_num(left + pw) + "\" y2=\"" + svg_num(sy(fy)) +
           "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + svg_num(sx(fx)) + "\" y=\"" + svg_num(top + ph + 18) +
           "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#333\">" +
           tick_label(fx) + "</text>\n";
    svg += "<text x=\"" + svg_num(left - 8) + "\" y=\"" + svg_num(sy(fy) + 4) +
           "\" font-size=\"12\" text-anchor=\"end\" fill=\"#333\">" +
           tick_label(fy) + "</text>\n";
  }
  svg += "<rect x=\"" + svg_num(left) + "\" y=\"" + svg_num(top) +
         "\" width=\"" + svg_num(pw) + "\" height=\"" + svg_num(ph) +
         "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"" + svg_num(left + pw / 2) + "\" y=\"" +
         svg_num(height - 10) +
         "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#111\">"
         "intermediate score</text>\n";
  svg += "<text x=\"16\" y=\"" + svg_num(top + ph / 2) +
         "\" font-size=\"13\" text-anchor=\"middle\" fill=\"#111\" "
         "transform=\"rotate(-90 16 " +
         svg_num(top + ph / 2) + ")\">aligned score</text>\n";

  // Identity guide.
  double glo = std::max(xmin, ymin), ghi = std::min(xmax, ymax);
  svg += "<g clip-path=\"url(#plot)\">\n";
  svg += "<line x1=\"" + svg_num(sx(glo)) + "\" y1=\"" + svg_num(sy(glo)) +
         "\" x2=\"" + svg_num(sx(ghi)) + "\" y2=\"" + svg_num(sy(ghi)) +
         "\" stroke=\"#999\" stroke-width=\"1.5\" stroke-dasharray=\"7 5\"/>\n";

  auto polyline = [&](const std::vector<double>& xs,
                      const std::vector<double>& ys, const std::string& style) {
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) pts += " ";
      pts += svg_num(sx(xs[i])) + "," + svg_num(sy(ys[i]));
    }
    return "<polyline points=\"" + pts + "\" fill=\"none\" " + style + "/>\n";
  };

  for (std::size_t k = 0; k < curves.size(); ++k) {
    std::string color = kPalette[k % kPaletteSize];
    svg += polyline(curves[k].input, curves[k].output,
                    "stroke=\"" + color + "\" stroke-width=\"2\"");
  }
  for (const auto& overlay : overlays) {
    if (overlay.empty()) continue;
    std::vector<double> xs, ys;
    for (const auto& [x, y] : overlay) {
      xs.push_back(x);
      ys.push_back(y);
    }
    svg += polyline(xs, ys,
                    "stroke=\"#111\" stroke-width=\"2\" stroke-dasharray=\"2 4\"");
  }
  svg += "</g>\n";

  // Legend.
  double ly = top + 16;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    std::string color = kPalette[k % kPaletteSize];
    svg += "<line x1=\"" + svg_num(left + 12) + "\" y1=\"" + svg_num(ly - 4) +
           "\" x2=\"" + svg_num(left + 36) + "\" y2=\"" + svg_num(ly - 4) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + svg_num(left + 42) + "\" y=\"" + svg_num(ly) +
           "\" font-size=\"12\" fill=\"#111\">" + curves[k].dataset_name +
           "</text>\n";
    ly += 16;
  }
  svg += "<line x1=\"" + svg_num(left + 12) + "\" y1=\"" + svg_num(ly - 4) +
         "\" x2=\"" + svg_num(left + 36) + "\" y2=\"" + svg_num(ly - 4) +
         "\" stroke=\"#999\" stroke-width=\"1.5\" stroke-dasharray=\"7 5\"/>\n";
  svg += "<text x=\"" + svg_num(left + 42) + "\" y=\"" + svg_num(ly) +
         "\" font-size=\"12\" fill=\"#111\">identity</text>\n";
  ly += 16;
  bool any_overlay = false;
  for (const auto& overlay : overlays) {
    if (!overlay.empty()) any_overlay = true;
  }
  if (any_overlay) {
    svg += "<line x1=\"" + svg_num(left + 12) + "\" y1=\"" + svg_num(ly - 4) +
           "\" x2=\"" + svg_num(left + 36) + "\" y2=\"" + svg_num(ly - 4) +
           "\" stroke=\"#111\" stroke-width=\"2\" stroke-dasharray=\"2 4\"/>\n";
    svg += "<text x=\"" + svg_num(left + 42) + "\" y=\"" + svg_num(ly) +
           "\" font-size=\"12\" fill=\"#111\">ground truth</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

// ---- run-directory plumbing ------------------------------------------------

bool path_exists(const std::string& path) { return fs::exists(path); }

void ensure_run_dir(const std::string& path, bool force) {
  std::error_code ec;
  if (fs::exists(path, ec)) {
    if (!fs::is_directory(path, ec)) {
      throw IoError(path + " exists and is not a directory");
    }
    if (!fs::is_empty(path, ec) && !force) {
      throw IoError("run directory already exists: " + path +
                    " (pass --force to reuse it)");
    }
    return;
  }
  if (!fs::create_directories(path, ec) && ec) {
    throw IoError("cannot create directory " + path + ": " + ec.message());
  }
}

void require_writable(const std::string& path, bool force) {
  if (fs::exists(path) && !force) {
    throw IoError("refusing to overwrite " + path + " (pass --force)");
  }
}

}  // namespace alignnet

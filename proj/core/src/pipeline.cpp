#include "qcap/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "qcap/encode.hpp"
#include "qcap/errors.hpp"
#include "qcap/hashing.hpp"
#include "qcap/nn_model.hpp"
#include "qcap/nn_train.hpp"

namespace qcap {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw DataError("short write to " + path);
}

json space_to_json(const SearchSpace& s) {
  json j;
  j["conv_layer_choices"] = s.conv_layer_choices;
  j["min_kernels"] = s.min_kernels;
  j["max_kernels"] = s.max_kernels;
  j["min_kw"] = s.min_kw;
  j["max_kw"] = s.max_kw;
  j["min_kd"] = s.min_kd;
  j["max_kd"] = s.max_kd;
  j["pool_depth_choices"] = s.pool_depth_choices;
  std::vector<std::string> modes;
  for (const PoolMode m : s.pool_mode_choices)
    modes.push_back(m == PoolMode::Avg ? "avg" : "max");
  j["pool_mode_choices"] = modes;
  j["min_dense_units"] = s.min_dense_units;
  j["max_dense_units"] = s.max_dense_units;
  j["batch_choices"] = s.batch_choices;
  j["learning_rate_choices"] = s.learning_rate_choices;
  j["epochs"] = s.epochs;
  j["patience"] = s.patience;
  return j;
}

SearchSpace space_from_json(const json& j) {
  SearchSpace s;
  if (j.contains("conv_layer_choices"))
    s.conv_layer_choices = j.at("conv_layer_choices").get<std::vector<int>>();
  if (j.contains("min_kernels")) s.min_kernels = j.at("min_kernels").get<int>();
  if (j.contains("max_kernels")) s.max_kernels = j.at("max_kernels").get<int>();
  if (j.contains("min_kw")) s.min_kw = j.at("min_kw").get<int>();
  if (j.contains("max_kw")) s.max_kw = j.at("max_kw").get<int>();
  if (j.contains("min_kd")) s.min_kd = j.at("min_kd").get<int>();
  if (j.contains("max_kd")) s.max_kd = j.at("max_kd").get<int>();
  if (j.contains("pool_depth_choices"))
    s.pool_depth_choices = j.at("pool_depth_choices").get<std::vector<int>>();
  if (j.contains("pool_mode_choices")) {
    s.pool_mode_choices.clear();
    for (const auto& m : j.at("pool_mode_choices")) {
      const std::string name = m.get<std::string>();
      if (name == "avg")
        s.pool_mode_choices.push_back(PoolMode::Avg);
      else if (name == "max")
        s.pool_mode_choices.push_back(PoolMode::Max);
      else
        throw ConfigError("unknown pool mode: " + name);
    }
  }
  if (j.contains("min_dense_units")) s.min_dense_units = j.at("min_dense_units").get<int>();
  if (j.contains("max_dense_units")) s.max_dense_units = j.at("max_dense_units").get<int>();
  if (j.contains("batch_choices"))
    s.batch_choices = j.at("batch_choices").get<std::vector<int>>();
  if (j.contains("learning_rate_choices"))
    s.learning_rate_choices = j.at("learning_rate_choices").get<std::vector<double>>();
  if (j.contains("epochs")) s.epochs = j.at("epochs").get<int>();
  if (j.contains("patience")) s.patience = j.at("patience").get<int>();
  return s;
}

json config_to_json_obj(const ExperimentConfig& cfg) {
  json j;
  j["format"] = "experiment-config";
  j["format_version"] = 1;
  j["device"] = cfg.device;
  json sampler;
  sampler["kind"] = cfg.sampler.kind;
  sampler["widths"] = cfg.sampler.widths;
  sampler["depths"] = cfg.sampler.depths;
  sampler["xi"] = cfg.sampler.xi;
  sampler["count"] = cfg.sampler.count;
  sampler["germ_length"] = cfg.sampler.germ_length;
  j["sampler"] = sampler;
  json model;
  model["variant"] = cfg.model.variant;
  model["seed"] = cfg.model.seed;
  model["max_1q"] = cfg.model.max_1q;
  model["max_2q"] = cfg.model.max_2q;
  model["hi"] = cfg.model.hi;
  model["infidelity"] = cfg.model.infidelity;
  model["gp_max_ratio"] = cfg.model.gp_max_ratio;
  model["gp_tau"] = cfg.model.gp_tau;
  model["dt_add"] = cfg.model.dt_add;
  model["file"] = cfg.model.file;
  j["model"] = model;
  j["n_shots"] = cfg.n_shots;
  j["splits"] = {{"train", cfg.splits.train},
                 {"validate", cfg.splits.validate},
                 {"test", cfg.splits.test}};
  j["subset_sizes"] = cfg.subset_sizes;
  json sel;
  sel["mode"] = cfg.selection.mode;
  sel["space"] = space_to_json(cfg.selection.space);
  sel["budget"] = cfg.selection.budget;
  sel["erm_file"] = cfg.selection.erm_file;
  j["selection"] = sel;
  j["d_max"] = cfg.d_max;
  j["out_dir"] = cfg.out_dir;
  j["master_seed"] = cfg.master_seed;
  j["jobs"] = cfg.jobs;
  return j;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.sampler.kind != "randomized" && cfg.sampler.kind != "periodic")
    throw ConfigError("sampler.kind must be randomized or periodic");
  if (cfg.sampler.count < 0) throw ConfigError("sampler.count must be >= 0");
  if (cfg.sampler.widths.empty()) throw ConfigError("sampler.widths must be non-empty");
  for (const int w : cfg.sampler.widths)
    if (w < 1) throw ConfigError("sampler widths must be >= 1");
  if (cfg.sampler.depths.empty()) throw ConfigError("sampler.depths must be non-empty");
  for (const int d : cfg.sampler.depths)
    if (d < 2 || d % 2 != 0) throw ConfigError("mirror depths must be even and >= 2");
  if (cfg.sampler.xi < 0.0 || cfg.sampler.xi > 1.0)
    throw ConfigError("sampler.xi must lie in [0, 1]");
  if (cfg.sampler.germ_length < 1) throw ConfigError("sampler.germ_length must be >= 1");
  static const std::vector<std::string> kVariants{"biased-lps",     "uniform-lps", "growing-pains",
                                                  "double-trouble", "coherent",    "file"};
  if (std::find(kVariants.begin(), kVariants.end(), cfg.model.variant) == kVariants.end())
    throw ConfigError("unknown model.variant: " + cfg.model.variant);
  if (cfg.model.variant == "file") {
    if (cfg.model.file.empty()) throw ConfigError("model.variant file requires model.file");
    if (!fs::exists(cfg.model.file))
      throw ConfigError("model.file does not exist: " + cfg.model.file);
  }
  if (cfg.n_shots < 0) throw ConfigError("n_shots must be >= 0");
  const double total = cfg.splits.train + cfg.splits.validate + cfg.splits.test;
  if (cfg.splits.train <= 0 || cfg.splits.validate < 0 || cfg.splits.test < 0 ||
      std::abs(total - 1.0) > 1e-9)
    throw ConfigError("split fractions must be non-negative, train positive, and sum to 1");
  if (cfg.selection.mode != "cnn" && cfg.selection.mode != "erm-fit" &&
      cfg.selection.mode != "erm-load")
    throw ConfigError("selection.mode must be cnn, erm-fit, or erm-load");
  if (cfg.selection.mode == "cnn" && cfg.selection.budget < 1)
    throw ConfigError("selection.budget must be >= 1");
  if (cfg.selection.mode == "erm-load") {
    if (cfg.selection.erm_file.empty())
      throw ConfigError("selection.mode erm-load requires selection.erm_file");
    if (!fs::exists(cfg.selection.erm_file))
      throw ConfigError("selection.erm_file does not exist: " + cfg.selection.erm_file);
  }
  if (cfg.d_max < 0) throw ConfigError("d_max must be >= 0");
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
}

// d_max actually used: configured value, or deepest emitted circuit
// (mirror depth + the 4-layer central block).
int resolve_d_max(const ExperimentConfig& cfg) {
  if (cfg.d_max > 0) return cfg.d_max;
  const int deepest = *std::max_element(cfg.sampler.depths.begin(), cfg.sampler.depths.end());
  return deepest + 4;
}

int snapped_germ(int germ, int half_layers) {
  return std::max(1, std::gcd(std::max(1, germ), std::max(1, half_layers)));
}

// Collects the artifacts of one command/preset run and writes the
// manifest last. All paths are relative to dir, so reruns into any
// directory produce byte-identical files.
struct ArtifactWriter {
  std::string dir;
  json inputs = json::object();
  json outputs = json::object();
  json extra = json::object();
  std::vector<std::string> files;

  explicit ArtifactWriter(std::string d) : dir(std::move(d)) { fs::create_directories(dir); }

  void note_input(const std::string& name, const std::string& hash) { inputs[name] = hash; }

  void emit(const std::string& rel, const std::string& bytes) {
    write_file(dir + "/" + rel, bytes);
    outputs[rel] = content_hash(bytes);
    files.push_back(rel);
  }

  void emit_model(const std::string& rel, const CnnModel& m) {
    const std::string path = dir + "/" + rel;
    save_cnn(m, path);
    outputs[rel] = file_hash(path);
    files.push_back(rel);
  }

  void finish(const std::string& command, uint64_t master_seed) {
    json manifest;
    manifest["command"] = command;
    manifest["format"] = "run-manifest";
    manifest["format_version"] = 1;
    manifest["master_seed"] = master_seed;
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    for (auto it = extra.begin(); it != extra.end(); ++it) manifest[it.key()] = it.value();
    const std::string bytes = manifest.dump(2) + "\n";
    write_file(dir + "/manifest.json", bytes);
    files.push_back("manifest.json");
  }
};

void progress(const std::string& msg) { std::cerr << msg << "\n"; }

json audit_splits(const CapabilityDataset& ds) {
  std::set<std::string> train_ids, val_ids, test_ids;
  for (const auto& r : ds.records) {
    if (r.split == "train") train_ids.insert(r.id);
    else if (r.split == "validate") val_ids.insert(r.id);
    else if (r.split == "test") test_ids.insert(r.id);
    else throw DataError("unknown split tag: " + r.split);
  }
  size_t overlap = 0;
  for (const auto& id : test_ids)
    if (train_ids.count(id) || val_ids.count(id)) ++overlap;
  for (const auto& id : val_ids)
    if (train_ids.count(id)) ++overlap;
  if (train_ids.size() + val_ids.size() + test_ids.size() != ds.records.size())
    throw DataError("duplicate record ids across splits");
  if (overlap != 0) throw DataError("split leakage: an id appears in two splits");
  json a;
  a["train"] = train_ids.size();
  a["validate"] = val_ids.size();
  a["test"] = test_ids.size();
  a["overlap"] = overlap;
  return a;
}

std::string circuits_to_jsonl(const SampledCircuits& sc, const DeviceGraph& dev,
                              uint64_t master_seed) {
  std::ostringstream out;
  json header;
  header["type"] = "circuit-set";
  header["format_version"] = 1;
  header["count"] = sc.circuits.size();
  header["device_hash"] = content_hash(device_to_json(dev));
  header["master_seed"] = master_seed;
  out << header.dump() << "\n";
  for (size_t i = 0; i < sc.circuits.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "c%06zu", i);
    json line;
    line["type"] = "circuit";
    line["id"] = id;
    line["kind"] = sc.kinds[i];
    line["width"] = sc.circuits[i].width();
    line["depth"] = sc.circuits[i].depth();
    line["circuit"] = serialize_circuit(sc.circuits[i]);
    out << line.dump() << "\n";
  }
  return out.str();
}

SampledCircuits circuits_from_jsonl(const std::string& text, const DeviceGraph& dev) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty circuit set");
  SampledCircuits sc;
  size_t expected = 0;
  try {
    const json header = json::parse(line);
    if (header.at("type").get<std::string>() != "circuit-set")
      throw SchemaError("not a circuit-set file");
    if (header.at("format_version").get<int>() != 1)
      throw UnsupportedVersion("unsupported circuit-set version");
    if (header.at("device_hash").get<std::string>() != content_hash(device_to_json(dev)))
      throw DataError("circuit set was sampled for a different device");
    expected = header.at("count").get<size_t>();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      if (rec.at("type").get<std::string>() != "circuit") throw SchemaError("bad record type");
      sc.circuits.push_back(parse_circuit(rec.at("circuit").get<std::string>(), dev.n));
      sc.kinds.push_back(rec.at("kind").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed circuit set: ") + e.what());
  }
  if (sc.circuits.size() != expected)
    throw SchemaError("circuit-set count mismatch");
  return sc;
}

// n_train/n_validate for a train+validate budget of n, at the configured
// train:validate ratio.
std::pair<size_t, size_t> fit_pool_counts(size_t n, const SplitFractions& f) {
  const double ratio = f.train / (f.train + f.validate);
  auto n_train = static_cast<size_t>(std::llround(static_cast<double>(n) * ratio));
  n_train = std::min(std::max<size_t>(n_train, 1), n - 1);
  return {n_train, n - n_train};
}

MetricsReport cnn_report(const CnnModel& m, const CapabilityDataset& ds, const std::string& split,
                         const std::string& ds_id, const std::string& model_id) {
  const bool strip = m.spec.channels == ChannelLayout::kGateChannels;
  const auto pred = [&](const Circuit& c) {
    Tensor3 t = encode(c, ds.device, m.spec.cols);
    if (strip) t = strip_sensitivity(t);
    return forward(m, t);
  };
  return build_report(ds, split, pred, ds_id, model_id);
}

MetricsReport erm_report(const ErmParams& p, const CapabilityDataset& ds, const std::string& split,
                         const std::string& ds_id, const std::string& model_id) {
  const auto pred = [&](const Circuit& c) { return erm_predict(p, c); };
  return build_report(ds, split, pred, ds_id, model_id);
}

// Two-phase protocol: early-stopped run on train vs validate picks the
// epoch count, then a fresh model retrains on train + validate for exactly
// that many epochs.
TrainOutcome train_final(const CnnSpec& arch, const CapabilityDataset& sub, int d_max, bool strip,
                         uint64_t seed, int jobs) {
  const EncodedSplit tr = encode_split(sub, "train", d_max, strip);
  const EncodedSplit va = encode_split(sub, "validate", d_max, strip);
  CnnSpec spec = arch;
  spec.channels = strip ? ChannelLayout::kGateChannels : ChannelLayout::kChannels;
  spec.seed = seed;
  TrainOptions phase1;
  phase1.jobs = jobs;
  const TrainOutcome selected = train_cnn(spec, tr.xs, tr.ys, va.xs, va.ys, phase1);
  TrainOptions phase2;
  phase2.merge_validate = true;
  phase2.fixed_epochs = selected.best_epoch;
  phase2.jobs = jobs;
  TrainOutcome out = train_cnn(spec, tr.xs, tr.ys, va.xs, va.ys, phase2);
  out.best_epoch = selected.best_epoch;
  out.best_validate_loss = selected.best_validate_loss;
  return out;
}

std::pair<double, double> quartile_mean_delta(const std::vector<DeltaRow>& rows) {
  if (rows.empty()) throw DataError("no rows for quartile statistics");
  std::vector<size_t> order(rows.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return rows[a].s_hat < rows[b].s_hat; });
  const size_t q = std::max<size_t>(1, rows.size() / 4);
  double low = 0.0, high = 0.0;
  for (size_t i = 0; i < q; ++i) {
    low += rows[order[i]].delta;
    high += rows[order[order.size() - 1 - i]].delta;
  }
  return {low / static_cast<double>(q), high / static_cast<double>(q)};
}

std::string report_tag_text(const MetricsReport& r) { return report_to_text(r); }

std::string report_rows_to_jsonl(const MetricsReport& r) {
  std::ostringstream out;
  json header;
  header["type"] = "prediction-report";
  header["format_version"] = 1;
  header["dataset"] = r.dataset_id;
  header["model"] = r.model_id;
  header["split"] = r.split;
  header["n"] = r.n;
  header["d_kl"] = r.d_kl;
  header["d_l1"] = r.d_l1;
  if (r.r) header["r"] = *r.r;
  out << header.dump() << "\n";
  for (const auto& row : r.rows) {
    json line;
    line["type"] = "prediction";
    line["id"] = row.id;
    line["kind"] = row.kind;
    line["width"] = row.width;
    line["depth"] = row.depth;
    line["s_hat"] = row.s_hat;
    line["s_model"] = row.s_model;
    line["delta"] = row.delta;
    out << line.dump() << "\n";
  }
  return out.str();
}

struct PresetContext {
  ArtifactWriter art;
  PresetOutcome outcome;
  RunProfile profile;
  uint64_t seed;
  int jobs;

  PresetContext(const std::string& dir, RunProfile p, uint64_t s, int j)
      : art(dir), profile(p), seed(s), jobs(j) {}

  void put(const std::string& key, double v) { outcome.values[key] = v; }

  void emit_report(const std::string& stem, const MetricsReport& r) {
    art.emit(stem + ".txt", report_tag_text(r));
    art.emit(stem + ".csv", report_to_csv(r));
  }

  void finish(const std::string& preset) {
    json summary;
    summary["preset"] = preset;
    summary["profile"] = profile == RunProfile::Desk ? "desk" : "smoke";
    summary["master_seed"] = seed;
    json values = json::object();
    for (const auto& [k, v] : outcome.values) values[k] = v;
    summary["values"] = values;
    art.emit("summary.json", summary.dump(2) + "\n");
    art.finish(preset, seed);
    outcome.artifacts = art.files;
  }
};

ErrorModel make_model_for(const std::string& variant, const DeviceGraph& dev, const Rng& master,
                          RunProfile profile) {
  ModelSpec ms;
  ms.variant = variant;
  if (variant == "growing-pains" || variant == "double-trouble") {
    // Desk circuits are ~50x shallower and ~5x narrower than the study
    // this mimics, so the uniform base rate is raised to keep the label
    // range wide; the growth constant tau is rescaled so the relaxation
    // still spans the sampled depth grid instead of staying flat.
    ms.hi = 4e-4;
    ms.gp_tau = 1.0 / 7.0;
  }
  (void)profile;
  ErrorModel m;
  Rng rng = master.split("error-model");
  if (variant == "biased-lps") {
    m = sample_biased_lps(dev, rng, ms.max_1q, ms.max_2q);
  } else if (variant == "uniform-lps") {
    m = sample_uniform_lps(dev, rng, ms.hi);
  } else if (variant == "growing-pains") {
    m = sample_uniform_lps(dev, rng, ms.hi);
    m.kind = ErrorModelKind::GrowingPains;
    m.gp_max_ratio = ms.gp_max_ratio;
    m.gp_tau = ms.gp_tau;
  } else if (variant == "double-trouble") {
    m = sample_uniform_lps(dev, rng, ms.hi);
    m.kind = ErrorModelKind::DoubleTrouble;
    m.dt_add = ms.dt_add;
  } else if (variant == "coherent") {
    m = sample_coherent_model(dev, rng, ms.infidelity);
  } else {
    throw ConfigError("unknown preset model variant: " + variant);
  }
  return m;
}

struct StudyData {
  DeviceGraph dev;
  ErrorModel model;
  SampledCircuits circuits;
  CapabilityDataset parent;
  int d_max = 0;
};

StudyData build_study(PresetContext& ctx, const DeviceGraph& dev, const SamplerSpec& samp,
                      const std::string& variant, long n_shots) {
  StudyData sd;
  sd.dev = dev;
  const Rng master(ctx.seed);
  sd.model = make_model_for(variant, dev, master, ctx.profile);
  progress("  sampling " + std::to_string(samp.count) + " circuits");
  sd.circuits = sample_circuit_set(dev, samp, master.split("sample"));
  sd.d_max = *std::max_element(samp.depths.begin(), samp.depths.end()) + 4;
  progress("  labelling with the error model");
  sd.parent = build_dataset(dev, sd.circuits.circuits, sd.circuits.kinds, sd.model, n_shots,
                            SplitFractions{}, master.split("data"), ctx.jobs);
  ctx.art.emit("device.json", device_to_json(dev));
  ctx.art.emit("model.json", model_to_json(sd.model));
  ctx.art.emit("circuits.jsonl", circuits_to_jsonl(sd.circuits, dev, ctx.seed));
  ctx.art.emit("dataset.jsonl", dataset_to_jsonl(sd.parent));
  ctx.art.extra["audit"] = audit_splits(sd.parent);
  return sd;
}

SearchSpace desk_space() { return SearchSpace{}; }

SearchSpace smoke_space() {
  SearchSpace s;
  s.conv_layer_choices = {1};
  s.min_kernels = 4;
  s.max_kernels = 6;
  s.min_kd = 2;
  s.max_kd = 2;
  s.pool_depth_choices = {2};
  s.min_dense_units = 8;
  s.max_dense_units = 12;
  s.learning_rate_choices = {3e-3};
  s.epochs = 6;
  s.patience = 2;
  return s;
}

// Reference architecture used when a preset runs without a finished
// search to borrow from.
CnnSpec anchor_spec(int rows, int cols, int channels, const SearchSpace& space) {
  CnnSpec spec;
  spec.rows = rows;
  spec.cols = cols;
  spec.channels = channels;
  spec.layers = {LayerSpec::conv(12, 1, 4), LayerSpec::pool_avg(1, 4), LayerSpec::flatten(),
                 LayerSpec::dense(32, Activation::Relu), LayerSpec::dense(1, Activation::Sigmoid)};
  spec.epochs = space.epochs;
  spec.patience = space.patience;
  spec.batch = 32;
  spec.learning_rate = 1e-3;
  return spec;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
  return config_to_json_obj(cfg).dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
  ExperimentConfig cfg;
  try {
    const json j = json::parse(text);
    if (j.contains("format") && j.at("format").get<std::string>() != "experiment-config")
      throw ConfigError("not an experiment config");
    if (j.contains("format_version") && j.at("format_version").get<int>() != 1)
      throw ConfigError("unsupported config version");
    if (j.contains("device")) cfg.device = j.at("device").get<std::string>();
    if (j.contains("sampler")) {
      const json& s = j.at("sampler");
      if (s.contains("kind")) cfg.sampler.kind = s.at("kind").get<std::string>();
      if (s.contains("widths")) cfg.sampler.widths = s.at("widths").get<std::vector<int>>();
      if (s.contains("depths")) cfg.sampler.depths = s.at("depths").get<std::vector<int>>();
      if (s.contains("xi")) cfg.sampler.xi = s.at("xi").get<double>();
      if (s.contains("count")) cfg.sampler.count = s.at("count").get<int>();
      if (s.contains("germ_length")) cfg.sampler.germ_length = s.at("germ_length").get<int>();
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      if (m.contains("variant")) cfg.model.variant = m.at("variant").get<std::string>();
      if (m.contains("seed")) cfg.model.seed = m.at("seed").get<uint64_t>();
      if (m.contains("max_1q")) cfg.model.max_1q = m.at("max_1q").get<double>();
      if (m.contains("max_2q")) cfg.model.max_2q = m.at("max_2q").get<double>();
      if (m.contains("hi")) cfg.model.hi = m.at("hi").get<double>();
      if (m.contains("infidelity")) cfg.model.infidelity = m.at("infidelity").get<double>();
      if (m.contains("gp_max_ratio")) cfg.model.gp_max_ratio = m.at("gp_max_ratio").get<double>();
      if (m.contains("gp_tau")) cfg.model.gp_tau = m.at("gp_tau").get<double>();
      if (m.contains("dt_add")) cfg.model.dt_add = m.at("dt_add").get<double>();
      if (m.contains("file")) cfg.model.file = m.at("file").get<std::string>();
    }
    if (j.contains("n_shots")) cfg.n_shots = j.at("n_shots").get<long>();
    if (j.contains("splits")) {
      const json& s = j.at("splits");
      if (s.contains("train")) cfg.splits.train = s.at("train").get<double>();
      if (s.contains("validate")) cfg.splits.validate = s.at("validate").get<double>();
      if (s.contains("test")) cfg.splits.test = s.at("test").get<double>();
    }
    if (j.contains("subset_sizes"))
      cfg.subset_sizes = j.at("subset_sizes").get<std::vector<size_t>>();
    if (j.contains("selection")) {
      const json& s = j.at("selection");
      if (s.contains("mode")) cfg.selection.mode = s.at("mode").get<std::string>();
      if (s.contains("space")) cfg.selection.space = space_from_json(s.at("space"));
      if (s.contains("budget")) cfg.selection.budget = s.at("budget").get<int>();
      if (s.contains("erm_file")) cfg.selection.erm_file = s.at("erm_file").get<std::string>();
    }
    if (j.contains("d_max")) cfg.d_max = j.at("d_max").get<int>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<uint64_t>();
    if (j.contains("jobs")) cfg.jobs = j.at("jobs").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

DeviceGraph resolve_device(const std::string& name_or_path) {
  if (name_or_path == "t5") return t5_device();
  if (name_or_path.rfind("grid", 0) == 0) {
    const auto x = name_or_path.find('x');
    if (x != std::string::npos) {
      try {
        const int rows = std::stoi(name_or_path.substr(4, x - 4));
        const int cols = std::stoi(name_or_path.substr(x + 1));
        return grid_device(rows, cols);
      } catch (const std::exception&) {
        // fall through to file loading
      }
    }
  }
  if (!fs::exists(name_or_path))
    throw ConfigError("unknown device (not a builtin, not a file): " + name_or_path);
  return load_device(name_or_path);
}

ErrorModel resolve_model(const ModelSpec& spec, const DeviceGraph& dev, uint64_t master_seed) {
  if (spec.variant == "file") return load_model(spec.file);
  const Rng base = spec.seed != 0 ? Rng(spec.seed) : Rng(master_seed);
  Rng rng = base.split("error-model");
  if (spec.variant == "biased-lps") return sample_biased_lps(dev, rng, spec.max_1q, spec.max_2q);
  if (spec.variant == "uniform-lps") return sample_uniform_lps(dev, rng, spec.hi);
  if (spec.variant == "growing-pains") {
    ErrorModel m = sample_uniform_lps(dev, rng, spec.hi);
    m.kind = ErrorModelKind::GrowingPains;
    m.gp_max_ratio = spec.gp_max_ratio;
    m.gp_tau = spec.gp_tau;
    return m;
  }
  if (spec.variant == "double-trouble") {
    ErrorModel m = sample_uniform_lps(dev, rng, spec.hi);
    m.kind = ErrorModelKind::DoubleTrouble;
    m.dt_add = spec.dt_add;
    return m;
  }
  if (spec.variant == "coherent") return sample_coherent_model(dev, rng, spec.infidelity);
  throw ConfigError("unknown model.variant: " + spec.variant);
}

DirectoryLock::DirectoryLock(const std::string& dir) {
  fs::create_directories(dir);
  path_ = dir + "/.lock";
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw ConfigError("output directory is locked by another run (remove " + path_ +
                      " if that run is dead): " + dir);
  }
  ::close(fd);
}

DirectoryLock::~DirectoryLock() { ::unlink(path_.c_str()); }

SampledCircuits sample_circuit_set(const DeviceGraph& dev, const SamplerSpec& spec,
                                   const Rng& rng) {
  if (spec.count < 0) throw ConfigError("sampler.count must be >= 0");
  for (const int w : spec.widths)
    if (w < 1 || w > dev.n)
      throw ConfigError("sampler width " + std::to_string(w) + " exceeds the device");
  const bool periodic = spec.kind == "periodic";
  if (!periodic && spec.kind != "randomized")
    throw ConfigError("sampler.kind must be randomized or periodic");
  SampledCircuits out;
  out.circuits.reserve(static_cast<size_t>(spec.count));
  out.kinds.reserve(static_cast<size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    Rng child = rng.split("circuit", static_cast<uint64_t>(i));
    const int width = spec.widths[child.below(spec.widths.size())];
    const int depth = spec.depths[child.below(spec.depths.size())];
    SamplerConfig cfg;
    cfg.qubits = sample_connected_subset(dev, width, child);
    cfg.depth = depth;
    cfg.xi = spec.xi;
    cfg.kind = periodic ? MirrorKind::Periodic : MirrorKind::Randomized;
    cfg.germ_length = snapped_germ(spec.germ_length, depth / 2);
    out.circuits.push_back(periodic ? sample_periodic_mirror_circuit(dev, cfg, child)
                                    : sample_randomized_mirror_circuit(dev, cfg, child));
    out.kinds.emplace_back(periodic ? "pmc" : "rmc");
  }
  return out;
}

CapabilityDataset with_shot_noise(const CapabilityDataset& ds, long n_shots, const Rng& rng) {
  if (n_shots < 0) throw ConfigError("n_shots must be >= 0");
  CapabilityDataset out = ds;
  for (size_t i = 0; i < out.records.size(); ++i) {
    auto& r = out.records[i];
    Rng child = rng.split("shots", i);
    r.n_shots = n_shots;
    r.s_hat = add_shot_noise(r.s, n_shots, child);
  }
  return out;
}

EncodedSplit encode_split(const CapabilityDataset& ds, const std::string& split, int d_max,
                          bool strip) {
  EncodedSplit out;
  for (const size_t idx : ds.split_indices(split)) {
    const auto& r = ds.records[idx];
    Tensor3 t = encode(r.circuit, ds.device, d_max);
    if (strip) t = strip_sensitivity(t);
    out.xs.push_back(std::move(t));
    out.ys.push_back(r.s_hat);
    out.ids.push_back(r.id);
  }
  return out;
}

void cmd_sample(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.out_dir.empty()) throw ConfigError("out_dir is required");
  DirectoryLock lock(cfg.out_dir);
  ArtifactWriter art(cfg.out_dir);
  const DeviceGraph dev = resolve_device(cfg.device);
  const Rng master(cfg.master_seed);
  const SampledCircuits sc = sample_circuit_set(dev, cfg.sampler, master.split("sample"));
  ExperimentConfig echo = cfg;
  echo.out_dir.clear();
  art.emit("config.json", config_to_json(echo));
  art.emit("device.json", device_to_json(dev));
  art.emit("circuits.jsonl", circuits_to_jsonl(sc, dev, cfg.master_seed));
  art.finish("sample", cfg.master_seed);
}

void cmd_simulate(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.out_dir.empty()) throw ConfigError("out_dir is required");
  DirectoryLock lock(cfg.out_dir);
  ArtifactWriter art(cfg.out_dir);
  const DeviceGraph dev = resolve_device(cfg.device);
  const Rng master(cfg.master_seed);
  SampledCircuits sc;
  const std::string circuits_path = cfg.out_dir + "/circuits.jsonl";
  if (fs::exists(circuits_path)) {
    art.note_input("circuits.jsonl", file_hash(circuits_path));
    sc = circuits_from_jsonl(read_file(circuits_path), dev);
  } else {
    sc = sample_circuit_set(dev, cfg.sampler, master.split("sample"));
    art.emit("circuits.jsonl", circuits_to_jsonl(sc, dev, cfg.master_seed));
  }
  const ErrorModel model = resolve_model(cfg.model, dev, cfg.master_seed);
  const CapabilityDataset ds = build_dataset(dev, sc.circuits, sc.kinds, model, cfg.n_shots,
                                             cfg.splits, master.split("data"), cfg.jobs);
  ExperimentConfig echo = cfg;
  echo.out_dir.clear();
  art.emit("config.json", config_to_json(echo));
  art.emit("device.json", device_to_json(dev));
  art.emit("model.json", model_to_json(model));
  art.emit("dataset.jsonl", dataset_to_jsonl(ds));
  art.extra["audit"] = audit_splits(ds);
  if (!cfg.subset_sizes.empty()) {
    const size_t n_test = ds.split_indices("test").size();
    const Rng sub_rng = master.split("subsample");
    for (const size_t n : cfg.subset_sizes) {
      const auto [nt, nv] = fit_pool_counts(n, cfg.splits);
      const CapabilityDataset sub = subsample_nested(ds, nt, nv, n_test, sub_rng);
      art.emit("dataset-n" + std::to_string(n) + ".jsonl", dataset_to_jsonl(sub));
    }
  }
  art.finish("simulate", cfg.master_seed);
}

void cmd_train(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.out_dir.empty()) throw ConfigError("out_dir is required");
  const std::string ds_path = cfg.out_dir + "/dataset.jsonl";
  if (!fs::exists(ds_path))
    throw DataError("no dataset.jsonl in " + cfg.out_dir + " (run simulate first)");
  DirectoryLock lock(cfg.out_dir);
  ArtifactWriter art(cfg.out_dir);
  art.note_input("dataset.jsonl", file_hash(ds_path));
  const CapabilityDataset parent = load_dataset(ds_path);
  const int d_max = parent.d_max;
  const Rng master(cfg.master_seed);
  art.extra["audit"] = audit_splits(parent);

  // subset list: requested train+validate budgets, or the full splits
  std::vector<size_t> sizes = cfg.subset_sizes;
  const size_t full_pool =
      parent.split_indices("train").size() + parent.split_indices("validate").size();
  if (sizes.empty()) sizes.push_back(full_pool);
  std::sort(sizes.begin(), sizes.end());
  const size_t n_test = parent.split_indices("test").size();
  const Rng sub_rng = master.split("subsample");
  const auto subset_at = [&](size_t n) {
    const auto [nt, nv] = fit_pool_counts(n, cfg.splits);
    return subsample_nested(parent, nt, nv, n_test, sub_rng);
  };
  const auto tag_of = [&](size_t n) { return "n" + std::to_string(n); };

  if (cfg.selection.mode == "cnn") {
    const CapabilityDataset largest = subset_at(sizes.back());
    const EncodedSplit tr = encode_split(largest, "train", d_max);
    const EncodedSplit va = encode_split(largest, "validate", d_max);
    progress("searching architectures (budget " + std::to_string(cfg.selection.budget) + ")");
    const SearchResult sr =
        hyperparameter_search(cfg.selection.space, tr.xs, tr.ys, va.xs, va.ys,
                              cfg.selection.budget, master.split("search"), cfg.jobs);
    art.emit("architecture.json", spec_to_json(sr.best));
    json search_log;
    search_log["best_validate_loss"] = sr.best_validate_loss;
    search_log["best_epoch"] = sr.best_epoch;
    json trials = json::array();
    for (const auto& t : sr.trials)
      trials.push_back({{"validate_loss", t.validate_loss},
                        {"best_epoch", t.best_epoch},
                        {"parameters", parameter_count(t.spec)}});
    search_log["trials"] = trials;
    art.emit("search.json", search_log.dump(2) + "\n");
    for (const size_t n : sizes) {
      progress("training cnn at " + tag_of(n));
      const CapabilityDataset sub = subset_at(n);
      const TrainOutcome res =
          train_final(sr.best, sub, d_max, false, master.split("train", n).next(), cfg.jobs);
      art.emit_model("cnn-" + tag_of(n) + ".model", res.model);
      const MetricsReport rep =
          cnn_report(res.model, sub, "test", "dataset-" + tag_of(n), "cnn-" + tag_of(n));
      art.emit("report-" + tag_of(n) + ".txt", report_to_text(rep));
      art.emit("report-" + tag_of(n) + ".csv", report_to_csv(rep));
    }
  } else if (cfg.selection.mode == "erm-fit") {
    for (const size_t n : sizes) {
      progress("fitting erm at " + tag_of(n));
      const CapabilityDataset sub = subset_at(n);
      ErmFitConfig fit_cfg;
      fit_cfg.splits = {"train", "validate"};
      const ErmFitResult fit = fit_erm(sub, fit_cfg);
      art.emit("erm-" + tag_of(n) + ".json", erm_to_json(fit.params, parent.device));
      json log;
      log["loss"] = fit.loss;
      log["iterations"] = fit.iterations;
      log["converged"] = fit.converged;
      art.emit("erm-fit-" + tag_of(n) + ".json", log.dump(2) + "\n");
      const MetricsReport rep =
          erm_report(fit.params, sub, "test", "dataset-" + tag_of(n), "erm-" + tag_of(n));
      art.emit("report-" + tag_of(n) + ".txt", report_to_text(rep));
      art.emit("report-" + tag_of(n) + ".csv", report_to_csv(rep));
    }
  } else {  // erm-load
    art.note_input("erm_file", file_hash(cfg.selection.erm_file));
    const ErmParams p = load_device_erm(cfg.selection.erm_file, parent.device);
    art.emit("erm-loaded.json", erm_to_json(p, parent.device));
  }
  ExperimentConfig echo = cfg;
  echo.out_dir.clear();
  art.emit("config.json", config_to_json(echo));
  art.finish("train", cfg.master_seed);
}

void cmd_evaluate(const std::string& model_path, const std::string& dataset_path,
                  const std::string& out_dir, const std::string& split, int jobs,
                  bool out_of_distribution, const std::string& format) {
  if (out_dir.empty()) throw ConfigError("out_dir is required");
  if (format != "csv" && format != "jsonl")
    throw ConfigError("format must be csv or jsonl");
  DirectoryLock lock(out_dir);
  ArtifactWriter art(out_dir);
  art.note_input("model", file_hash(model_path));
  art.note_input("dataset", file_hash(dataset_path));
  const CapabilityDataset ds = load_dataset(dataset_path);
  const std::string model_bytes = read_file(model_path);
  const std::string ds_id = "ds-" + content_hash(dataset_to_jsonl(ds));
  const std::string model_id = "model-" + content_hash(model_bytes);
  MetricsReport report;
  if (model_bytes.rfind("QCAPMODL", 0) == 0) {
    const CnnModel m = load_cnn(model_path);
    if (m.spec.rows != ds.device.n)
      throw DataError("model expects a device with " + std::to_string(m.spec.rows) + " qubits");
    if (ds.d_max > m.spec.cols)
      throw DataError("dataset d_max " + std::to_string(ds.d_max) +
                      " exceeds the model's input depth " + std::to_string(m.spec.cols) +
                      "; re-encode the dataset and retrain at the larger d_max");
    report = cnn_report(m, ds, split, ds_id, model_id);
  } else {
    const ErmParams p = load_device_erm(model_path, ds.device);
    report = erm_report(p, ds, split, ds_id, model_id);
  }
  (void)jobs;
  art.extra["split"] = split;
  art.extra["out_of_distribution"] = out_of_distribution;
  art.emit("report.txt", report_to_text(report));
  if (format == "csv")
    art.emit("report.csv", report_to_csv(report));
  else
    art.emit("report.jsonl", report_rows_to_jsonl(report));
  json metrics;
  metrics["n"] = report.n;
  metrics["d_kl"] = report.d_kl;
  metrics["d_l1"] = report.d_l1;
  if (report.r) metrics["r"] = *report.r;
  art.emit("metrics.json", metrics.dump(2) + "\n");
  art.finish("evaluate", 0);
}

void cmd_sbm(const std::string& pass1_path, const std::string& pass2_path,
             const std::string& out_dir, const std::string& format) {
  if (out_dir.empty()) throw ConfigError("out_dir is required");
  if (format != "csv" && format != "jsonl")
    throw ConfigError("format must be csv or jsonl");
  DirectoryLock lock(out_dir);
  ArtifactWriter art(out_dir);
  art.note_input("pass1", file_hash(pass1_path));
  art.note_input("pass2", file_hash(pass2_path));
  const CapabilityDataset p1 = load_dataset(pass1_path);
  const CapabilityDataset p2 = load_dataset(pass2_path);
  const MetricsReport report = sbm_metrics(p1, p2);
  art.emit("sbm.txt", report_to_text(report));
  if (format == "csv")
    art.emit("sbm.csv", report_to_csv(report));
  else
    art.emit("sbm.jsonl", report_rows_to_jsonl(report));
  json metrics;
  metrics["n"] = report.n;
  metrics["d_kl"] = report.d_kl;
  metrics["d_l1"] = report.d_l1;
  if (report.r) metrics["r"] = *report.r;
  art.emit("metrics.json", metrics.dump(2) + "\n");
  art.finish("sbm", 0);
}

double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw DataError("spearman needs two same-length lists of at least two points");
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<size_t> order(v.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    size_t i = 0;
    while (i < order.size()) {
      size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    // scale into [0, 1] for pearson_r's range check; affine, so rho is unchanged
    for (double& x : r) x /= static_cast<double>(v.size());
    return r;
  };
  const std::vector<double> rx = ranks(xs), ry = ranks(ys);
  const auto r = pearson_r(rx, ry);
  if (!r) throw NumericalError("spearman undefined for constant input");
  return *r;
}

PresetOutcome preset_5q_lps(const std::string& out_dir, uint64_t seed, RunProfile profile,
                            int jobs) {
  DirectoryLock lock(out_dir);
  PresetContext ctx(out_dir, profile, seed, jobs);
  const bool smoke = profile == RunProfile::Smoke;
  progress("[5q-lps] building dataset");
  SamplerSpec samp;
  samp.kind = "randomized";
  samp.widths = {1, 2, 3, 4, 5};
  samp.depths = smoke ? std::vector<int>{2, 4} : std::vector<int>{2, 4, 8, 16, 32, 64};
  samp.count = smoke ? 120 : 2400;
  StudyData sd = build_study(ctx, t5_device(), samp, "biased-lps", 0);
  const Rng master(seed);

  const std::vector<size_t> subsets = smoke ? std::vector<size_t>{30, 60}
                                            : std::vector<size_t>{90, 270, 900, 2000};
  const size_t n_test = sd.parent.split_indices("test").size();
  const Rng sub_rng = master.split("subsample");
  const SplitFractions fracs;
  const auto subset_of = [&](const CapabilityDataset& base, size_t n) {
    const auto [nt, nv] = fit_pool_counts(n, fracs);
    return subsample_nested(base, nt, nv, n_test, sub_rng);
  };

  // architecture search on the largest subset
  const CapabilityDataset largest = subset_of(sd.parent, subsets.back());
  const EncodedSplit trL = encode_split(largest, "train", sd.d_max);
  const EncodedSplit vaL = encode_split(largest, "validate", sd.d_max);
  const SearchSpace space = smoke ? smoke_space() : desk_space();
  const int budget = smoke ? 1 : 3;
  progress("[5q-lps] architecture search (budget " + std::to_string(budget) + ")");
  const SearchResult sr = hyperparameter_search(space, trL.xs, trL.ys, vaL.xs, vaL.ys, budget,
                                                master.split("search"), jobs);
  ctx.art.emit("architecture.json", spec_to_json(sr.best));
  ctx.put("search_best_val_loss", sr.best_validate_loss);
  ctx.put("search_best_epoch", sr.best_epoch);

  // learning curve at infinite shots
  std::vector<double> curve_n, curve_l1;
  for (const size_t n : subsets) {
    const std::string tag = "n" + std::to_string(n);
    progress("[5q-lps] cnn at " + tag);
    const CapabilityDataset sub = subset_of(sd.parent, n);
    const TrainOutcome res =
        train_final(sr.best, sub, sd.d_max, false, master.split("train", n).next(), jobs);
    const MetricsReport rep = cnn_report(res.model, sub, "test", "5q-lps", "cnn-" + tag);
    ctx.emit_report("report-cnn-" + tag, rep);
    if (n == subsets.back()) ctx.art.emit_model("cnn-" + tag + ".model", res.model);
    ctx.put("cnn_d_l1_" + tag, rep.d_l1);
    ctx.put("cnn_d_kl_" + tag, rep.d_kl);
    curve_n.push_back(static_cast<double>(n));
    curve_l1.push_back(rep.d_l1);

    progress("[5q-lps] erm at " + tag);
    ErmFitConfig fit_cfg;
    fit_cfg.splits = {"train", "validate"};
    const ErmFitResult fit = fit_erm(sub, fit_cfg);
    const MetricsReport erep = erm_report(fit.params, sub, "test", "5q-lps", "ferm-" + tag);
    ctx.emit_report("report-ferm-" + tag, erep);
    if (n == subsets.back())
      ctx.art.emit("erm-" + tag + ".json", erm_to_json(fit.params, sd.dev));
    ctx.put("ferm_d_l1_" + tag, erep.d_l1);
    ctx.put("ferm_d_kl_" + tag, erep.d_kl);
  }
  ctx.put("cnn_learning_spearman", spearman_rho(curve_n, curve_l1));

  // finite-shot regime: relabel at 100 shots, small-data comparison
  progress("[5q-lps] finite-shot study");
  const long shots = 100;
  const CapabilityDataset ds100 = with_shot_noise(sd.parent, shots, master.split("shots-a"));
  const size_t small_n = subsets.front();
  const std::string stag = "n" + std::to_string(small_n) + "_s" + std::to_string(shots);
  const CapabilityDataset sub100 = subset_of(ds100, small_n);
  const TrainOutcome cres =
      train_final(sr.best, sub100, sd.d_max, false, master.split("train-shots").next(), jobs);
  const MetricsReport crep = cnn_report(cres.model, sub100, "test", "5q-lps-100", "cnn-" + stag);
  ctx.emit_report("report-cnn-" + stag, crep);
  ctx.put("cnn_d_l1_" + stag, crep.d_l1);
  ErmFitConfig fit_cfg;
  fit_cfg.splits = {"train", "validate"};
  const ErmFitResult sfit = fit_erm(sub100, fit_cfg);
  const MetricsReport srep = erm_report(sfit.params, sub100, "test", "5q-lps-100", "ferm-" + stag);
  ctx.emit_report("report-ferm-" + stag, srep);
  ctx.put("ferm_d_l1_" + stag, srep.d_l1);

  // stability baseline: two independent shot-noise passes
  const CapabilityDataset ds100b = with_shot_noise(sd.parent, shots, master.split("shots-b"));
  const MetricsReport sbm = sbm_metrics(ds100, ds100b);
  ctx.emit_report("report-sbm-s100", sbm);
  ctx.put("sbm_d_kl_s100", sbm.d_kl);
  ctx.put("sbm_d_l1_s100", sbm.d_l1);

  ctx.finish("5q-lps");
  return ctx.outcome;
}

PresetOutcome preset_nonmarkovian(const std::string& out_dir, uint64_t seed,
                                  const std::string& variant, RunProfile profile, int jobs) {
  if (variant != "growing-pains" && variant != "double-trouble")
    throw ConfigError("nonmarkovian variant must be growing-pains or double-trouble");
  DirectoryLock lock(out_dir);
  PresetContext ctx(out_dir, profile, seed, jobs);
  const bool smoke = profile == RunProfile::Smoke;
  progress("[" + variant + "] building dataset");
  SamplerSpec samp;
  samp.kind = "randomized";
  samp.widths = {3, 4, 5, 6, 7, 8, 9};
  samp.depths = smoke ? std::vector<int>{2, 4} : std::vector<int>{2, 4, 8, 16, 32};
  samp.count = smoke ? 100 : 3000;
  StudyData sd = build_study(ctx, grid_device(3, 3), samp, variant, 0);
  const Rng master(seed);

  const SearchSpace space = smoke ? smoke_space() : desk_space();
  const int budget = smoke ? 1 : 2;
  const EncodedSplit tr = encode_split(sd.parent, "train", sd.d_max);
  const EncodedSplit va = encode_split(sd.parent, "validate", sd.d_max);
  progress("[" + variant + "] architecture search");
  const SearchResult sr = hyperparameter_search(space, tr.xs, tr.ys, va.xs, va.ys, budget,
                                                master.split("search"), jobs);
  ctx.art.emit("architecture.json", spec_to_json(sr.best));
  progress("[" + variant + "] final cnn training");
  const TrainOutcome res =
      train_final(sr.best, sd.parent, sd.d_max, false, master.split("train").next(), jobs);
  ctx.art.emit_model("cnn.model", res.model);
  const MetricsReport crep = cnn_report(res.model, sd.parent, "test", variant, "cnn");
  ctx.emit_report("report-cnn", crep);
  ctx.put("cnn_d_l1", crep.d_l1);
  ctx.put("cnn_d_kl", crep.d_kl);

  progress("[" + variant + "] erm fit");
  ErmFitConfig fit_cfg;
  fit_cfg.splits = {"train", "validate"};
  const ErmFitResult fit = fit_erm(sd.parent, fit_cfg);
  ctx.art.emit("erm.json", erm_to_json(fit.params, sd.dev));
  const MetricsReport erep = erm_report(fit.params, sd.parent, "test", variant, "ferm");
  ctx.emit_report("report-ferm", erep);
  ctx.put("ferm_d_l1", erep.d_l1);
  ctx.put("ferm_d_kl", erep.d_kl);

  const auto [elow, ehigh] = quartile_mean_delta(erep.rows);
  ctx.put("ferm_delta_low_quartile_mean", elow);
  ctx.put("ferm_delta_high_quartile_mean", ehigh);
  const auto [clow, chigh] = quartile_mean_delta(crep.rows);
  ctx.put("cnn_delta_low_quartile_mean", clow);
  ctx.put("cnn_delta_high_quartile_mean", chigh);
  ctx.put("ferm_over_cnn_d_l1", erep.d_l1 / std::max(crep.d_l1, 1e-12));

  ctx.finish(variant);
  return ctx.outcome;
}

PresetOutcome preset_coherent(const std::string& out_dir, uint64_t seed, RunProfile profile,
                              int jobs) {
  DirectoryLock lock(out_dir);
  PresetContext ctx(out_dir, profile, seed, jobs);
  const bool smoke = profile == RunProfile::Smoke;
  progress("[coherent] building dataset (statevector labels)");
  SamplerSpec samp;
  samp.kind = "randomized";
  samp.widths = {2, 3, 4, 5};
  samp.depths = smoke ? std::vector<int>{2, 4} : std::vector<int>{2, 4, 8, 16, 32};
  samp.count = smoke ? 100 : 1200;
  StudyData sd = build_study(ctx, t5_device(), samp, "coherent", 0);
  const Rng master(seed);

  const SearchSpace space = smoke ? smoke_space() : desk_space();
  const int budget = smoke ? 1 : 2;
  const EncodedSplit tr = encode_split(sd.parent, "train", sd.d_max);
  const EncodedSplit va = encode_split(sd.parent, "validate", sd.d_max);
  progress("[coherent] architecture search");
  const SearchResult sr = hyperparameter_search(space, tr.xs, tr.ys, va.xs, va.ys, budget,
                                                master.split("search"), jobs);
  ctx.art.emit("architecture.json", spec_to_json(sr.best));
  progress("[coherent] final cnn training");
  const TrainOutcome res =
      train_final(sr.best, sd.parent, sd.d_max, false, master.split("train").next(), jobs);
  ctx.art.emit_model("cnn.model", res.model);
  const MetricsReport crep = cnn_report(res.model, sd.parent, "test", "coherent", "cnn");
  ctx.emit_report("report-cnn", crep);
  ctx.put("cnn_d_l1", crep.d_l1);
  ctx.put("cnn_d_kl", crep.d_kl);

  progress("[coherent] erm fit");
  ErmFitConfig fit_cfg;
  fit_cfg.splits = {"train", "validate"};
  const ErmFitResult fit = fit_erm(sd.parent, fit_cfg);
  ctx.art.emit("erm.json", erm_to_json(fit.params, sd.dev));
  const MetricsReport erep = erm_report(fit.params, sd.parent, "test", "coherent", "ferm");
  ctx.emit_report("report-ferm", erep);
  ctx.put("ferm_d_l1", erep.d_l1);
  ctx.put("ferm_d_kl", erep.d_kl);

  double cnn_max = 0.0, ferm_max = 0.0;
  for (const auto& row : crep.rows) cnn_max = std::max(cnn_max, std::abs(row.delta));
  for (const auto& row : erep.rows) ferm_max = std::max(ferm_max, std::abs(row.delta));
  ctx.put("cnn_max_abs_delta", cnn_max);
  ctx.put("ferm_max_abs_delta", ferm_max);

  ctx.finish("coherent");
  return ctx.outcome;
}

PresetOutcome preset_ablation(const std::string& out_dir, uint64_t seed, RunProfile profile,
                              int jobs, const std::string& reuse_dir) {
  DirectoryLock lock(out_dir);
  PresetContext ctx(out_dir, profile, seed, jobs);
  const bool smoke = profile == RunProfile::Smoke;
  const Rng master(seed);

  CapabilityDataset parent;
  CnnSpec arch;
  if (!reuse_dir.empty()) {
    progress("[ablation] reusing dataset and architecture from " + reuse_dir);
    const std::string ds_path = reuse_dir + "/dataset.jsonl";
    const std::string arch_path = reuse_dir + "/architecture.json";
    ctx.art.note_input("dataset.jsonl", file_hash(ds_path));
    ctx.art.note_input("architecture.json", file_hash(arch_path));
    parent = load_dataset(ds_path);
    arch = spec_from_json(read_file(arch_path));
  } else {
    progress("[ablation] building dataset");
    SamplerSpec samp;
    samp.kind = "randomized";
    samp.widths = {1, 2, 3, 4, 5};
    samp.depths = smoke ? std::vector<int>{2, 4} : std::vector<int>{2, 4, 8, 16, 32, 64};
    samp.count = smoke ? 100 : 1500;
    StudyData sd = build_study(ctx, t5_device(), samp, "biased-lps", 0);
    parent = std::move(sd.parent);
    const SearchSpace space = smoke ? smoke_space() : desk_space();
    arch = anchor_spec(parent.device.n, parent.d_max, ChannelLayout::kChannels, space);
  }
  const int d_max = parent.d_max;

  progress("[ablation] training with sensitivity channels");
  const TrainOutcome full =
      train_final(arch, parent, d_max, false, master.split("train-full").next(), jobs);
  ctx.art.emit_model("cnn-full.model", full.model);
  const MetricsReport frep = cnn_report(full.model, parent, "test", "ablation", "cnn-full");
  ctx.emit_report("report-full", frep);
  ctx.put("full_d_l1", frep.d_l1);
  ctx.put("full_d_kl", frep.d_kl);

  progress("[ablation] training without sensitivity channels");
  const TrainOutcome stripped =
      train_final(arch, parent, d_max, true, master.split("train-stripped").next(), jobs);
  ctx.art.emit_model("cnn-stripped.model", stripped.model);
  const MetricsReport srep =
      cnn_report(stripped.model, parent, "test", "ablation", "cnn-stripped");
  ctx.emit_report("report-stripped", srep);
  ctx.put("stripped_d_l1", srep.d_l1);
  ctx.put("stripped_d_kl", srep.d_kl);
  ctx.put("stripped_over_full_d_l1", srep.d_l1 / std::max(frep.d_l1, 1e-12));

  ctx.finish("ablation");
  return ctx.outcome;
}

PresetOutcome preset_ood(const std::string& out_dir, uint64_t seed, RunProfile profile, int jobs,
                         const std::string& reuse_dir) {
  DirectoryLock lock(out_dir);
  PresetContext ctx(out_dir, profile, seed, jobs);
  const bool smoke = profile == RunProfile::Smoke;
  const Rng master(seed);

  CapabilityDataset rmc_parent;
  ErrorModel model;
  CnnSpec arch;
  std::optional<CnnModel> rmc_model;
  if (!reuse_dir.empty()) {
    progress("[ood] reusing the randomized-circuit study from " + reuse_dir);
    const std::string ds_path = reuse_dir + "/dataset.jsonl";
    const std::string model_path = reuse_dir + "/model.json";
    const std::string arch_path = reuse_dir + "/architecture.json";
    ctx.art.note_input("dataset.jsonl", file_hash(ds_path));
    ctx.art.note_input("model.json", file_hash(model_path));
    ctx.art.note_input("architecture.json", file_hash(arch_path));
    rmc_parent = load_dataset(ds_path);
    model = load_model(model_path);
    arch = spec_from_json(read_file(arch_path));
    std::vector<std::string> model_files;
    for (const auto& entry : fs::directory_iterator(reuse_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("cnn-n", 0) == 0 && name.size() > 6 &&
          name.substr(name.size() - 6) == ".model")
        model_files.push_back(name);
    }
    if (!model_files.empty()) {
      // largest subset wins; numeric order equals (length, lexicographic)
      std::sort(model_files.begin(), model_files.end(), [](const auto& a, const auto& b) {
        return std::make_pair(a.size(), a) < std::make_pair(b.size(), b);
      });
      const std::string chosen = reuse_dir + "/" + model_files.back();
      ctx.art.note_input(model_files.back(), file_hash(chosen));
      rmc_model = load_cnn(chosen);
    }
  } else {
    progress("[ood] building the randomized-circuit study");
    SamplerSpec samp;
    samp.kind = "randomized";
    samp.widths = {1, 2, 3, 4, 5};
    samp.depths = smoke ? std::vector<int>{2, 4} : std::vector<int>{2, 4, 8, 16, 32, 64};
    samp.count = smoke ? 100 : 1500;
    StudyData sd = build_study(ctx, t5_device(), samp, "biased-lps", 0);
    rmc_parent = std::move(sd.parent);
    model = std::move(sd.model);
    const SearchSpace space = smoke ? smoke_space() : desk_space();
    arch = anchor_spec(rmc_parent.device.n, rmc_parent.d_max, ChannelLayout::kChannels, space);
  }
  const int d_max = rmc_parent.d_max;
  const DeviceGraph dev = rmc_parent.device;

  if (!rmc_model) {
    progress("[ood] training the randomized-circuit cnn");
    const TrainOutcome res =
        train_final(arch, rmc_parent, d_max, false, master.split("train-rmc").next(), jobs);
    rmc_model = res.model;
    ctx.art.emit_model("cnn-rmc.model", res.model);
  }

  const MetricsReport in_dist = cnn_report(*rmc_model, rmc_parent, "test", "ood-rmc", "cnn-rmc");
  ctx.emit_report("report-rmc-in-dist", in_dist);
  ctx.put("rmc_in_dist_d_l1", in_dist.d_l1);

  progress("[ood] building the periodic-circuit dataset (same error model)");
  SamplerSpec psamp;
  psamp.kind = "periodic";
  psamp.widths = {1, 2, 3, 4, 5};
  psamp.depths = smoke ? std::vector<int>{2, 4} : std::vector<int>{2, 4, 8, 16, 32, 64};
  psamp.count = smoke ? 100 : 1200;
  psamp.germ_length = 4;
  const SampledCircuits pmc =
      sample_circuit_set(dev, psamp, master.split("sample-pmc"));
  CapabilityDataset pmc_ds = build_dataset(dev, pmc.circuits, pmc.kinds, model, 0,
                                           SplitFractions{}, master.split("data-pmc"), jobs);
  // periodic circuits deeper than the rmc encoder window cannot happen:
  // both use the same depth grid, so d_max matches by construction
  pmc_ds.d_max = d_max;
  ctx.art.emit("pmc-dataset.jsonl", dataset_to_jsonl(pmc_ds));

  const MetricsReport transfer = cnn_report(*rmc_model, pmc_ds, "test", "ood-pmc", "cnn-rmc");
  ctx.emit_report("report-rmc-on-pmc", transfer);
  ctx.put("rmc_on_pmc_d_l1", transfer.d_l1);

  progress("[ood] retraining the same architecture on periodic circuits");
  const TrainOutcome retrain =
      train_final(arch, pmc_ds, d_max, false, master.split("train-pmc").next(), jobs);
  ctx.art.emit_model("cnn-pmc.model", retrain.model);
  const MetricsReport retrained = cnn_report(retrain.model, pmc_ds, "test", "ood-pmc", "cnn-pmc");
  ctx.emit_report("report-pmc-retrained", retrained);
  ctx.put("pmc_retrained_d_l1", retrained.d_l1);

  ctx.put("ood_ratio", transfer.d_l1 / std::max(in_dist.d_l1, 1e-12));
  ctx.put("retrain_ratio", retrained.d_l1 / std::max(in_dist.d_l1, 1e-12));

  ctx.finish("ood");
  return ctx.outcome;
}

}  // namespace qcap

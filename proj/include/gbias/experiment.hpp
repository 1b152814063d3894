#pragma once

// Config-driven experiments: group, irreps and dataset from a JSON config,
// training of every listed architecture, analysis reports and the files of
// a run directory.
//
// Config layout (schema_version 1; unknown keys are rejected at every level):
//   {"schema_version": 1, "name": "...", "master_seed": 1, "replicas": 1,
//    "group": "dihedral:8",
//    "irreps": {"source": "builtin" | "numerical" | "file", "path": "..."},
//    "dataset": {"kind": "gaussian" | "fourier_sparse" | "mnist" | "file", ...},
//    "architectures": [{"kind": "gcnn", "layers": 3, "activation": "linear",
//                       "init_scale": 1.0, "inits": 1, "seed": 7, "name": "..."}],
//    "schedule": {"eta0": .., "factor": .., "period": .., "cap": ..},
//    "budget": {"epochs": .., "loss_tol": .., "record_every": ..},
//    "analysis": {"kkt": true, "uncertainty": true, "baseline": true, "snapshots": false,
//                 "kkt_margin_tol": 1e-3, "baseline_p": 0.667, "baseline_iters": ..,
//                 "baseline_refine_iters": ..},
//    "output_dir": "runs/name"}
//
// Group specs: cyclic:n, dihedral:n, quaternion, affine:n, table:<path>, and
// products A*B of the non-affine kinds.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "gbias/baseline.hpp"
#include "gbias/data.hpp"
#include "gbias/idx.hpp"
#include "gbias/io.hpp"
#include "gbias/kkt.hpp"
#include "gbias/lift.hpp"
#include "gbias/norms.hpp"
#include "gbias/train.hpp"

namespace gbias {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kVersion = "0.1.0";

/// Error raised by a named stage of an experiment.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorKind kind, const std::string& what)
      : Error(kind, what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// 0 success, 2 config error, 3 numerical failure, 4 infeasible.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::infeasible: return 4;
    case ErrorKind::numerical:
    case ErrorKind::resource: return 3;
    default: return 2;
  }
}

inline json error_json(ErrorKind kind, const std::string& message, const std::string& stage = "") {
  json e{{"kind", to_string(kind)}, {"message", message}};
  if (!stage.empty()) e["stage"] = stage;
  return json{{"error", e}};
}

// ---------------------------------------------------------------------------
// Seeds

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic per-purpose seed: mixes the master seed, an FNV-1a hash of
/// the tag and up to two indices.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return splitmix64(splitmix64(splitmix64(master ^ h) + a) + b);
}

// ---------------------------------------------------------------------------
// Groups and irreps from specs

struct GroupBuild {
  GroupTable table;
  std::optional<AffineGroup> affine;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

inline std::size_t parse_count(const std::string& s, const std::string& spec) {
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || s.front() == '-')
    throw Error(ErrorKind::config, "group spec '" + spec + "': expected a positive integer, got '" + s + "'");
  return v;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

inline GroupBuild build_single_group(const std::string& spec, const std::filesystem::path& base) {
  const auto colon = spec.find(':');
  const std::string family = trim(spec.substr(0, colon));
  const std::string arg = colon == std::string::npos ? "" : trim(spec.substr(colon + 1));
  if (family == "cyclic") return {cyclic_group(parse_count(arg, spec)), std::nullopt};
  if (family == "dihedral") return {dihedral_group(parse_count(arg, spec)), std::nullopt};
  if (family == "quaternion") {
    if (!arg.empty()) throw Error(ErrorKind::config, "group spec '" + spec + "': quaternion takes no parameter");
    return {quaternion_group(), std::nullopt};
  }
  if (family == "affine") {
    AffineGroup ag = affine_group(parse_count(arg, spec));
    GroupTable t = ag.group;
    return {std::move(t), std::move(ag)};
  }
  if (family == "table") {
    if (arg.empty()) throw Error(ErrorKind::config, "group spec 'table:' needs a path");
    return {group_from_json(read_json_file(resolve(base, arg).string())), std::nullopt};
  }
  throw Error(ErrorKind::config, "unknown group family '" + family + "' in spec '" + spec + "'");
}

}  // namespace detail

inline GroupBuild build_group(const std::string& spec, const std::filesystem::path& base = {}) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= spec.size(); ++i)
    if (i == spec.size() || spec[i] == '*') {
      parts.push_back(detail::trim(spec.substr(start, i - start)));
      start = i + 1;
    }
  if (parts.size() == 1) return detail::build_single_group(parts[0], base);
  std::optional<GroupTable> g;
  for (const auto& p : parts) {
    GroupBuild b = detail::build_single_group(p, base);
    if (b.affine) throw Error(ErrorKind::config, "affine groups cannot be factors of a product spec");
    g = g ? direct_product(*g, b.table) : b.table;
  }
  return {*g, std::nullopt};
}

struct IrrepSourceConfig {
  std::string source = "builtin";  // builtin | numerical | file
  std::string path;
};

inline IrrepSet build_irreps(const GroupBuild& g, const IrrepSourceConfig& src, std::uint64_t seed,
                             const std::filesystem::path& base = {}) {
  if (src.source == "builtin") return g.affine ? affine_irreps(*g.affine, seed) : builtin_irreps(g.table, seed);
  if (src.source == "numerical") return decompose_regular_representation(g.table, seed);
  if (src.source == "file") {
    if (src.path.empty()) throw Error(ErrorKind::config, "irreps source 'file' needs a path");
    return irreps_from_json(read_json_file(detail::resolve(base, src.path).string()), g.table);
  }
  throw Error(ErrorKind::config, "unknown irreps source '" + src.source + "'");
}

// ---------------------------------------------------------------------------
// Config

struct DatasetConfig {
  std::string kind = "gaussian";  // gaussian | fourier_sparse | mnist | file
  std::size_t count = 2;
  std::optional<double> margin_min;
  std::vector<std::size_t> active;  // fourier_sparse
  std::string images, labels;       // mnist
  std::vector<int> digits{1, 5};
  std::size_t downsample = 4;
  std::string path;  // file
};

struct ArchitectureConfig {
  std::string name;  // defaults to the kind
  ArchKind kind = ArchKind::gcnn;
  std::size_t layers = 3;
  Activation activation = Activation::linear;
  double init_scale = 1.0;
  std::size_t inits = 1;
  std::optional<std::uint64_t> seed;
};

struct AnalysisConfig {
  bool kkt = true;
  bool uncertainty = true;
  bool baseline = true;
  bool snapshots = false;
  double kkt_margin_tol = 1e-3;
  std::optional<double> baseline_p;  // default 2/L of the first architecture
  std::size_t baseline_iters = BaselineOptions{}.iters;
  std::size_t baseline_refine_iters = BaselineOptions{}.refine_iters;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  std::string name = "experiment";
  std::uint64_t master_seed = 1;
  std::size_t replicas = 1;
  std::string group = "dihedral:8";
  IrrepSourceConfig irreps;
  DatasetConfig dataset;
  std::vector<ArchitectureConfig> architectures;
  StepSchedule schedule;
  std::size_t epochs = TrainOptions{}.epochs;
  double loss_tol = TrainOptions{}.loss_tol;
  std::size_t record_every = TrainOptions{}.record_every;
  AnalysisConfig analysis;
  std::string output_dir;
  std::filesystem::path base_dir;  // relative paths resolve here; not serialized

  std::string arch_name(std::size_t i) const {
    return architectures[i].name.empty() ? to_string(architectures[i].kind) : architectures[i].name;
  }
  double baseline_p() const {
    if (analysis.baseline_p) return *analysis.baseline_p;
    return architectures.empty() ? 1.0 : 2.0 / static_cast<double>(architectures.front().layers);
  }

  void validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorKind::config, m); };
    if (schema_version != kConfigSchemaVersion)
      bad("unsupported schema_version " + std::to_string(schema_version) + " (expected " +
          std::to_string(kConfigSchemaVersion) + ")");
    if (replicas == 0) bad("replicas must be positive");
    if (architectures.empty()) bad("at least one architecture is required");
    std::set<std::string> names;
    for (std::size_t i = 0; i < architectures.size(); ++i) {
      const auto& a = architectures[i];
      if (a.layers == 0) bad("architecture " + arch_name(i) + ": layers must be positive");
      if (a.inits == 0) bad("architecture " + arch_name(i) + ": inits must be positive");
      if (!(a.init_scale >= 0)) bad("architecture " + arch_name(i) + ": init_scale must be nonnegative");
      if (a.kind == ArchKind::fourier_space_bandlimited)
        bad("architecture " + arch_name(i) + ": band-limited networks take Fourier inputs and are not run from configs");
      if (!names.insert(arch_name(i)).second) bad("duplicate architecture name '" + arch_name(i) + "'");
    }
    try {
      schedule.validate();
    } catch (const Error& e) {
      bad(std::string("schedule: ") + e.what());
    }
    if (record_every == 0) bad("budget.record_every must be positive");
    const auto& d = dataset;
    if (d.kind == "gaussian" || d.kind == "fourier_sparse" || d.kind == "mnist") {
      if (d.count == 0) bad("dataset.count must be positive");
    } else if (d.kind != "file") {
      bad("unknown dataset kind '" + d.kind + "'");
    }
    if (d.margin_min && !(*d.margin_min > 0)) bad("dataset.margin_min must be positive");
    if (d.kind == "fourier_sparse" && d.active.empty()) bad("dataset.active must list at least one block");
    if (d.kind == "mnist") {
      if (d.images.empty() || d.labels.empty()) bad("mnist dataset needs images and labels paths");
      if (d.digits.size() != 2 || d.digits[0] == d.digits[1]) bad("mnist dataset needs two distinct digits");
      if (d.downsample == 0) bad("dataset.downsample must be positive");
    }
    if (d.kind == "file" && d.path.empty()) bad("file dataset needs a path");
    if (analysis.baseline_p && !(*analysis.baseline_p > 0 && *analysis.baseline_p <= 1))
      bad("analysis.baseline_p must be in (0, 1]");
    if (!(analysis.kkt_margin_tol >= 0)) bad("analysis.kkt_margin_tol must be nonnegative");
  }
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorKind::config, where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw Error(ErrorKind::config, "unknown field '" + k + "' in " + where);
  }
}

template <class T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, where + "." + key + ": " + e.what());
  }
}

}  // namespace detail

inline json dataset_to_json(const DatasetConfig& d) {
  json j{{"kind", d.kind}};
  if (d.kind != "file") j["count"] = d.count;
  if (d.margin_min && (d.kind == "gaussian" || d.kind == "fourier_sparse")) j["margin_min"] = *d.margin_min;
  if (d.kind == "fourier_sparse") j["active"] = d.active;
  if (d.kind == "mnist") {
    j["images"] = d.images;
    j["labels"] = d.labels;
    j["digits"] = d.digits;
    j["downsample"] = d.downsample;
  }
  if (d.kind == "file") j["path"] = d.path;
  return j;
}

inline DatasetConfig dataset_from_json(const json& j) {
  DatasetConfig d;
  detail::read_field(j, "kind", d.kind, "dataset");
  if (d.kind == "gaussian") detail::check_keys(j, "dataset (gaussian)", {"kind", "count", "margin_min"});
  else if (d.kind == "fourier_sparse")
    detail::check_keys(j, "dataset (fourier_sparse)", {"kind", "count", "margin_min", "active"});
  else if (d.kind == "mnist")
    detail::check_keys(j, "dataset (mnist)", {"kind", "count", "images", "labels", "digits", "downsample"});
  else if (d.kind == "file") detail::check_keys(j, "dataset (file)", {"kind", "path"});
  else throw Error(ErrorKind::config, "unknown dataset kind '" + d.kind + "'");
  detail::read_field(j, "count", d.count, "dataset");
  if (j.contains("margin_min")) {
    double m = 0;
    detail::read_field(j, "margin_min", m, "dataset");
    d.margin_min = m;
  }
  detail::read_field(j, "active", d.active, "dataset");
  detail::read_field(j, "images", d.images, "dataset");
  detail::read_field(j, "labels", d.labels, "dataset");
  detail::read_field(j, "digits", d.digits, "dataset");
  detail::read_field(j, "downsample", d.downsample, "dataset");
  detail::read_field(j, "path", d.path, "dataset");
  return d;
}

inline json config_to_json(const ExperimentConfig& c) {
  json archs = json::array();
  for (const auto& a : c.architectures) {
    json j{{"kind", to_string(a.kind)},
           {"layers", a.layers},
           {"activation", to_string(a.activation)},
           {"init_scale", a.init_scale},
           {"inits", a.inits}};
    if (!a.name.empty()) j["name"] = a.name;
    if (a.seed) j["seed"] = *a.seed;
    archs.push_back(std::move(j));
  }
  json irreps{{"source", c.irreps.source}};
  if (!c.irreps.path.empty()) irreps["path"] = c.irreps.path;
  json analysis{{"kkt", c.analysis.kkt},
                {"uncertainty", c.analysis.uncertainty},
                {"baseline", c.analysis.baseline},
                {"snapshots", c.analysis.snapshots},
                {"kkt_margin_tol", c.analysis.kkt_margin_tol},
                {"baseline_iters", c.analysis.baseline_iters},
                {"baseline_refine_iters", c.analysis.baseline_refine_iters}};
  if (c.analysis.baseline_p) analysis["baseline_p"] = *c.analysis.baseline_p;
  json j{{"schema_version", c.schema_version},
         {"name", c.name},
         {"master_seed", c.master_seed},
         {"replicas", c.replicas},
         {"group", c.group},
         {"irreps", irreps},
         {"dataset", dataset_to_json(c.dataset)},
         {"architectures", archs},
         {"schedule",
          {{"eta0", c.schedule.eta0}, {"factor", c.schedule.factor}, {"period", c.schedule.period}, {"cap", c.schedule.cap}}},
         {"budget", {{"epochs", c.epochs}, {"loss_tol", c.loss_tol}, {"record_every", c.record_every}}},
         {"analysis", analysis}};
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

inline ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  using detail::read_field;
  detail::check_keys(j, "config",
                     {"schema_version", "name", "master_seed", "replicas", "group", "irreps", "dataset", "architectures",
                      "schedule", "budget", "analysis", "output_dir"});
  if (!j.contains("schema_version")) throw Error(ErrorKind::config, "config: missing schema_version");
  ExperimentConfig c;
  c.base_dir = base_dir;
  read_field(j, "schema_version", c.schema_version, "config");
  read_field(j, "name", c.name, "config");
  read_field(j, "master_seed", c.master_seed, "config");
  read_field(j, "replicas", c.replicas, "config");
  read_field(j, "group", c.group, "config");
  read_field(j, "output_dir", c.output_dir, "config");
  if (j.contains("irreps")) {
    const auto& i = j.at("irreps");
    detail::check_keys(i, "irreps", {"source", "path"});
    read_field(i, "source", c.irreps.source, "irreps");
    read_field(i, "path", c.irreps.path, "irreps");
  }
  if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"));
  if (j.contains("architectures")) {
    if (!j.at("architectures").is_array()) throw Error(ErrorKind::config, "architectures must be an array");
    for (const auto& a : j.at("architectures")) {
      detail::check_keys(a, "architecture", {"name", "kind", "layers", "activation", "init_scale", "inits", "seed"});
      ArchitectureConfig ac;
      std::string kind = "gcnn", act = "linear";
      read_field(a, "kind", kind, "architecture");
      read_field(a, "activation", act, "architecture");
      ac.kind = arch_kind_from_string(kind);
      ac.activation = activation_from_string(act);
      read_field(a, "name", ac.name, "architecture");
      read_field(a, "layers", ac.layers, "architecture");
      read_field(a, "init_scale", ac.init_scale, "architecture");
      read_field(a, "inits", ac.inits, "architecture");
      if (a.contains("seed")) {
        std::uint64_t s = 0;
        read_field(a, "seed", s, "architecture");
        ac.seed = s;
      }
      c.architectures.push_back(std::move(ac));
    }
  }
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    detail::check_keys(s, "schedule", {"eta0", "factor", "period", "cap"});
    read_field(s, "eta0", c.schedule.eta0, "schedule");
    read_field(s, "factor", c.schedule.factor, "schedule");
    read_field(s, "period", c.schedule.period, "schedule");
    read_field(s, "cap", c.schedule.cap, "schedule");
  }
  if (j.contains("budget")) {
    const auto& b = j.at("budget");
    detail::check_keys(b, "budget", {"epochs", "loss_tol", "record_every"});
    read_field(b, "epochs", c.epochs, "budget");
    read_field(b, "loss_tol", c.loss_tol, "budget");
    read_field(b, "record_every", c.record_every, "budget");
  }
  if (j.contains("analysis")) {
    const auto& a = j.at("analysis");
    detail::check_keys(a, "analysis",
                       {"kkt", "uncertainty", "baseline", "snapshots", "kkt_margin_tol", "baseline_p", "baseline_iters",
                        "baseline_refine_iters"});
    read_field(a, "kkt", c.analysis.kkt, "analysis");
    read_field(a, "uncertainty", c.analysis.uncertainty, "analysis");
    read_field(a, "baseline", c.analysis.baseline, "analysis");
    read_field(a, "snapshots", c.analysis.snapshots, "analysis");
    read_field(a, "kkt_margin_tol", c.analysis.kkt_margin_tol, "analysis");
    if (a.contains("baseline_p")) {
      double p = 0;
      read_field(a, "baseline_p", p, "analysis");
      c.analysis.baseline_p = p;
    }
    read_field(a, "baseline_iters", c.analysis.baseline_iters, "analysis");
    read_field(a, "baseline_refine_iters", c.analysis.baseline_refine_iters, "analysis");
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, e.what());
  }
  return config_from_json(j, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Datasets

inline json dataset_json(const Dataset& d, const std::optional<Vec>& ground_truth = std::nullopt) {
  json inputs = json::array();
  for (const auto& x : d.inputs) inputs.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  json j{{"inputs", inputs}, {"labels", d.labels}};
  if (ground_truth) j["ground_truth"] = std::vector<double>(ground_truth->data(), ground_truth->data() + ground_truth->size());
  return j;
}

inline Dataset dataset_from_json_file(const std::string& path) {
  const json j = read_json_file(path);
  Dataset d;
  try {
    for (const auto& x : j.at("inputs")) {
      const auto v = x.get<std::vector<double>>();
      d.inputs.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    d.labels = j.at("labels").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "dataset json '" + path + "': " + e.what());
  }
  d.validate();
  return d;
}

struct BuiltDataset {
  Dataset data;
  std::optional<Vec> ground_truth;
  double achieved_margin = 0;
};

inline BuiltDataset build_dataset(const ExperimentConfig& c, const GroupBuild& g, const IrrepSet& irreps,
                                  std::uint64_t data_seed, std::uint64_t lift_seed) {
  const auto& d = c.dataset;
  BuiltDataset out;
  if (d.kind == "gaussian") {
    auto ld = gaussian_dataset(g.table, d.count, data_seed, d.margin_min.value_or(0.01));
    out.data = std::move(ld.data);
    out.ground_truth = std::move(ld.beta);
    out.achieved_margin = ld.achieved_margin;
  } else if (d.kind == "fourier_sparse") {
    auto fs = fourier_sparse_dataset(irreps, d.active, d.count, data_seed, d.margin_min.value_or(0.05));
    out.data = std::move(fs.labelled.data);
    out.ground_truth = std::move(fs.labelled.beta);
    out.achieved_margin = fs.labelled.achieved_margin;
  } else if (d.kind == "mnist") {
    if (!g.affine) throw Error(ErrorKind::config, "mnist datasets need an affine:n group");
    const auto images = read_idx_file(detail::resolve(c.base_dir, d.images).string()).images();
    const auto labels = read_idx_file(detail::resolve(c.base_dir, d.labels).string()).labels();
    if (images.size() != labels.size()) throw Error(ErrorKind::shape_mismatch, "mnist: image and label counts differ");
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == d.digits[0] || labels[i] == d.digits[1]) pool.push_back(i);
    if (pool.size() < d.count)
      throw Error(ErrorKind::validation, "mnist: only " + std::to_string(pool.size()) + " images of the chosen digits");
    std::mt19937_64 rng(data_seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    const LiftSpec spec = affine_lift_spec(*g.affine, lift_seed);
    for (std::size_t k = 0; k < d.count; ++k) {
      const ImageGrid img = d.downsample == 1 ? images[pool[k]] : downsample(images[pool[k]], d.downsample);
      out.data.inputs.push_back(lift_image(img, spec));
      out.data.labels.push_back(labels[pool[k]] == d.digits[0] ? 1.0 : -1.0);
    }
  } else {
    out.data = dataset_from_json_file(detail::resolve(c.base_dir, d.path).string());
  }
  out.data.validate();
  if (out.data.size() == 0) throw Error(ErrorKind::validation, "dataset is empty");
  if (static_cast<std::size_t>(out.data.inputs[0].size()) != g.table.order())
    throw Error(ErrorKind::shape_mismatch, "dataset inputs have length " + std::to_string(out.data.inputs[0].size()) +
                                               " but the group has order " + std::to_string(g.table.order()));
  return out;
}

// ---------------------------------------------------------------------------
// Reports as JSON

inline json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline json norm_report_json(const NormReport& r) {
  json sv = json::array();
  for (const auto& s : r.singular_values) sv.push_back(vec_json(s));
  return json{{"p", r.ps},
              {"real", r.real_norms},
              {"fourier_schatten", r.fourier_norms},
              {"singular_values", sv},
              {"ranks", r.profile.ranks},
              {"support", r.profile.support}};
}

inline json uncertainty_json(const UncertaintyReport& r) {
  auto e = [](const UncertaintyEntry& x) {
    return json{{"applicable", x.applicable}, {"lhs", x.lhs}, {"rhs", x.rhs}, {"satisfied", x.satisfied}};
  };
  return json{{"donoho_stark", e(r.donoho_stark)}, {"meshulam", e(r.meshulam)}, {"kuperberg", e(r.kuperberg)},
              {"all_satisfied", r.all_satisfied()}};
}

inline json kkt_json(const KktReport& r) {
  json j{{"layers", r.layers},
         {"margin_scale", r.margin_scale},
         {"active", r.active},
         {"alpha", r.alpha},
         {"membership_residual", r.membership_residual},
         {"fit_residual", r.fit_residual},
         {"phi", r.phi},
         {"gamma_theory", r.gamma_theory},
         {"degenerate", r.degenerate}};
  if (r.assumption_zinf) j["assumption_zinf"] = *r.assumption_zinf;
  return j;
}

inline json recurrence_json(const RecurrenceReport& r) {
  return json{{"layer", r.layer},
              {"power_identity", r.power_identity},
              {"transpose_identity", r.transpose_identity},
              {"hermitian_zb", r.hermitian_zb},
              {"hermitian_bz", r.hermitian_bz},
              {"gamma", r.gamma},
              {"max", r.max()}};
}

inline json baseline_json(const BaselineResult& r) {
  return json{{"p", r.p},
              {"reference_value", r.schatten_value},
              {"nuclear_value", r.nuclear_value},
              {"refined_value", r.refined_value},
              {"min_margin", r.min_margin},
              {"iterations", r.iterations},
              {"beta", vec_json(r.beta)},
              {"refined_beta", vec_json(r.refined_beta)}};
}

// ---------------------------------------------------------------------------
// Running

struct InitRun {
  std::uint64_t seed = 0;
  TrainingTrace trace;
  LinearizationSummary beta;
  std::optional<NormReport> norms;
  std::optional<UncertaintyReport> uncertainty;
  std::optional<KktReport> kkt;
  std::optional<RecurrenceReport> recurrence;
  std::string kkt_note;  // why KKT was skipped, if it was
  double seconds = 0;

  double final_fourier() const { return trace.rows.empty() ? 0.0 : trace.rows.back().fourier_schatten_2L; }
  double final_real() const { return trace.rows.empty() ? 0.0 : trace.rows.back().real_norm_2L; }
  double final_loss() const { return trace.rows.empty() ? 0.0 : trace.rows.back().loss; }
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct ArchRun {
  std::string name;
  ArchitectureConfig config;
  std::vector<InitRun> inits;

  double median_final_fourier() const {
    std::vector<double> v;
    for (const auto& r : inits) v.push_back(r.final_fourier());
    return median(v);
  }
};

struct StageRecord {
  std::string stage;
  std::string status;  // ok | error | aborted | skipped
  std::string kind;
  std::string message;
  double seconds = 0;
};

struct ReplicaResult {
  std::size_t index = 0;
  std::map<std::string, std::uint64_t> seeds;
  BuiltDataset dataset;
  std::vector<ArchRun> archs;
  std::optional<BaselineResult> baseline;
  std::vector<StageRecord> stages;

  const ArchRun& arch(const std::string& name) const {
    for (const auto& a : archs)
      if (a.name == name) return a;
    throw Error(ErrorKind::validation, "no architecture named '" + name + "'");
  }
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicaResult> replicas;
  std::optional<IrrepSet> irreps;
  double seconds = 0;

  /// First stage failure in replica order (errors before aborts).
  std::optional<StageRecord> first_failure() const {
    for (const char* status : {"error", "aborted"})
      for (const auto& r : replicas)
        for (const auto& s : r.stages)
          if (s.status == status) return s;
    return std::nullopt;
  }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline ArchitectureSpec arch_spec(const ArchitectureConfig& a, const GroupTable& g) {
  switch (a.kind) {
    case ArchKind::gcnn: return ArchitectureSpec::gcnn(g, a.layers, a.activation);
    case ArchKind::cnn: return ArchitectureSpec::cnn(g.order(), a.layers, a.activation);
    case ArchKind::fully_connected: return ArchitectureSpec::fully_connected(g.order(), a.layers, a.activation);
    case ArchKind::fourier_space_bandlimited: break;
  }
  throw Error(ErrorKind::config, "band-limited networks are not run from configs");
}

inline void analyze_init(InitRun& run, const ArchitectureConfig& a, const ExperimentConfig& c, const Dataset& data,
                         const IrrepSet& irreps) {
  const auto& last = run.trace.rows.back();
  run.beta = summarize_linearization(run.trace.final_params, data, last.min_margin, irreps);
  const double q = 2.0 / static_cast<double>(a.layers);
  if (!run.beta.beta.allFinite() || run.beta.beta.cwiseAbs().maxCoeff() == 0) {
    run.kkt_note = "linearization is zero or not finite";
    return;
  }
  run.norms = norm_report(run.beta.beta, irreps, {q, 1.0, 2.0});
  if (c.analysis.uncertainty) run.uncertainty = uncertainty_check(run.beta.beta, irreps);
  if (!c.analysis.kkt) return;
  if (a.activation != Activation::linear) run.kkt_note = "relu network";
  else if (a.layers < 2) run.kkt_note = "single layer";
  else if (!(last.min_margin > 0)) run.kkt_note = "network does not separate the data";
  else {
    run.kkt = fit_dual_coefficients(run.beta.beta, data, irreps, a.layers, c.analysis.kkt_margin_tol);
    if (a.kind == ArchKind::gcnn) run.recurrence = recurrence_residuals(run.trace.final_params, irreps, run.kkt->z_hat);
  }
}

}  // namespace detail

/// Runs every replica of the config. Group, irreps and dataset failures are
/// fatal (StageError); failures of later stages are recorded per replica.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto t_start = std::chrono::steady_clock::now();
  ExperimentResult res;
  res.config = config;

  auto fatal = [](const std::string& stage, auto&& fn) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(stage, e.kind(), e.what());
    }
  };
  const GroupBuild g = fatal("group", [&] { return build_group(config.group, config.base_dir); });
  const std::uint64_t irrep_seed = derive_seed(config.master_seed, "irreps");
  const IrrepSet irreps = fatal("irreps", [&] { return build_irreps(g, config.irreps, irrep_seed, config.base_dir); });
  if (irreps.group().order() != g.table.order()) throw StageError("irreps", ErrorKind::validation, "irreps do not match the group");
  res.irreps = irreps;

  for (std::size_t r = 0; r < config.replicas; ++r) {
    ReplicaResult rep;
    rep.index = r;
    rep.seeds["irreps"] = irrep_seed;
    rep.seeds["data"] = derive_seed(config.master_seed, "data", r);
    rep.seeds["lift_filter"] = derive_seed(config.master_seed, "lift", r);
    rep.seeds["baseline"] = derive_seed(config.master_seed, "baseline", r);
    auto t0 = std::chrono::steady_clock::now();
    rep.dataset = fatal("dataset", [&] { return build_dataset(config, g, irreps, rep.seeds["data"], rep.seeds["lift_filter"]); });
    rep.stages.push_back({"dataset", "ok", "", "", detail::seconds_since(t0)});

    for (std::size_t i = 0; i < config.architectures.size(); ++i) {
      const auto& a = config.architectures[i];
      ArchRun ar;
      ar.name = config.arch_name(i);
      ar.config = a;
      const std::uint64_t base = a.seed ? *a.seed : derive_seed(config.master_seed, "arch", i);
      const ArchitectureSpec spec = detail::arch_spec(a, g.table);
      for (std::size_t k = 0; k < a.inits; ++k) {
        InitRun run;
        run.seed = derive_seed(base, "init", r, k);
        rep.seeds["init:" + ar.name + ":" + std::to_string(k)] = run.seed;
        const std::string stage = "train:" + ar.name + ":" + std::to_string(k);
        t0 = std::chrono::steady_clock::now();
        TrainOptions opt;
        opt.epochs = config.epochs;
        opt.record_every = config.record_every;
        opt.loss_tol = config.loss_tol;
        opt.snapshots = config.analysis.snapshots;
        opt.analysis_irreps = irreps;
        try {
          run.trace = train(init_network(spec, run.seed, a.init_scale), rep.dataset.data, config.schedule, opt);
          run.seconds = detail::seconds_since(t0);
          if (run.trace.aborted)
            rep.stages.push_back({stage, "aborted", to_string(ErrorKind::numerical),
                                  run.trace.abort_reason + " (epoch " + std::to_string(run.trace.abort_epoch) + ")",
                                  run.seconds});
          else
            rep.stages.push_back({stage, "ok", "", run.trace.converged ? "converged" : "loss_tol not reached", run.seconds});
        } catch (const Error& e) {
          rep.stages.push_back({stage, "error", to_string(e.kind()), e.what(), detail::seconds_since(t0)});
          ar.inits.push_back(std::move(run));
          continue;
        }
        if (!run.trace.aborted) {
          const std::string astage = "analysis:" + ar.name + ":" + std::to_string(k);
          t0 = std::chrono::steady_clock::now();
          try {
            detail::analyze_init(run, a, config, rep.dataset.data, irreps);
            rep.stages.push_back({astage, "ok", "", run.kkt_note, detail::seconds_since(t0)});
          } catch (const Error& e) {
            rep.stages.push_back({astage, "error", to_string(e.kind()), e.what(), detail::seconds_since(t0)});
          }
        }
        ar.inits.push_back(std::move(run));
      }
      rep.archs.push_back(std::move(ar));
    }

    if (config.analysis.baseline) {
      t0 = std::chrono::steady_clock::now();
      try {
        BaselineOptions bo;
        bo.iters = config.analysis.baseline_iters;
        bo.refine_iters = config.analysis.baseline_refine_iters;
        rep.baseline = min_schatten_baseline(rep.dataset.data, irreps, config.baseline_p(), rep.seeds["baseline"], bo);
        rep.stages.push_back({"baseline", "ok", "", "", detail::seconds_since(t0)});
      } catch (const Error& e) {
        rep.stages.push_back({"baseline", "error", to_string(e.kind()), e.what(), detail::seconds_since(t0)});
      }
    }
    res.replicas.push_back(std::move(rep));
  }
  res.seconds = detail::seconds_since(t_start);
  return res;
}

// ---------------------------------------------------------------------------
// Aggregation over replicas and inits

/// Per architecture and recorded epoch: mean and 95% t-interval half-width of
/// each trace column over all traces. Traces that stopped early carry their
/// last row forward. Empty string when there are fewer than two traces.
inline std::string aggregate_csv(const ExperimentResult& res) {
  static const char* cols[] = {"loss", "min_margin", "real_norm_2L", "fourier_schatten_2L", "cosine_beta_direction"};
  std::string out = "architecture,epoch,n";
  for (const char* c : cols) out += std::string(",") + c + "_mean," + c + "_ci95";
  out += "\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t a = 0; a < res.config.architectures.size(); ++a) {
    std::vector<const TrainingTrace*> traces;
    for (const auto& rep : res.replicas)
      for (const auto& run : rep.archs[a].inits)
        if (!run.trace.rows.empty()) traces.push_back(&run.trace);
    if (traces.size() < 2) continue;
    std::set<std::size_t> epochs;
    for (const auto* t : traces)
      for (const auto& row : t->rows) epochs.insert(row.epoch);
    const double n = static_cast<double>(traces.size());
    const boost::math::students_t dist(n - 1);
    const double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
    for (std::size_t e : epochs) {
      std::vector<TraceRow> rows;
      for (const auto* t : traces) {
        auto it = std::upper_bound(t->rows.begin(), t->rows.end(), e,
                                   [](std::size_t ep, const TraceRow& r) { return ep < r.epoch; });
        rows.push_back(it == t->rows.begin() ? t->rows.front() : *std::prev(it));
      }
      out += res.config.arch_name(a) + "," + std::to_string(e) + "," + std::to_string(traces.size());
      for (std::size_t c = 0; c < 5; ++c) {
        auto get = [c](const TraceRow& r) {
          switch (c) {
            case 0: return r.loss;
            case 1: return r.min_margin;
            case 2: return r.real_norm_2L;
            case 3: return r.fourier_schatten_2L;
            default: return r.cosine_beta_direction;
          }
        };
        double mean = 0, var = 0;
        for (const auto& r : rows) mean += get(r);
        mean /= n;
        for (const auto& r : rows) var += (get(r) - mean) * (get(r) - mean);
        var /= n - 1;
        out += "," + num(mean) + "," + num(tq * std::sqrt(var / n));
      }
      out += "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output files

inline std::string trace_file_name(const ArchRun& a, std::size_t k) {
  return "trace_" + a.name + (a.inits.size() > 1 ? "_init" + std::to_string(k) : "") + ".csv";
}

inline void write_text_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorKind::resource, "cannot write '" + p.string() + "'");
  f << s;
}

inline void write_replica(const ReplicaResult& rep, const IrrepSet* irreps, const std::filesystem::path& dir,
                          bool snapshots) {
  std::filesystem::create_directories(dir);
  write_json_file((dir / "dataset.json").string(), dataset_json(rep.dataset.data, rep.dataset.ground_truth));
  json beta = json::object(), norms = json::object(), kkt = json::object(), unc = json::object();
  for (const auto& a : rep.archs) {
    json b = json::array(), n = json::array(), k = json::array(), u = json::array();
    for (std::size_t i = 0; i < a.inits.size(); ++i) {
      const auto& run = a.inits[i];
      if (!run.trace.rows.empty()) write_text_file(dir / trace_file_name(a, i), run.trace.csv());
      json bj{{"init", i}, {"seed", run.seed}, {"real", vec_json(run.beta.beta)}};
      if (irreps && run.beta.beta.size() == static_cast<Eigen::Index>(irreps->group().order()))
        bj["fourier"] = blocks_to_json(gft(run.beta.beta, *irreps));
      b.push_back(std::move(bj));
      if (run.norms) n.push_back(json{{"init", i}, {"report", norm_report_json(*run.norms)}});
      if (run.uncertainty) u.push_back(json{{"init", i}, {"report", uncertainty_json(*run.uncertainty)}});
      json kj{{"init", i}};
      if (run.kkt) kj["dual_fit"] = kkt_json(*run.kkt);
      if (run.recurrence) kj["recurrence"] = recurrence_json(*run.recurrence);
      if (!run.kkt_note.empty()) kj["skipped"] = run.kkt_note;
      k.push_back(std::move(kj));
      if (snapshots && !run.trace.snapshots.empty()) {
        json s = json::array();
        for (const auto& v : run.trace.snapshots) s.push_back(vec_json(v));
        write_json_file((dir / ("snapshots_" + a.name + "_init" + std::to_string(i) + ".json")).string(), s);
      }
    }
    beta[a.name] = std::move(b);
    norms[a.name] = std::move(n);
    kkt[a.name] = std::move(k);
    unc[a.name] = std::move(u);
  }
  write_json_file((dir / "beta.json").string(), beta);
  write_json_file((dir / "norms.json").string(), norms);
  write_json_file((dir / "kkt.json").string(), kkt);
  write_json_file((dir / "uncertainty.json").string(), unc);
  if (rep.baseline) write_json_file((dir / "baseline.json").string(), baseline_json(*rep.baseline));
}

inline json manifest_json(const ExperimentResult& res) {
  json reps = json::array();
  for (const auto& rep : res.replicas) {
    json stages = json::array();
    for (const auto& s : rep.stages) {
      json sj{{"stage", s.stage}, {"status", s.status}, {"seconds", s.seconds}};
      if (!s.kind.empty()) sj["kind"] = s.kind;
      if (!s.message.empty()) sj["message"] = s.message;
      stages.push_back(std::move(sj));
    }
    json summary = json::object();
    for (const auto& a : rep.archs) {
      json inits = json::array();
      for (const auto& run : a.inits) {
        json ij{{"seed", run.seed},
                {"converged", run.trace.converged},
                {"aborted", run.trace.aborted},
                {"final_loss", run.final_loss()},
                {"final_fourier_schatten_2L", run.final_fourier()},
                {"final_real_norm_2L", run.final_real()}};
        if (run.trace.aborted) ij["abort_epoch"] = run.trace.abort_epoch;
        inits.push_back(std::move(ij));
      }
      summary[a.name] = json{{"inits", inits}, {"median_final_fourier_schatten_2L", a.median_final_fourier()}};
    }
    json rj{{"replica", rep.index}, {"seeds", rep.seeds}, {"stages", stages}, {"summary", summary},
            {"dataset_achieved_margin", rep.dataset.achieved_margin}};
    if (rep.baseline) rj["baseline_reference_value"] = rep.baseline->schatten_value;
    reps.push_back(std::move(rj));
  }
  const auto failure = res.first_failure();
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  return json{{"gbias_version", kVersion},
              {"versions",
               {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"compiler", __VERSION__}}},
              {"config", config_to_json(res.config)},
              {"master_seed", res.config.master_seed},
              {"irrep_dims", res.irreps ? res.irreps->dims() : std::vector<std::size_t>{}},
              {"replicas", reps},
              {"partial", failure.has_value()},
              {"wall_seconds", res.seconds},
              {"finished_unix_seconds", std::chrono::duration_cast<std::chrono::seconds>(now).count()}};
}

/// Writes the run directory. One replica writes its files at the top level;
/// several write replica_000/... plus aggregate.csv.
inline void write_run(const ExperimentResult& res, const std::filesystem::path& dir) {
  const IrrepSet* irreps = res.irreps ? &*res.irreps : nullptr;
  std::filesystem::create_directories(dir);
  write_json_file((dir / "config.json").string(), config_to_json(res.config));
  if (res.replicas.size() == 1) {
    write_replica(res.replicas[0], irreps, dir, res.config.analysis.snapshots);
  } else {
    for (const auto& rep : res.replicas) {
      char name[32];
      std::snprintf(name, sizeof name, "replica_%03zu", rep.index);
      write_replica(rep, irreps, dir / name, res.config.analysis.snapshots);
    }
    write_text_file(dir / "aggregate.csv", aggregate_csv(res));
  }
  write_json_file((dir / "manifest.json").string(), manifest_json(res));
}

}  // namespace gbias

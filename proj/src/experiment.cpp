#include "pgcn/experiment.hpp"

#include <filesystem>
#include <fstream>

#include "pgcn/error.hpp"

namespace pgcn {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (std::string_view a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(path + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_number(const json& obj, const std::string& path, std::string_view key, T fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(std::string(key));
  if (!v.is_number()) throw ConfigError(path + "." + std::string(key) + ": expected a number");
  return v.get<T>();
}

bool get_bool(const json& obj, const std::string& path, std::string_view key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(std::string(key));
  if (!v.is_boolean()) throw ConfigError(path + "." + std::string(key) + ": expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& path, std::string_view key, std::string fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(std::string(key));
  if (!v.is_string()) throw ConfigError(path + "." + std::string(key) + ": expected a string");
  return v.get<std::string>();
}

template <typename T>
std::vector<T> get_array(const json& obj, const std::string& path, std::string_view key) {
  std::vector<T> out;
  if (!obj.contains(key)) return out;
  const json& v = obj.at(std::string(key));
  if (!v.is_array()) throw ConfigError(path + "." + std::string(key) + ": expected an array");
  for (const json& item : v) {
    if (!item.is_number()) throw ConfigError(path + "." + std::string(key) + ": expected numeric entries");
    out.push_back(item.get<T>());
  }
  return out;
}

SyntheticSpec parse_synthetic(const json& obj, const std::string& path) {
  check_keys(obj, path, {"n", "classes", "p_in", "p_out", "feature_dim", "feature_separation", "seed"});
  SyntheticSpec spec;
  spec.n = get_number<std::int64_t>(obj, path, "n", spec.n);
  spec.classes = get_number<std::int64_t>(obj, path, "classes", spec.classes);
  spec.p_in = get_number<double>(obj, path, "p_in", spec.p_in);
  spec.p_out = get_number<double>(obj, path, "p_out", spec.p_out);
  spec.feature_dim = get_number<std::int64_t>(obj, path, "feature_dim", spec.feature_dim);
  spec.feature_separation = get_number<double>(obj, path, "feature_separation", spec.feature_separation);
  spec.seed = get_number<std::uint64_t>(obj, path, "seed", spec.seed);
  spec.validate();
  return spec;
}

TrainConfig parse_train(const json& obj, const std::string& path) {
  check_keys(obj, path,
             {"lr", "weight_decay", "max_epochs", "patience", "eval_every", "decoupled_weight_decay", "theta_l2",
              "f32"});
  TrainConfig t;
  t.lr = get_number<double>(obj, path, "lr", t.lr);
  t.weight_decay = get_number<double>(obj, path, "weight_decay", t.weight_decay);
  t.max_epochs = get_number<std::int64_t>(obj, path, "max_epochs", t.max_epochs);
  t.patience = get_number<std::int64_t>(obj, path, "patience", t.patience);
  t.eval_every = get_number<std::int64_t>(obj, path, "eval_every", t.eval_every);
  t.decoupled_weight_decay = get_bool(obj, path, "decoupled_weight_decay", false);
  if (obj.contains("theta_l2")) t.theta_l2 = get_number<double>(obj, path, "theta_l2", 0.0);
  t.f32 = get_bool(obj, path, "f32", false);
  t.validate();
  return t;
}

GridSpec parse_grid(const json& obj, const std::string& path) {
  check_keys(obj, path, {"hidden", "lr", "weight_decay", "T", "L", "gamma", "dropout"});
  GridSpec g;
  g.hidden = get_array<std::int64_t>(obj, path, "hidden");
  g.T = get_array<std::int64_t>(obj, path, "T");
  g.L = get_array<std::int64_t>(obj, path, "L");
  g.lr = get_array<double>(obj, path, "lr");
  g.weight_decay = get_array<double>(obj, path, "weight_decay");
  g.gamma = get_array<double>(obj, path, "gamma");
  g.dropout = get_array<double>(obj, path, "dropout");
  return g;
}

SweepSpec parse_sweep(const json& obj, const std::string& path) {
  check_keys(obj, path, {"gamma", "L", "dropout"});
  SweepSpec s;
  s.gamma = get_array<double>(obj, path, "gamma");
  s.L = get_array<std::int64_t>(obj, path, "L");
  s.dropout = get_array<double>(obj, path, "dropout");
  return s;
}

}  // namespace

std::string_view symmetrize_mode_name(SymmetrizeMode mode) {
  switch (mode) {
    case SymmetrizeMode::kAuto:
      return "auto";
    case SymmetrizeMode::kForce:
      return "force";
    case SymmetrizeMode::kNever:
      return "never";
  }
  return "auto";
}

SymmetrizeMode symmetrize_mode_from_name(std::string_view name) {
  if (name == "auto") return SymmetrizeMode::kAuto;
  if (name == "force") return SymmetrizeMode::kForce;
  if (name == "never") return SymmetrizeMode::kNever;
  throw ConfigError("unknown symmetrize mode '" + std::string(name) + "'");
}

std::string_view coefficient_mode_name(CoefficientMode mode) {
  return mode == CoefficientMode::kCanonical ? "canonical" : "paper";
}

CoefficientMode coefficient_mode_from_name(std::string_view name) {
  if (name == "canonical") return CoefficientMode::kCanonical;
  if (name == "paper") return CoefficientMode::kPaper;
  throw ConfigError("unknown coefficient mode '" + std::string(name) + "'");
}

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  json doc;
  doc["kind"] = std::string(model_kind_name(cfg.kind));
  doc["T"] = cfg.T;
  doc["L"] = cfg.L;
  doc["hidden"] = cfg.hidden;
  doc["gamma"] = cfg.gamma;
  doc["dropout"] = cfg.dropout;
  doc["sgc_power"] = cfg.sgc_power;
  doc["gcn_layers"] = cfg.gcn_layers;
  doc["gpr_init"] = cfg.gpr_init == GprInit::kPpr ? "ppr" : "uniform";
  doc["gpr_alpha"] = cfg.gpr_alpha;
  doc["mu_param"] = cfg.mu_param == MuParam::kSigmoid ? "sigmoid" : "clamp";
  doc["link_branch"] = cfg.link_branch == LinkBranch::kNormalized ? "normalized" : "raw";
  doc["dropout_link_branch"] = cfg.dropout_link_branch;
  return doc;
}

ModelConfig model_config_from_json(const nlohmann::json& doc) {
  const std::string path = "model";
  check_keys(doc, path,
             {"kind", "T", "L", "hidden", "gamma", "dropout", "sgc_power", "gcn_layers", "gpr_init", "gpr_alpha",
              "mu_param", "link_branch", "dropout_link_branch"});
  ModelConfig cfg;
  cfg.kind = model_kind_from_name(get_string(doc, path, "kind", "gpcn"));
  cfg.T = get_number<std::int64_t>(doc, path, "T", cfg.T);
  cfg.L = get_number<std::int64_t>(doc, path, "L", cfg.L);
  cfg.hidden = get_number<std::int64_t>(doc, path, "hidden", cfg.hidden);
  cfg.gamma = get_number<double>(doc, path, "gamma", cfg.gamma);
  cfg.dropout = get_number<double>(doc, path, "dropout", cfg.dropout);
  cfg.sgc_power = get_number<std::int64_t>(doc, path, "sgc_power", cfg.sgc_power);
  cfg.gcn_layers = get_number<std::int64_t>(doc, path, "gcn_layers", cfg.gcn_layers);
  const std::string gpr_init = get_string(doc, path, "gpr_init", "ppr");
  if (gpr_init == "ppr")
    cfg.gpr_init = GprInit::kPpr;
  else if (gpr_init == "uniform")
    cfg.gpr_init = GprInit::kUniform;
  else
    throw ConfigError("model.gpr_init: unknown value '" + gpr_init + "'");
  cfg.gpr_alpha = get_number<double>(doc, path, "gpr_alpha", cfg.gpr_alpha);
  const std::string mu_param = get_string(doc, path, "mu_param", "sigmoid");
  if (mu_param == "sigmoid")
    cfg.mu_param = MuParam::kSigmoid;
  else if (mu_param == "clamp")
    cfg.mu_param = MuParam::kClamp;
  else
    throw ConfigError("model.mu_param: unknown value '" + mu_param + "'");
  const std::string link_branch = get_string(doc, path, "link_branch", "normalized");
  if (link_branch == "normalized")
    cfg.link_branch = LinkBranch::kNormalized;
  else if (link_branch == "raw")
    cfg.link_branch = LinkBranch::kRaw;
  else
    throw ConfigError("model.link_branch: unknown value '" + link_branch + "'");
  cfg.dropout_link_branch = get_bool(doc, path, "dropout_link_branch", false);
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_experiment_config(const nlohmann::json& doc) {
  check_keys(doc, "config",
             {"dataset", "model", "train", "split", "output_dir", "symmetrize", "coefficients",
              "normalize_features", "grid", "sweep"});
  ExperimentConfig cfg;

  if (!doc.contains("dataset")) throw ConfigError("config.dataset: required");
  const json& ds = doc.at("dataset");
  check_keys(ds, "dataset", {"path", "format", "synthetic", "external"});
  int sources = 0;
  if (ds.contains("path")) {
    cfg.dataset_path = get_string(ds, "dataset", "path", "");
    cfg.dataset_format = data_format_from_name(get_string(ds, "dataset", "format", "text"));
    ++sources;
  }
  if (ds.contains("synthetic")) {
    cfg.synthetic = parse_synthetic(ds.at("synthetic"), "dataset.synthetic");
    ++sources;
  }
  if (ds.contains("external")) {
    const json& ext = ds.at("external");
    check_keys(ext, "dataset.external", {"edges", "features", "labels"});
    ExperimentConfig::ExternalPaths paths;
    paths.edges = get_string(ext, "dataset.external", "edges", "");
    paths.features = get_string(ext, "dataset.external", "features", "");
    paths.labels = get_string(ext, "dataset.external", "labels", "");
    if (paths.edges.empty() || paths.features.empty() || paths.labels.empty())
      throw ConfigError("dataset.external: edges, features, labels are all required");
    cfg.external = paths;
    ++sources;
  }
  if (sources != 1) throw ConfigError("dataset: exactly one of path / synthetic / external must be given");

  if (doc.contains("model")) cfg.model = model_config_from_json(doc.at("model"));
  if (doc.contains("train")) cfg.train = parse_train(doc.at("train"), "train");

  if (doc.contains("split")) {
    const json& sp = doc.at("split");
    check_keys(sp, "split", {"protocol", "seeds", "files"});
    cfg.protocol = split_protocol_from_name(get_string(sp, "split", "protocol", "per_class_60_20_20"));
    if (sp.contains("seeds")) cfg.seeds = get_array<std::uint64_t>(sp, "split", "seeds");
    if (sp.contains("files")) {
      const json& files = sp.at("files");
      if (!files.is_array()) throw ConfigError("split.files: expected an array");
      cfg.split_files.clear();
      for (const json& f : files) {
        if (!f.is_string()) throw ConfigError("split.files: expected string entries");
        cfg.split_files.push_back(f.get<std::string>());
      }
    }
    if (cfg.protocol == SplitProtocol::kFixedFile && cfg.split_files.empty())
      throw ConfigError("split: fixed_file protocol needs split.files");
    if (cfg.seeds.empty()) throw ConfigError("split.seeds: must not be empty");
  }

  cfg.output_dir = get_string(doc, "config", "output_dir", cfg.output_dir);
  cfg.symmetrize = symmetrize_mode_from_name(get_string(doc, "config", "symmetrize", "auto"));
  cfg.coefficients = coefficient_mode_from_name(get_string(doc, "config", "coefficients", "paper"));
  cfg.normalize_features = feature_norm_from_name(get_string(doc, "config", "normalize_features", "none"));
  if (doc.contains("grid")) cfg.grid = parse_grid(doc.at("grid"), "grid");
  if (doc.contains("sweep")) cfg.sweep = parse_sweep(doc.at("sweep"), "sweep");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(path + ": invalid JSON");
  return parse_experiment_config(doc);
}

GraphDataset load_config_dataset(const ExperimentConfig& cfg) {
  GraphDataset ds;
  if (cfg.dataset_path)
    ds = load_dataset(*cfg.dataset_path, cfg.dataset_format);
  else if (cfg.synthetic)
    ds = generate_sbm(*cfg.synthetic);
  else if (cfg.external)
    ds = import_external(cfg.external->edges, cfg.external->features, cfg.external->labels);
  else
    throw ConfigError("config has no dataset source");
  normalize_features(ds, cfg.normalize_features);
  if (cfg.protocol == SplitProtocol::kFixedFile) {
    for (std::size_t i = 0; i < cfg.split_files.size(); ++i) {
      Split s = load_split_file(cfg.split_files[i], ds.num_nodes());
      s.seed = i < cfg.seeds.size() ? cfg.seeds[i] : static_cast<std::uint64_t>(i);
      ds.fixed_splits.push_back(std::move(s));
    }
  }
  return ds;
}

std::vector<Split> make_config_splits(const ExperimentConfig& cfg, const GraphDataset& ds) {
  if (cfg.protocol == SplitProtocol::kFixedFile) {
    if (ds.fixed_splits.empty()) throw ConfigError("fixed_file protocol: dataset carries no splits");
    return ds.fixed_splits;
  }
  std::vector<Split> splits;
  for (std::uint64_t seed : cfg.seeds) splits.push_back(make_split(ds.labels, cfg.protocol, seed));
  return splits;
}

Split load_split_file(const std::string& path, std::int64_t n) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open split file '" + path + "'");
  Split s;
  s.protocol = SplitProtocol::kFixedFile;
  std::string line;
  std::int64_t node = 0;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (node >= n) throw DataError(path + ":" + std::to_string(line_no) + ": more lines than nodes");
    if (line == "0")
      s.train.push_back(node);
    else if (line == "1")
      s.val.push_back(node);
    else if (line == "2")
      s.test.push_back(node);
    else if (line != "3")
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 0, 1, 2 or 3");
    ++node;
  }
  if (node != n)
    throw DataError(path + ": split file covers " + std::to_string(node) + " nodes, dataset has " +
                    std::to_string(n));
  s.validate(n);
  return s;
}

void save_split_file(const Split& split, std::int64_t n, const std::string& path) {
  std::vector<int> role(static_cast<std::size_t>(n), 3);
  for (std::int64_t i : split.train) role[static_cast<std::size_t>(i)] = 0;
  for (std::int64_t i : split.val) role[static_cast<std::size_t>(i)] = 1;
  for (std::int64_t i : split.test) role[static_cast<std::size_t>(i)] = 2;
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  for (int r : role) out << r << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[hash & 0xf];
    hash >>= 4;
  }
  return out;
}

void write_manifest(const std::string& out_dir, const std::string& command, const std::string& config_hash,
                    const std::vector<std::uint64_t>& seeds) {
  std::filesystem::create_directories(out_dir);
  nlohmann::ordered_json doc;
  doc["command"] = command;
  doc["config_hash"] = config_hash;
  doc["seeds"] = seeds;
  doc["version"] = std::string(kVersionString);
  std::ofstream out(out_dir + "/manifest.json");
  if (!out) throw DataError("cannot write manifest in '" + out_dir + "'");
  out << doc.dump(2) << '\n';
}

}  // namespace pgcn

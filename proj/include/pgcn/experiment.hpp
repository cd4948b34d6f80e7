#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pgcn/dataset.hpp"
#include "pgcn/model.hpp"
#include "pgcn/train.hpp"

namespace pgcn {

// Parsed experiment document.  Exactly one dataset source is set.
struct ExperimentConfig {
  std::optional<std::string> dataset_path;
  DataFormat dataset_format = DataFormat::kText;
  std::optional<SyntheticSpec> synthetic;
  struct ExternalPaths {
    std::string edges, features, labels;
  };
  std::optional<ExternalPaths> external;

  ModelConfig model;
  TrainConfig train;

  SplitProtocol protocol = SplitProtocol::kPerClass602020;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<std::string> split_files;  // fixed_file protocol

  std::string output_dir = "out";
  SymmetrizeMode symmetrize = SymmetrizeMode::kAuto;
  CoefficientMode coefficients = CoefficientMode::kPaper;
  FeatureNorm normalize_features = FeatureNorm::kNone;

  GridSpec grid;
  SweepSpec sweep;
};

// Strict parse: unknown keys anywhere in the document are errors.
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::string& path);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& doc);

// Loads whichever dataset source the config names.
GraphDataset load_config_dataset(const ExperimentConfig& cfg);

// Generates or loads the configured splits, one per seed (or per split file).
std::vector<Split> make_config_splits(const ExperimentConfig& cfg, const GraphDataset& ds);

// Split file: one line per node with 0=train, 1=val, 2=test, 3=unused.
Split load_split_file(const std::string& path, std::int64_t n);
void save_split_file(const Split& split, std::int64_t n, const std::string& path);

SymmetrizeMode symmetrize_mode_from_name(std::string_view name);
std::string_view symmetrize_mode_name(SymmetrizeMode mode);
CoefficientMode coefficient_mode_from_name(std::string_view name);
std::string_view coefficient_mode_name(CoefficientMode mode);

// FNV-1a over the raw bytes, printed as 16 hex digits; used for manifests.
std::string fnv1a_hex(std::string_view bytes);

// manifest.json written beside command outputs: command, config hash, seeds,
// version.  Deterministic (no timestamps).
void write_manifest(const std::string& out_dir, const std::string& command, const std::string& config_hash,
                    const std::vector<std::uint64_t>& seeds);

inline constexpr std::string_view kVersionString = "pgcn 0.1.0";

}  // namespace pgcn

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pgcn/graph.hpp"
#include "pgcn/matrix.hpp"
#include "pgcn/split.hpp"

namespace pgcn {

enum class DataFormat { kText, kBinary };

std::string_view data_format_name(DataFormat f);
DataFormat data_format_from_name(std::string_view name);

// One named node-classification problem instance.  `adjacency` is the raw A
// exactly as ingested (possibly directed); normalization happens downstream.
// `fixed_splits` holds externally supplied splits, when the problem ships
// with them.
struct GraphDataset {
  std::string name;
  SparseAdjacency adjacency;
  Matrix features;  // N x q
  LabelVector labels;
  std::vector<Split> fixed_splits;

  std::int64_t num_nodes() const { return adjacency.n_rows; }
  std::int64_t num_features() const { return features.cols; }
  void validate() const;
};

// Text layout: header "N M C", M lines "src dst", N label lines, N feature
// rows (whitespace separated, width fixed by the first row).  The binary
// layout (magic "PGCN", version 1) stores N, M, C, q as u64 little-endian
// followed by the same payload with f64 features.
GraphDataset load_dataset(const std::string& path, DataFormat format);
void save_dataset(const GraphDataset& ds, const std::string& path, DataFormat format);

// Adapter for published benchmark layouts: "src<TAB>dst" edge lines, one
// feature row per node (comma or whitespace separated), one integer label per
// line.  Node count comes from the label file.
GraphDataset import_external(const std::string& edges_path, const std::string& features_path,
                             const std::string& labels_path);

// Optional feature preprocessing; nothing is applied by default.
//   kRows: scale each row to unit L1 norm (zero rows untouched).
//   kStandardize: per-column zero mean, unit variance (constant columns
//     centered only).
enum class FeatureNorm { kNone, kRows, kStandardize };

std::string_view feature_norm_name(FeatureNorm f);
FeatureNorm feature_norm_from_name(std::string_view name);
void normalize_features(GraphDataset& ds, FeatureNorm mode);

struct SyntheticSpec {
  std::int64_t n = 100;
  std::int64_t classes = 2;
  double p_in = 0.05;
  double p_out = 0.005;
  std::int64_t feature_dim = 8;
  double feature_separation = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Stochastic block model with Gaussian class-mean features at pairwise
// distance feature_separation and unit variance.  Every edge and feature draw
// is addressed by a (seed, index) counter, so output is bit-identical across
// runs, platforms, and generation order.
GraphDataset generate_sbm(const SyntheticSpec& spec);

}  // namespace pgcn

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pgcn/dataset.hpp"
#include "pgcn/error.hpp"
#include "pgcn/experiment.hpp"
#include "pgcn/graph.hpp"
#include "test_util.hpp"

using namespace pgcn;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "pgcn_test_io";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool datasets_equal(const GraphDataset& a, const GraphDataset& b) {
  return a.adjacency.row_offsets == b.adjacency.row_offsets && a.adjacency.col_indices == b.adjacency.col_indices &&
         a.adjacency.values == b.adjacency.values && a.labels.labels == b.labels.labels &&
         a.labels.num_classes == b.labels.num_classes && bit_identical(a.features, b.features);
}

GraphDataset tiny_dataset() {
  GraphDataset ds;
  ds.name = "tiny";
  ds.adjacency = build_csr(std::vector<Edge>{{0, 1}}, 2, false);
  ds.features = Matrix(2, 3);
  ds.features.at(0, 0) = 0.1;
  ds.features.at(0, 1) = -2.25;
  ds.features.at(0, 2) = 1e-3;
  ds.features.at(1, 0) = 3.0;
  ds.features.at(1, 1) = 0.0;
  ds.features.at(1, 2) = -7.5;
  ds.labels = LabelVector{{0, 1}, 2};
  return ds;
}

}  // namespace

TEST_CASE("text round trip is exact, including awkward decimals") {
  GraphDataset ds = tiny_dataset();
  ds.features.at(0, 0) = 0.1 + 0.2;  // not representable in short decimal
  ds.features.at(1, 2) = -1.0 / 3.0;
  const auto path = temp_dir() / "tiny.txt";
  save_dataset(ds, path.string(), DataFormat::kText);
  GraphDataset loaded = load_dataset(path.string(), DataFormat::kText);
  CHECK(datasets_equal(ds, loaded));
  // Saving the loaded copy reproduces the bytes.
  const auto path2 = temp_dir() / "tiny2.txt";
  save_dataset(loaded, path2.string(), DataFormat::kText);
  CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("binary round trip and cross-format agreement") {
  Rng rng(1);
  for (int rep = 0; rep < 5; ++rep) {
    GraphDataset ds = testutil::random_dataset(20 + 13 * rep, 5, 3, rng);
    const auto text_path = temp_dir() / ("rt" + std::to_string(rep) + ".txt");
    const auto bin_path = temp_dir() / ("rt" + std::to_string(rep) + ".pgcn");
    save_dataset(ds, text_path.string(), DataFormat::kText);
    save_dataset(ds, bin_path.string(), DataFormat::kBinary);
    GraphDataset from_text = load_dataset(text_path.string(), DataFormat::kText);
    GraphDataset from_bin = load_dataset(bin_path.string(), DataFormat::kBinary);
    CHECK(datasets_equal(ds, from_text));
    CHECK(datasets_equal(ds, from_bin));
    CHECK(datasets_equal(from_text, from_bin));
  }
}

TEST_CASE("parse errors name the offending line") {
  const auto dir = temp_dir();
  {
    std::ofstream out(dir / "bad_header.txt");
    out << "2 1\n0 1\n0\n1\n1 2\n3 4\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset((dir / "bad_header.txt").string(), DataFormat::kText),
                       doctest::Contains(":1:"), DataError);
  {
    std::ofstream out(dir / "bad_label.txt");
    out << "2 1 2\n0 1\n0\n5\n1 2\n3 4\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset((dir / "bad_label.txt").string(), DataFormat::kText),
                       doctest::Contains(":4:"), DataError);
  {
    std::ofstream out(dir / "bad_features.txt");
    out << "2 1 2\n0 1\n0\n1\n1 2\n3\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset((dir / "bad_features.txt").string(), DataFormat::kText),
                       doctest::Contains(":6:"), DataError);
  {
    std::ofstream out(dir / "truncated.txt");
    out << "3 1 2\n0 1\n0\n1\n";  // missing one label and all features
  }
  CHECK_THROWS_AS(load_dataset((dir / "truncated.txt").string(), DataFormat::kText), DataError);
  {
    std::ofstream out(dir / "bad_edge.txt");
    out << "2 1 2\n0 7\n0\n1\n1 2\n3 4\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset((dir / "bad_edge.txt").string(), DataFormat::kText),
                       doctest::Contains(":2:"), DataError);
}

TEST_CASE("binary loader rejects corrupted payloads") {
  const auto dir = temp_dir();
  GraphDataset ds = tiny_dataset();
  const auto path = dir / "ok.pgcn";
  save_dataset(ds, path.string(), DataFormat::kBinary);
  std::string bytes = slurp(path);
  {
    std::ofstream out(dir / "bad_magic.pgcn", std::ios::binary);
    std::string corrupted = bytes;
    corrupted[0] = 'X';
    out << corrupted;
  }
  CHECK_THROWS_AS(load_dataset((dir / "bad_magic.pgcn").string(), DataFormat::kBinary), DataError);
  {
    std::ofstream out(dir / "short.pgcn", std::ios::binary);
    out << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(load_dataset((dir / "short.pgcn").string(), DataFormat::kBinary), DataError);
}

TEST_CASE("sbm extremes pin edge homophily") {
  SyntheticSpec spec;
  spec.n = 200;
  spec.classes = 2;
  spec.feature_dim = 4;
  spec.seed = 3;

  spec.p_in = 0.1;
  spec.p_out = 0.0;
  GraphDataset pure = generate_sbm(spec);
  CHECK(edge_homophily(pure.adjacency, pure.labels) == 1.0);

  spec.p_in = 0.0;
  spec.p_out = 0.1;
  GraphDataset inverted = generate_sbm(spec);
  CHECK(edge_homophily(inverted.adjacency, inverted.labels) == 0.0);
}

TEST_CASE("sbm with equal probabilities approaches homophily 1/C") {
  const std::int64_t n = 500;
  std::vector<double> values;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SyntheticSpec spec;
    spec.n = n;
    spec.classes = 2;
    spec.p_in = 0.04;
    spec.p_out = 0.04;
    spec.feature_dim = 3;
    spec.seed = seed;
    GraphDataset ds = generate_sbm(spec);
    values.push_back(edge_homophily(ds.adjacency, ds.labels));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  // ~5000 expected edges per draw, ten draws: 3 sigma of the pooled estimate.
  const double sigma = std::sqrt(0.5 * 0.5 / (5000.0 * 10.0));
  CHECK(std::fabs(mean - 0.5) < 3.0 * sigma);
}

TEST_CASE("sbm generation is bit-identical per seed") {
  SyntheticSpec spec;
  spec.n = 120;
  spec.classes = 3;
  spec.p_in = 0.08;
  spec.p_out = 0.01;
  spec.feature_dim = 6;
  spec.feature_separation = 1.0;
  spec.seed = 11;
  GraphDataset a = generate_sbm(spec);
  GraphDataset b = generate_sbm(spec);
  CHECK(datasets_equal(a, b));
  spec.seed = 12;
  CHECK_FALSE(datasets_equal(a, generate_sbm(spec)));
}

TEST_CASE("sbm homophily rises with the intra-class share") {
  std::int64_t rises = 0;
  const std::int64_t trials = 50;
  for (std::uint64_t seed = 0; seed < static_cast<std::uint64_t>(trials); ++seed) {
    SyntheticSpec lo;
    lo.n = 300;
    lo.classes = 2;
    lo.p_in = 0.02;
    lo.p_out = 0.04;
    lo.feature_dim = 3;
    lo.seed = seed;
    SyntheticSpec hi = lo;
    hi.p_in = 0.04;
    hi.p_out = 0.02;
    const double h_lo = edge_homophily(generate_sbm(lo).adjacency, generate_sbm(lo).labels);
    const double h_hi = edge_homophily(generate_sbm(hi).adjacency, generate_sbm(hi).labels);
    rises += h_hi > h_lo ? 1 : 0;
  }
  CHECK(rises == trials);
}

TEST_CASE("sbm separated means sit at the requested distance") {
  SyntheticSpec spec;
  spec.n = 4000;
  spec.classes = 2;
  spec.p_in = 0.0;
  spec.p_out = 0.001;
  spec.feature_dim = 2;
  spec.feature_separation = 2.0;
  spec.seed = 5;
  GraphDataset ds = generate_sbm(spec);
  double mean0 = 0.0, mean1 = 0.0;
  std::int64_t n0 = 0, n1 = 0;
  for (std::int64_t i = 0; i < spec.n; ++i) {
    if (ds.labels.labels[static_cast<std::size_t>(i)] == 0) {
      mean0 += ds.features.at(i, 0);
      ++n0;
    } else {
      mean1 += ds.features.at(i, 0);
      ++n1;
    }
  }
  mean0 /= static_cast<double>(n0);
  mean1 /= static_cast<double>(n1);
  CHECK(std::fabs((mean1 - mean0) - 2.0) < 0.15);  // ~3 sigma at n = 2000 per class
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec;
  spec.n = 2;
  spec.classes = 5;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = SyntheticSpec{};
  spec.p_in = 1.5;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = SyntheticSpec{};
  spec.classes = 4;
  spec.feature_dim = 3;
  spec.feature_separation = 1.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("external adapter reads tab edges, csv features, labels") {
  const auto dir = temp_dir();
  {
    std::ofstream edges(dir / "ext_edges.txt");
    edges << "0\t1\n1\t2\n";
    std::ofstream feats(dir / "ext_features.txt");
    feats << "0.5, 1.5\n-1, 2\n0, 0.25\n";
    std::ofstream labels(dir / "ext_labels.txt");
    labels << "0\n1\n1\n";
  }
  GraphDataset ds = import_external((dir / "ext_edges.txt").string(), (dir / "ext_features.txt").string(),
                                    (dir / "ext_labels.txt").string());
  CHECK(ds.num_nodes() == 3);
  CHECK(ds.labels.num_classes == 2);
  CHECK(ds.features.at(0, 1) == 1.5);
  CHECK(ds.adjacency.nnz() == 2);  // directed as given

  // Node counts must be consistent across files.
  {
    std::ofstream feats(dir / "ext_features.txt");
    feats << "0.5, 1.5\n-1, 2\n";
  }
  CHECK_THROWS_AS(import_external((dir / "ext_edges.txt").string(), (dir / "ext_features.txt").string(),
                                  (dir / "ext_labels.txt").string()),
                  DataError);
}

TEST_CASE("feature normalization modes") {
  GraphDataset ds = tiny_dataset();
  ds.features = Matrix(3, 2);
  ds.features.at(0, 0) = 3.0;
  ds.features.at(0, 1) = -1.0;
  ds.features.at(1, 0) = 0.0;
  ds.features.at(1, 1) = 0.0;  // zero row stays put
  ds.features.at(2, 0) = 1.0;
  ds.features.at(2, 1) = 1.0;
  ds.adjacency = build_csr(std::vector<Edge>{{0, 1}, {1, 2}}, 3, false);
  ds.labels = LabelVector{{0, 1, 0}, 2};

  GraphDataset rows = ds;
  normalize_features(rows, FeatureNorm::kRows);
  CHECK(rows.features.at(0, 0) == doctest::Approx(0.75));
  CHECK(rows.features.at(0, 1) == doctest::Approx(-0.25));
  CHECK(rows.features.at(1, 0) == 0.0);
  CHECK(rows.features.at(2, 0) == doctest::Approx(0.5));

  GraphDataset std_ds = ds;
  normalize_features(std_ds, FeatureNorm::kStandardize);
  for (std::int64_t j = 0; j < 2; ++j) {
    double mean = 0.0, var = 0.0;
    for (std::int64_t i = 0; i < 3; ++i) mean += std_ds.features.at(i, j);
    mean /= 3.0;
    for (std::int64_t i = 0; i < 3; ++i) var += (std_ds.features.at(i, j) - mean) * (std_ds.features.at(i, j) - mean);
    CHECK(std::fabs(mean) < 1e-14);
    CHECK(var / 3.0 == doctest::Approx(1.0));
  }

  GraphDataset untouched = ds;
  normalize_features(untouched, FeatureNorm::kNone);
  CHECK(bit_identical(untouched.features, ds.features));

  CHECK(feature_norm_from_name("rows") == FeatureNorm::kRows);
  CHECK_THROWS_AS(feature_norm_from_name("colwise"), ConfigError);
}

TEST_CASE("split files round trip") {
  Rng rng(2);
  LabelVector y = testutil::random_labels(40, 3, rng);
  Split s = make_split(y, SplitProtocol::kPerClass602020, 4);
  const auto path = temp_dir() / "split.txt";
  save_split_file(s, 40, path.string());
  Split loaded = load_split_file(path.string(), 40);
  CHECK(loaded.train == s.train);
  CHECK(loaded.val == s.val);
  CHECK(loaded.test == s.test);
  CHECK_THROWS_AS(load_split_file(path.string(), 41), DataError);
}

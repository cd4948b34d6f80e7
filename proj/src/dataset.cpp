#include "pgcn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pgcn/error.hpp"
#include "pgcn/rng.hpp"

namespace pgcn {

namespace {

constexpr char kMagic[4] = {'P', 'G', 'C', 'N'};
constexpr std::uint8_t kVersion = 1;

// --- text helpers -----------------------------------------------------------

struct LineReader {
  std::istream& in;
  std::string path;
  std::int64_t line_no = 0;
  std::string line = {};

  bool next() {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(path + ":" + std::to_string(line_no) + ": " + what);
  }

  void require_next(const std::string& what) {
    if (!next()) throw DataError(path + ": unexpected end of file, expected " + what);
  }
};

std::vector<std::string_view> tokenize(std::string_view s, bool commas = false) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto is_sep = [commas](char c) { return c == ' ' || c == '\t' || (commas && c == ','); };
  while (i < s.size()) {
    while (i < s.size() && is_sep(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_sep(s[j])) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::int64_t parse_int(const LineReader& r, std::string_view tok, const char* what) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) r.fail(std::string("malformed ") + what);
  return v;
}

double parse_real(const LineReader& r, std::string_view tok, const char* what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) r.fail(std::string("malformed ") + what);
  return v;
}

// Shortest round-trip decimal form.
std::string format_real(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

GraphDataset read_text(std::istream& in, const std::string& path) {
  LineReader r{in, path};
  r.require_next("header");
  auto header = tokenize(r.line);
  if (header.size() != 3) r.fail("header must be 'N M C'");
  const std::int64_t n = parse_int(r, header[0], "node count");
  const std::int64_t m = parse_int(r, header[1], "edge count");
  const std::int64_t c = parse_int(r, header[2], "class count");
  if (n <= 0 || m < 0 || c <= 0) r.fail("header values out of range");

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (std::int64_t i = 0; i < m; ++i) {
    r.require_next("edge line");
    auto toks = tokenize(r.line);
    if (toks.size() != 2) r.fail("edge line must be 'src dst'");
    Edge e{parse_int(r, toks[0], "edge endpoint"), parse_int(r, toks[1], "edge endpoint")};
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) r.fail("edge endpoint out of range");
    edges.push_back(e);
  }

  LabelVector y;
  y.num_classes = c;
  y.labels.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    r.require_next("label line");
    auto toks = tokenize(r.line);
    if (toks.size() != 1) r.fail("label line must hold a single integer");
    const std::int64_t label = parse_int(r, toks[0], "label");
    if (label < 0 || label >= c) r.fail("label " + std::to_string(label) + " outside [0, " + std::to_string(c) + ")");
    y.labels.push_back(label);
  }

  Matrix x;
  for (std::int64_t i = 0; i < n; ++i) {
    r.require_next("feature row");
    auto toks = tokenize(r.line);
    if (i == 0) {
      if (toks.empty()) r.fail("empty feature row");
      x = Matrix(n, static_cast<std::int64_t>(toks.size()));
    } else if (static_cast<std::int64_t>(toks.size()) != x.cols) {
      r.fail("feature count mismatch: expected " + std::to_string(x.cols) + ", got " + std::to_string(toks.size()));
    }
    for (std::int64_t j = 0; j < x.cols; ++j) x.at(i, j) = parse_real(r, toks[static_cast<std::size_t>(j)], "feature");
  }

  GraphDataset ds;
  ds.adjacency = build_csr(edges, n, /*directed=*/true);
  ds.features = std::move(x);
  ds.labels = std::move(y);
  ds.validate();
  return ds;
}

void write_text(const GraphDataset& ds, std::ostream& out) {
  const SparseAdjacency& a = ds.adjacency;
  out << a.n_rows << ' ' << a.nnz() << ' ' << ds.labels.num_classes << '\n';
  for (std::int64_t r = 0; r < a.n_rows; ++r)
    for (std::int64_t k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k)
      out << r << ' ' << a.col_indices[k] << '\n';
  for (std::int64_t i = 0; i < ds.labels.size(); ++i) out << ds.labels.labels[static_cast<std::size_t>(i)] << '\n';
  for (std::int64_t i = 0; i < ds.features.rows; ++i) {
    for (std::int64_t j = 0; j < ds.features.cols; ++j) {
      if (j) out << ' ';
      out << format_real(ds.features.at(i, j));
    }
    out << '\n';
  }
}

// --- binary helpers ---------------------------------------------------------

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError(path + ": truncated binary payload");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in, const std::string& path) {
  std::uint64_t bits = get_u64(in, path);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

GraphDataset read_binary(std::istream& in, const std::string& path) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw DataError(path + ": bad magic, expected PGCN");
  char version;
  if (!in.read(&version, 1) || static_cast<std::uint8_t>(version) != kVersion)
    throw DataError(path + ": unsupported format version");
  const auto n = static_cast<std::int64_t>(get_u64(in, path));
  const auto m = static_cast<std::int64_t>(get_u64(in, path));
  const auto c = static_cast<std::int64_t>(get_u64(in, path));
  const auto q = static_cast<std::int64_t>(get_u64(in, path));
  if (n <= 0 || m < 0 || c <= 0 || q <= 0) throw DataError(path + ": header values out of range");
  const std::int64_t cap = std::int64_t{1} << 32;
  if (n > cap || m > cap || n * q > cap) throw DataError(path + ": implausible header sizes");
  std::vector<Edge> edges(static_cast<std::size_t>(m));
  for (Edge& e : edges) {
    e.src = static_cast<std::int64_t>(get_u64(in, path));
    e.dst = static_cast<std::int64_t>(get_u64(in, path));
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) throw DataError(path + ": edge endpoint out of range");
  }
  GraphDataset ds;
  ds.labels.num_classes = c;
  ds.labels.labels.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::int64_t>(get_u64(in, path));
    if (label < 0 || label >= c) throw DataError(path + ": label out of range");
    ds.labels.labels[static_cast<std::size_t>(i)] = label;
  }
  ds.features = Matrix(n, q);
  for (double& v : ds.features.data) v = get_f64(in, path);
  ds.adjacency = build_csr(edges, n, /*directed=*/true);
  ds.validate();
  return ds;
}

void write_binary(const GraphDataset& ds, std::ostream& out) {
  out.write(kMagic, 4);
  const char version = static_cast<char>(kVersion);
  out.write(&version, 1);
  const SparseAdjacency& a = ds.adjacency;
  put_u64(out, static_cast<std::uint64_t>(a.n_rows));
  put_u64(out, static_cast<std::uint64_t>(a.nnz()));
  put_u64(out, static_cast<std::uint64_t>(ds.labels.num_classes));
  put_u64(out, static_cast<std::uint64_t>(ds.features.cols));
  for (std::int64_t r = 0; r < a.n_rows; ++r)
    for (std::int64_t k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k) {
      put_u64(out, static_cast<std::uint64_t>(r));
      put_u64(out, static_cast<std::uint64_t>(a.col_indices[k]));
    }
  for (std::int64_t label : ds.labels.labels) put_u64(out, static_cast<std::uint64_t>(label));
  for (double v : ds.features.data) put_f64(out, v);
}

std::string path_stem(const std::string& path) {
  const std::size_t slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const std::size_t dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace

std::string_view data_format_name(DataFormat f) { return f == DataFormat::kText ? "text" : "binary"; }

DataFormat data_format_from_name(std::string_view name) {
  if (name == "text") return DataFormat::kText;
  if (name == "binary") return DataFormat::kBinary;
  throw ConfigError("unknown data format '" + std::string(name) + "'");
}

void GraphDataset::validate() const {
  adjacency.validate();
  labels.validate();
  if (adjacency.n_rows != adjacency.n_cols) throw DataError("dataset: adjacency not square");
  if (features.rows != adjacency.n_rows || labels.size() != adjacency.n_rows)
    throw DataError("dataset: node count mismatch between adjacency, features, labels");
  if (!all_finite(features)) throw DataError("dataset: non-finite feature value");
}

GraphDataset load_dataset(const std::string& path, DataFormat format) {
  std::ifstream in(path, format == DataFormat::kBinary ? std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open dataset file '" + path + "'");
  GraphDataset ds = format == DataFormat::kText ? read_text(in, path) : read_binary(in, path);
  ds.name = path_stem(path);
  return ds;
}

void save_dataset(const GraphDataset& ds, const std::string& path, DataFormat format) {
  ds.validate();
  std::ofstream out(path, format == DataFormat::kBinary ? std::ios::binary : std::ios::out);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  if (format == DataFormat::kText)
    write_text(ds, out);
  else
    write_binary(ds, out);
  if (!out) throw DataError("write failed for '" + path + "'");
}

GraphDataset import_external(const std::string& edges_path, const std::string& features_path,
                             const std::string& labels_path) {
  std::ifstream labels_in(labels_path);
  if (!labels_in) throw DataError("cannot open labels file '" + labels_path + "'");
  LineReader lr{labels_in, labels_path};
  std::vector<std::int64_t> labels;
  while (lr.next()) {
    auto toks = tokenize(lr.line);
    if (toks.size() != 1) lr.fail("label line must hold a single integer");
    labels.push_back(parse_int(lr, toks[0], "label"));
  }
  if (labels.empty()) throw DataError(labels_path + ": no labels");
  const std::int64_t n = static_cast<std::int64_t>(labels.size());
  std::int64_t c = 0;
  for (std::int64_t label : labels) {
    if (label < 0) throw DataError(labels_path + ": negative label");
    c = std::max(c, label + 1);
  }

  std::ifstream feats_in(features_path);
  if (!feats_in) throw DataError("cannot open features file '" + features_path + "'");
  LineReader fr{feats_in, features_path};
  Matrix x;
  std::int64_t row = 0;
  while (fr.next()) {
    auto toks = tokenize(fr.line, /*commas=*/true);
    if (row == 0) {
      if (toks.empty()) fr.fail("empty feature row");
      x = Matrix(n, static_cast<std::int64_t>(toks.size()));
    } else if (static_cast<std::int64_t>(toks.size()) != x.cols) {
      fr.fail("feature count mismatch");
    }
    if (row >= n) fr.fail("more feature rows than labels (" + std::to_string(n) + ")");
    for (std::int64_t j = 0; j < x.cols; ++j) x.at(row, j) = parse_real(fr, toks[static_cast<std::size_t>(j)], "feature");
    ++row;
  }
  if (row != n)
    throw DataError(features_path + ": " + std::to_string(row) + " feature rows for " + std::to_string(n) +
                    " labels");

  std::ifstream edges_in(edges_path);
  if (!edges_in) throw DataError("cannot open edges file '" + edges_path + "'");
  LineReader er{edges_in, edges_path};
  std::vector<Edge> edges;
  while (er.next()) {
    auto toks = tokenize(er.line, /*commas=*/true);
    if (toks.size() != 2) er.fail("edge line must be 'src<TAB>dst'");
    Edge e{parse_int(er, toks[0], "edge endpoint"), parse_int(er, toks[1], "edge endpoint")};
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) er.fail("edge endpoint inconsistent with label count");
    edges.push_back(e);
  }

  GraphDataset ds;
  ds.name = path_stem(edges_path);
  ds.adjacency = build_csr(edges, n, /*directed=*/true);
  ds.features = std::move(x);
  ds.labels = LabelVector{std::move(labels), c};
  ds.validate();
  return ds;
}

std::string_view feature_norm_name(FeatureNorm f) {
  switch (f) {
    case FeatureNorm::kNone:
      return "none";
    case FeatureNorm::kRows:
      return "rows";
    case FeatureNorm::kStandardize:
      return "standardize";
  }
  return "none";
}

FeatureNorm feature_norm_from_name(std::string_view name) {
  if (name == "none") return FeatureNorm::kNone;
  if (name == "rows") return FeatureNorm::kRows;
  if (name == "standardize") return FeatureNorm::kStandardize;
  throw ConfigError("unknown feature normalization '" + std::string(name) + "'");
}

void normalize_features(GraphDataset& ds, FeatureNorm mode) {
  Matrix& x = ds.features;
  if (mode == FeatureNorm::kNone) return;
  if (mode == FeatureNorm::kRows) {
    for (std::int64_t i = 0; i < x.rows; ++i) {
      double norm = 0.0;
      for (std::int64_t j = 0; j < x.cols; ++j) norm += std::fabs(x.at(i, j));
      if (norm == 0.0) continue;
      for (std::int64_t j = 0; j < x.cols; ++j) x.at(i, j) /= norm;
    }
    return;
  }
  for (std::int64_t j = 0; j < x.cols; ++j) {
    double mean = 0.0;
    for (std::int64_t i = 0; i < x.rows; ++i) mean += x.at(i, j);
    mean /= static_cast<double>(x.rows);
    double var = 0.0;
    for (std::int64_t i = 0; i < x.rows; ++i) {
      const double d = x.at(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(x.rows);
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (std::int64_t i = 0; i < x.rows; ++i) x.at(i, j) = (x.at(i, j) - mean) * scale;
  }
}

void SyntheticSpec::validate() const {
  if (n <= 0) throw ConfigError("sbm: n must be positive");
  if (classes < 1 || n < classes) throw ConfigError("sbm: need n >= classes >= 1");
  if (p_in < 0.0 || p_in > 1.0 || p_out < 0.0 || p_out > 1.0) throw ConfigError("sbm: probabilities must be in [0,1]");
  if (feature_dim < 1) throw ConfigError("sbm: feature_dim must be >= 1");
  if (feature_separation < 0.0) throw ConfigError("sbm: feature_separation must be >= 0");
  if (feature_separation > 0.0 && classes > 2 && feature_dim < classes)
    throw ConfigError("sbm: separated means for C > 2 classes need feature_dim >= classes");
}

GraphDataset generate_sbm(const SyntheticSpec& spec) {
  spec.validate();
  const std::int64_t n = spec.n;
  const std::int64_t c = spec.classes;
  Rng base(spec.seed);
  const Rng edge_stream = base.stream(0);
  const Rng feature_stream = base.stream(1);

  LabelVector y;
  y.num_classes = c;
  y.labels.resize(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) y.labels[static_cast<std::size_t>(i)] = i % c;

  // Every unordered pair gets its own counter, so generation order is free.
  std::vector<Edge> edges;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      const double p = y.labels[static_cast<std::size_t>(i)] == y.labels[static_cast<std::size_t>(j)] ? spec.p_in
                                                                                                      : spec.p_out;
      if (p <= 0.0) continue;
      const std::uint64_t pair_index = static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n) +
                                       static_cast<std::uint64_t>(j);
      if (Rng::to_unit(Rng::at(edge_stream.key(), pair_index)) < p) edges.push_back({i, j});
    }
  }

  // Class means pairwise feature_separation apart: +-sep/2 along the first
  // axis for two classes, a scaled orthonormal frame otherwise.
  Matrix means(c, spec.feature_dim);
  if (spec.feature_separation > 0.0) {
    if (c == 2) {
      means.at(0, 0) = -spec.feature_separation / 2.0;
      means.at(1, 0) = spec.feature_separation / 2.0;
    } else {
      const double scale = spec.feature_separation / std::sqrt(2.0);
      for (std::int64_t k = 0; k < c; ++k) means.at(k, k) = scale;
    }
  }
  Matrix x(n, spec.feature_dim);
  for (std::int64_t i = 0; i < n; ++i) {
    Rng node_rng = feature_stream.stream(static_cast<std::uint64_t>(i));
    for (std::int64_t d = 0; d < spec.feature_dim; ++d)
      x.at(i, d) = means.at(y.labels[static_cast<std::size_t>(i)], d) + node_rng.next_gaussian();
  }

  GraphDataset ds;
  ds.name = "sbm_n" + std::to_string(n) + "_c" + std::to_string(c) + "_s" + std::to_string(spec.seed);
  ds.adjacency = build_csr(edges, n, /*directed=*/false);
  ds.features = std::move(x);
  ds.labels = std::move(y);
  return ds;
}

}  // namespace pgcn

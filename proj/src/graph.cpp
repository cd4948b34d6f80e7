#include "pgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "pgcn/error.hpp"
#include "pgcn/parallel.hpp"

namespace pgcn {

namespace {

struct Entry {
  std::int64_t row;
  std::int64_t col;
  double value;
};

// Builds a CSR from (row, col, value) triples: sorts, merges duplicates with
// `merge`, fills offsets.
template <typename Merge>
SparseAdjacency from_entries(std::vector<Entry> entries, std::int64_t n_rows, std::int64_t n_cols, Merge merge) {
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseAdjacency out;
  out.n_rows = n_rows;
  out.n_cols = n_cols;
  out.row_offsets.assign(static_cast<std::size_t>(n_rows) + 1, 0);
  out.col_indices.reserve(entries.size());
  out.values.reserve(entries.size());
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i + 1;
    double v = entries[i].value;
    while (j < entries.size() && entries[j].row == entries[i].row && entries[j].col == entries[i].col) {
      v = merge(v, entries[j].value);
      ++j;
    }
    out.col_indices.push_back(entries[i].col);
    out.values.push_back(v);
    out.row_offsets[static_cast<std::size_t>(entries[i].row) + 1]++;
    i = j;
  }
  for (std::size_t r = 0; r < static_cast<std::size_t>(n_rows); ++r) out.row_offsets[r + 1] += out.row_offsets[r];
  return out;
}

std::vector<Entry> to_entries(const SparseAdjacency& a) {
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(a.nnz()));
  for (std::int64_t r = 0; r < a.n_rows; ++r)
    for (std::int64_t k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k)
      entries.push_back({r, a.col_indices[k], a.values[k]});
  return entries;
}

}  // namespace

void SparseAdjacency::validate() const {
  if (n_rows < 0 || n_cols < 0) throw DataError("csr: negative dimensions");
  if (row_offsets.size() != static_cast<std::size_t>(n_rows) + 1) throw DataError("csr: row_offsets length");
  if (row_offsets.front() != 0) throw DataError("csr: row_offsets[0] != 0");
  if (row_offsets.back() != nnz() || values.size() != col_indices.size())
    throw DataError("csr: offset/value length mismatch");
  for (std::int64_t r = 0; r < n_rows; ++r) {
    if (row_offsets[r + 1] < row_offsets[r]) throw DataError("csr: decreasing row_offsets");
    for (std::int64_t k = row_offsets[r]; k < row_offsets[r + 1]; ++k) {
      if (col_indices[k] < 0 || col_indices[k] >= n_cols) throw DataError("csr: column out of range");
      if (k > row_offsets[r] && col_indices[k] <= col_indices[k - 1])
        throw DataError("csr: columns not strictly increasing in row " + std::to_string(r));
      if (!std::isfinite(values[k])) throw DataError("csr: non-finite value");
    }
  }
}

void LabelVector::validate() const {
  if (labels.empty()) throw DataError("labels: empty");
  if (num_classes <= 0) throw DataError("labels: num_classes must be positive");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw DataError("labels: label " + std::to_string(labels[i]) + " at node " + std::to_string(i) +
                      " outside [0, " + std::to_string(num_classes) + ")");
}

SparseAdjacency build_csr(std::span<const Edge> edges, std::int64_t n, bool directed) {
  std::vector<Entry> entries;
  entries.reserve(edges.size() * (directed ? 1 : 2));
  for (const Edge& e : edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
      throw DataError("build_csr: edge endpoint (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                      ") out of range for n=" + std::to_string(n));
    entries.push_back({e.src, e.dst, 1.0});
    if (!directed && e.src != e.dst) entries.push_back({e.dst, e.src, 1.0});
  }
  SparseAdjacency out = from_entries(std::move(entries), n, n, [](double, double) { return 1.0; });
  out.symmetric_hint = directed ? is_symmetric(out) : true;
  return out;
}

SparseAdjacency add_self_loops(const SparseAdjacency& a) {
  if (a.n_rows != a.n_cols) throw DataError("add_self_loops: matrix not square");
  std::vector<Entry> entries = to_entries(a);
  for (std::int64_t r = 0; r < a.n_rows; ++r) entries.push_back({r, r, 1.0});
  SparseAdjacency out = from_entries(std::move(entries), a.n_rows, a.n_cols, [](double x, double y) { return x + y; });
  out.symmetric_hint = a.symmetric_hint;
  return out;
}

SparseAdjacency symmetrize(const SparseAdjacency& a) {
  if (a.n_rows != a.n_cols) throw DataError("symmetrize: matrix not square");
  std::vector<Entry> entries = to_entries(a);
  const std::size_t direct = entries.size();
  entries.reserve(direct * 2);
  for (std::size_t i = 0; i < direct; ++i) entries.push_back({entries[i].col, entries[i].row, entries[i].value});
  SparseAdjacency out =
      from_entries(std::move(entries), a.n_rows, a.n_cols, [](double x, double y) { return std::max(x, y); });
  out.symmetric_hint = true;
  return out;
}

SparseAdjacency normalize_sym(const SparseAdjacency& a_hat) {
  if (a_hat.n_rows != a_hat.n_cols) throw DataError("normalize_sym: matrix not square");
  std::vector<double> degree(static_cast<std::size_t>(a_hat.n_rows), 0.0);
  for (std::int64_t r = 0; r < a_hat.n_rows; ++r)
    for (std::int64_t k = a_hat.row_offsets[r]; k < a_hat.row_offsets[r + 1]; ++k) degree[r] += a_hat.values[k];
  std::vector<double> inv_sqrt(degree.size());
  for (std::size_t i = 0; i < degree.size(); ++i) {
    if (degree[i] <= 0.0)
      throw DataError("normalize_sym: degenerate degree " + std::to_string(degree[i]) + " at row " +
                      std::to_string(i));
    inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
  }
  SparseAdjacency out = a_hat;
  for (std::int64_t r = 0; r < out.n_rows; ++r)
    for (std::int64_t k = out.row_offsets[r]; k < out.row_offsets[r + 1]; ++k)
      out.values[k] = a_hat.values[k] * inv_sqrt[r] * inv_sqrt[out.col_indices[k]];
  out.symmetric_hint = a_hat.symmetric_hint;
  return out;
}

SparseAdjacency normalized_adjacency(const SparseAdjacency& a_raw, SymmetrizeMode mode) {
  const bool want_sym = mode == SymmetrizeMode::kForce ||
                        (mode == SymmetrizeMode::kAuto && !a_raw.symmetric_hint && !is_symmetric(a_raw));
  if (want_sym) return normalize_sym(add_self_loops(symmetrize(a_raw)));
  return normalize_sym(add_self_loops(a_raw));
}

bool is_symmetric(const SparseAdjacency& a, double tol) {
  if (a.n_rows != a.n_cols) return false;
  // Compare stored entries against a transposed entry list.
  std::vector<Entry> fwd = to_entries(a);
  std::vector<Entry> bwd = fwd;
  for (Entry& e : bwd) std::swap(e.row, e.col);
  auto key = [](const Entry& x, const Entry& y) { return x.row != y.row ? x.row < y.row : x.col < y.col; };
  std::sort(bwd.begin(), bwd.end(), key);
  if (fwd.size() != bwd.size()) return false;
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    if (fwd[i].row != bwd[i].row || fwd[i].col != bwd[i].col) return false;
    if (std::fabs(fwd[i].value - bwd[i].value) > tol) return false;
  }
  return true;
}

Matrix spmm(const SparseAdjacency& s, const Matrix& x, int jobs) {
  if (s.n_cols != x.rows)
    throw DataError("spmm: shape mismatch (" + std::to_string(s.n_rows) + "x" + std::to_string(s.n_cols) +
                    ") * (" + std::to_string(x.rows) + "x" + std::to_string(x.cols) + ")");
  Matrix out(s.n_rows, x.cols);
  // Each row accumulates in CSR entry order, so results do not depend on the
  // thread count.
  parallel_for(s.n_rows, jobs, [&](std::int64_t r) {
    double* orow = out.data.data() + r * out.cols;
    for (std::int64_t k = s.row_offsets[r]; k < s.row_offsets[r + 1]; ++k) {
      const double v = s.values[k];
      const double* xrow = x.data.data() + s.col_indices[k] * x.cols;
      for (std::int64_t j = 0; j < x.cols; ++j) orow[j] += v * xrow[j];
    }
  });
  return out;
}

double edge_homophily(const SparseAdjacency& a, const LabelVector& y) {
  if (a.n_rows != y.size()) throw DataError("edge_homophily: label count mismatch");
  if (a.nnz() == 0) throw DataError("edge_homophily: undefined on an empty edge set");
  std::int64_t same = 0;
  for (std::int64_t r = 0; r < a.n_rows; ++r)
    for (std::int64_t k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k)
      if (y.labels[r] == y.labels[a.col_indices[k]]) ++same;
  return static_cast<double>(same) / static_cast<double>(a.nnz());
}

double class_homophily(const SparseAdjacency& a, const LabelVector& y) {
  if (a.n_rows != y.size()) throw DataError("class_homophily: label count mismatch");
  if (a.nnz() == 0) throw DataError("class_homophily: undefined on an empty edge set");
  const std::int64_t c = y.num_classes;
  if (c < 2) throw DataError("class_homophily: needs at least two classes");
  std::vector<std::int64_t> class_size(static_cast<std::size_t>(c), 0);
  std::vector<std::int64_t> degree_total(static_cast<std::size_t>(c), 0);
  std::vector<std::int64_t> degree_same(static_cast<std::size_t>(c), 0);
  for (std::int64_t v : y.labels) ++class_size[v];
  for (std::int64_t r = 0; r < a.n_rows; ++r) {
    const std::int64_t cls = y.labels[r];
    for (std::int64_t k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k) {
      ++degree_total[cls];
      if (y.labels[a.col_indices[k]] == cls) ++degree_same[cls];
    }
  }
  const double n = static_cast<double>(y.size());
  double sum = 0.0;
  for (std::int64_t k = 0; k < c; ++k) {
    if (degree_total[k] == 0)
      throw DataError("class_homophily: class " + std::to_string(k) + " has zero total degree");
    const double h_k = static_cast<double>(degree_same[k]) / static_cast<double>(degree_total[k]);
    sum += std::max(h_k - static_cast<double>(class_size[k]) / n, 0.0);
  }
  return sum / static_cast<double>(c - 1);
}

}  // namespace pgcn

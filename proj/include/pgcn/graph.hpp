#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pgcn/matrix.hpp"

namespace pgcn {

struct Edge {
  std::int64_t src = 0;
  std::int64_t dst = 0;
};

// Immutable CSR sparse matrix.  Column indices are strictly increasing within
// each row; all stored values are finite.  Instances are safe to share across
// threads once built.
struct SparseAdjacency {
  std::int64_t n_rows = 0;
  std::int64_t n_cols = 0;
  std::vector<std::int64_t> row_offsets;  // length n_rows + 1, non-decreasing
  std::vector<std::int64_t> col_indices;
  std::vector<double> values;
  bool symmetric_hint = false;

  std::int64_t nnz() const { return static_cast<std::int64_t>(col_indices.size()); }
  std::span<const std::int64_t> row_cols(std::int64_t r) const {
    return {col_indices.data() + row_offsets[r], static_cast<std::size_t>(row_offsets[r + 1] - row_offsets[r])};
  }
  std::span<const double> row_values(std::int64_t r) const {
    return {values.data() + row_offsets[r], static_cast<std::size_t>(row_offsets[r + 1] - row_offsets[r])};
  }

  // Checks the CSR structural invariants; throws DataError on violation.
  void validate() const;
};

struct LabelVector {
  std::vector<std::int64_t> labels;  // each in [0, num_classes)
  std::int64_t num_classes = 0;

  std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
  void validate() const;
};

// Binary CSR from an edge list.  Duplicate edges collapse to a single 1.0
// entry; directed=false inserts both orientations.  Endpoints >= n throw.
SparseAdjacency build_csr(std::span<const Edge> edges, std::int64_t n, bool directed);

// A + I: increments the diagonal of every row, inserting entries as needed.
SparseAdjacency add_self_loops(const SparseAdjacency& a);

// Union of both orientations: out(i,j) = max(a(i,j), a(j,i)).  For binary
// adjacencies this matches build_csr's undirected construction.
SparseAdjacency symmetrize(const SparseAdjacency& a);

// D^{-1/2} A_hat D^{-1/2} with d_i = row sum of a_hat.  Zero row sums throw.
SparseAdjacency normalize_sym(const SparseAdjacency& a_hat);

enum class SymmetrizeMode { kAuto, kForce, kNever };

// Full pipeline raw A -> normalized operator: optional symmetrization, self
// loops, symmetric degree normalization.  kAuto symmetrizes only when the
// input is not already symmetric.
SparseAdjacency normalized_adjacency(const SparseAdjacency& a_raw, SymmetrizeMode mode = SymmetrizeMode::kAuto);

// Exact structural + value symmetry test.
bool is_symmetric(const SparseAdjacency& a, double tol = 0.0);

// Sparse * dense with deterministic row-major summation order.  Repeated
// calls are bit-identical; rows may be processed in parallel.
Matrix spmm(const SparseAdjacency& s, const Matrix& x, int jobs = 1);

// Fraction of stored entries joining equal labels.  Expects the raw adjacency
// (no self loops); throws on an empty edge set.
double edge_homophily(const SparseAdjacency& a, const LabelVector& y);

// Class-imbalance-corrected homophily:
//   h_k = sum_{x in class k} d_x^(k) / sum_{x in class k} d_x,
//   result = 1/(C-1) * sum_k max(h_k - n_k/n, 0).
double class_homophily(const SparseAdjacency& a, const LabelVector& y);

}  // namespace pgcn

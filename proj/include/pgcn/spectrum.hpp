#pragma once

#include <cstdint>
#include <vector>

#include "pgcn/graph.hpp"

namespace pgcn {

inline constexpr std::int64_t kAllEigenvalues = -1;

struct Spectrum {
  std::vector<double> eigenvalues;  // sorted descending
  enum class Method { kDense, kLanczos } method = Method::kDense;
  std::int64_t n_computed = 0;
  std::int64_t n_total = 0;  // dimension of the source matrix

  bool full() const { return n_computed == n_total; }
};

// Eigenvalues of a symmetric sparse matrix, descending.
//   k == kAllEigenvalues: dense cyclic-Jacobi sweep (N <= 10000 enforced,
//     off-diagonal tolerance 1e-10).
//   otherwise: Lanczos with full reorthogonalization, returning the k
//     algebraically largest eigenvalues.
// Symmetry is checked entrywise to 1e-9 for N <= 4096 and trusted via
// symmetric_hint above that.
Spectrum spectrum(const SparseAdjacency& a, std::int64_t k = kAllEigenvalues);

// sum_j |lambda_j|^k over a full spectrum; k >= 1.
double spectral_power_sum(const Spectrum& s, std::int64_t k);

// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations.
// Exposed for reuse by the Lanczos path tests and bound tooling.
std::vector<double> jacobi_eigenvalues(Matrix a, double off_tol = 1e-10);

// Eigenvalues of a symmetric tridiagonal matrix (diag d, off-diag e with
// e[i] coupling i and i+1) by implicit-shift QL.  Ascending order.
std::vector<double> tridiagonal_eigenvalues(std::vector<double> d, std::vector<double> e);

}  // namespace pgcn

#include "pgcn/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pgcn/error.hpp"
#include "pgcn/rng.hpp"

namespace pgcn {

namespace {

constexpr std::int64_t kDenseLimit = 10000;
constexpr std::int64_t kSymmetryCheckLimit = 4096;
constexpr double kSymmetryTol = 1e-9;

Matrix to_dense(const SparseAdjacency& a) {
  Matrix m(a.n_rows, a.n_cols);
  for (std::int64_t r = 0; r < a.n_rows; ++r)
    for (std::int64_t k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k) m.at(r, a.col_indices[k]) = a.values[k];
  return m;
}

void check_symmetric(const SparseAdjacency& a) {
  if (a.n_rows != a.n_cols) throw DataError("spectrum: matrix not square");
  if (a.n_rows <= kSymmetryCheckLimit) {
    if (!is_symmetric(a, kSymmetryTol)) throw DataError("spectrum: matrix not symmetric (entrywise 1e-9)");
  } else if (!a.symmetric_hint) {
    throw DataError("spectrum: large matrix without symmetric_hint");
  }
}

double hypot2(double x, double y) { return std::sqrt(x * x + y * y); }

// Lanczos with full reorthogonalization (two-pass modified Gram-Schmidt per
// step).  On breakdown the basis is extended with a fresh orthogonalized
// random vector; the zero beta splits the tridiagonal into blocks, which the
// QL solver handles as-is.
std::vector<double> lanczos_ritz(const SparseAdjacency& a, std::int64_t steps) {
  const std::int64_t n = a.n_rows;
  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;  // beta[j] couples step j and j+1
  Rng rng(0x4c414e43ULL);           // fixed: results must not depend on caller state

  auto random_unit_orthogonal = [&]() -> std::vector<double> {
    for (int attempt = 0; attempt < 8; ++attempt) {
      std::vector<double> v(static_cast<std::size_t>(n));
      for (double& x : v) x = rng.next_gaussian();
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : basis) {
          double dot = 0.0;
          for (std::int64_t i = 0; i < n; ++i) dot += q[i] * v[i];
          for (std::int64_t i = 0; i < n; ++i) v[i] -= dot * q[i];
        }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 1e-10) {
        for (double& x : v) x /= norm;
        return v;
      }
    }
    return {};
  };

  basis.push_back(random_unit_orthogonal());
  for (std::int64_t j = 0; j < steps; ++j) {
    const std::vector<double>& q = basis.back();
    // w = A q
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t r = 0; r < n; ++r) {
      double acc = 0.0;
      for (std::int64_t k = a.row_offsets[r]; k < a.row_offsets[r + 1]; ++k)
        acc += a.values[k] * q[a.col_indices[k]];
      w[r] = acc;
    }
    double aj = 0.0;
    for (std::int64_t i = 0; i < n; ++i) aj += q[i] * w[i];
    alpha.push_back(aj);
    if (j + 1 == steps) break;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qq : basis) {
        double dot = 0.0;
        for (std::int64_t i = 0; i < n; ++i) dot += qq[i] * w[i];
        for (std::int64_t i = 0; i < n; ++i) w[i] -= dot * qq[i];
      }
    double bj = 0.0;
    for (double x : w) bj += x * x;
    bj = std::sqrt(bj);
    if (bj > 1e-12) {
      for (double& x : w) x /= bj;
      beta.push_back(bj);
      basis.push_back(std::move(w));
    } else {
      // Invariant subspace found; restart in the orthogonal complement.
      std::vector<double> fresh = random_unit_orthogonal();
      if (fresh.empty()) break;
      beta.push_back(0.0);
      basis.push_back(std::move(fresh));
    }
  }
  beta.resize(alpha.empty() ? 0 : alpha.size() - 1, 0.0);
  return tridiagonal_eigenvalues(alpha, beta);
}

}  // namespace

std::vector<double> jacobi_eigenvalues(Matrix a, double off_tol) {
  const std::int64_t n = a.rows;
  if (n != a.cols) throw DataError("jacobi: matrix not square");
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::int64_t p = 0; p < n; ++p)
      for (std::int64_t q = p + 1; q < n; ++q) off = std::max(off, std::fabs(a.at(p, q)));
    if (off <= off_tol) break;
    for (std::int64_t p = 0; p < n - 1; ++p) {
      for (std::int64_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (std::fabs(apq) <= off_tol * 1e-3) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // Rotate rows/columns p and q.
        for (std::int64_t i = 0; i < n; ++i) {
          const double aip = a.at(i, p);
          const double aiq = a.at(i, q);
          a.at(i, p) = c * aip - s * aiq;
          a.at(i, q) = s * aip + c * aiq;
        }
        for (std::int64_t i = 0; i < n; ++i) {
          const double api = a.at(p, i);
          const double aqi = a.at(q, i);
          a.at(p, i) = c * api - s * aqi;
          a.at(q, i) = s * api + c * aqi;
        }
      }
    }
  }
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = a.at(i, i);
  std::sort(eig.begin(), eig.end(), std::greater<double>());
  return eig;
}

std::vector<double> tridiagonal_eigenvalues(std::vector<double> d, std::vector<double> e) {
  const std::int64_t n = static_cast<std::int64_t>(d.size());
  if (n == 0) return {};
  if (static_cast<std::int64_t>(e.size()) + 1 != n && static_cast<std::int64_t>(e.size()) != n)
    throw DataError("tridiagonal_eigenvalues: off-diagonal length");
  e.resize(static_cast<std::size_t>(n), 0.0);  // e[n-1] is workspace

  // Implicit-shift QL, eigenvalues only.
  for (std::int64_t l = 0; l < n; ++l) {
    int iter = 0;
    std::int64_t m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) <= 1e-300 + 2.3e-16 * dd) break;
      }
      if (m != l) {
        if (iter++ == 64) throw NumericError("tridiagonal_eigenvalues: QL failed to converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = hypot2(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::fabs(r) : -std::fabs(r)));
        double s = 1.0, c = 1.0, p = 0.0;
        bool underflow = false;
        for (std::int64_t i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = hypot2(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
  std::sort(d.begin(), d.end());
  return d;
}

Spectrum spectrum(const SparseAdjacency& a, std::int64_t k) {
  check_symmetric(a);
  const std::int64_t n = a.n_rows;
  Spectrum out;
  out.n_total = n;
  if (k == kAllEigenvalues || k >= n) {
    if (k == kAllEigenvalues && n > kDenseLimit)
      throw DataError("spectrum: full decomposition capped at N=10000, got N=" + std::to_string(n));
    out.method = Spectrum::Method::kDense;
    out.eigenvalues = jacobi_eigenvalues(to_dense(a));
    out.n_computed = n;
    return out;
  }
  if (k <= 0) throw DataError("spectrum: k must be positive");
  // Grow the Krylov basis until the requested Ritz values stabilize; full
  // reorthogonalization keeps every round numerically clean.
  std::vector<double> ritz;
  std::vector<double> previous;
  for (std::int64_t steps = std::max<std::int64_t>(4 * k + 30, 60);; steps = std::min(n, steps * 2)) {
    steps = std::min(steps, n);
    ritz = lanczos_ritz(a, steps);
    std::sort(ritz.begin(), ritz.end(), std::greater<double>());
    ritz.resize(static_cast<std::size_t>(std::min(k, static_cast<std::int64_t>(ritz.size()))));
    if (steps == n) break;
    if (!previous.empty() && previous.size() == ritz.size()) {
      double drift = 0.0;
      for (std::size_t i = 0; i < ritz.size(); ++i) drift = std::max(drift, std::fabs(ritz[i] - previous[i]));
      if (drift < 1e-9) break;
    }
    previous = ritz;
  }
  out.method = Spectrum::Method::kLanczos;
  out.eigenvalues = std::move(ritz);
  out.n_computed = k;
  return out;
}

double spectral_power_sum(const Spectrum& s, std::int64_t k) {
  if (!s.full())
    throw DataError("spectral_power_sum: needs the full spectrum (" + std::to_string(s.n_computed) + " of " +
                    std::to_string(s.n_total) + " computed)");
  if (k < 1) throw DataError("spectral_power_sum: exponent must be >= 1");
  double sum = 0.0;
  for (double lambda : s.eigenvalues) {
    double term = std::fabs(lambda);
    double acc = term;
    for (std::int64_t i = 1; i < k; ++i) acc *= term;
    sum += acc;
  }
  return sum;
}

}  // namespace pgcn

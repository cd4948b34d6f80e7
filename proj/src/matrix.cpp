#include "pgcn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pgcn/error.hpp"

namespace pgcn {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw DataError("matmul: shape mismatch (" + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                    ") * (" + std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
  Matrix out(a.rows, b.cols);
  // i-k-j order keeps the inner loop contiguous in b and out.
  for (std::int64_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    double* orow = out.data.data() + i * out.cols;
    for (std::int64_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + k * b.cols;
      for (std::int64_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols, a.rows);
  for (std::int64_t i = 0; i < a.rows; ++i)
    for (std::int64_t j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

void add_in_place(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DataError("add: shape mismatch");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void axpy_in_place(Matrix& a, double c, const Matrix& b) {
  if (!a.same_shape(b)) throw DataError("axpy: shape mismatch");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += c * b.data[i];
}

void scale_in_place(Matrix& a, double c) {
  for (double& v : a.data) v *= c;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data) m = std::max(m, std::fabs(v));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw DataError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

bool all_finite(const Matrix& a) {
  for (double v : a.data)
    if (!std::isfinite(v)) return false;
  return true;
}

bool bit_identical(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return false;
  if (a.data.empty()) return true;
  return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

}  // namespace pgcn

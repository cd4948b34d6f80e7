#include "pgcn/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "pgcn/error.hpp"

namespace pgcn {

namespace {

double power(double base, std::int64_t k) {
  double acc = 1.0;
  for (std::int64_t i = 0; i < k; ++i) acc *= base;
  return acc;
}

struct CommonFactors {
  double p0_sqrt2;    // sqrt(2 M U / (M+U)^2)
  double init_prod;   // 2^T prod_l B^(l), l = 0..T-1
  double d;           // sqrt(N) R
  double link;        // 2^{5/2} B^(T+1) B^(A) sqrt(MU) / (M+U)
  double head;        // B^(T+1)
  double q;           // 1/M + 1/U
};

CommonFactors common_factors(const BoundInputs& in) {
  CommonFactors f;
  const double m = static_cast<double>(in.M);
  const double u = static_cast<double>(in.U);
  f.p0_sqrt2 = std::sqrt(2.0 * m * u / ((m + u) * (m + u)));
  f.init_prod = power(2.0, in.T);
  for (std::int64_t l = 0; l < in.T; ++l) f.init_prod *= in.B[static_cast<std::size_t>(l)];
  f.d = std::sqrt(static_cast<double>(in.N)) * in.R;
  f.head = in.B[static_cast<std::size_t>(in.T + 1)];
  f.link = std::pow(2.0, 2.5) * f.head * in.B_A * std::sqrt(m * u) / (m + u);
  f.q = 1.0 / m + 1.0 / u;
  return f;
}

// Assembles the bound from the per-order spectral bracket.  `bracket_x`
// multiplies the feature term and includes the order-0 coefficient;
// `bracket_d` multiplies the D term and excludes it.
BoundBreakdown assemble(const BoundInputs& in, double bracket_x, double bracket_d) {
  const CommonFactors f = common_factors(in);
  BoundBreakdown out;
  out.trunk_term =
      in.C_prime * f.head * in.mu * (f.init_prod * f.p0_sqrt2 * bracket_x * in.X_fro + bracket_d * f.d);
  out.link_term = (1.0 - in.mu) * f.link * spectral_power_sum(in.spectrum, 1);
  out.total = out.trunk_term + out.link_term;
  out.q = f.q;
  out.rademacher = f.q * out.total;
  return out;
}

}  // namespace

void BoundInputs::validate() const {
  if (M < 1 || U < 1) throw DataError("bounds: M and U must be >= 1");
  if (T < 1 || L < 1) throw DataError("bounds: T and L must be >= 1");
  if (static_cast<std::int64_t>(B.size()) != T + 2)
    throw DataError("bounds: expected " + std::to_string(T + 2) + " layer caps, got " + std::to_string(B.size()));
  for (double b : B)
    if (b < 0.0) throw DataError("bounds: layer caps must be >= 0");
  if (mu < 0.0 || mu > 1.0) throw DataError("bounds: mu must be in [0, 1]");
  if (!spectrum.full()) throw DataError("bounds: full spectrum required");
  if (spectrum.n_total != N) throw DataError("bounds: spectrum dimension != N");
}

double max_column_l1(const Matrix& w) {
  double best = 0.0;
  for (std::int64_t j = 0; j < w.cols; ++j) {
    double norm = 0.0;
    for (std::int64_t i = 0; i < w.rows; ++i) norm += std::fabs(w.at(i, j));
    best = std::max(best, norm);
  }
  return best;
}

BoundBreakdown theorem1_terms(const BoundInputs& in, CoefficientMode mode) {
  in.validate();
  if (in.gamma <= 0.0) throw DataError("bounds: gamma must be > 0");
  const double b_res = in.B[static_cast<std::size_t>(in.T)];
  double orders = 0.0;  // sum over k >= 1 of coeff_k B^(T)k sum_j |lambda_j|^k
  for (std::int64_t k = 1; k <= in.L; ++k) {
    const double coeff = mode == CoefficientMode::kPaper
                             ? (k == in.L ? 1.0 : static_cast<double>(in.L)) * power(in.gamma, k)
                             : binomial_coefficient(in.L, k) * power(in.gamma, k);
    orders += coeff * power(b_res, k) * spectral_power_sum(in.spectrum, k);
  }
  return assemble(in, 1.0 + orders, orders);
}

double theorem1_rhs(const BoundInputs& in, CoefficientMode mode) { return theorem1_terms(in, mode).total; }

BoundBreakdown theorem2_terms(const BoundInputs& in) {
  in.validate();
  if (static_cast<std::int64_t>(in.theta.size()) != in.L + 1)
    throw DataError("bounds: expected " + std::to_string(in.L + 1) + " theta coefficients, got " +
                    std::to_string(in.theta.size()));
  const double b_res = in.B[static_cast<std::size_t>(in.T)];
  // Coefficient magnitudes: learned theta may be negative, and the capacity
  // aggregation is over |theta_k|.
  double orders = 0.0;
  for (std::int64_t k = 1; k <= in.L; ++k)
    orders += std::fabs(in.theta[static_cast<std::size_t>(k)]) * power(b_res, k) * spectral_power_sum(in.spectrum, k);
  return assemble(in, std::fabs(in.theta[0]) + orders, orders);
}

double theorem2_rhs(const BoundInputs& in) { return theorem2_terms(in).total; }

double generalization_gap_rhs(double rad, std::int64_t M, std::int64_t U, double delta, double c0) {
  if (M < 1 || U < 1) throw DataError("generalization_gap_rhs: M and U must be >= 1");
  if (delta <= 0.0 || delta > 1.0) throw DataError("generalization_gap_rhs: delta must be in (0, 1]");
  const double m = static_cast<double>(M);
  const double u = static_cast<double>(U);
  const double q = 1.0 / m + 1.0 / u;
  const double mn = std::min(m, u);
  const double s = 2.0 * (m + u) * mn / ((2.0 * (m + u) - 1.0) * (2.0 * mn - 1.0));
  return rad + c0 * q * std::sqrt(mn) + std::sqrt(s * q / 2.0 * std::log(1.0 / delta));
}

std::vector<std::pair<std::int64_t, double>> oversmoothing_profile(const BoundInputs& in,
                                                                   std::span<const std::int64_t> l_values,
                                                                   CoefficientMode mode) {
  std::vector<std::pair<std::int64_t, double>> out;
  out.reserve(l_values.size());
  for (std::int64_t l : l_values) {
    BoundInputs cur = in;
    cur.L = l;
    out.emplace_back(l, theorem1_rhs(cur, mode));
  }
  return out;
}

BoundInputs extract_bound_inputs(const GraphDataset& ds, const ParameterSet& params, const ModelConfig& cfg,
                                 const Split& split, SymmetrizeMode symmetrize) {
  BoundInputs in;
  in.T = cfg.T;
  in.L = cfg.L;
  in.gamma = cfg.gamma;
  in.N = ds.num_nodes();
  in.M = static_cast<std::int64_t>(split.train.size());
  in.U = static_cast<std::int64_t>(split.test.size());
  in.X_fro = frobenius_norm(ds.features);
  in.B.resize(static_cast<std::size_t>(cfg.T) + 2, 0.0);
  for (std::int64_t l = 0; l < cfg.T; ++l)
    in.B[static_cast<std::size_t>(l)] = max_column_l1(params.at("W" + std::to_string(l)));
  if (const Matrix* w = params.find("W_res")) in.B[static_cast<std::size_t>(cfg.T)] = max_column_l1(*w);
  if (const Matrix* w = params.find("W_out")) in.B[static_cast<std::size_t>(cfg.T) + 1] = max_column_l1(*w);
  if (const Matrix* w = params.find("W_A")) in.B_A = max_column_l1(*w);
  if (const Matrix* raw = params.find("mu_raw")) {
    in.mu = cfg.mu_param == MuParam::kSigmoid ? 1.0 / (1.0 + std::exp(-raw->scalar()))
                                              : std::min(std::max(raw->scalar(), 0.0), 1.0);
  }
  if (const Matrix* theta = params.find("theta")) in.theta = theta->data;
  in.spectrum = spectrum(normalized_adjacency(ds.adjacency, symmetrize));
  return in;
}

}  // namespace pgcn

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pgcn/dataset.hpp"
#include "pgcn/model.hpp"
#include "pgcn/spectrum.hpp"
#include "pgcn/train.hpp"

namespace pgcn {

// Everything the capacity bounds consume.  B holds the per-layer caps on the
// maximum column L1 norm: B[0..T-1] initial layers, B[T] shared residual
// weight, B[T+1] output head.
struct BoundInputs {
  Spectrum spectrum;      // full spectrum of the normalized operator
  std::vector<double> B;  // length T + 2
  double B_A = 0.0;
  double mu = 1.0;
  double gamma = 1.0;
  std::vector<double> theta;  // length L + 1 (adaptive variant)
  std::int64_t T = 1;
  std::int64_t L = 1;
  std::int64_t M = 1;  // training nodes
  std::int64_t U = 1;  // test nodes
  std::int64_t N = 0;
  double X_fro = 0.0;
  double R = 1.0;        // activation output bound; D = sqrt(N) * R
  double C_prime = 1.0;  // universal constant, reported up-to-constants

  void validate() const;
};

struct BoundBreakdown {
  double trunk_term = 0.0;  // mu-weighted convolution contribution
  double link_term = 0.0;   // (1-mu)-weighted direct-learning contribution
  double total = 0.0;       // trunk_term + link_term (the Q^{-1}-normalized RHS)
  double q = 0.0;           // 1/M + 1/U
  double rademacher = 0.0;  // q * total
};

// Fixed-gamma capacity bound (Q^{-1}-normalized right-hand side).  kPaper uses
// the literal interior coefficients L * gamma^k; kCanonical uses the binomial
// pattern matching the recursion the models actually compute.
double theorem1_rhs(const BoundInputs& in, CoefficientMode mode = CoefficientMode::kPaper);
BoundBreakdown theorem1_terms(const BoundInputs& in, CoefficientMode mode = CoefficientMode::kPaper);

// Adaptive-coefficient variant: theta_k replaces the gamma powers, theta_0
// replaces the leading 1.
double theorem2_rhs(const BoundInputs& in);
BoundBreakdown theorem2_terms(const BoundInputs& in);

// Generalization slack: rad + c0 * Q * sqrt(min(M,U)) + sqrt(S Q / 2 * ln(1/delta))
// with S = 2(M+U)min(M,U) / ((2(M+U)-1)(2min(M,U)-1)).
double generalization_gap_rhs(double rad, std::int64_t M, std::int64_t U, double delta, double c0 = 1.0);

// theorem1_rhs swept over the residual depth.
std::vector<std::pair<std::int64_t, double>> oversmoothing_profile(const BoundInputs& in,
                                                                   std::span<const std::int64_t> l_values,
                                                                   CoefficientMode mode = CoefficientMode::kPaper);

// Reads the layer caps, mu, theta, and spectrum off a trained parameter set.
BoundInputs extract_bound_inputs(const GraphDataset& ds, const ParameterSet& params, const ModelConfig& cfg,
                                 const Split& split, SymmetrizeMode symmetrize = SymmetrizeMode::kAuto);

// Max over columns of the column L1 norm.
double max_column_l1(const Matrix& w);

}  // namespace pgcn

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pgcn/graph.hpp"
#include "pgcn/matrix.hpp"
#include "pgcn/rng.hpp"
#include "pgcn/tape.hpp"

namespace pgcn {

enum class ModelKind {
  kMlp,
  kGcn,
  kSgc,
  kGprgnn,
  kLink,
  kLinkx,
  kGpcn,
  kGpcnLink,
  kAgpcn,
  kAgpcnLink,
};

constexpr std::size_t kModelKindCount = 10;

std::string_view model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(std::string_view name);
bool model_has_mu(ModelKind kind);
bool model_has_theta(ModelKind kind);

// How the interior coefficients of the polynomial trunk expansion are formed.
// The exact closed form of the residual recursion uses binomial C(L,k)
// gamma^k (canonical); the looser simplification kept for comparison writes
// L * gamma^k for the interior orders (paper mode).  The two agree for
// L <= 3 and diverge beyond.
enum class CoefficientMode { kCanonical, kPaper };

// Parametrization of the trunk/link mixing scalar mu.
enum class MuParam { kSigmoid, kClamp };

// Which operator feeds the direct-learning branch of the *-LINK models.
enum class LinkBranch { kNormalized, kRaw };

enum class GprInit { kPpr, kUniform };

struct ModelConfig {
  ModelKind kind = ModelKind::kGpcn;
  std::int64_t T = 1;        // initial feature-learning layers
  std::int64_t L = 1;        // residual layers
  std::int64_t hidden = 16;  // width h
  double gamma = 0.5;        // residual scaling
  double dropout = 0.0;
  std::int64_t sgc_power = 2;
  std::int64_t gcn_layers = 2;
  GprInit gpr_init = GprInit::kPpr;
  double gpr_alpha = 0.1;
  MuParam mu_param = MuParam::kSigmoid;
  LinkBranch link_branch = LinkBranch::kNormalized;
  bool dropout_link_branch = false;

  void validate() const;  // throws ConfigError
};

// Named parameter tensors.  Names are stable and drive checkpointing:
//   W0..W{T-1}  initial layers        W_res  shared residual weight
//   W_out       output head           W_A    direct-learning branch
//   theta       per-order coefficients ((L+1) x 1)   mu_raw  1x1
struct ParameterSet {
  std::vector<std::pair<std::string, Matrix>> items;

  Matrix* find(std::string_view name);
  const Matrix* find(std::string_view name) const;
  Matrix& at(std::string_view name);
  const Matrix& at(std::string_view name) const;
  bool has(std::string_view name) const { return find(name) != nullptr; }
};

// Glorot-uniform weights; theta starts at the binomial(L,k) gamma^k pattern
// (AGPCN starts at the GPCN point) or the GPR prior for GPRGNN; mu_raw = 0.
ParameterSet init_params(const ModelConfig& cfg, std::int64_t n_nodes, std::int64_t n_features,
                         std::int64_t n_classes, Rng& rng);

// Constant model inputs for one forward pass.  Pointees must outlive the tape.
struct ModelInputs {
  const SparseAdjacency* a_raw = nullptr;   // raw adjacency (LINK-style terms)
  const SparseAdjacency* a_norm = nullptr;  // normalized operator
  const Matrix* features = nullptr;
};

// Parameters bound onto a tape as gradient leaves.
struct BoundParams {
  std::vector<std::pair<std::string, Tensor>> items;

  Tensor at(std::string_view name) const;
  bool has(std::string_view name) const;
};

BoundParams bind_params(Tape& tape, const ParameterSet& params);

// Per-kind forward passes producing logits (softmax lives in the loss).
Tensor mlp_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, bool training,
                   Rng* rng);
Tensor gcn_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, bool training,
                   Rng* rng);
Tensor sgc_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg);
// sum_{k=0}^{L-1} theta_k A^k h0 by iterated propagation.
Tensor gpr_combine(Tape& t, Tensor h0, const SparseAdjacency& a, Tensor theta, std::int64_t terms);
Tensor gprgnn_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, bool training,
                      Rng* rng);
Tensor link_forward(Tape& t, const ModelInputs& in, const BoundParams& p);
Tensor linkx_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, bool training,
                     Rng* rng);
// Canonical trunk semantics: L weight-shared activation-free residual steps.
Tensor gpcn_forward_recursive(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg,
                              bool training, Rng* rng);
// Explicit polynomial expansion; diagnostic/oracle path, not used in training.
Tensor gpcn_forward_polynomial(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg,
                               bool training, Rng* rng, CoefficientMode mode = CoefficientMode::kCanonical);
Tensor gpcn_link_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg,
                         bool training, Rng* rng);
Tensor agpcn_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, bool training,
                     Rng* rng);
Tensor agpcn_link_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg,
                          bool training, Rng* rng);

// Dispatch on cfg.kind.
Tensor model_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, bool training,
                     Rng* rng);

double binomial_coefficient(std::int64_t n, std::int64_t k);

}  // namespace pgcn

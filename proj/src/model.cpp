#include "pgcn/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "pgcn/error.hpp"

namespace pgcn {

namespace {

constexpr std::array<std::string_view, kModelKindCount> kKindNames = {
    "mlp", "gcn", "sgc", "gprgnn", "link", "linkx", "gpcn", "gpcn_link", "agpcn", "agpcn_link"};

Matrix glorot_uniform(std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
  Matrix w(fan_in, fan_out);
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w.data) v = rng.uniform(-bound, bound);
  return w;
}

std::string layer_name(std::int64_t l) { return "W" + std::to_string(l); }

Tensor maybe_dropout(Tape& t, Tensor x, const ModelConfig& cfg, bool training, Rng* rng) {
  if (!training || cfg.dropout <= 0.0) return x;
  if (rng == nullptr) throw ConfigError("training forward with dropout needs a generator");
  return t.dropout(x, cfg.dropout, *rng, true);
}

// T ReLU layers over the features, dropout after each layer when training.
Tensor mlp_stack(Tape& t, Tensor x, const BoundParams& p, const ModelConfig& cfg, bool training, Rng* rng) {
  Tensor h = x;
  for (std::int64_t l = 0; l < cfg.T; ++l) {
    h = t.relu(t.matmul(h, p.at(layer_name(l))));
    h = maybe_dropout(t, h, cfg, training, rng);
  }
  return h;
}

Tensor mixing_scalar(Tape& t, const BoundParams& p, const ModelConfig& cfg) {
  Tensor raw = p.at("mu_raw");
  return cfg.mu_param == MuParam::kSigmoid ? t.sigmoid(raw) : t.clamp01(raw);
}

const SparseAdjacency& link_operator(const ModelInputs& in, const ModelConfig& cfg) {
  return cfg.link_branch == LinkBranch::kNormalized ? *in.a_norm : *in.a_raw;
}

// Shared trunk+branch+head assembly for GPCN-LINK and AGPCN-LINK.
Tensor link_blend_head(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, Tensor trunk,
                       bool training, Rng* rng) {
  trunk = maybe_dropout(t, trunk, cfg, training, rng);
  Tensor branch = t.spmm(link_operator(in, cfg), p.at("W_A"));
  if (cfg.dropout_link_branch) branch = maybe_dropout(t, branch, cfg, training, rng);
  Tensor mixed = t.affine_combine(mixing_scalar(t, p, cfg), trunk, branch);
  return t.matmul(mixed, p.at("W_out"));
}

Tensor gpcn_trunk_recursive(Tape& t, const SparseAdjacency& a, Tensor h, Tensor w_res, double gamma,
                            std::int64_t layers) {
  for (std::int64_t i = 0; i < layers; ++i) h = t.add(h, t.scale(t.matmul(t.spmm(a, h), w_res), gamma));
  return h;
}

Tensor gpcn_trunk_polynomial(Tape& t, const SparseAdjacency& a, Tensor h, Tensor w_res, double gamma,
                             std::int64_t layers, CoefficientMode mode) {
  auto coeff = [&](std::int64_t k) {
    if (k == 0) return 1.0;
    if (mode == CoefficientMode::kCanonical) return binomial_coefficient(layers, k) * std::pow(gamma, k);
    return (k == layers ? 1.0 : static_cast<double>(layers)) * std::pow(gamma, k);
  };
  Tensor acc = h;  // k = 0 term
  Tensor u = h;    // u_k = A^k h W^k
  for (std::int64_t k = 1; k <= layers; ++k) {
    u = t.matmul(t.spmm(a, u), w_res);
    acc = t.add(acc, t.scale(u, coeff(k)));
  }
  return acc;
}

Tensor agpcn_trunk(Tape& t, const SparseAdjacency& a, Tensor h, Tensor w_res, Tensor theta, std::int64_t layers) {
  Tensor acc = t.scale(h, t.select(theta, 0, 0));
  Tensor u = h;
  for (std::int64_t k = 1; k <= layers; ++k) {
    u = t.matmul(t.spmm(a, u), w_res);
    acc = t.add(acc, t.scale(u, t.select(theta, k, 0)));
  }
  return acc;
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

ModelKind model_kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<ModelKind>(i);
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

bool model_has_mu(ModelKind kind) { return kind == ModelKind::kGpcnLink || kind == ModelKind::kAgpcnLink; }

bool model_has_theta(ModelKind kind) {
  return kind == ModelKind::kGprgnn || kind == ModelKind::kAgpcn || kind == ModelKind::kAgpcnLink;
}

void ModelConfig::validate() const {
  if (T < 1) throw ConfigError("model: T must be >= 1");
  if (L < 1) throw ConfigError("model: L must be >= 1");
  if (hidden < 1) throw ConfigError("model: hidden must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model: dropout must be in [0, 1)");
  if (sgc_power < 0) throw ConfigError("model: sgc_power must be >= 0");
  if (gcn_layers < 1) throw ConfigError("model: gcn_layers must be >= 1");
  const bool fixed_gamma = kind == ModelKind::kGpcn || kind == ModelKind::kGpcnLink;
  if (fixed_gamma && gamma <= 0.0) throw ConfigError("model: gamma must be > 0");
}

double binomial_coefficient(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double result = 1.0;
  for (std::int64_t i = 1; i <= k; ++i) result = result * static_cast<double>(n - k + i) / static_cast<double>(i);
  return result;
}

Matrix* ParameterSet::find(std::string_view name) {
  for (auto& [n, m] : items)
    if (n == name) return &m;
  return nullptr;
}

const Matrix* ParameterSet::find(std::string_view name) const {
  for (const auto& [n, m] : items)
    if (n == name) return &m;
  return nullptr;
}

Matrix& ParameterSet::at(std::string_view name) {
  if (Matrix* m = find(name)) return *m;
  throw DataError("parameter '" + std::string(name) + "' not present");
}

const Matrix& ParameterSet::at(std::string_view name) const {
  if (const Matrix* m = find(name)) return *m;
  throw DataError("parameter '" + std::string(name) + "' not present");
}

Tensor BoundParams::at(std::string_view name) const {
  for (const auto& [n, t] : items)
    if (n == name) return t;
  throw DataError("parameter '" + std::string(name) + "' not bound");
}

bool BoundParams::has(std::string_view name) const {
  for (const auto& [n, t] : items)
    if (n == name) return true;
  return false;
}

BoundParams bind_params(Tape& tape, const ParameterSet& params) {
  BoundParams bound;
  bound.items.reserve(params.items.size());
  for (const auto& [name, m] : params.items) bound.items.emplace_back(name, tape.leaf(m, true));
  return bound;
}

ParameterSet init_params(const ModelConfig& cfg, std::int64_t n_nodes, std::int64_t n_features,
                         std::int64_t n_classes, Rng& rng) {
  cfg.validate();
  ParameterSet ps;
  const std::int64_t h = cfg.hidden;
  auto push = [&ps](std::string name, Matrix m) { ps.items.emplace_back(std::move(name), std::move(m)); };
  auto mlp_layers = [&](std::int64_t count) {
    for (std::int64_t l = 0; l < count; ++l)
      push(layer_name(l), glorot_uniform(l == 0 ? n_features : h, h, rng));
  };
  switch (cfg.kind) {
    case ModelKind::kMlp:
      mlp_layers(cfg.T);
      push("W_out", glorot_uniform(h, n_classes, rng));
      break;
    case ModelKind::kGcn:
      for (std::int64_t l = 0; l < cfg.gcn_layers; ++l) {
        const std::int64_t fan_in = l == 0 ? n_features : h;
        const std::int64_t fan_out = l == cfg.gcn_layers - 1 ? n_classes : h;
        push(layer_name(l), glorot_uniform(fan_in, fan_out, rng));
      }
      break;
    case ModelKind::kSgc:
      push("W0", glorot_uniform(n_features, n_classes, rng));
      break;
    case ModelKind::kGprgnn: {
      mlp_layers(cfg.T);
      push("W_out", glorot_uniform(h, n_classes, rng));
      Matrix theta(cfg.L, 1);
      for (std::int64_t k = 0; k < cfg.L; ++k) {
        if (cfg.gpr_init == GprInit::kUniform) {
          theta.at(k, 0) = 1.0 / static_cast<double>(cfg.L);
        } else {
          theta.at(k, 0) = k + 1 == cfg.L ? std::pow(1.0 - cfg.gpr_alpha, k)
                                          : cfg.gpr_alpha * std::pow(1.0 - cfg.gpr_alpha, k);
        }
      }
      push("theta", std::move(theta));
      break;
    }
    case ModelKind::kLink:
      push("W_A", glorot_uniform(n_nodes, n_classes, rng));
      break;
    case ModelKind::kLinkx:
      push("WA0", glorot_uniform(n_nodes, h, rng));
      push("WA1", glorot_uniform(h, h, rng));
      push("WX0", glorot_uniform(n_features, h, rng));
      push("WX1", glorot_uniform(h, h, rng));
      push("W_cat", glorot_uniform(2 * h, h, rng));
      push("WF0", glorot_uniform(h, h, rng));
      push("WF1", glorot_uniform(h, n_classes, rng));
      break;
    case ModelKind::kGpcn:
    case ModelKind::kGpcnLink:
    case ModelKind::kAgpcn:
    case ModelKind::kAgpcnLink: {
      mlp_layers(cfg.T);
      push("W_res", glorot_uniform(h, h, rng));
      push("W_out", glorot_uniform(h, n_classes, rng));
      if (model_has_mu(cfg.kind)) {
        push("W_A", glorot_uniform(n_nodes, h, rng));
        push("mu_raw", Matrix(1, 1, 0.0));
      }
      if (model_has_theta(cfg.kind)) {
        Matrix theta(cfg.L + 1, 1);
        for (std::int64_t k = 0; k <= cfg.L; ++k)
          theta.at(k, 0) = binomial_coefficient(cfg.L, k) * std::pow(cfg.gamma, k);
        push("theta", std::move(theta));
      }
      break;
    }
  }
  return ps;
}

Tensor mlp_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, bool training,
                   Rng* rng) {
  Tensor h = mlp_stack(t, t.leaf(*in.features, false), p, cfg, training, rng);
  return t.matmul(h, p.at("W_out"));
}

Tensor gcn_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, bool training,
                   Rng* rng) {
  Tensor h = t.leaf(*in.features, false);
  for (std::int64_t l = 0; l < cfg.gcn_layers; ++l) {
    h = t.matmul(t.spmm(*in.a_norm, h), p.at(layer_name(l)));
    if (l + 1 < cfg.gcn_layers) {
      h = t.relu(h);
      h = maybe_dropout(t, h, cfg, training, rng);
    }
  }
  return h;
}

Tensor sgc_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg) {
  Tensor h = t.leaf(*in.features, false);
  for (std::int64_t i = 0; i < cfg.sgc_power; ++i) h = t.spmm(*in.a_norm, h);
  return t.matmul(h, p.at("W0"));
}

Tensor gpr_combine(Tape& t, Tensor h0, const SparseAdjacency& a, Tensor theta, std::int64_t terms) {
  Tensor acc = t.scale(h0, t.select(theta, 0, 0));
  Tensor h = h0;
  for (std::int64_t k = 1; k < terms; ++k) {
    h = t.spmm(a, h);
    acc = t.add(acc, t.scale(h, t.select(theta, k, 0)));
  }
  return acc;
}

Tensor gprgnn_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, bool training,
                      Rng* rng) {
  Tensor h = mlp_stack(t, t.leaf(*in.features, false), p, cfg, training, rng);
  Tensor h0 = t.matmul(h, p.at("W_out"));
  return gpr_combine(t, h0, *in.a_norm, p.at("theta"), cfg.L);
}

Tensor link_forward(Tape& t, const ModelInputs& in, const BoundParams& p) {
  return t.spmm(*in.a_raw, p.at("W_A"));
}

Tensor linkx_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, bool training,
                     Rng* rng) {
  Tensor ha = t.relu(t.spmm(*in.a_raw, p.at("WA0")));
  ha = maybe_dropout(t, ha, cfg, training, rng);
  ha = t.matmul(ha, p.at("WA1"));
  Tensor hx = t.relu(t.matmul(t.leaf(*in.features, false), p.at("WX0")));
  hx = maybe_dropout(t, hx, cfg, training, rng);
  hx = t.matmul(hx, p.at("WX1"));
  Tensor combined = t.matmul(t.concat_cols(ha, hx), p.at("W_cat"));
  combined = t.add(t.add(combined, ha), hx);
  Tensor head = t.relu(t.matmul(combined, p.at("WF0")));
  head = maybe_dropout(t, head, cfg, training, rng);
  return t.matmul(head, p.at("WF1"));
}

Tensor gpcn_forward_recursive(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg,
                              bool training, Rng* rng) {
  Tensor h = mlp_stack(t, t.leaf(*in.features, false), p, cfg, training, rng);
  h = gpcn_trunk_recursive(t, *in.a_norm, h, p.at("W_res"), cfg.gamma, cfg.L);
  h = maybe_dropout(t, h, cfg, training, rng);
  return t.matmul(h, p.at("W_out"));
}

Tensor gpcn_forward_polynomial(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg,
                               bool training, Rng* rng, CoefficientMode mode) {
  Tensor h = mlp_stack(t, t.leaf(*in.features, false), p, cfg, training, rng);
  h = gpcn_trunk_polynomial(t, *in.a_norm, h, p.at("W_res"), cfg.gamma, cfg.L, mode);
  h = maybe_dropout(t, h, cfg, training, rng);
  return t.matmul(h, p.at("W_out"));
}

Tensor gpcn_link_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg,
                         bool training, Rng* rng) {
  Tensor h = mlp_stack(t, t.leaf(*in.features, false), p, cfg, training, rng);
  Tensor trunk = gpcn_trunk_recursive(t, *in.a_norm, h, p.at("W_res"), cfg.gamma, cfg.L);
  return link_blend_head(t, in, p, cfg, trunk, training, rng);
}

Tensor agpcn_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, bool training,
                     Rng* rng) {
  Tensor h = mlp_stack(t, t.leaf(*in.features, false), p, cfg, training, rng);
  h = agpcn_trunk(t, *in.a_norm, h, p.at("W_res"), p.at("theta"), cfg.L);
  h = maybe_dropout(t, h, cfg, training, rng);
  return t.matmul(h, p.at("W_out"));
}

Tensor agpcn_link_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg,
                          bool training, Rng* rng) {
  Tensor h = mlp_stack(t, t.leaf(*in.features, false), p, cfg, training, rng);
  Tensor trunk = agpcn_trunk(t, *in.a_norm, h, p.at("W_res"), p.at("theta"), cfg.L);
  return link_blend_head(t, in, p, cfg, trunk, training, rng);
}

Tensor model_forward(Tape& t, const ModelInputs& in, const BoundParams& p, const ModelConfig& cfg, bool training,
                     Rng* rng) {
  switch (cfg.kind) {
    case ModelKind::kMlp:
      return mlp_forward(t, in, p, cfg, training, rng);
    case ModelKind::kGcn:
      return gcn_forward(t, in, p, cfg, training, rng);
    case ModelKind::kSgc:
      return sgc_forward(t, in, p, cfg);
    case ModelKind::kGprgnn:
      return gprgnn_forward(t, in, p, cfg, training, rng);
    case ModelKind::kLink:
      return link_forward(t, in, p);
    case ModelKind::kLinkx:
      return linkx_forward(t, in, p, cfg, training, rng);
    case ModelKind::kGpcn:
      return gpcn_forward_recursive(t, in, p, cfg, training, rng);
    case ModelKind::kGpcnLink:
      return gpcn_link_forward(t, in, p, cfg, training, rng);
    case ModelKind::kAgpcn:
      return agpcn_forward(t, in, p, cfg, training, rng);
    case ModelKind::kAgpcnLink:
      return agpcn_link_forward(t, in, p, cfg, training, rng);
  }
  throw ConfigError("model_forward: unhandled kind");
}

}  // namespace pgcn

#include "pgcn/verify.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <vector>

#include "pgcn/bounds.hpp"
#include "pgcn/dataset.hpp"
#include "pgcn/error.hpp"
#include "pgcn/graph.hpp"
#include "pgcn/model.hpp"
#include "pgcn/spectrum.hpp"
#include "pgcn/tape.hpp"
#include "pgcn/train.hpp"

namespace pgcn {

namespace {

Matrix random_matrix(std::int64_t r, std::int64_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(-scale, scale);
  return m;
}

SparseAdjacency random_connected_graph(std::int64_t n, std::int64_t extra_edges, Rng& rng) {
  std::vector<Edge> edges;
  for (std::int64_t i = 1; i < n; ++i)
    edges.push_back({static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(i))), i});
  for (std::int64_t e = 0; e < extra_edges; ++e) {
    const auto u = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n)));
    const auto v = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n)));
    if (u != v) edges.push_back({u, v});
  }
  return build_csr(edges, n, /*directed=*/false);
}

struct TestInstance {
  GraphDataset ds;
  SparseAdjacency a_norm;
  std::vector<std::int64_t> mask;
};

TestInstance make_instance(std::int64_t n, std::int64_t q, std::int64_t classes, Rng& rng) {
  TestInstance ti;
  ti.ds.adjacency = random_connected_graph(n, n, rng);
  ti.ds.features = random_matrix(n, q, rng);
  ti.ds.labels.num_classes = classes;
  for (std::int64_t i = 0; i < n; ++i)
    ti.ds.labels.labels.push_back(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(classes))));
  ti.ds.name = "verify";
  ti.a_norm = normalized_adjacency(ti.ds.adjacency);
  for (std::int64_t i = 0; i < n; i += 2) ti.mask.push_back(i);
  return ti;
}

// Gradcheck wrapper: leaf order matches the parameter set order.
double model_gradcheck(const ModelConfig& cfg, const TestInstance& ti, const ParameterSet& params, double h) {
  std::vector<Matrix> inputs;
  for (const auto& [name, m] : params.items) inputs.push_back(m);
  TapeFn f = [&](Tape& tape, const std::vector<Tensor>& leaves) {
    BoundParams bound;
    for (std::size_t i = 0; i < leaves.size(); ++i) bound.items.emplace_back(params.items[i].first, leaves[i]);
    ModelInputs in{&ti.ds.adjacency, &ti.a_norm, &ti.ds.features};
    Tensor logits = model_forward(tape, in, bound, cfg, /*training=*/false, nullptr);
    return tape.softmax_cross_entropy(logits, ti.ds.labels, ti.mask);
  };
  return gradcheck(f, inputs, h);
}

Matrix eval_model(const ModelConfig& cfg, const TestInstance& ti, const ParameterSet& params) {
  Tape tape;
  BoundParams bound = bind_params(tape, params);
  ModelInputs in{&ti.ds.adjacency, &ti.a_norm, &ti.ds.features};
  return tape.value(model_forward(tape, in, bound, cfg, /*training=*/false, nullptr));
}

Matrix eval_polynomial(const ModelConfig& cfg, const TestInstance& ti, const ParameterSet& params,
                       CoefficientMode mode) {
  Tape tape;
  BoundParams bound = bind_params(tape, params);
  ModelInputs in{&ti.ds.adjacency, &ti.a_norm, &ti.ds.features};
  return tape.value(gpcn_forward_polynomial(tape, in, bound, cfg, /*training=*/false, nullptr, mode));
}

double rel_logit_gap(const Matrix& a, const Matrix& b) { return max_abs_diff(a, b) / (1.0 + max_abs(a)); }

class Checker {
 public:
  explicit Checker(std::ostream& out) : out_(out) {}

  void check(const std::string& name, bool ok, const std::string& detail = "") {
    out_ << (ok ? "[ ok ] " : "[FAIL] ") << name;
    if (!detail.empty()) out_ << " (" << detail << ")";
    out_ << '\n';
    all_ok_ = all_ok_ && ok;
  }

  bool all_ok() const { return all_ok_; }

 private:
  std::ostream& out_;
  bool all_ok_ = true;
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(3) << std::scientific << v;
  return ss.str();
}

}  // namespace

bool run_verification(std::ostream& out) {
  Checker c(out);
  Rng rng(0x5eedf00dULL);

  // Gradients of every model kind, mu and theta included.
  {
    double worst = 0.0;
    for (std::size_t kind_ix = 0; kind_ix < kModelKindCount; ++kind_ix) {
      ModelConfig cfg;
      cfg.kind = static_cast<ModelKind>(kind_ix);
      cfg.T = 2;
      cfg.L = 3;
      cfg.hidden = 5;
      cfg.gamma = 0.5;
      cfg.gcn_layers = 2;
      cfg.sgc_power = 2;
      TestInstance ti = make_instance(9, 4, 3, rng);
      Rng prng = rng.stream(kind_ix);
      ParameterSet params = init_params(cfg, 9, 4, 3, prng);
      worst = std::max(worst, model_gradcheck(cfg, ti, params, 1e-5));
    }
    c.check("gradcheck: all model kinds, h=1e-5", worst < 1e-4, "max rel err " + fmt(worst));
  }

  // Recursive trunk == binomial polynomial expansion; paper coefficients
  // diverge for L >= 4.
  {
    double worst_match = 0.0;
    double best_mismatch = 1.0;
    for (std::int64_t l = 1; l <= 8; ++l) {
      ModelConfig cfg;
      cfg.kind = ModelKind::kGpcn;
      cfg.T = 1;
      cfg.L = l;
      cfg.hidden = 4;
      cfg.gamma = 0.5;
      TestInstance ti = make_instance(8, 3, 2, rng);
      Rng prng = rng.stream(100 + static_cast<std::uint64_t>(l));
      ParameterSet params = init_params(cfg, 8, 3, 2, prng);
      Matrix rec = eval_model(cfg, ti, params);
      Matrix poly = eval_polynomial(cfg, ti, params, CoefficientMode::kCanonical);
      worst_match = std::max(worst_match, rel_logit_gap(rec, poly));
      if (l >= 4) {
        Matrix paper = eval_polynomial(cfg, ti, params, CoefficientMode::kPaper);
        best_mismatch = std::min(best_mismatch, rel_logit_gap(rec, paper));
      }
    }
    c.check("equivalence: recursive vs binomial polynomial, L=1..8", worst_match < 1e-10,
            "max rel gap " + fmt(worst_match));
    c.check("equivalence: L*gamma^k interior coefficients diverge for L>=4", best_mismatch > 1e-10,
            "min rel gap " + fmt(best_mismatch));
  }

  // Reductions.
  {
    TestInstance ti = make_instance(10, 4, 3, rng);
    ModelConfig gpcn;
    gpcn.kind = ModelKind::kGpcn;
    gpcn.T = 2;
    gpcn.L = 3;
    gpcn.hidden = 5;
    gpcn.gamma = 0.5;
    Rng prng = rng.stream(200);
    ParameterSet params = init_params(gpcn, 10, 4, 3, prng);
    gpcn.gamma = 0.0;  // forward accepts the limit; configs pin gamma > 0
    ModelConfig mlp = gpcn;
    mlp.kind = ModelKind::kMlp;
    ParameterSet mlp_params;
    for (const auto& [name, m] : params.items)
      if (name != "W_res") mlp_params.items.emplace_back(name, m);
    const double gap_mlp = max_abs_diff(eval_model(gpcn, ti, params), eval_model(mlp, ti, mlp_params));
    c.check("reduction: gamma->0 GPCN == MLP", gap_mlp < 1e-12, "max abs gap " + fmt(gap_mlp));

    ModelConfig link = gpcn;
    link.kind = ModelKind::kGpcnLink;
    link.gamma = 0.5;
    link.mu_param = MuParam::kClamp;
    ModelConfig plain = gpcn;
    plain.gamma = 0.5;
    Rng prng2 = rng.stream(201);
    ParameterSet link_params = init_params(link, 10, 4, 3, prng2);
    ParameterSet plain_params;
    for (const auto& [name, m] : link_params.items)
      if (name != "W_A" && name != "mu_raw") plain_params.items.emplace_back(name, m);
    link_params.at("mu_raw").data[0] = 1.0;  // clamp parametrization: mu exactly 1
    const double gap_mu = max_abs_diff(eval_model(link, ti, link_params), eval_model(plain, ti, plain_params));
    c.check("reduction: mu=1 GPCN-LINK == GPCN", gap_mu < 1e-12, "max abs gap " + fmt(gap_mu));

    ModelConfig agpcn = plain;
    agpcn.kind = ModelKind::kAgpcn;
    Rng prng3 = rng.stream(202);
    ParameterSet agpcn_params = init_params(agpcn, 10, 4, 3, prng3);  // theta starts at binomial pattern
    ParameterSet gpcn_params;
    for (const auto& [name, m] : agpcn_params.items)
      if (name != "theta") gpcn_params.items.emplace_back(name, m);
    const double gap_theta = max_abs_diff(eval_model(agpcn, ti, agpcn_params), eval_model(plain, ti, gpcn_params));
    c.check("reduction: binomial theta AGPCN == GPCN", gap_theta < 1e-12, "max abs gap " + fmt(gap_theta));
  }

  // Homophily against a brute-force neighbor enumeration.
  {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      TestInstance ti = make_instance(20 + rep, 3, 3, rng);
      const SparseAdjacency& a = ti.ds.adjacency;
      const LabelVector& y = ti.ds.labels;
      std::int64_t same = 0, total = 0;
      std::vector<double> d_same(3, 0), d_all(3, 0);
      std::vector<double> class_n(3, 0);
      for (std::int64_t v : y.labels) class_n[static_cast<std::size_t>(v)] += 1.0;
      for (std::int64_t u = 0; u < a.n_rows; ++u)
        for (std::int64_t kk = a.row_offsets[u]; kk < a.row_offsets[u + 1]; ++kk) {
          const std::int64_t v = a.col_indices[kk];
          ++total;
          if (y.labels[static_cast<std::size_t>(u)] == y.labels[static_cast<std::size_t>(v)]) ++same;
          d_all[static_cast<std::size_t>(y.labels[static_cast<std::size_t>(u)])] += 1.0;
          if (y.labels[static_cast<std::size_t>(u)] == y.labels[static_cast<std::size_t>(v)])
            d_same[static_cast<std::size_t>(y.labels[static_cast<std::size_t>(u)])] += 1.0;
        }
      const double edge_ref = static_cast<double>(same) / static_cast<double>(total);
      double class_ref = 0.0;
      for (int k = 0; k < 3; ++k)
        class_ref += std::max(d_same[k] / d_all[k] - class_n[k] / static_cast<double>(y.size()), 0.0);
      class_ref /= 2.0;
      worst = std::max(worst, std::fabs(edge_homophily(a, y) - edge_ref));
      worst = std::max(worst, std::fabs(class_homophily(a, y) - class_ref));
    }
    c.check("homophily: matches brute-force counting", worst < 1e-12, "max abs gap " + fmt(worst));
  }

  // Spectral invariants of the normalized operator.
  {
    double top_gap = 0.0, range_excess = 0.0, lanczos_gap = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      Rng grng = rng.stream(300 + static_cast<std::uint64_t>(rep));
      SparseAdjacency a = random_connected_graph(30 + 7 * rep, 60, grng);
      SparseAdjacency norm = normalized_adjacency(a);
      Spectrum full = spectrum(norm);
      top_gap = std::max(top_gap, std::fabs(full.eigenvalues.front() - 1.0));
      for (double ev : full.eigenvalues) range_excess = std::max(range_excess, std::fabs(ev) - 1.0);
      Spectrum top5 = spectrum(norm, 5);
      for (int i = 0; i < 5; ++i)
        lanczos_gap = std::max(lanczos_gap, std::fabs(top5.eigenvalues[i] - full.eigenvalues[i]));
    }
    c.check("spectrum: lambda_1 = 1 within 1e-8", top_gap < 1e-8, "max gap " + fmt(top_gap));
    c.check("spectrum: |lambda| <= 1 + 1e-9", range_excess < 1e-9, "max excess " + fmt(range_excess));
    c.check("spectrum: lanczos top-5 matches dense within 1e-6", lanczos_gap < 1e-6, "max gap " + fmt(lanczos_gap));
  }

  // Bound cross-checks.
  {
    Rng brng = rng.stream(400);
    SparseAdjacency norm = normalized_adjacency(random_connected_graph(25, 40, brng));
    BoundInputs in;
    in.spectrum = spectrum(norm);
    in.N = 25;
    in.T = 2;
    in.L = 4;
    in.M = 15;
    in.U = 10;
    in.gamma = 0.5;
    in.B = {0.8, 1.1, 0.9, 1.2};
    in.B_A = 0.7;
    in.mu = 0.6;
    in.X_fro = 3.0;
    in.theta.resize(5);
    in.theta[0] = 1.0;
    for (std::int64_t k = 1; k <= 4; ++k)
      in.theta[static_cast<std::size_t>(k)] = (k == 4 ? 1.0 : 4.0) * std::pow(0.5, k);
    const double t1 = theorem1_rhs(in, CoefficientMode::kPaper);
    const double t2 = theorem2_rhs(in);
    c.check("bounds: theorem-1 coefficient pattern reproduces theorem 1",
            std::fabs(t1 - t2) <= 1e-12 * std::max(1.0, std::fabs(t1)), "rel gap " + fmt(std::fabs(t1 - t2)));

    BoundInputs mu1 = in;
    mu1.mu = 1.0;
    BoundInputs mu1_other = mu1;
    mu1_other.B_A = 123.0;
    c.check("bounds: mu=1 removes the direct-learning term",
            theorem1_rhs(mu1) == theorem1_rhs(mu1_other) &&
                theorem1_terms(mu1).link_term == 0.0,
            "");

    bool monotone = true;
    Rng prng = rng.stream(401);
    for (int rep = 0; rep < 200 && monotone; ++rep) {
      BoundInputs lo = in;
      lo.gamma = prng.uniform(0.05, 2.0);
      BoundInputs hi = lo;
      hi.gamma = lo.gamma * (1.0 + prng.uniform(0.01, 1.0));
      monotone = theorem1_rhs(hi) >= theorem1_rhs(lo);
      BoundInputs hb = lo;
      hb.B[2] *= 1.0 + prng.uniform(0.01, 1.0);
      monotone = monotone && theorem1_rhs(hb) >= theorem1_rhs(lo);
    }
    c.check("bounds: monotone in gamma and B_res", monotone, "");
  }

  // Determinism of a small training run.
  {
    SyntheticSpec spec;
    spec.n = 60;
    spec.classes = 2;
    spec.p_in = 0.2;
    spec.p_out = 0.02;
    spec.feature_dim = 4;
    spec.feature_separation = 1.0;
    spec.seed = 7;
    GraphDataset ds = generate_sbm(spec);
    Split split = make_split(ds.labels, SplitProtocol::kPerClass602020, 3);
    ModelConfig mcfg;
    mcfg.kind = ModelKind::kGpcnLink;
    mcfg.T = 1;
    mcfg.L = 2;
    mcfg.hidden = 8;
    mcfg.gamma = 0.25;
    mcfg.dropout = 0.3;
    TrainConfig tcfg;
    tcfg.lr = 0.05;
    tcfg.max_epochs = 30;
    tcfg.seed = 11;
    RunResult a = train(ds, mcfg, tcfg, split);
    RunResult b = train(ds, mcfg, tcfg, split);
    bool identical = a.best_val_acc == b.best_val_acc && a.test_acc_at_best_val == b.test_acc_at_best_val &&
                     a.epochs_run == b.epochs_run && a.loss_curve == b.loss_curve &&
                     a.learned_mu == b.learned_mu;
    for (std::size_t i = 0; identical && i < a.best_params.items.size(); ++i)
      identical = bit_identical(a.best_params.items[i].second, b.best_params.items[i].second);
    c.check("determinism: identical seeds give bit-identical runs", identical, "");
  }

  return c.all_ok();
}

}  // namespace pgcn

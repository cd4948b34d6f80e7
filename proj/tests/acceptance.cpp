// Acceptance suite: runs every published criterion at its stated tolerance
// and prints one pass/fail line per criterion.  Exit code 0 iff every
// non-gated criterion passes.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <vector>

#include "pgcn/bounds.hpp"
#include "pgcn/dataset.hpp"
#include "pgcn/graph.hpp"
#include "pgcn/model.hpp"
#include "pgcn/spectrum.hpp"
#include "pgcn/tape.hpp"
#include "pgcn/train.hpp"
#include "test_util.hpp"

using namespace pgcn;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  bool skipped = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::duration<double>>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream ss;
  ss << std::setprecision(precision) << v;
  return ss.str();
}

struct Instance {
  GraphDataset ds;
  SparseAdjacency a_norm;
  std::vector<std::int64_t> mask;

  ModelInputs inputs() const { return {&ds.adjacency, &a_norm, &ds.features}; }
};

Instance make_instance(std::int64_t n, std::int64_t q, std::int64_t classes, Rng& rng) {
  Instance inst;
  inst.ds = testutil::random_dataset(n, q, classes, rng);
  inst.a_norm = normalized_adjacency(inst.ds.adjacency);
  for (std::int64_t i = 0; i < n; i += 2) inst.mask.push_back(i);
  return inst;
}

Matrix eval_model(const ModelConfig& cfg, const Instance& inst, const ParameterSet& params) {
  Tape tape;
  BoundParams bound = bind_params(tape, params);
  ModelInputs in = inst.inputs();
  return tape.value(model_forward(tape, in, bound, cfg, false, nullptr));
}

Matrix eval_poly(const ModelConfig& cfg, const Instance& inst, const ParameterSet& params, CoefficientMode mode) {
  Tape tape;
  BoundParams bound = bind_params(tape, params);
  ModelInputs in = inst.inputs();
  return tape.value(gpcn_forward_polynomial(tape, in, bound, cfg, false, nullptr, mode));
}

double rel_gap(const Matrix& a, const Matrix& b) { return max_abs_diff(a, b) / (1.0 + max_abs(a)); }

ParameterSet drop_params(const ParameterSet& src, std::initializer_list<std::string_view> names) {
  ParameterSet out;
  for (const auto& [name, m] : src.items) {
    bool dropped = false;
    for (std::string_view d : names) dropped = dropped || name == d;
    if (!dropped) out.items.emplace_back(name, m);
  }
  return out;
}

// --- criterion 1: recursion vs polynomial expansion ------------------------

Outcome criterion1() {
  const auto start = Clock::now();
  Rng rng(101);
  double worst_match = 0.0;
  double least_paper_gap = 1e300;
  int paper_cases = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::int64_t n = 4 + static_cast<std::int64_t>(rng.below(9));   // <= 12
    const std::int64_t h = 2 + static_cast<std::int64_t>(rng.below(7));   // <= 8
    const std::int64_t q = 2 + static_cast<std::int64_t>(rng.below(4));
    const std::int64_t t = 1 + static_cast<std::int64_t>(rng.below(3));   // <= 3
    const std::int64_t l = 1 + rep % 8;                                   // covers 1..8
    const double gamma = std::pow(2.0, static_cast<double>(rng.below(9)) - 6.0);  // 2^-6 .. 2^2
    Instance inst = make_instance(n, q, 2, rng);
    ModelConfig cfg;
    cfg.kind = ModelKind::kGpcn;
    cfg.T = t;
    cfg.L = l;
    cfg.hidden = h;
    cfg.gamma = gamma;
    Rng prng = rng.stream(static_cast<std::uint64_t>(rep));
    ParameterSet params = init_params(cfg, n, q, 2, prng);
    Matrix rec = eval_model(cfg, inst, params);
    worst_match = std::max(worst_match, rel_gap(rec, eval_poly(cfg, inst, params, CoefficientMode::kCanonical)));
    if (l >= 4 && max_abs(rec) > 0.0) {
      // Negative control: the 'paper' coefficient mode (interior terms
      // L*gamma^k) must not reproduce the recursion at these depths.  Instances whose
      // initial layers go fully dead (zero logits) carry no signal and are
      // excluded.
      least_paper_gap = std::min(least_paper_gap, rel_gap(rec, eval_poly(cfg, inst, params, CoefficientMode::kPaper)));
      ++paper_cases;
    }
  }
  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = worst_match < 1e-10 && least_paper_gap > 1e-10 && paper_cases >= 100 && elapsed < 10.0;
  out.detail = "max rel gap " + fmt(worst_match) + ", min paper-coefficient gap " + fmt(least_paper_gap) + " over " +
               std::to_string(paper_cases) + " L>=4 cases, " + fmt(elapsed, 2) + " s";
  return out;
}

// --- criterion 2: gradients ------------------------------------------------

Outcome criterion2() {
  const auto start = Clock::now();
  Rng rng(202);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    ModelConfig cfg;
    cfg.kind = static_cast<ModelKind>(rep % kModelKindCount);
    cfg.T = 1 + static_cast<std::int64_t>(rng.below(3));
    cfg.L = 1 + static_cast<std::int64_t>(rng.below(4));
    cfg.hidden = 3 + static_cast<std::int64_t>(rng.below(6));
    cfg.gamma = 0.25 + rng.uniform(0.0, 0.5);
    cfg.gcn_layers = 2 + static_cast<std::int64_t>(rng.below(2));
    cfg.sgc_power = static_cast<std::int64_t>(rng.below(3));
    const std::int64_t n = 6 + static_cast<std::int64_t>(rng.below(7));
    const std::int64_t q = 2 + static_cast<std::int64_t>(rng.below(4));
    const std::int64_t classes = 2 + static_cast<std::int64_t>(rng.below(3));
    Instance inst = make_instance(n, q, classes, rng);
    Rng prng = rng.stream(static_cast<std::uint64_t>(rep) + 1000);
    ParameterSet params = init_params(cfg, n, q, classes, prng);
    if (params.has("mu_raw")) params.at("mu_raw").data[0] = rng.uniform(-1.0, 1.0);

    std::vector<Matrix> values;
    for (const auto& [name, m] : params.items) values.push_back(m);
    TapeFn f = [&](Tape& tape, const std::vector<Tensor>& leaves) {
      BoundParams bound;
      for (std::size_t i = 0; i < leaves.size(); ++i) bound.items.emplace_back(params.items[i].first, leaves[i]);
      ModelInputs in = inst.inputs();
      Tensor logits = model_forward(tape, in, bound, cfg, false, nullptr);
      return tape.softmax_cross_entropy(logits, inst.ds.labels, inst.mask);
    };
    worst = std::max(worst, gradcheck(f, values, 1e-5));
  }
  const double elapsed = seconds_since(start);
  Outcome out;
  out.pass = worst < 1e-4 && elapsed < 60.0;
  out.detail = "max rel err " + fmt(worst) + " over 50 instances (all 10 kinds), " + fmt(elapsed, 2) + " s";
  return out;
}

// --- criterion 3: reductions -----------------------------------------------

Outcome criterion3() {
  Rng rng(303);
  double worst_gamma = 0.0, worst_mu = 0.0, worst_theta = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::int64_t n = 5 + static_cast<std::int64_t>(rng.below(8));
    const std::int64_t q = 2 + static_cast<std::int64_t>(rng.below(4));
    const std::int64_t classes = 2 + static_cast<std::int64_t>(rng.below(3));
    Instance inst = make_instance(n, q, classes, rng);
    ModelConfig base;
    base.kind = ModelKind::kGpcn;
    base.T = 1 + static_cast<std::int64_t>(rng.below(3));
    base.L = 1 + static_cast<std::int64_t>(rng.below(4));
    base.hidden = 3 + static_cast<std::int64_t>(rng.below(6));
    base.gamma = 0.25 + rng.uniform(0.0, 0.75);

    // gamma = 0 turns GPCN into the MLP on the same weights.
    {
      Rng prng = rng.stream(static_cast<std::uint64_t>(rep) + 1);
      ParameterSet params = init_params(base, n, q, classes, prng);
      ModelConfig frozen = base;
      frozen.gamma = 0.0;
      ModelConfig mlp = base;
      mlp.kind = ModelKind::kMlp;
      worst_gamma = std::max(
          worst_gamma, rel_gap(eval_model(frozen, inst, params), eval_model(mlp, inst, drop_params(params, {"W_res"}))));
    }
    // mu = 1 turns GPCN-LINK into GPCN (clamp parametrization reaches 1).
    {
      ModelConfig link = base;
      link.kind = ModelKind::kGpcnLink;
      link.mu_param = MuParam::kClamp;
      Rng prng = rng.stream(static_cast<std::uint64_t>(rep) + 2);
      ParameterSet params = init_params(link, n, q, classes, prng);
      params.at("mu_raw").data[0] = 1.0;
      worst_mu = std::max(worst_mu, rel_gap(eval_model(link, inst, params),
                                            eval_model(base, inst, drop_params(params, {"W_A", "mu_raw"}))));
    }
    // theta at the binomial point equals the GPCN polynomial.
    {
      ModelConfig agpcn = base;
      agpcn.kind = ModelKind::kAgpcn;
      Rng prng = rng.stream(static_cast<std::uint64_t>(rep) + 3);
      ParameterSet params = init_params(agpcn, n, q, classes, prng);
      worst_theta =
          std::max(worst_theta, rel_gap(eval_model(agpcn, inst, params),
                                        eval_poly(base, inst, drop_params(params, {"theta"}),
                                                  CoefficientMode::kCanonical)));
    }
  }
  Outcome out;
  out.pass = worst_gamma < 1e-12 && worst_mu < 1e-12 && worst_theta < 1e-12;
  out.detail = "rel gaps: gamma->0 " + fmt(worst_gamma) + ", mu=1 " + fmt(worst_mu) + ", binomial theta " +
               fmt(worst_theta) + " (50 instances each)";
  return out;
}

// --- criterion 4: homophily oracle -----------------------------------------

Outcome criterion4() {
  Rng rng(404);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::int64_t n = 6 + static_cast<std::int64_t>(rng.below(45));  // <= 50
    const std::int64_t classes = 2 + static_cast<std::int64_t>(rng.below(4));  // <= 5
    SparseAdjacency a = testutil::random_connected_graph(n, n + 5, rng);
    LabelVector y = testutil::random_labels(n, classes, rng);

    // Brute force over the dense matrix, node by node.
    Matrix d = testutil::to_dense(a);
    std::int64_t same = 0, total = 0;
    std::vector<double> deg_same(static_cast<std::size_t>(classes), 0.0);
    std::vector<double> deg_all(static_cast<std::size_t>(classes), 0.0);
    std::vector<double> count(static_cast<std::size_t>(classes), 0.0);
    for (std::int64_t u = 0; u < n; ++u) {
      count[static_cast<std::size_t>(y.labels[static_cast<std::size_t>(u)])] += 1.0;
      for (std::int64_t v = 0; v < n; ++v) {
        if (d.at(u, v) == 0.0) continue;
        ++total;
        const auto cu = static_cast<std::size_t>(y.labels[static_cast<std::size_t>(u)]);
        deg_all[cu] += 1.0;
        if (y.labels[static_cast<std::size_t>(u)] == y.labels[static_cast<std::size_t>(v)]) {
          ++same;
          deg_same[cu] += 1.0;
        }
      }
    }
    const double edge_expect = static_cast<double>(same) / static_cast<double>(total);
    double class_expect = 0.0;
    for (std::int64_t k = 0; k < classes; ++k)
      class_expect +=
          std::max(deg_same[static_cast<std::size_t>(k)] / deg_all[static_cast<std::size_t>(k)] -
                       count[static_cast<std::size_t>(k)] / static_cast<double>(n),
                   0.0);
    class_expect /= static_cast<double>(classes - 1);

    worst = std::max(worst, std::fabs(edge_homophily(a, y) - edge_expect));
    worst = std::max(worst, std::fabs(class_homophily(a, y) - class_expect));
  }

  SyntheticSpec spec;
  spec.n = 300;
  spec.classes = 3;
  spec.p_in = 0.05;
  spec.p_out = 0.0;
  spec.feature_dim = 3;
  spec.seed = 17;
  GraphDataset pure = generate_sbm(spec);
  const bool sbm_exact = edge_homophily(pure.adjacency, pure.labels) == 1.0;

  Outcome out;
  out.pass = worst < 1e-12 && sbm_exact;
  out.detail = "max oracle gap " + fmt(worst) + " over 100 graphs; p_out=0 homophily exactly 1: " +
               (sbm_exact ? "yes" : "no");
  return out;
}

// --- criterion 5: spectral invariants ---------------------------------------

Outcome criterion5() {
  Rng rng(505);
  double top_gap = 0.0, range_excess = -1.0, lanczos_gap = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::int64_t n = 20 + static_cast<std::int64_t>(rng.below(181));  // <= 200
    SparseAdjacency norm = normalized_adjacency(testutil::random_connected_graph(n, 2 * n, rng));
    Spectrum full = spectrum(norm);
    top_gap = std::max(top_gap, std::fabs(full.eigenvalues.front() - 1.0));
    for (double ev : full.eigenvalues) range_excess = std::max(range_excess, std::fabs(ev) - 1.0);
    Spectrum top5 = spectrum(norm, 5);
    for (int i = 0; i < 5; ++i)
      lanczos_gap = std::max(lanczos_gap, std::fabs(top5.eigenvalues[static_cast<std::size_t>(i)] -
                                                    full.eigenvalues[static_cast<std::size_t>(i)]));
  }
  Outcome out;
  out.pass = top_gap < 1e-8 && range_excess < 1e-9 && lanczos_gap < 1e-6;
  out.detail = "lambda_1 gap " + fmt(top_gap) + ", range excess " + fmt(range_excess) + ", lanczos top-5 gap " +
               fmt(lanczos_gap) + " over 100 graphs";
  return out;
}

// --- criterion 6: bound formula cross-checks --------------------------------

Outcome criterion6() {
  Rng rng(606);
  double pattern_gap = 0.0;
  bool mu_exact = true;
  bool monotone = true;
  SparseAdjacency norm = normalized_adjacency(testutil::random_connected_graph(30, 60, rng));
  Spectrum spec = spectrum(norm);
  auto random_inputs = [&]() {
    BoundInputs in;
    in.spectrum = spec;
    in.N = 30;
    in.T = 1 + static_cast<std::int64_t>(rng.below(3));
    in.L = 1 + static_cast<std::int64_t>(rng.below(6));
    in.M = 18;
    in.U = 12;
    in.gamma = rng.uniform(0.1, 1.5);
    in.B.clear();
    for (std::int64_t i = 0; i < in.T + 2; ++i) in.B.push_back(rng.uniform(0.2, 1.5));
    in.B_A = rng.uniform(0.1, 1.2);
    in.mu = rng.uniform(0.0, 1.0);
    in.X_fro = rng.uniform(0.5, 5.0);
    return in;
  };

  for (int rep = 0; rep < 50; ++rep) {
    BoundInputs in = random_inputs();
    in.theta.assign(static_cast<std::size_t>(in.L) + 1, 0.0);
    in.theta[0] = 1.0;
    for (std::int64_t k = 1; k <= in.L; ++k)
      in.theta[static_cast<std::size_t>(k)] = (k == in.L ? 1.0 : static_cast<double>(in.L)) * std::pow(in.gamma, k);
    const double t1 = theorem1_rhs(in, CoefficientMode::kPaper);
    const double t2 = theorem2_rhs(in);
    pattern_gap = std::max(pattern_gap, std::fabs(t1 - t2) / std::max(1.0, std::fabs(t1)));

    BoundInputs mu1 = in;
    mu1.mu = 1.0;
    BoundInputs mu1_big = mu1;
    mu1_big.B_A *= 917.0;
    mu_exact = mu_exact && theorem1_terms(mu1).link_term == 0.0 && theorem1_rhs(mu1) == theorem1_rhs(mu1_big);
  }

  for (int rep = 0; rep < 1000 && monotone; ++rep) {
    BoundInputs lo = random_inputs();
    BoundInputs hi = lo;
    if (rep % 2 == 0)
      hi.gamma *= 1.0 + rng.uniform(0.01, 1.0);
    else
      hi.B[static_cast<std::size_t>(lo.T)] *= 1.0 + rng.uniform(0.01, 1.0);
    monotone = theorem1_rhs(hi) >= theorem1_rhs(lo);
  }

  Outcome out;
  out.pass = pattern_gap < 1e-12 && mu_exact && monotone;
  out.detail = "pattern rel gap " + fmt(pattern_gap) + ", mu=1 exact: " + (mu_exact ? "yes" : "no") +
               ", monotone over 1000 perturbations: " + (monotone ? "yes" : "no");
  return out;
}

// --- criteria 7, 9, 10: synthetic end-to-end runs ----------------------------

// One graph per regime; the five seeds drive splits and training.
SyntheticSpec homophilous_spec() {
  SyntheticSpec spec;
  spec.n = 400;
  spec.classes = 2;
  spec.p_in = 0.05;
  spec.p_out = 0.005;
  spec.feature_dim = 8;
  spec.feature_separation = 1.0;
  spec.seed = 0;
  return spec;
}

SyntheticSpec heterophilous_spec() {
  SyntheticSpec spec = homophilous_spec();
  spec.p_in = 0.005;
  spec.p_out = 0.05;
  spec.feature_separation = 0.25;  // weak features
  return spec;
}

TrainConfig synthetic_train_config(std::uint64_t seed) {
  TrainConfig tcfg;
  tcfg.lr = 0.05;
  tcfg.weight_decay = 0.0;
  tcfg.max_epochs = 300;
  tcfg.patience = 60;
  tcfg.eval_every = 1;
  tcfg.seed = seed;
  return tcfg;
}

ModelConfig gpcn_config(std::int64_t layers = 2) {
  ModelConfig m;
  m.kind = ModelKind::kGpcn;
  m.T = 1;
  m.L = layers;
  m.hidden = 32;
  m.gamma = 0.25;
  return m;
}

RunResult run_synthetic(const GraphDataset& ds, const ModelConfig& mcfg, std::uint64_t seed) {
  Split split = make_split(ds.labels, SplitProtocol::kPerClass602020, seed);
  return train(ds, mcfg, synthetic_train_config(seed), split);
}

Outcome criterion7() {
  const auto start = Clock::now();
  GraphDataset homo = generate_sbm(homophilous_spec());
  std::vector<double> homo_acc;
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    homo_acc.push_back(run_synthetic(homo, gpcn_config(), seed).test_acc_at_best_val);
  auto [homo_mean, homo_std] = mean_std(homo_acc);

  GraphDataset hetero = generate_sbm(heterophilous_spec());
  ModelConfig link_cfg = gpcn_config();
  link_cfg.kind = ModelKind::kGpcnLink;
  ModelConfig gcn_cfg;
  gcn_cfg.kind = ModelKind::kGcn;
  gcn_cfg.gcn_layers = 2;
  gcn_cfg.hidden = 32;
  std::vector<double> link_acc, gcn_acc;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    link_acc.push_back(run_synthetic(hetero, link_cfg, seed).test_acc_at_best_val);
    gcn_acc.push_back(run_synthetic(hetero, gcn_cfg, seed).test_acc_at_best_val);
  }
  auto [link_mean, link_std] = mean_std(link_acc);
  auto [gcn_mean, gcn_std] = mean_std(gcn_acc);
  const double elapsed = seconds_since(start);

  Outcome out;
  out.pass = homo_mean >= 0.90 && (link_mean - gcn_mean) >= 0.05 && elapsed < 300.0;
  out.detail = "homophilous GPCN " + fmt(100 * homo_mean, 4) + "% (std " + fmt(100 * homo_std, 3) +
               "); heterophilous GPCN-LINK " + fmt(100 * link_mean, 4) + "% vs GCN " + fmt(100 * gcn_mean, 4) +
               "% (gap " + fmt(100 * (link_mean - gcn_mean), 3) + " pts); " + fmt(elapsed, 3) + " s";
  return out;
}

// --- criterion 8: gated dataset reproduction ---------------------------------

struct DatasetTarget {
  const char* name;
  double table_mean;  // published accuracy / 100
  ModelConfig model;
  TrainConfig train;
};

Outcome criterion8() {
  const char* root = std::getenv("PGCN_DATA_DIR");
  Outcome out;
  if (root == nullptr) {
    out.skipped = true;
    out.detail = "gated: set PGCN_DATA_DIR with cornell/texas/wisconsin files to enable";
    return out;
  }

  auto make_target = [](const char* name, double mean, double lr, std::int64_t t, std::int64_t l, double gamma,
                        double dropout) {
    DatasetTarget target;
    target.name = name;
    target.table_mean = mean;
    target.model = ModelConfig{};
    target.model.kind = ModelKind::kGpcn;
    target.model.T = t;
    target.model.L = l;
    target.model.hidden = 512;
    target.model.gamma = gamma;
    target.model.dropout = dropout;
    target.train = TrainConfig{};
    target.train.lr = lr;
    target.train.weight_decay = 0.001;
    target.train.max_epochs = 300;
    target.train.patience = 20;
    target.train.eval_every = 5;
    return target;
  };
  const std::vector<DatasetTarget> targets = {
      make_target("cornell", 0.8162, 0.01, 2, 4, 0.0625, 0.3),
      make_target("texas", 0.7945, 0.01, 1, 3, 0.015625, 0.6),
      make_target("wisconsin", 0.8568, 0.05, 2, 1, 0.0625, 0.3),
  };

  bool any_present = false;
  bool all_pass = true;
  std::string detail;
  for (const DatasetTarget& target : targets) {
    const std::string dir = std::string(root) + "/" + target.name;
    if (!std::filesystem::exists(dir + "/edges.txt")) {
      detail += std::string(target.name) + ": files missing; ";
      continue;
    }
    any_present = true;
    GraphDataset ds = import_external(dir + "/edges.txt", dir + "/features.txt", dir + "/labels.txt");
    std::vector<double> accs;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Split split = make_split(ds.labels, SplitProtocol::kPerClass602020, seed);
      TrainConfig tcfg = target.train;
      tcfg.seed = seed;
      accs.push_back(train(ds, target.model, tcfg, split).test_acc_at_best_val);
    }
    auto [mean, stddev] = mean_std(accs);
    const bool ok = std::fabs(mean - target.table_mean) <= 0.06;
    all_pass = all_pass && ok;
    detail += std::string(target.name) + " " + fmt(100 * mean, 4) + "% (target " + fmt(100 * target.table_mean, 4) +
              " +- 6, std " + fmt(100 * stddev, 3) + ") " + (ok ? "ok; " : "OUT OF CORRIDOR; ");
  }
  if (!any_present) {
    out.skipped = true;
    out.detail = "gated: no dataset directories under PGCN_DATA_DIR — " + detail;
    return out;
  }
  out.pass = all_pass;
  out.detail = detail;
  return out;
}

// --- criterion 9: depth ablation shape ---------------------------------------

Outcome criterion9() {
  const std::vector<std::int64_t> depths = {1, 2, 4, 8, 16};
  // Sweep in the residual-scale regime above 1, where high-order convolution
  // terms dominate the trunk; depth then destabilizes the pure-convolution
  // model while the blended model can shift weight onto its direct branch.
  const double sweep_gamma = 3.0;
  GraphDataset hetero = generate_sbm(heterophilous_spec());
  std::vector<double> gpcn_mean, link_mean;
  for (std::int64_t l : depths) {
    std::vector<double> gpcn_acc, link_acc;
    ModelConfig gpcn = gpcn_config(l);
    gpcn.gamma = sweep_gamma;
    ModelConfig link = gpcn;
    link.kind = ModelKind::kGpcnLink;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      gpcn_acc.push_back(run_synthetic(hetero, gpcn, seed).test_acc_at_best_val);
      link_acc.push_back(run_synthetic(hetero, link, seed).test_acc_at_best_val);
    }
    gpcn_mean.push_back(mean_std(gpcn_acc).first);
    link_mean.push_back(mean_std(link_acc).first);
  }
  const double gpcn_best = *std::max_element(gpcn_mean.begin(), gpcn_mean.end());
  const double link_best = *std::max_element(link_mean.begin(), link_mean.end());
  const double gpcn_drop = gpcn_best - gpcn_mean.back();
  const double link_drop = link_best - link_mean.back();

  Outcome out;
  out.pass = link_drop <= 0.03 && gpcn_drop >= 0.05;
  std::string curve;
  for (std::size_t i = 0; i < depths.size(); ++i)
    curve += "L" + std::to_string(depths[i]) + ": gpcn " + fmt(100 * gpcn_mean[i], 3) + "% / link " +
             fmt(100 * link_mean[i], 3) + "%; ";
  out.detail = "gpcn drop at L=16 " + fmt(100 * gpcn_drop, 3) + " pts (needs >= 5), gpcn-link drop " +
               fmt(100 * link_drop, 3) + " pts (needs <= 3) — " + curve;
  return out;
}

// --- criterion 10: determinism ----------------------------------------------

Outcome criterion10() {
  auto run_once = [&]() {
    GraphDataset ds = generate_sbm(homophilous_spec());
    Split split = make_split(ds.labels, SplitProtocol::kPerClass602020, 0);
    TrainConfig tcfg = synthetic_train_config(0);
    RunResult run = train(ds, gpcn_config(), tcfg, split);
    std::vector<ResultRow> rows = {make_result_row(ds, gpcn_config(), tcfg, split, run)};
    return std::pair<std::string, RunResult>(results_csv(rows, /*with_timing=*/false), std::move(run));
  };
  auto [csv_a, run_a] = run_once();
  auto [csv_b, run_b] = run_once();
  bool identical = csv_a == csv_b && run_a.loss_curve == run_b.loss_curve;
  for (std::size_t i = 0; identical && i < run_a.best_params.items.size(); ++i)
    identical = bit_identical(run_a.best_params.items[i].second, run_b.best_params.items[i].second);
  Outcome out;
  out.pass = identical;
  out.detail = identical ? "repeated run is bit-identical (results CSV, loss curve, parameters)"
                         : "repeated run diverged";
  return out;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Entry> criteria = {
      {1, "recursion-polynomial equivalence", criterion1},
      {2, "gradient correctness", criterion2},
      {3, "model reductions", criterion3},
      {4, "homophily oracle equivalence", criterion4},
      {5, "spectral invariants", criterion5},
      {6, "bound formula cross-check", criterion6},
      {7, "end-to-end learning on synthetic graphs", criterion7},
      {8, "dataset reproduction (gated)", criterion8},
      {9, "depth ablation shape", criterion9},
      {10, "determinism", criterion10},
  };
  bool all_pass = true;
  for (const Entry& entry : criteria) {
    Outcome out;
    try {
      out = entry.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const char* tag = out.skipped ? "SKIP" : out.pass ? "PASS" : "FAIL";
    std::cout << "[" << tag << "] criterion " << entry.id << ": " << entry.name << " — " << out.detail << "\n";
    std::cout.flush();
    if (!out.skipped) all_pass = all_pass && out.pass;
  }
  return all_pass ? 0 : 1;
}

#include "pgcn/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "pgcn/error.hpp"
#include "pgcn/parallel.hpp"

namespace pgcn {

namespace {

std::string format_real(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::vector<std::int64_t> class_members(const LabelVector& y, std::int64_t cls) {
  std::vector<std::int64_t> out;
  for (std::int64_t i = 0; i < y.size(); ++i)
    if (y.labels[static_cast<std::size_t>(i)] == cls) out.push_back(i);
  return out;
}

}  // namespace

std::string_view split_protocol_name(SplitProtocol p) {
  switch (p) {
    case SplitProtocol::kPerClass602020:
      return "per_class_60_20_20";
    case SplitProtocol::kRandom502525:
      return "random_50_25_25";
    case SplitProtocol::kFixedFile:
      return "fixed_file";
  }
  return "unknown";
}

SplitProtocol split_protocol_from_name(std::string_view name) {
  if (name == "per_class_60_20_20") return SplitProtocol::kPerClass602020;
  if (name == "random_50_25_25") return SplitProtocol::kRandom502525;
  if (name == "fixed_file") return SplitProtocol::kFixedFile;
  throw ConfigError("unknown split protocol '" + std::string(name) + "'");
}

void Split::validate(std::int64_t n) const {
  if (train.empty()) throw DataError("split: empty training mask");
  std::vector<std::int8_t> seen(static_cast<std::size_t>(n), 0);
  auto mark = [&](const std::vector<std::int64_t>& mask, const char* name) {
    for (std::int64_t i : mask) {
      if (i < 0 || i >= n) throw DataError(std::string("split: ") + name + " index out of range");
      if (seen[static_cast<std::size_t>(i)]++) throw DataError(std::string("split: masks overlap at node ") +
                                                               std::to_string(i));
    }
  };
  mark(train, "train");
  mark(val, "val");
  mark(test, "test");
}

Split make_split(const LabelVector& y, SplitProtocol protocol, std::uint64_t seed) {
  y.validate();
  if (protocol == SplitProtocol::kFixedFile)
    throw ConfigError("make_split: fixed_file splits come from a split file, not a generator");
  Split s;
  s.seed = seed;
  s.protocol = protocol;
  Rng rng(seed);
  if (protocol == SplitProtocol::kPerClass602020) {
    for (std::int64_t cls = 0; cls < y.num_classes; ++cls) {
      std::vector<std::int64_t> members = class_members(y, cls);
      shuffle(members, rng);
      const std::int64_t sz = static_cast<std::int64_t>(members.size());
      const std::int64_t n_val = sz / 5;   // floor(0.2 sz)
      const std::int64_t n_test = sz / 5;  // floor(0.2 sz); remainder joins train
      std::int64_t i = 0;
      for (; i < sz - n_val - n_test; ++i) s.train.push_back(members[static_cast<std::size_t>(i)]);
      for (; i < sz - n_test; ++i) s.val.push_back(members[static_cast<std::size_t>(i)]);
      for (; i < sz; ++i) s.test.push_back(members[static_cast<std::size_t>(i)]);
    }
  } else {
    std::vector<std::int64_t> order(static_cast<std::size_t>(y.size()));
    for (std::int64_t i = 0; i < y.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    shuffle(order, rng);
    const std::int64_t n = y.size();
    const std::int64_t n_val = n / 4;   // floor(0.25 n)
    const std::int64_t n_test = n / 4;  // floor(0.25 n); remainder joins train
    std::int64_t i = 0;
    for (; i < n - n_val - n_test; ++i) s.train.push_back(order[static_cast<std::size_t>(i)]);
    for (; i < n - n_test; ++i) s.val.push_back(order[static_cast<std::size_t>(i)]);
    for (; i < n; ++i) s.test.push_back(order[static_cast<std::size_t>(i)]);
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  s.validate(y.size());
  return s;
}

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("train: lr must be > 0");
  if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (eval_every < 1) throw ConfigError("train: eval_every must be >= 1");
  if (theta_l2 && *theta_l2 < 0.0) throw ConfigError("train: theta_l2 must be >= 0");
}

void adam_step(std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads, AdamState& state,
               const AdamConfig& cfg, const std::vector<double>& weight_decay) {
  if (params.size() != grads.size() || params.size() != weight_decay.size())
    throw DataError("adam_step: parameter/gradient/decay count mismatch");
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.emplace_back(p->rows, p->cols);
      state.v.emplace_back(p->rows, p->cols);
    }
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& w = *params[p];
    const Matrix& g = *grads[p];
    if (!w.same_shape(g)) throw DataError("adam_step: gradient shape mismatch");
    Matrix& m = state.m[p];
    Matrix& v = state.v[p];
    const double wd = weight_decay[p];
    for (std::size_t i = 0; i < w.data.size(); ++i) {
      double grad = g.data[i];
      if (wd != 0.0 && !cfg.decoupled) grad += wd * w.data[i];  // coupled L2
      m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * grad;
      v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * grad * grad;
      const double m_hat = m.data[i] / bc1;
      const double v_hat = v.data[i] / bc2;
      w.data[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
      if (wd != 0.0 && cfg.decoupled) w.data[i] -= cfg.lr * wd * w.data[i];
    }
  }
}

double accuracy(const Matrix& logits, const LabelVector& y, const std::vector<std::int64_t>& mask) {
  if (logits.rows != y.size()) throw DataError("accuracy: label count mismatch");
  if (mask.empty()) throw DataError("accuracy: empty mask");
  std::int64_t hits = 0;
  for (std::int64_t r : mask) {
    std::int64_t best = 0;
    for (std::int64_t j = 1; j < logits.cols; ++j)
      if (logits.at(r, j) > logits.at(r, best)) best = j;  // ties keep the lowest index
    if (best == y.labels[static_cast<std::size_t>(r)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

RunResult train(const GraphDataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg, const Split& split,
                SymmetrizeMode symmetrize) {
  mcfg.validate();
  tcfg.validate();
  split.validate(ds.num_nodes());
  const auto start = std::chrono::steady_clock::now();

  const SparseAdjacency a_norm = normalized_adjacency(ds.adjacency, symmetrize);
  const ModelInputs inputs{&ds.adjacency, &a_norm, &ds.features};

  Rng base(tcfg.seed);
  Rng init_rng = base.stream(0);
  Rng dropout_rng = base.stream(1);
  ParameterSet params = init_params(mcfg, ds.num_nodes(), ds.num_features(), ds.labels.num_classes, init_rng);

  const double theta_l2 = tcfg.theta_l2.value_or(tcfg.weight_decay);
  std::vector<double> decay(params.items.size(), tcfg.weight_decay);
  for (std::size_t i = 0; i < params.items.size(); ++i) {
    // Architecture-mixing coefficients are exempt; theta gets its own penalty.
    if (params.items[i].first == "theta" || params.items[i].first == "mu_raw") decay[i] = 0.0;
  }

  AdamConfig adam{tcfg.lr, 0.9, 0.999, 1e-8, tcfg.decoupled_weight_decay};
  AdamState state;
  RunResult result;
  result.best_val_acc = -1.0;
  std::int64_t stale_evals = 0;

  for (std::int64_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    try {
      Tape tape(tcfg.f32);
      BoundParams bound = bind_params(tape, params);
      Tensor logits = model_forward(tape, inputs, bound, mcfg, /*training=*/true, &dropout_rng);
      Tensor loss = tape.softmax_cross_entropy(logits, ds.labels, split.train);
      if (model_has_theta(mcfg.kind) && theta_l2 > 0.0) {
        const Tensor theta = bound.at("theta");
        loss = tape.add(loss, tape.l2_penalty(std::span<const Tensor>(&theta, 1), theta_l2));
      }
      tape.backward(loss);
      result.loss_curve.push_back(tape.value(loss).scalar());

      std::vector<Matrix*> ws;
      std::vector<const Matrix*> gs;
      for (std::size_t i = 0; i < params.items.size(); ++i) {
        ws.push_back(&params.items[i].second);
        gs.push_back(&tape.grad(bound.items[i].second));
      }
      adam_step(ws, gs, state, adam, decay);
      result.epochs_run = epoch;

      if (epoch % tcfg.eval_every == 0 || epoch == tcfg.max_epochs) {
        Tape eval_tape(tcfg.f32);
        BoundParams eval_bound = bind_params(eval_tape, params);
        Tensor eval_logits = model_forward(eval_tape, inputs, eval_bound, mcfg, /*training=*/false, nullptr);
        const Matrix& lv = eval_tape.value(eval_logits);
        const double val_acc = split.val.empty() ? 0.0 : accuracy(lv, ds.labels, split.val);
        const double test_acc = split.test.empty() ? 0.0 : accuracy(lv, ds.labels, split.test);
        if (val_acc > result.best_val_acc) {
          result.best_val_acc = val_acc;
          result.test_acc_at_best_val = test_acc;
          result.best_params = params;
          stale_evals = 0;
        } else {
          ++stale_evals;
        }
        if (stale_evals >= tcfg.patience) break;
      }
    } catch (const NumericError&) {
      result.aborted = true;
      result.epochs_run = epoch;
      break;
    }
  }
  if (result.best_val_acc < 0.0) result.best_val_acc = 0.0;

  if (!result.best_params.items.empty()) {
    if (model_has_mu(mcfg.kind)) {
      const double raw = result.best_params.at("mu_raw").scalar();
      result.learned_mu = mcfg.mu_param == MuParam::kSigmoid ? 1.0 / (1.0 + std::exp(-raw))
                                                             : std::min(std::max(raw, 0.0), 1.0);
    }
    if (model_has_theta(mcfg.kind)) result.learned_theta = result.best_params.at("theta").data;
  }
  result.wall_ms =
      std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

ResultRow make_result_row(const GraphDataset& ds, const ModelConfig& mcfg, const TrainConfig& tcfg,
                          const Split& split, const RunResult& run) {
  ResultRow row;
  row.model = std::string(model_kind_name(mcfg.kind));
  row.dataset = ds.name;
  row.seed = split.seed;
  row.protocol = split.protocol;
  row.T = mcfg.T;
  row.L = mcfg.L;
  row.hidden = mcfg.hidden;
  row.gamma = mcfg.gamma;
  row.lr = tcfg.lr;
  row.weight_decay = tcfg.weight_decay;
  row.dropout = mcfg.dropout;
  row.best_val_acc = run.best_val_acc;
  row.test_acc = run.test_acc_at_best_val;
  row.epochs = run.epochs_run;
  row.learned_mu = run.learned_mu;
  row.learned_theta = run.learned_theta;
  row.wall_ms = run.wall_ms;
  row.aborted = run.aborted;
  return row;
}

std::string results_csv(const std::vector<ResultRow>& rows, bool with_timing) {
  std::ostringstream out;
  out << "model,dataset,seed,split_protocol,T,L,gamma,hidden,lr,weight_decay,dropout,best_val_acc,test_acc,"
         "epochs,learned_mu,learned_theta";
  if (with_timing) out << ",wall_ms";
  out << '\n';
  for (const ResultRow& r : rows) {
    out << r.model << ',' << r.dataset << ',' << r.seed << ',' << split_protocol_name(r.protocol) << ',' << r.T
        << ',' << r.L << ',' << format_real(r.gamma) << ',' << r.hidden << ',' << format_real(r.lr) << ','
        << format_real(r.weight_decay) << ',' << format_real(r.dropout) << ',' << format_real(r.best_val_acc) << ','
        << format_real(r.test_acc) << ',' << r.epochs << ',';
    if (r.learned_mu) out << format_real(*r.learned_mu);
    out << ',';
    if (r.learned_theta) {
      for (std::size_t i = 0; i < r.learned_theta->size(); ++i) {
        if (i) out << ';';
        out << format_real((*r.learned_theta)[i]);
      }
    }
    if (with_timing) out << ',' << format_real(r.wall_ms);
    out << '\n';
  }
  return out.str();
}

std::int64_t GridSpec::cells() const {
  auto dim = [](std::size_t n) { return static_cast<std::int64_t>(n == 0 ? 1 : n); };
  return dim(hidden.size()) * dim(lr.size()) * dim(weight_decay.size()) * dim(T.size()) * dim(L.size()) *
         dim(gamma.size()) * dim(dropout.size());
}

namespace {

// Expands cell index -> configs, axis order: hidden, lr, weight_decay, T, L,
// gamma, dropout (outermost first).
void apply_cell(const GridSpec& grid, std::int64_t cell, ModelConfig& m, TrainConfig& t) {
  auto pick = [&cell](const auto& axis, auto& target) {
    if (axis.empty()) return;
    const std::int64_t n = static_cast<std::int64_t>(axis.size());
    target = axis[static_cast<std::size_t>(cell % n)];
    cell /= n;
  };
  // Consumed innermost-first; declare in reverse of the documented order.
  pick(grid.dropout, m.dropout);
  pick(grid.gamma, m.gamma);
  pick(grid.L, m.L);
  pick(grid.T, m.T);
  pick(grid.weight_decay, t.weight_decay);
  pick(grid.lr, t.lr);
  pick(grid.hidden, m.hidden);
}

}  // namespace

GridOutcome grid_search(const GraphDataset& ds, const ModelConfig& base_model, const TrainConfig& base_train,
                        const GridSpec& grid, const std::vector<Split>& splits, int jobs,
                        SymmetrizeMode symmetrize) {
  if (splits.empty()) throw ConfigError("grid_search: needs at least one split");
  const std::int64_t n_cells = grid.cells();
  const std::int64_t n_splits = static_cast<std::int64_t>(splits.size());
  const std::int64_t n_tasks = n_cells * n_splits;

  GridOutcome outcome;
  outcome.rows.resize(static_cast<std::size_t>(n_tasks));
  std::vector<double> val_acc(static_cast<std::size_t>(n_tasks));

  parallel_for(n_tasks, jobs, [&](std::int64_t task) {
    const std::int64_t cell = task / n_splits;
    const std::int64_t split_ix = task % n_splits;
    ModelConfig mcfg = base_model;
    TrainConfig tcfg = base_train;
    apply_cell(grid, cell, mcfg, tcfg);
    tcfg.seed = splits[static_cast<std::size_t>(split_ix)].seed;
    RunResult run = train(ds, mcfg, tcfg, splits[static_cast<std::size_t>(split_ix)], symmetrize);
    outcome.rows[static_cast<std::size_t>(task)] =
        make_result_row(ds, mcfg, tcfg, splits[static_cast<std::size_t>(split_ix)], run);
    val_acc[static_cast<std::size_t>(task)] =
        run.aborted ? -std::numeric_limits<double>::infinity() : run.best_val_acc;
  });

  double best_score = -std::numeric_limits<double>::infinity();
  std::int64_t best_cell = 0;
  for (std::int64_t cell = 0; cell < n_cells; ++cell) {
    double mean = 0.0;
    for (std::int64_t s = 0; s < n_splits; ++s) mean += val_acc[static_cast<std::size_t>(cell * n_splits + s)];
    mean /= static_cast<double>(n_splits);
    if (mean > best_score) {
      best_score = mean;
      best_cell = cell;
    }
  }
  outcome.best_model = base_model;
  outcome.best_train = base_train;
  apply_cell(grid, best_cell, outcome.best_model, outcome.best_train);
  outcome.best_mean_val = best_score;
  std::vector<double> tests;
  for (std::int64_t s = 0; s < n_splits; ++s)
    tests.push_back(outcome.rows[static_cast<std::size_t>(best_cell * n_splits + s)].test_acc);
  auto [mean_test, std_test] = mean_std(tests);
  outcome.best_mean_test = mean_test;
  outcome.best_std_test = std_test;
  return outcome;
}

std::vector<ResultRow> ablation_sweep(const GraphDataset& ds, const ModelConfig& base_model,
                                      const TrainConfig& base_train, const SweepSpec& sweep,
                                      const std::vector<Split>& splits, int jobs, SymmetrizeMode symmetrize) {
  if (splits.empty()) throw ConfigError("ablation_sweep: needs at least one split");
  // One-factor-at-a-time cells in declaration order.
  std::vector<ModelConfig> cells;
  for (double g : sweep.gamma) {
    ModelConfig m = base_model;
    m.gamma = g;
    cells.push_back(m);
  }
  for (std::int64_t l : sweep.L) {
    ModelConfig m = base_model;
    m.L = l;
    cells.push_back(m);
  }
  for (double d : sweep.dropout) {
    ModelConfig m = base_model;
    m.dropout = d;
    cells.push_back(m);
  }
  const std::int64_t n_splits = static_cast<std::int64_t>(splits.size());
  const std::int64_t n_tasks = static_cast<std::int64_t>(cells.size()) * n_splits;
  std::vector<ResultRow> rows(static_cast<std::size_t>(n_tasks));
  parallel_for(n_tasks, jobs, [&](std::int64_t task) {
    const std::int64_t cell = task / n_splits;
    const std::int64_t split_ix = task % n_splits;
    TrainConfig tcfg = base_train;
    tcfg.seed = splits[static_cast<std::size_t>(split_ix)].seed;
    RunResult run =
        train(ds, cells[static_cast<std::size_t>(cell)], tcfg, splits[static_cast<std::size_t>(split_ix)], symmetrize);
    rows[static_cast<std::size_t>(task)] = make_result_row(ds, cells[static_cast<std::size_t>(cell)], tcfg,
                                                           splits[static_cast<std::size_t>(split_ix)], run);
  });
  return rows;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace pgcn

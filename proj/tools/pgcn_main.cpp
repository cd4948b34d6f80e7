// pgcn: batch CLI for graph polynomial convolution experiments.
//
// Subcommands: train, homophily, spectrum, bound, ablate, grid, synth, verify.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "pgcn/bounds.hpp"
#include "pgcn/checkpoint.hpp"
#include "pgcn/error.hpp"
#include "pgcn/experiment.hpp"
#include "pgcn/parallel.hpp"
#include "pgcn/verify.hpp"

namespace {

using namespace pgcn;

std::string format_real(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string slurp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw DataError("write failed for '" + path + "'");
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = default_jobs();
  std::string symmetrize = "auto";
  std::string coefficients;
  std::string normalize_features;
  bool f32 = false;
};

ExperimentConfig load_with_overrides(const CommonFlags& flags) {
  ExperimentConfig cfg = load_experiment_config(flags.config_path);
  if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
  if (flags.seed) cfg.seeds = {*flags.seed};
  if (!flags.symmetrize.empty()) cfg.symmetrize = symmetrize_mode_from_name(flags.symmetrize);
  if (!flags.coefficients.empty()) cfg.coefficients = coefficient_mode_from_name(flags.coefficients);
  if (!flags.normalize_features.empty())
    cfg.normalize_features = feature_norm_from_name(flags.normalize_features);
  if (flags.f32) cfg.train.f32 = true;
  return cfg;
}

GraphDataset dataset_from_flags(const std::string& data_path, const std::string& format, const std::string& edges,
                                const std::string& features, const std::string& labels) {
  if (!data_path.empty()) return load_dataset(data_path, data_format_from_name(format));
  if (!edges.empty()) return import_external(edges, features, labels);
  throw ConfigError("either --data or --edges/--features/--labels is required");
}

// percentage with two decimals, the accuracy-table convention
std::string pct(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << 100.0 * v;
  return ss.str();
}

// Manifest for single-file outputs, written as <out>.manifest.json.
void file_manifest(const std::string& out_path, const std::string& command, const std::string& params,
                   const std::vector<std::uint64_t>& seeds) {
  nlohmann::ordered_json doc;
  doc["command"] = command;
  doc["config_hash"] = fnv1a_hex(params);
  doc["seeds"] = seeds;
  doc["version"] = std::string(kVersionString);
  write_file(out_path + ".manifest.json", doc.dump(2) + "\n");
}

int cmd_train(const CommonFlags& flags) {
  ExperimentConfig cfg = load_with_overrides(flags);
  std::filesystem::create_directories(cfg.output_dir);
  GraphDataset ds = load_config_dataset(cfg);
  std::vector<Split> splits = make_config_splits(cfg, ds);

  std::vector<ResultRow> rows(splits.size());
  std::vector<RunResult> runs(splits.size());
  parallel_for(static_cast<std::int64_t>(splits.size()), flags.jobs, [&](std::int64_t i) {
    TrainConfig tcfg = cfg.train;
    tcfg.seed = splits[static_cast<std::size_t>(i)].seed;
    runs[static_cast<std::size_t>(i)] = train(ds, cfg.model, tcfg, splits[static_cast<std::size_t>(i)], cfg.symmetrize);
    rows[static_cast<std::size_t>(i)] =
        make_result_row(ds, cfg.model, tcfg, splits[static_cast<std::size_t>(i)], runs[static_cast<std::size_t>(i)]);
  });

  write_file(cfg.output_dir + "/results.csv", results_csv(rows));

  // Checkpoint the best run by validation accuracy.
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].best_val_acc > runs[best].best_val_acc) best = i;
  if (!runs[best].best_params.items.empty())
    save_checkpoint({cfg.model, runs[best].best_params}, cfg.output_dir + "/checkpoint.pgck");

  write_manifest(cfg.output_dir, "train", fnv1a_hex(slurp_file(flags.config_path)), cfg.seeds);

  std::vector<double> test_accs, val_accs;
  for (const RunResult& r : runs) {
    test_accs.push_back(r.test_acc_at_best_val);
    val_accs.push_back(r.best_val_acc);
  }
  auto [test_mean, test_std] = mean_std(test_accs);
  auto [val_mean, val_std] = mean_std(val_accs);
  std::cout << "model " << model_kind_name(cfg.model.kind) << " on " << ds.name << " (" << splits.size()
            << " splits)\n";
  std::cout << "val accuracy:  " << pct(val_mean) << " +- " << pct(val_std) << "\n";
  std::cout << "test accuracy: " << pct(test_mean) << " +- " << pct(test_std) << "\n";
  std::cout << "results: " << cfg.output_dir << "/results.csv\n";
  return 0;
}

int cmd_homophily(const std::string& data_path, const std::string& format, const std::string& edges,
                  const std::string& features, const std::string& labels) {
  GraphDataset ds = dataset_from_flags(data_path, format, edges, features, labels);
  std::cout << "dataset: " << ds.name << " (N=" << ds.num_nodes() << ", E=" << ds.adjacency.nnz()
            << ", C=" << ds.labels.num_classes << ")\n";
  std::cout << "edge homophily:  " << format_real(edge_homophily(ds.adjacency, ds.labels)) << "\n";
  std::cout << "class homophily: " << format_real(class_homophily(ds.adjacency, ds.labels)) << "\n";
  return 0;
}

int cmd_spectrum(const std::string& data_path, const std::string& format, const std::string& k_spec,
                 const std::string& out_path, const std::string& symmetrize) {
  GraphDataset ds = load_dataset(data_path, data_format_from_name(format));
  SparseAdjacency norm = normalized_adjacency(ds.adjacency, symmetrize_mode_from_name(symmetrize));
  std::int64_t k = kAllEigenvalues;
  if (k_spec != "all") {
    auto [p, ec] = std::from_chars(k_spec.data(), k_spec.data() + k_spec.size(), k);
    if (ec != std::errc() || k <= 0) throw ConfigError("--k must be 'all' or a positive integer");
  }
  Spectrum s = spectrum(norm, k);
  std::ostringstream csv;
  csv << "index,eigenvalue\n";
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) csv << i << ',' << format_real(s.eigenvalues[i]) << '\n';
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    write_file(out_path, csv.str());
    file_manifest(out_path, "spectrum", data_path + "|" + k_spec + "|" + symmetrize, {});
  }
  std::cerr << "computed " << s.n_computed << " of " << s.n_total << " eigenvalues ("
            << (s.method == Spectrum::Method::kDense ? "dense" : "lanczos") << ")\n";
  return 0;
}

int cmd_bound(const std::string& data_path, const std::string& format, const std::string& checkpoint_path,
              int theorem, const std::string& coefficients, const std::string& protocol, std::uint64_t split_seed,
              double delta, const std::string& profile, const std::string& out_path, const std::string& symmetrize) {
  GraphDataset ds = load_dataset(data_path, data_format_from_name(format));
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  Split split = make_split(ds.labels, split_protocol_from_name(protocol), split_seed);
  BoundInputs in = extract_bound_inputs(ds, ckpt.params, ckpt.config, split, symmetrize_mode_from_name(symmetrize));
  const CoefficientMode mode = coefficient_mode_from_name(coefficients);
  if (theorem != 1 && theorem != 2) throw ConfigError("--theorem must be 1 or 2");
  if (theorem == 2 && in.theta.empty())
    throw ConfigError("theorem 2 needs a checkpoint with theta (adaptive model)");

  // Depth values to report: the checkpoint's L, or the requested profile.
  std::vector<std::int64_t> depths = {in.L};
  if (!profile.empty()) {
    depths.clear();
    std::size_t pos = 0;
    while (pos < profile.size()) {
      std::size_t comma = profile.find(',', pos);
      if (comma == std::string::npos) comma = profile.size();
      std::int64_t l = 0;
      auto [p, ec] = std::from_chars(profile.data() + pos, profile.data() + comma, l);
      if (ec != std::errc() || p != profile.data() + comma || l < 1)
        throw ConfigError("--profile expects a comma-separated list of depths");
      depths.push_back(l);
      pos = comma + 1;
    }
    if (theorem == 2) throw ConfigError("--profile sweeps L for theorem 1 only (theta is tied to the trained L)");
  }

  std::ostringstream csv;
  csv << "L,gamma_or_theta,mu,trunk_term,link_term,Q,total,gap_rhs\n";
  BoundBreakdown last;
  for (std::int64_t l : depths) {
    BoundInputs cur = in;
    cur.L = l;
    BoundBreakdown terms = theorem == 1 ? theorem1_terms(cur, mode) : theorem2_terms(cur);
    const double gap = generalization_gap_rhs(terms.rademacher, cur.M, cur.U, delta);
    std::string coeff;
    if (theorem == 1) {
      coeff = format_real(cur.gamma);
    } else {
      for (std::size_t i = 0; i < cur.theta.size(); ++i) {
        if (i) coeff += ';';
        coeff += format_real(cur.theta[i]);
      }
    }
    csv << l << ',' << coeff << ',' << format_real(cur.mu) << ',' << format_real(terms.trunk_term) << ','
        << format_real(terms.link_term) << ',' << format_real(terms.q) << ',' << format_real(terms.total) << ','
        << format_real(gap) << '\n';
    last = terms;
  }
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    write_file(out_path, csv.str());
    file_manifest(out_path,
                  "bound",
                  data_path + "|" + checkpoint_path + "|" + std::to_string(theorem) + "|" + coefficients + "|" +
                      profile + "|" + std::to_string(delta),
                  {split_seed});
  }
  std::cerr << "theorem " << theorem << " (" << coefficients << " coefficients, up-to-constants): total "
            << format_real(last.total) << " at L=" << depths.back() << "\n";
  return 0;
}

int cmd_grid(const CommonFlags& flags) {
  ExperimentConfig cfg = load_with_overrides(flags);
  if (cfg.grid.cells() <= 1 && cfg.grid.hidden.empty() && cfg.grid.lr.empty() && cfg.grid.weight_decay.empty() &&
      cfg.grid.T.empty() && cfg.grid.L.empty() && cfg.grid.gamma.empty() && cfg.grid.dropout.empty())
    throw ConfigError("config has no grid section");
  std::filesystem::create_directories(cfg.output_dir);
  GraphDataset ds = load_config_dataset(cfg);
  std::vector<Split> splits = make_config_splits(cfg, ds);
  GridOutcome out = grid_search(ds, cfg.model, cfg.train, cfg.grid, splits, flags.jobs, cfg.symmetrize);
  write_file(cfg.output_dir + "/grid.csv", results_csv(out.rows));
  write_manifest(cfg.output_dir, "grid", fnv1a_hex(slurp_file(flags.config_path)), cfg.seeds);

  nlohmann::ordered_json best;
  best["model"] = model_config_to_json(out.best_model);
  best["train"]["lr"] = out.best_train.lr;
  best["train"]["weight_decay"] = out.best_train.weight_decay;
  best["mean_val_acc"] = out.best_mean_val;
  best["mean_test_acc"] = out.best_mean_test;
  best["std_test_acc"] = out.best_std_test;
  std::cout << best.dump(2) << "\n";
  std::cerr << "grid: " << out.rows.size() << " runs -> " << cfg.output_dir << "/grid.csv\n";
  std::cerr << "best test accuracy: " << pct(out.best_mean_test) << " +- " << pct(out.best_std_test) << "\n";
  return 0;
}

int cmd_ablate(const CommonFlags& flags) {
  ExperimentConfig cfg = load_with_overrides(flags);
  if (cfg.sweep.gamma.empty() && cfg.sweep.L.empty() && cfg.sweep.dropout.empty())
    throw ConfigError("config has no sweep section");
  std::filesystem::create_directories(cfg.output_dir);
  GraphDataset ds = load_config_dataset(cfg);
  std::vector<Split> splits = make_config_splits(cfg, ds);
  std::vector<ResultRow> rows = ablation_sweep(ds, cfg.model, cfg.train, cfg.sweep, splits, flags.jobs,
                                               cfg.symmetrize);
  write_file(cfg.output_dir + "/ablation.csv", results_csv(rows));
  write_manifest(cfg.output_dir, "ablate", fnv1a_hex(slurp_file(flags.config_path)), cfg.seeds);
  std::cout << "ablation: " << rows.size() << " runs -> " << cfg.output_dir << "/ablation.csv\n";
  return 0;
}

int cmd_synth(const SyntheticSpec& spec, const std::string& out_path, const std::string& format) {
  GraphDataset ds = generate_sbm(spec);
  save_dataset(ds, out_path, data_format_from_name(format));
  file_manifest(out_path, "synth",
                std::to_string(spec.n) + "|" + std::to_string(spec.classes) + "|" + std::to_string(spec.p_in) +
                    "|" + std::to_string(spec.p_out) + "|" + std::to_string(spec.feature_dim) + "|" +
                    std::to_string(spec.feature_separation) + "|" + format,
                {spec.seed});
  std::cout << "wrote " << out_path << " (N=" << ds.num_nodes() << ", stored edges=" << ds.adjacency.nnz()
            << ", q=" << ds.num_features() << ")\n";
  if (ds.adjacency.nnz() > 0)
    std::cout << "edge homophily: " << format_real(edge_homophily(ds.adjacency, ds.labels)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph polynomial convolution networks: training, diagnostics, and capacity bounds"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string data_path, format = "text", out_path;
  std::string edges_path, features_path, labels_path;
  std::string k_spec = "all";
  std::string checkpoint_path, protocol = "per_class_60_20_20";
  int theorem = 1;
  double delta = 0.05;
  std::string profile_spec;
  std::uint64_t split_seed = 0;
  SyntheticSpec spec;

  auto add_common = [&flags](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", flags.out_dir, "output directory override");
    cmd->add_option("--seed", flags.seed, "single-seed override for the split list");
    cmd->add_option("--jobs", flags.jobs, "worker threads (default: PGCN_THREADS or 1)");
    cmd->add_option("--symmetrize", flags.symmetrize, "adjacency symmetrization: auto|force|never")
        ->check(CLI::IsMember({"auto", "force", "never"}));
    cmd->add_option("--coefficients", flags.coefficients, "polynomial coefficients: canonical|paper")
        ->check(CLI::IsMember({"canonical", "paper"}));
    cmd->add_option("--normalize-features", flags.normalize_features,
                    "feature preprocessing: none|rows|standardize")
        ->check(CLI::IsMember({"none", "rows", "standardize"}));
    cmd->add_flag("--f32", flags.f32, "train with float32 storage rounding");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "train a model over the configured splits");
  add_common(train_cmd);

  CLI::App* homophily_cmd = app.add_subcommand("homophily", "edge and class-corrected homophily of a dataset");
  homophily_cmd->add_option("--data", data_path, "dataset file");
  homophily_cmd->add_option("--format", format, "text|binary")->check(CLI::IsMember({"text", "binary"}));
  homophily_cmd->add_option("--edges", edges_path, "external edge list (src<TAB>dst)");
  homophily_cmd->add_option("--features", features_path, "external feature rows");
  homophily_cmd->add_option("--labels", labels_path, "external label lines");

  CLI::App* spectrum_cmd = app.add_subcommand("spectrum", "eigenvalue spectrum of the normalized adjacency");
  spectrum_cmd->add_option("--data", data_path, "dataset file")->required();
  spectrum_cmd->add_option("--format", format, "text|binary")->check(CLI::IsMember({"text", "binary"}));
  spectrum_cmd->add_option("--k", k_spec, "'all' or the number of extremal eigenvalues");
  spectrum_cmd->add_option("--out", out_path, "CSV destination (stdout when omitted)");
  spectrum_cmd->add_option("--symmetrize", flags.symmetrize, "auto|force|never")
      ->check(CLI::IsMember({"auto", "force", "never"}));

  CLI::App* bound_cmd = app.add_subcommand("bound", "evaluate the capacity bound for a trained checkpoint");
  bound_cmd->add_option("--data", data_path, "dataset file")->required();
  bound_cmd->add_option("--format", format, "text|binary")->check(CLI::IsMember({"text", "binary"}));
  bound_cmd->add_option("--checkpoint", checkpoint_path, "PGCK checkpoint")->required();
  bound_cmd->add_option("--theorem", theorem, "1 (fixed gamma) or 2 (adaptive theta)")
      ->check(CLI::IsMember({1, 2}));
  bound_cmd->add_option("--coefficients", flags.coefficients, "canonical|paper (default paper)")
      ->check(CLI::IsMember({"canonical", "paper"}));
  bound_cmd->add_option("--protocol", protocol, "split protocol for M/U sizes");
  bound_cmd->add_option("--split-seed", split_seed, "split seed for M/U sizes");
  bound_cmd->add_option("--delta", delta, "confidence parameter for the gap term");
  bound_cmd->add_option("--profile", profile_spec, "comma-separated residual depths for an L sweep (theorem 1)");
  bound_cmd->add_option("--out", out_path, "CSV destination (stdout when omitted)");
  bound_cmd->add_option("--symmetrize", flags.symmetrize, "auto|force|never")
      ->check(CLI::IsMember({"auto", "force", "never"}));

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "one-factor-at-a-time sweep from the config's sweep section");
  add_common(ablate_cmd);

  CLI::App* grid_cmd = app.add_subcommand("grid", "hyperparameter grid search from the config's grid section");
  add_common(grid_cmd);

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a stochastic block model dataset");
  synth_cmd->add_option("--n", spec.n, "nodes")->required();
  synth_cmd->add_option("--classes", spec.classes, "classes");
  synth_cmd->add_option("--p-in", spec.p_in, "intra-class edge probability");
  synth_cmd->add_option("--p-out", spec.p_out, "inter-class edge probability");
  synth_cmd->add_option("--dim", spec.feature_dim, "feature dimension");
  synth_cmd->add_option("--sep", spec.feature_separation, "class mean separation");
  synth_cmd->add_option("--seed", spec.seed, "generator seed");
  synth_cmd->add_option("--out", out_path, "output dataset path")->required();
  synth_cmd->add_option("--format", format, "text|binary")->check(CLI::IsMember({"text", "binary"}));

  CLI::App* verify_cmd = app.add_subcommand("verify", "run the invariant suite");
  (void)verify_cmd;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(flags);
    if (homophily_cmd->parsed())
      return cmd_homophily(data_path, format, edges_path, features_path, labels_path);
    if (spectrum_cmd->parsed()) return cmd_spectrum(data_path, format, k_spec, out_path, flags.symmetrize);
    if (bound_cmd->parsed())
      return cmd_bound(data_path, format, checkpoint_path, theorem,
                       flags.coefficients.empty() ? "paper" : flags.coefficients, protocol, split_seed, delta,
                       profile_spec, out_path, flags.symmetrize);
    if (ablate_cmd->parsed()) return cmd_ablate(flags);
    if (grid_cmd->parsed()) return cmd_grid(flags);
    if (synth_cmd->parsed()) return cmd_synth(spec, out_path, format);
    if (verify_cmd->parsed()) return run_verification(std::cout) ? 0 : 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

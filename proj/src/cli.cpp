#include "simskip/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "simskip/augment.hpp"
#include "simskip/downstream_eval.hpp"
#include "simskip/embedding_store.hpp"
#include "simskip/reports.hpp"
#include "simskip/synth_data.hpp"
#include "simskip/theory.hpp"
#include "simskip/trainer.hpp"

namespace simskip {

namespace {

namespace fs = std::filesystem;

bool is_csv(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".csv";
}

void require_input(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw IoError("input file '" + path + "' does not exist or is not a regular file");
  }
}

EmbeddingDataset load_any(const std::string& path) {
  require_input(path);
  return is_csv(path) ? load_csv(path) : load_embeddings(path);
}

void save_any(const EmbeddingDataset& d, const std::string& path) {
  if (is_csv(path)) {
    save_csv(d, path);
  } else {
    save_embeddings(d, path);
  }
}

/// refined.embf + 0.001 -> refined.lr0.001.embf
std::string with_lr_suffix(const std::string& path, double lr) {
  if (path.empty()) return path;
  fs::path p(path);
  std::ostringstream tag;
  tag << ".lr" << lr;
  return (p.parent_path() / (p.stem().string() + tag.str() + p.extension().string())).string();
}

// ------------------------------------------------------------- gen-synth

struct GenSynthOptions {
  MixtureSpec spec;
  double mix = 0.0;
  std::uint64_t mix_seed = 0;
  bool mix_seed_set = false;
  std::string out;
  std::string csv;
};

void add_gen_synth(CLI::App& app, GenSynthOptions& o) {
  app.add_option("--classes", o.spec.num_classes, "number of classes")->capture_default_str();
  app.add_option("--dim", o.spec.dim, "embedding dimension")->capture_default_str();
  app.add_option("--per-class", o.spec.points_per_class, "points per class")->capture_default_str();
  app.add_option("--separation", o.spec.class_separation, "distance between adjacent class means")
      ->capture_default_str();
  app.add_option("--sigma", o.spec.cluster_sigma, "isotropic cluster stddev")->capture_default_str();
  app.add_option("--seed", o.spec.seed, "generator seed")->capture_default_str();
  app.add_option("--mix", o.mix, "class mixing strength in [0,1]")->capture_default_str();
  app.add_option_function<std::uint64_t>("--mix-seed", [&o](std::uint64_t s) {
    o.mix_seed = s;
    o.mix_seed_set = true;
  }, "mixing seed (defaults to --seed)");
  app.add_option("--out", o.out, "output EMBF (or .csv) path")->required();
  app.add_option("--csv", o.csv, "also write a CSV copy");
}

int run_gen_synth(const GenSynthOptions& o, std::ostream& out) {
  EmbeddingDataset d = generate_gaussian_mixture(o.spec);
  if (o.mix > 0.0) {
    d = apply_class_mixing(d, o.mix, o.mix_seed_set ? o.mix_seed : o.spec.seed);
  }
  save_any(d, o.out);
  if (!o.csv.empty()) save_csv(d, o.csv);
  out << "wrote " << d.count() << " x " << d.dim() << " embeddings to " << o.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------- refine/ablate

struct RefineOptions {
  std::string in;
  std::string config;
  std::string out;
  std::string checkpoint;
  std::string report;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
  std::optional<double> tau;
  std::optional<std::string> augment;
  bool lr_sweep = false;
  bool timing = false;
  bool quiet = false;
};

void add_refine(CLI::App& app, RefineOptions& o) {
  app.add_option("--in", o.in, "input embeddings (EMBF or .csv)")->required();
  app.add_option("--config", o.config, "training config file (key = value)");
  app.add_option("--out", o.out, "refined embeddings output path")->required();
  app.add_option("--checkpoint", o.checkpoint, "SSKP checkpoint output path");
  app.add_option("--report", o.report, "training report JSON path");
  app.add_option("--seed", o.seed, "override config seed");
  app.add_option("--epochs", o.epochs, "override config epochs");
  app.add_option("--batch-size", o.batch_size, "override config batch_size");
  app.add_option("--lr", o.learning_rate, "override config learning_rate");
  app.add_option("--tau", o.tau, "override config temperature");
  app.add_option("--augment", o.augment, "override augmentation kind: mask, gaussian, mask+gaussian");
  app.add_flag("--lr-sweep", o.lr_sweep, "train once per learning rate in {0.001, 0.0003, 0.00003, 0.00001}");
  app.add_flag("--timing", o.timing, "include wall time in the report (makes reports non-reproducible)");
  app.add_flag("--quiet", o.quiet, "suppress per-epoch progress");
}

TrainConfig resolve_config(const RefineOptions& o, std::size_t count, bool skip_enabled, std::ostream& err) {
  TrainConfig cfg;
  if (!o.config.empty()) {
    require_input(o.config);
    cfg = load_train_config(o.config);
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.batch_size) cfg.batch_size = *o.batch_size;
  if (o.learning_rate) cfg.learning_rate = *o.learning_rate;
  if (o.tau) cfg.tau = *o.tau;
  if (o.augment) cfg.augment.kind = parse_augment_kind(*o.augment);
  cfg.skip_enabled = skip_enabled;
  if (cfg.batch_size > count) {
    err << "simskip: note: batch_size " << cfg.batch_size << " clamped to dataset size " << count << '\n';
    cfg.batch_size = count;
  }
  cfg.validate();
  return cfg;
}

int run_refine(const RefineOptions& o, bool skip_enabled, std::ostream& out, std::ostream& err) {
  const EmbeddingDataset data = load_any(o.in);
  const TrainConfig base = resolve_config(o, data.count(), skip_enabled, err);
  const std::string tag = skip_enabled ? "simskip" : "simskip-minus";

  std::vector<double> rates = o.lr_sweep ? kLearningRateGrid : std::vector<double>{base.learning_rate};
  Json runs = Json::array();
  std::optional<std::size_t> best;
  double best_loss = 0.0;
  bool any_numeric_failure = false;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    TrainConfig cfg = base;
    cfg.learning_rate = rates[i];
    const std::string out_path = o.lr_sweep ? with_lr_suffix(o.out, rates[i]) : o.out;
    const std::string ckpt_path = o.lr_sweep ? with_lr_suffix(o.checkpoint, rates[i]) : o.checkpoint;
    try {
      TrainResult result = train(data, cfg, [&](std::size_t epoch, double loss) {
        if (!o.quiet) out << tag << " lr=" << cfg.learning_rate << " epoch " << epoch + 1 << "/" << cfg.epochs
                          << " loss " << loss << '\n';
      });
      save_any(refine(result.params, data), out_path);
      if (!ckpt_path.empty()) {
        save_checkpoint(result.params, ckpt_path);
        result.report.checkpoint_path = ckpt_path;
      }
      Json run = to_json(result.report, o.timing);
      run["output_path"] = out_path;
      runs.push_back(std::move(run));
      if (!result.report.epoch_losses.empty()) {
        const double final_loss = result.report.epoch_losses.back();
        if (!best || final_loss < best_loss) {
          best = i;
          best_loss = final_loss;
        }
      }
    } catch (const NumericsError& e) {
      if (!o.lr_sweep) throw;
      any_numeric_failure = true;
      err << "simskip: note: learning rate " << rates[i] << " diverged: " << e.what() << '\n';
      runs.push_back(Json{{"config", to_json(cfg)}, {"diverged", true}, {"error", e.what()}});
    }
  }
  if (!o.report.empty()) {
    const SimSkipParams shape = init_params(data.dim(), base.seed, skip_enabled, true);
    Json doc{{"tag", tag},
             {"input", o.in},
             {"input_fingerprint", hex64(fingerprint(data))},
             {"parameter_counts", to_json(parameter_counts(shape))}};
    if (o.lr_sweep) {
      doc["runs"] = runs;
      doc["best_learning_rate"] = best ? Json(rates[*best]) : Json(nullptr);
    } else {
      doc["train"] = runs.front();
    }
    write_json(doc, o.report);
  }
  if (o.lr_sweep && !best && any_numeric_failure) {
    throw NumericsError("every learning rate in the sweep diverged");
  }
  return kExitOk;
}

// ------------------------------------------------------------------ eval

struct EvalOptions {
  std::string original;
  std::vector<std::string> refined;
  std::string report;
  std::string csv;
  std::string probe = "linear";
  std::string metric = "euclidean";
  std::size_t k = 10;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

void add_eval(CLI::App& app, EvalOptions& o) {
  app.add_option("--original", o.original, "baseline embeddings")->required();
  app.add_option("--refined", o.refined, "embeddings to compare against the baseline (repeatable)");
  app.add_option("--report", o.report, "comparison JSON path");
  app.add_option("--csv", o.csv, "comparison CSV path");
  app.add_option("--probe", o.probe, "linear, mlp3 or both")->capture_default_str();
  app.add_option("--metric", o.metric, "kNN distance: euclidean or cosine")->capture_default_str();
  app.add_option("-k,--k", o.k, "neighbours for the same-label score")->capture_default_str();
  app.add_option("--seed", o.seed, "split and probe seed")->capture_default_str();
  app.add_option("--train-fraction", o.train_fraction, "probe train fraction")->capture_default_str();
}

int run_eval(const EvalOptions& o, std::ostream& out) {
  for (const auto& p : o.refined) require_input(p);
  const EmbeddingDataset original = load_any(o.original);
  std::vector<EmbeddingDataset> refined;
  for (const auto& p : o.refined) refined.push_back(load_any(p));

  std::vector<ProbeKind> kinds;
  if (o.probe == "both") {
    kinds = {ProbeKind::Linear, ProbeKind::MLP3};
  } else {
    kinds = {parse_probe_kind(o.probe)};
  }
  const KnnMetric metric = parse_knn_metric(o.metric);
  SplitConfig split_cfg;
  split_cfg.seed = o.seed;
  split_cfg.train_fraction = o.train_fraction;

  Json probes = Json::array();
  std::vector<std::string> csv_rows;
  for (ProbeKind kind : kinds) {
    ProbeConfig probe_cfg = ProbeConfig::defaults(kind);
    probe_cfg.seed = o.seed;
    const EvalReport baseline = evaluate_embeddings(original, probe_cfg, split_cfg, o.k, metric);
    csv_rows.push_back(eval_csv_row(o.original, baseline, std::nullopt, std::nullopt));
    Json entries = Json::array();
    out << to_string(kind) << " probe: " << o.original << " knn=" << baseline.knn_score
        << " probe=" << baseline.probe_accuracy << '\n';
    for (std::size_t i = 0; i < refined.size(); ++i) {
      const ComparisonReport cmp = compare_embeddings(original, refined[i], probe_cfg, split_cfg, o.k, metric);
      Json entry = to_json(cmp);
      entry["name"] = o.refined[i];
      entries.push_back(std::move(entry));
      csv_rows.push_back(eval_csv_row(o.refined[i], cmp.refined, cmp.knn_delta, cmp.probe_delta));
      out << to_string(kind) << " probe: " << o.refined[i] << " knn=" << cmp.refined.knn_score
          << " (delta " << cmp.knn_delta << ") probe=" << cmp.refined.probe_accuracy << " (delta "
          << cmp.probe_delta << ")\n";
    }
    probes.push_back(Json{{"probe", to_string(kind)}, {"baseline", to_json(baseline)}, {"comparisons", entries}});
  }
  if (!o.report.empty()) {
    Json doc{{"original", o.original}, {"results", probes}};
    // Convenience fields for the common single-comparison case.
    if (refined.size() == 1) {
      doc["knn_delta"] = probes.front()["comparisons"][0]["knn_delta"];
      doc["probe_delta"] = probes.front()["comparisons"][0]["probe_delta"];
    }
    write_json(doc, o.report);
  }
  if (!o.csv.empty()) {
    std::ofstream csv(o.csv, std::ios::trunc);
    if (!csv) throw IoError("cannot open '" + o.csv + "' for writing");
    csv << eval_csv_header() << '\n';
    for (const auto& row : csv_rows) csv << row << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------- theory

struct TheoryOptions {
  std::string in;
  std::string checkpoint;
  std::string report;
  std::size_t k = 1;
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  BoundInputs bound;
  std::optional<double> R;
  std::optional<std::size_t> M;
};

void add_theory(CLI::App& app, TheoryOptions& o) {
  app.add_option("--in", o.in, "labeled embeddings")->required();
  app.add_option("--checkpoint", o.checkpoint, "evaluate L_un for this encoder instead of the identity");
  app.add_option("--report", o.report, "bound report JSON path");
  app.add_option("-k,--k", o.k, "negatives per triplet")->capture_default_str();
  app.add_option("--count", o.count, "number of triplets")->capture_default_str();
  app.add_option("--seed", o.seed, "triplet sampling seed")->capture_default_str();
  app.add_option("--alpha", o.bound.alpha, "bound coefficient on L_un")->capture_default_str();
  app.add_option("--eta", o.bound.eta, "bound coefficient on Gen_M")->capture_default_str();
  app.add_option("--eps-slack", o.bound.eps_slack, "additive slack")->capture_default_str();
  app.add_option("--R", o.R, "norm bound (default: largest embedding norm)");
  app.add_option("--rademacher", o.bound.rademacher, "Rademacher average of the function class")
      ->capture_default_str();
  app.add_option("--M", o.M, "sample size (default: triplet count)");
  app.add_option("--delta-conf", o.bound.delta_conf, "confidence parameter in (0,1)")->capture_default_str();
}

int run_theory(TheoryOptions o, std::ostream& out) {
  const EmbeddingDataset data = load_any(o.in);
  const auto triplets = sample_triplets(data, o.k, o.count, o.seed);

  BoundReport report;
  report.skip = skip_inequality_check(data, triplets);
  report.triplet_count = o.count;
  report.seed = o.seed;
  o.bound.k = o.k;
  o.bound.M = o.M.value_or(std::max<std::size_t>(1, o.count));

  EmbedFn embed = [](const Vector& x) { return x; };
  std::optional<SimSkipParams> model;
  if (!o.checkpoint.empty()) {
    require_input(o.checkpoint);
    model = load_checkpoint(o.checkpoint);
    if (model->dim != data.dim()) {
      throw ShapeError("checkpoint dimension " + std::to_string(model->dim) + " does not match data dimension " +
                       std::to_string(data.dim()));
    }
    embed = [&model](const Vector& x) {
      Rng unused(0);
      Matrix row = x.transpose();
      return Vector(encoder_forward(*model, row, Mode::Eval, unused).first.row(0).transpose());
    };
    report.embedding = "encoder:" + o.checkpoint;
  }
  if (o.R) {
    o.bound.R = *o.R;
  } else {
    double r = 0.0;
    for (std::size_t i = 0; i < data.count(); ++i) {
      r = std::max(r, embed(data.vectors().row(static_cast<Eigen::Index>(i)).transpose()).norm());
    }
    o.bound.R = r > 0.0 ? r : 1.0;
  }
  report.inputs = o.bound;
  report.l_un = empirical_unsup_loss(data, embed, triplets, LossKind::Logistic);
  report.gen_m = gen_m(o.bound);
  report.bound_rhs = bound_rhs(report.l_un, report.gen_m, o.bound);

  out << "nonneg_margin_fraction=" << report.skip.nonneg_margin_fraction << " L_un(f_I)=" << report.skip.l_un_identity
      << " L_un(2f_I)=" << report.skip.l_un_doubled << " holds=" << (report.skip.holds ? "true" : "false")
      << " gen_m=" << report.gen_m << " bound_rhs=" << report.bound_rhs << '\n';
  if (!o.report.empty()) write_json(to_json(report), o.report);
  return kExitOk;
}

// --------------------------------------------------------------- augment

struct AugmentOptions {
  std::string in;
  std::string out;
  std::string kind = "mask";
  double mask_prob = kDefaultMaskProb;
  double noise_scale = kDefaultNoiseScale;
  std::uint64_t seed = 0;
  std::optional<std::size_t> rows;
};

void add_augment(CLI::App& app, AugmentOptions& o) {
  app.add_option("--in", o.in, "input embeddings")->required();
  app.add_option("--out", o.out, "write the 2N augmented views (rows 2i, 2i+1 pair up)");
  app.add_option("--kind", o.kind, "mask, gaussian or mask+gaussian")->capture_default_str();
  app.add_option("--mask-prob", o.mask_prob, "per-coordinate masking probability")->capture_default_str();
  app.add_option("--noise-scale", o.noise_scale, "Gaussian noise stddev")->capture_default_str();
  app.add_option("--seed", o.seed, "augmentation seed")->capture_default_str();
  app.add_option("--rows", o.rows, "only augment the first N rows");
}

int run_augment(const AugmentOptions& o, std::ostream& out) {
  const EmbeddingDataset data = load_any(o.in);
  AugmentConfig cfg;
  cfg.kind = parse_augment_kind(o.kind);
  cfg.mask_prob = o.mask_prob;
  cfg.noise_scale = o.noise_scale;
  cfg.seed = o.seed;
  cfg.validate();
  const std::size_t n = std::min(o.rows.value_or(data.count()), data.count());
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  const EmbeddingDataset head = data.select(idx);
  Rng rng(o.seed);
  const Matrix views = make_pair_batch(head.vectors(), cfg, rng);

  // Summary statistics of the perturbation, per view coordinate.
  std::size_t zeroed = 0;
  std::size_t nonzero_inputs = 0;
  double diff_sum = 0.0;
  double diff_sq = 0.0;
  for (Eigen::Index r = 0; r < views.rows(); ++r) {
    for (Eigen::Index c = 0; c < views.cols(); ++c) {
      const double x = head.vectors()(r / 2, c);
      const double v = views(r, c);
      if (x != 0.0) {
        ++nonzero_inputs;
        zeroed += v == 0.0 ? 1 : 0;
      }
      diff_sum += v - x;
      diff_sq += (v - x) * (v - x);
    }
  }
  const double entries = static_cast<double>(views.size());
  Json summary{{"kind", to_string(cfg.kind)},
               {"rows", n},
               {"views", views.rows()},
               {"masked_fraction", nonzero_inputs ? static_cast<double>(zeroed) / static_cast<double>(nonzero_inputs)
                                                  : 0.0},
               {"mean_change", entries > 0 ? diff_sum / entries : 0.0},
               {"mean_squared_change", entries > 0 ? diff_sq / entries : 0.0},
               {"config", to_json(cfg)}};
  out << summary.dump(2) << '\n';
  if (!o.out.empty()) {
    std::optional<std::vector<Label>> labels;
    if (head.has_labels()) {
      labels.emplace();
      for (Label l : *head.labels()) {
        labels->push_back(l);
        labels->push_back(l);
      }
    }
    save_any(EmbeddingDataset(views, std::move(labels)), o.out);
  }
  return kExitOk;
}

// --------------------------------------------------------------- inspect

int run_inspect(const std::string& path, std::ostream& out) {
  require_input(path);
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  Json doc{{"path", path}};
  if (std::equal(magic, magic + 4, kCheckpointMagic)) {
    const SimSkipParams p = load_checkpoint(path);
    doc["format"] = "SSKP";
    doc["dim"] = p.dim;
    doc["skip_enabled"] = p.skip_enabled;
    doc["parameter_counts"] = to_json(parameter_counts(p));
  } else {
    const EmbeddingDataset d = is_csv(path) ? load_csv(path) : load_embeddings(path);
    doc["format"] = is_csv(path) ? "CSV" : "EMBF";
    doc["count"] = d.count();
    doc["dim"] = d.dim();
    doc["has_labels"] = d.has_labels();
    if (d.has_labels()) {
      std::vector<std::size_t> per_class(d.num_classes(), 0);
      for (Label l : *d.labels()) ++per_class[l];
      doc["class_counts"] = per_class;
    }
    if (d.count() > 0) {
      doc["mean_norm"] = d.vectors().rowwise().norm().mean();
    }
    doc["fingerprint"] = hex64(fingerprint(d));
  }
  out << doc.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int parse_and_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Skip-connection contrastive refinement of pre-trained embeddings", "simskip"};
  app.require_subcommand(1);

  GenSynthOptions gen;
  add_gen_synth(*app.add_subcommand("gen-synth", "generate a labeled Gaussian-mixture dataset"), gen);
  RefineOptions refine_opts;
  add_refine(*app.add_subcommand("refine", "train the skip-connection refiner and write refined embeddings"),
             refine_opts);
  RefineOptions ablate_opts;
  add_refine(*app.add_subcommand("ablate", "refine with the skip connection removed"), ablate_opts);
  EvalOptions eval;
  add_eval(*app.add_subcommand("eval", "compare embeddings with kNN and probe metrics"), eval);
  TheoryOptions theory;
  add_theory(*app.add_subcommand("theory", "triplet losses, generalization term and bound"), theory);
  AugmentOptions augment;
  add_augment(*app.add_subcommand("augment", "preview positive-pair augmentations"), augment);
  std::string inspect_path;
  app.add_subcommand("inspect", "describe an EMBF, CSV or SSKP file")
      ->add_option("--in", inspect_path, "file to inspect")
      ->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "simskip: error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "gen-synth") return run_gen_synth(gen, out);
    if (name == "refine") return run_refine(refine_opts, true, out, err);
    if (name == "ablate") return run_refine(ablate_opts, false, out, err);
    if (name == "eval") return run_eval(eval, out);
    if (name == "theory") return run_theory(theory, out);
    if (name == "augment") return run_augment(augment, out);
    if (name == "inspect") return run_inspect(inspect_path, out);
  } catch (const NumericsError& e) {
    err << "simskip: error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "simskip: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "simskip: error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "simskip: error: internal: " << e.what() << '\n';
    return kExitNumeric;
  }
  err << "simskip: error: unknown subcommand '" << name << "'\n" << app.help();
  return kExitUsage;
}

}  // namespace simskip

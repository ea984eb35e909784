#include "simskip/reports.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace simskip {

Json to_json(const AugmentConfig& cfg) {
  return Json{{"kind", to_string(cfg.kind)},
              {"mask_prob", cfg.mask_prob},
              {"noise_scale", cfg.noise_scale},
              {"seed", cfg.seed}};
}

Json to_json(const TrainConfig& cfg) {
  return Json{{"learning_rate", cfg.learning_rate},
              {"batch_size", cfg.batch_size},
              {"epochs", cfg.epochs},
              {"tau", cfg.tau},
              {"seed", cfg.seed},
              {"augment", to_json(cfg.augment)},
              {"adam_beta1", cfg.adam_beta1},
              {"adam_beta2", cfg.adam_beta2},
              {"adam_eps", cfg.adam_eps},
              {"zero_init_residual_out", cfg.zero_init_residual_out},
              {"skip_enabled", cfg.skip_enabled},
              {"dropout_rate", cfg.dropout_rate},
              {"denominator",
               cfg.denominator == NtXentDenominator::AllButSelf ? "all_but_self" : "all_but_self_and_pair"}};
}

Json to_json(const TrainReport& report, bool with_timing) {
  Json j{{"epoch_losses", report.epoch_losses}, {"steps", report.steps}};
  if (with_timing) {
    j["wall_time_seconds"] = report.wall_time_seconds;
  }
  j["checkpoint_path"] = report.checkpoint_path;
  j["config"] = to_json(report.config);
  return j;
}

Json to_json(const ParameterCounts& c) {
  return Json{{"encoder", {{"layer1", c.layer1}, {"layer2", c.layer2}, {"linear", c.out_linear}, {"total", c.encoder()}}},
              {"projector", {{"layer1", c.projector1}, {"layer2", c.projector2}, {"total", c.projector()}}}};
}

Json to_json(const ProbeConfig& cfg) {
  Json j{{"kind", to_string(cfg.kind)}};
  if (cfg.kind == ProbeKind::MLP3) {
    j["hidden_dim"] = cfg.hidden_dim;
  }
  j["learning_rate"] = cfg.learning_rate;
  j["epochs"] = cfg.epochs;
  j["seed"] = cfg.seed;
  return j;
}

std::string hex64(std::uint64_t value) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

Json to_json(const EvalReport& r) {
  return Json{{"count", r.count},
              {"dim", r.dim},
              {"k", r.k},
              {"metric", to_string(r.metric)},
              {"knn_score", r.knn_score},
              {"probe_accuracy", r.probe_accuracy},
              {"per_class_accuracy", r.per_class_accuracy},
              {"probe", to_json(r.probe)},
              {"split",
               {{"train_fraction", r.split.train_fraction}, {"seed", r.split.seed}, {"stratify", r.split.stratify}}},
              {"fingerprint", hex64(r.fingerprint)}};
}

Json to_json(const ComparisonReport& r) {
  return Json{{"original", to_json(r.original)},
              {"refined", to_json(r.refined)},
              {"knn_delta", r.knn_delta},
              {"probe_delta", r.probe_delta}};
}

Json to_json(const SkipInequalityReport& r) {
  return Json{{"triplets", r.triplets},
              {"nonneg_triplets", r.nonneg_triplets},
              {"nonneg_margin_fraction", r.nonneg_margin_fraction},
              {"L_un_identity", r.l_un_identity},
              {"L_un_doubled", r.l_un_doubled},
              {"L_un_identity_nonneg", r.l_un_identity_nonneg},
              {"L_un_doubled_nonneg", r.l_un_doubled_nonneg},
              {"holds", r.holds}};
}

Json to_json(const BoundInputs& in) {
  return Json{{"alpha", in.alpha}, {"eta", in.eta},     {"eps_slack", in.eps_slack},   {"R", in.R},
              {"rademacher", in.rademacher}, {"M", in.M}, {"delta_conf", in.delta_conf}, {"k", in.k}};
}

Json to_json(const BoundReport& r) {
  return Json{{"nonneg_margin_fraction", r.skip.nonneg_margin_fraction},
              {"L_un_identity", r.skip.l_un_identity},
              {"L_un_doubled", r.skip.l_un_doubled},
              {"holds", r.skip.holds},
              {"skip_inequality", to_json(r.skip)},
              {"embedding", r.embedding},
              {"L_un", r.l_un},
              {"gen_m", r.gen_m},
              {"bound_rhs", r.bound_rhs},
              {"config", {{"inputs", to_json(r.inputs)}, {"triplets", r.triplet_count}, {"seed", r.seed}}}};
}

void write_json(const Json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << doc.dump(2) << '\n';
  if (!out) {
    throw IoError("error while writing '" + path.string() + "'");
  }
}

std::string eval_csv_header() {
  return "name,count,dim,k,metric,knn_score,probe_kind,probe_accuracy,knn_delta,probe_delta";
}

std::string eval_csv_row(const std::string& name, const EvalReport& r, std::optional<double> knn_delta,
                         std::optional<double> probe_delta) {
  std::ostringstream out;
  out.precision(10);
  out << name << ',' << r.count << ',' << r.dim << ',' << r.k << ',' << to_string(r.metric) << ',' << r.knn_score
      << ',' << to_string(r.probe.kind) << ',' << r.probe_accuracy << ',';
  if (knn_delta) out << *knn_delta;
  out << ',';
  if (probe_delta) out << *probe_delta;
  return out.str();
}

}  // namespace simskip

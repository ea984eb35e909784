#ifndef SIMSKIP_REPORTS_HPP_
#define SIMSKIP_REPORTS_HPP_

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "simskip/downstream_eval.hpp"
#include "simskip/simskip_model.hpp"
#include "simskip/theory.hpp"
#include "simskip/trainer.hpp"

namespace simskip {

using Json = nlohmann::ordered_json;

struct BoundReport {
  SkipInequalityReport skip;
  BoundInputs inputs;
  /// Empirical logistic L_un of the embedding the bound is evaluated for.
  double l_un = 0.0;
  std::string embedding = "identity";
  double gen_m = 0.0;
  double bound_rhs = 0.0;
  std::size_t triplet_count = 0;
  std::uint64_t seed = 0;
};

Json to_json(const AugmentConfig& cfg);
Json to_json(const TrainConfig& cfg);
/// Wall time is included only when `with_timing` is set, so reports of seeded runs are byte-stable.
Json to_json(const TrainReport& report, bool with_timing = false);
Json to_json(const ParameterCounts& counts);
Json to_json(const ProbeConfig& cfg);
Json to_json(const EvalReport& report);
Json to_json(const ComparisonReport& report);
Json to_json(const SkipInequalityReport& report);
Json to_json(const BoundInputs& inputs);
Json to_json(const BoundReport& report);

std::string hex64(std::uint64_t value);

void write_json(const Json& doc, const std::filesystem::path& path);

/// Header row and one data row per evaluated embedding.
std::string eval_csv_header();
std::string eval_csv_row(const std::string& name, const EvalReport& report, std::optional<double> knn_delta,
                         std::optional<double> probe_delta);

}  // namespace simskip

#endif  // SIMSKIP_REPORTS_HPP_

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "simskip/trainer.hpp"

namespace simskip {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("config key '" + key + "': expected a number, got '" + value + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError("config key '" + key + "': expected a nonnegative integer, got '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ValidationError("config key '" + key + "': expected true/false, got '" + value + "'");
}

NtXentDenominator to_denominator(const std::string& key, const std::string& value) {
  if (value == "all_but_self") return NtXentDenominator::AllButSelf;
  if (value == "all_but_self_and_pair") return NtXentDenominator::AllButSelfAndPair;
  throw ValidationError("config key '" + key + "': expected all_but_self or all_but_self_and_pair");
}

}  // namespace

TrainConfig parse_train_config(std::istream& in, TrainConfig cfg) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "learning_rate") cfg.learning_rate = to_real(key, value);
    else if (key == "batch_size") cfg.batch_size = to_uint(key, value);
    else if (key == "epochs") cfg.epochs = to_uint(key, value);
    else if (key == "tau") cfg.tau = to_real(key, value);
    else if (key == "seed") cfg.seed = to_uint(key, value);
    else if (key == "augment.kind") cfg.augment.kind = parse_augment_kind(value);
    else if (key == "augment.mask_prob") cfg.augment.mask_prob = to_real(key, value);
    else if (key == "augment.noise_scale") cfg.augment.noise_scale = to_real(key, value);
    else if (key == "augment.seed") cfg.augment.seed = to_uint(key, value);
    else if (key == "adam_beta1") cfg.adam_beta1 = to_real(key, value);
    else if (key == "adam_beta2") cfg.adam_beta2 = to_real(key, value);
    else if (key == "adam_eps") cfg.adam_eps = to_real(key, value);
    else if (key == "zero_init_residual_out") cfg.zero_init_residual_out = to_bool(key, value);
    else if (key == "skip_enabled") cfg.skip_enabled = to_bool(key, value);
    else if (key == "dropout_rate") cfg.dropout_rate = to_real(key, value);
    else if (key == "denominator") cfg.denominator = to_denominator(key, value);
    else throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config '" + path.string() + "'");
  }
  return parse_train_config(in, std::move(base));
}

std::string format_train_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out << std::setprecision(17) << std::boolalpha;
  out << "learning_rate = " << cfg.learning_rate << '\n'
      << "batch_size = " << cfg.batch_size << '\n'
      << "epochs = " << cfg.epochs << '\n'
      << "tau = " << cfg.tau << '\n'
      << "seed = " << cfg.seed << '\n'
      << "augment.kind = " << to_string(cfg.augment.kind) << '\n'
      << "augment.mask_prob = " << cfg.augment.mask_prob << '\n'
      << "augment.noise_scale = " << cfg.augment.noise_scale << '\n'
      << "augment.seed = " << cfg.augment.seed << '\n'
      << "adam_beta1 = " << cfg.adam_beta1 << '\n'
      << "adam_beta2 = " << cfg.adam_beta2 << '\n'
      << "adam_eps = " << cfg.adam_eps << '\n'
      << "zero_init_residual_out = " << cfg.zero_init_residual_out << '\n'
      << "skip_enabled = " << cfg.skip_enabled << '\n'
      << "dropout_rate = " << cfg.dropout_rate << '\n'
      << "denominator = "
      << (cfg.denominator == NtXentDenominator::AllButSelf ? "all_but_self" : "all_but_self_and_pair") << '\n';
  return out.str();
}

}  // namespace simskip

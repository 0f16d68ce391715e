#include "wavehdnn/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "wavehdnn/errors.hpp"

namespace wavehdnn::config {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !in.eof()) throw ConfigError("config key '" + key + "': bad value '" + value + "'");
  return out;
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "model",        "lr",           "batch_size",      "max_epochs",   "patience",
      "eval_every",   "lambda_cl",    "lambda_reg",      "tau",          "layers",
      "dim",          "wavelet_scale", "wavelet_mode",   "chebyshev_order", "dense_limit",
      "contrastive_negatives", "seed", "ablation"};
  return keys;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || trim(line.substr(0, eq)).empty()) {
      throw FormatError(source + ": line " + std::to_string(lineno) + ": expected key = value", lineno);
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void set_key(trainer::TrainConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "model") cfg.model = model::parse_model_kind(value);
  else if (key == "lr") cfg.lr = parse_number<double>(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_number<Index>(key, value);
  else if (key == "max_epochs") cfg.max_epochs = parse_number<Index>(key, value);
  else if (key == "patience") cfg.patience = parse_number<Index>(key, value);
  else if (key == "eval_every") cfg.eval_every = parse_number<Index>(key, value);
  else if (key == "lambda_cl") cfg.lambda_cl = parse_number<double>(key, value);
  else if (key == "lambda_reg") cfg.lambda_reg = parse_number<double>(key, value);
  else if (key == "tau") cfg.tau = parse_number<double>(key, value);
  else if (key == "layers") cfg.layers = parse_number<Index>(key, value);
  else if (key == "dim") cfg.dim = parse_number<Index>(key, value);
  else if (key == "wavelet_scale") cfg.wavelet_scale = parse_number<double>(key, value);
  else if (key == "wavelet_mode") cfg.wavelet_mode = value;
  else if (key == "chebyshev_order") cfg.chebyshev_order = parse_number<int>(key, value);
  else if (key == "dense_limit") cfg.dense_limit = parse_number<Index>(key, value);
  else if (key == "contrastive_negatives") cfg.contrastive_negatives = objectives::parse_negatives(value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "ablation") cfg.ablation = model::parse_ablation(value);
  else throw ConfigError("unknown config key '" + key + "'");
}

trainer::TrainConfig from_key_values(const std::map<std::string, std::string>& kv,
                                     trainer::TrainConfig base) {
  for (const auto& [k, v] : kv) set_key(base, k, v);
  base.validate();
  return base;
}

trainer::TrainConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_key_values(parse_key_values(buf.str(), path.string()));
}

void apply_env_overrides(trainer::TrainConfig& cfg) {
  for (const auto& key : known_keys()) {
    std::string var = kEnvPrefix;
    for (char c : key) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(var.c_str())) set_key(cfg, key, trim(v));
  }
  cfg.validate();
}

std::map<std::string, std::string> to_key_values(const trainer::TrainConfig& cfg) {
  return {
      {"model", model::to_string(cfg.model)},
      {"lr", format_double(cfg.lr)},
      {"batch_size", std::to_string(cfg.batch_size)},
      {"max_epochs", std::to_string(cfg.max_epochs)},
      {"patience", std::to_string(cfg.patience)},
      {"eval_every", std::to_string(cfg.eval_every)},
      {"lambda_cl", format_double(cfg.lambda_cl)},
      {"lambda_reg", format_double(cfg.lambda_reg)},
      {"tau", format_double(cfg.tau)},
      {"layers", std::to_string(cfg.layers)},
      {"dim", std::to_string(cfg.dim)},
      {"wavelet_scale", format_double(cfg.wavelet_scale)},
      {"wavelet_mode", cfg.wavelet_mode},
      {"chebyshev_order", std::to_string(cfg.chebyshev_order)},
      {"dense_limit", std::to_string(cfg.dense_limit)},
      {"contrastive_negatives", objectives::to_string(cfg.contrastive_negatives)},
      {"seed", std::to_string(cfg.seed)},
      {"ablation", model::to_string(cfg.ablation)},
  };
}

std::string to_text(const trainer::TrainConfig& cfg) {
  std::string out;
  for (const auto& key : known_keys()) out += key + " = " + to_key_values(cfg).at(key) + "\n";
  return out;
}

}  // namespace wavehdnn::config

#include "sthcss/config.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "sthcss/matrix_io.hpp"

namespace sthcss {

namespace {

std::size_t to_size(const std::string& value, const std::string& key) {
  std::size_t out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError("bad value '" + value + "' for " + key + " (expected a non-negative integer)");
  }
  return out;
}

double to_double(const std::string& value, const std::string& key) {
  double out = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError("bad value '" + value + "' for " + key + " (expected a number)");
  }
  return out;
}

bool to_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw ConfigError("bad value '" + value + "' for " + key + " (expected true/false)");
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  return os.str();
}

}  // namespace

std::vector<std::size_t> parse_size_list(const std::string& csv, const std::string& what) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t next = std::min(csv.find(',', pos), csv.size());
    const std::string token = csv.substr(pos, next - pos);
    if (token.empty()) throw ConfigError(what + ": empty entry in list '" + csv + "'");
    out.push_back(to_size(token, what));
    if (next == csv.size()) break;
    pos = next + 1;
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

void RunConfig::apply_seed(std::uint64_t seed) {
  train.seed = seed;
  synth.seed = seed;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "window") model.window = to_size(value, key);
  else if (key == "mixers") model.mixer_blocks = to_size(value, key);
  else if (key == "kernel") model.kernel_size = to_size(value, key);
  else if (key == "dilation") model.dilation = to_size(value, key);
  else if (key == "st_blocks") model.st_blocks = to_size(value, key);
  else if (key == "channels") model.channels = to_size(value, key);
  else if (key == "dropout") model.dropout_p = to_double(value, key);
  else if (key == "readout_hidden") model.readout_hidden = to_size(value, key);
  else if (key == "epochs") train.epochs = to_size(value, key);
  else if (key == "batch") train.batch_size = to_size(value, key);
  else if (key == "lr") train.lr = to_double(value, key);
  else if (key == "patience") train.patience = to_size(value, key);
  else if (key == "seed") apply_seed(to_size(value, key));
  else if (key == "k") knn_k = to_size(value, key);
  else if (key == "weighted_degrees") weighted_degrees = to_bool(value, key);
  else if (key == "target") target_column = value;
  else if (key == "lambda") ridge_lambda = to_double(value, key);
  else if (key == "baseline") baseline = to_bool(value, key);
  else if (key == "synth_sensors") synth.sensors = to_size(value, key);
  else if (key == "synth_length") synth.length = to_size(value, key);
  else if (key == "groups") synth.group_sizes = parse_size_list(value, key);
  else if (key == "noise_std") synth.noise_std = to_double(value, key);
  else if (key == "target_noise_std") synth.target_noise_std = to_double(value, key);
  else if (key == "target_lag") synth.target_lag = to_size(value, key);
  else if (key == "segments") synth.segments = to_size(value, key);
  else if (key == "nonlinear_sensors") synth.nonlinear_sensors = to_bool(value, key);
  else if (key == "identity_sensors") synth.identity_sensors = to_bool(value, key);
  else if (key == "target_recipe") {
    if (value == "nonlinear") synth.target_recipe = SynthConfig::TargetRecipe::nonlinear;
    else if (value == "linear") synth.target_recipe = SynthConfig::TargetRecipe::linear;
    else throw ConfigError("bad value '" + value + "' for target_recipe (nonlinear|linear)");
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::items() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("window", std::to_string(model.window));
  kv.emplace_back("mixers", std::to_string(model.mixer_blocks));
  kv.emplace_back("kernel", std::to_string(model.kernel_size));
  kv.emplace_back("dilation", std::to_string(model.dilation));
  kv.emplace_back("st_blocks", std::to_string(model.st_blocks));
  kv.emplace_back("channels", std::to_string(model.channels));
  kv.emplace_back("dropout", format_double(model.dropout_p));
  kv.emplace_back("readout_hidden", std::to_string(model.readout_hidden));
  kv.emplace_back("epochs", std::to_string(train.epochs));
  kv.emplace_back("batch", std::to_string(train.batch_size));
  kv.emplace_back("lr", format_double(train.lr));
  kv.emplace_back("patience", std::to_string(train.patience));
  kv.emplace_back("seed", std::to_string(train.seed));
  kv.emplace_back("k", std::to_string(knn_k));
  kv.emplace_back("weighted_degrees", weighted_degrees ? "true" : "false");
  kv.emplace_back("target", target_column);
  kv.emplace_back("lambda", format_double(ridge_lambda));
  kv.emplace_back("baseline", baseline ? "true" : "false");
  kv.emplace_back("synth_sensors", std::to_string(synth.sensors));
  kv.emplace_back("synth_length", std::to_string(synth.length));
  kv.emplace_back("groups", join_sizes(synth.group_sizes));
  kv.emplace_back("noise_std", format_double(synth.noise_std));
  kv.emplace_back("target_noise_std", format_double(synth.target_noise_std));
  kv.emplace_back("target_lag", std::to_string(synth.target_lag));
  kv.emplace_back("segments", std::to_string(synth.segments));
  kv.emplace_back("nonlinear_sensors", synth.nonlinear_sensors ? "true" : "false");
  kv.emplace_back("identity_sensors", synth.identity_sensors ? "true" : "false");
  kv.emplace_back("target_recipe",
                  synth.target_recipe == SynthConfig::TargetRecipe::linear ? "linear"
                                                                           : "nonlinear");
  return kv;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    // trim
    const auto begin = line.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t");
    line = line.substr(begin, end - begin + 1);
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + " line " + std::to_string(line_no) +
                        ": expected key=value");
    }
    base.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return base;
}

void echo_config(const RunConfig& cfg, std::ostream& out) {
  for (const auto& [key, value] : cfg.items()) {
    out << "config " << key << '=' << value << '\n';
  }
}

}  // namespace sthcss

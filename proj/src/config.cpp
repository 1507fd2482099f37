#include "udrl/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "udrl/error.hpp"

namespace udrl {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw Error("config key '" + key + "': expected a nonnegative integer, got '" + value + "'");
  return out;
}

std::size_t parse_positive(const std::string& key, const std::string& value) {
  const auto v = parse_unsigned(key, value);
  if (v == 0) throw Error("config key '" + key + "': must be positive");
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  double out = 0.0;
  is >> out;
  if (is.fail() || !is.eof()) throw Error("config key '" + key + "': expected a real number, got '" + value + "'");
  return out;
}

template <typename Fn>
auto wrap(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error("config key '" + key + "': " + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const char* key, const char* what) {
    if (!ok) throw Error(std::string("config key '") + key + "': " + what);
  };
  need(total_env_steps > 0, "total_env_steps", "must be positive");
  need(!buffer_capacity || *buffer_capacity > 0, "buffer_capacity", "must be positive or 'unbounded'");
  need(episodes_per_iteration > 0, "episodes_per_iteration", "must be positive");
  need(batches_per_iteration > 0, "batches_per_iteration", "must be positive");
  need(batch_size > 0, "batch_size", "must be positive");
  need(permutations_per_batch > 0, "permutations_per_batch", "must be positive");
  need(step_size > 0.0, "step_size", "must be positive");
  need(hidden_width > 0, "hidden_width", "must be positive");
  need(best_k > 0, "best_k", "must be positive");
  need(hidden_activation != Activation::sigmoid || architecture == Architecture::plain_mlp, "hidden_activation",
       "sigmoid is reserved for the gate pathway");
  need(env_kind == EnvKind::cartpole || architecture == Architecture::plain_mlp, "architecture",
       "the bandit has no observation, so only plain_mlp applies");
  need(env_kind == EnvKind::bandit || architecture == Architecture::gated, "architecture",
       "cartpole policies need the gated observation pathway");
}

std::vector<std::string> preset_names() { return {"bandit-paper", "cartpole-paper"}; }

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "bandit-paper") {
    c.env_kind = EnvKind::bandit;
    c.total_env_steps = 25'000;
    c.buffer_capacity = 100;
    c.episodes_per_iteration = 16;
    c.batches_per_iteration = 16;
    c.batch_size = 16;
    c.permutations_per_batch = 2;
    c.optimizer = OptimizerKind::sgd;
    c.step_size = 0.01;
    c.architecture = Architecture::plain_mlp;
    c.hidden_activation = Activation::relu;
    c.hidden_width = 32;
    c.best_k = 20;
    c.output_dir = "runs/bandit";
    return c;
  }
  if (name == "cartpole-paper") {
    c.env_kind = EnvKind::cartpole;
    c.total_env_steps = 500'000;
    c.buffer_capacity = std::nullopt;
    c.episodes_per_iteration = 5;
    c.batches_per_iteration = 800;
    c.batch_size = 256;
    c.permutations_per_batch = 7;
    c.optimizer = OptimizerKind::adam;
    c.step_size = 0.0008;
    c.architecture = Architecture::gated;
    c.hidden_activation = Activation::tanh;
    c.hidden_width = 32;
    c.best_k = 20;
    c.segment_horizon = SegmentHorizon::budget;
    c.output_dir = "runs/cartpole";
    return c;
  }
  throw Error("unknown preset '" + name + "' (expected bandit-paper or cartpole-paper)");
}

void apply_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "preset") {
    c = preset(value);
  } else if (key == "env_kind") {
    c.env_kind = wrap(key, [&] { return env_kind_from_string(value); });
  } else if (key == "total_env_steps") {
    c.total_env_steps = parse_positive(key, value);
  } else if (key == "buffer_capacity") {
    c.buffer_capacity = value == "unbounded" ? std::nullopt : std::optional<std::size_t>(parse_positive(key, value));
  } else if (key == "episodes_per_iteration") {
    c.episodes_per_iteration = parse_positive(key, value);
  } else if (key == "batches_per_iteration") {
    c.batches_per_iteration = parse_positive(key, value);
  } else if (key == "batch_size") {
    c.batch_size = parse_positive(key, value);
  } else if (key == "permutations_per_batch") {
    c.permutations_per_batch = parse_positive(key, value);
  } else if (key == "optimizer") {
    c.optimizer = wrap(key, [&] { return optimizer_from_string(value); });
  } else if (key == "step_size") {
    c.step_size = parse_real(key, value);
    if (!(c.step_size > 0.0)) throw Error("config key 'step_size': must be positive");
  } else if (key == "architecture") {
    c.architecture = wrap(key, [&] { return architecture_from_string(value); });
  } else if (key == "hidden_activation") {
    c.hidden_activation = wrap(key, [&] { return activation_from_string(value); });
  } else if (key == "bandit_encoding") {
    c.bandit_encoding = wrap(key, [&] { return bandit_encoding_from_string(value); });
  } else if (key == "segment_horizon") {
    c.segment_horizon = wrap(key, [&] { return segment_horizon_from_string(value); });
  } else if (key == "hidden_width") {
    c.hidden_width = parse_positive(key, value);
  } else if (key == "best_k") {
    c.best_k = parse_positive(key, value);
  } else if (key == "seed") {
    c.seed = parse_unsigned(key, value);
  } else if (key == "output_dir") {
    if (value.empty()) throw Error("config key 'output_dir': must not be empty");
    c.output_dir = value;
  } else {
    throw Error("unknown config key '" + key + "'");
  }
}

void apply_config_text(ExperimentConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool seen_assignment = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "preset" && seen_assignment) throw Error("config key 'preset': must precede all other keys");
    apply_config_value(config, key, value);
    seen_assignment = true;
  }
  config.validate();
}

ExperimentConfig load_config_file(const std::string& path, std::optional<ExperimentConfig> base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig config = base.value_or(ExperimentConfig{});
  apply_config_text(config, text.str());
  return config;
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "env_kind = " << to_string(c.env_kind) << '\n'
     << "total_env_steps = " << c.total_env_steps << '\n'
     << "buffer_capacity = " << (c.buffer_capacity ? std::to_string(*c.buffer_capacity) : "unbounded") << '\n'
     << "episodes_per_iteration = " << c.episodes_per_iteration << '\n'
     << "batches_per_iteration = " << c.batches_per_iteration << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "permutations_per_batch = " << c.permutations_per_batch << '\n'
     << "optimizer = " << to_string(c.optimizer) << '\n'
     << "step_size = " << c.step_size << '\n'
     << "architecture = " << to_string(c.architecture) << '\n'
     << "hidden_activation = " << to_string(c.hidden_activation) << '\n'
     << "bandit_encoding = " << to_string(c.bandit_encoding) << '\n'
     << "segment_horizon = " << to_string(c.segment_horizon) << '\n'
     << "hidden_width = " << c.hidden_width << '\n'
     << "best_k = " << c.best_k << '\n'
     << "seed = " << c.seed << '\n'
     << "output_dir = " << c.output_dir << '\n';
  return os.str();
}

NetShape net_shape(const ExperimentConfig& c) {
  NetShape shape;
  shape.arch = c.architecture;
  shape.obs_width = c.env_kind == EnvKind::cartpole ? 4 : 0;
  shape.cmd_width = command_width(c.env_kind, c.bandit_encoding);
  shape.hidden_width = c.hidden_width;
  shape.action_count = c.env_kind == EnvKind::cartpole ? 2 : BanditEnv::kDefaultArms;
  shape.hidden_activation = c.hidden_activation;
  return shape;
}

}  // namespace udrl

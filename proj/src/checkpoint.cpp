#include <cstdio>
#include <fstream>
#include <sstream>

#include "udrl/error.hpp"
#include "udrl/trainer.hpp"

// Line-oriented text format. Reals are printed with 17 significant digits so
// that parsing restores every bit.

namespace udrl {

namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_reals(std::ostream& os, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? " " : "") << real(values[i]);
  os << '\n';
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  std::istringstream line() {
    std::string s;
    if (!std::getline(in_, s)) throw Error("checkpoint: unexpected end of file");
    ++line_no_;
    return std::istringstream(s);
  }

  std::string raw_line() {
    std::string s;
    if (!std::getline(in_, s)) throw Error("checkpoint: unexpected end of file");
    ++line_no_;
    return s;
  }

  // Reads a line starting with `tag` and returns the rest as a stream.
  std::istringstream expect(const std::string& tag) {
    auto ls = line();
    std::string got;
    ls >> got;
    if (got != tag) fail("expected '" + tag + "', found '" + got + "'");
    return ls;
  }

  std::vector<double> reals(std::size_t n) {
    auto ls = line();
    std::vector<double> out(n);
    for (auto& v : out) {
      std::string tok;
      if (!(ls >> tok)) fail("too few values");
      char* end = nullptr;
      v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size()) fail("bad real '" + tok + "'");
    }
    std::string extra;
    if (ls >> extra) fail("too many values");
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error("checkpoint line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istringstream in_;
  std::size_t line_no_ = 0;
};

template <typename T>
T read_value(std::istringstream& ls, Reader& r, const char* what) {
  T v{};
  if (!(ls >> v)) r.fail(std::string("missing ") + what);
  return v;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& cp) {
  std::ostringstream os;
  os << "format_version " << cp.format_version << '\n';

  // The output location is not part of the training state; leaving it out
  // keeps checkpoints of identical runs byte-identical.
  std::string config_text;
  {
    std::istringstream lines(to_config_text(cp.config));
    for (std::string line; std::getline(lines, line);)
      if (line.rfind("output_dir", 0) != 0) config_text += line + '\n';
  }
  const auto config_lines = static_cast<std::size_t>(std::count(config_text.begin(), config_text.end(), '\n'));
  os << "config " << config_lines << '\n' << config_text;

  os << "counters " << cp.iteration << ' ' << cp.env_steps << ' ' << cp.episodes << ' ' << (cp.warmed_up ? 1 : 0)
     << '\n';

  const auto labels = cp.net.parameter_labels();
  const auto blocks = cp.net.parameter_blocks();
  os << "net " << to_string(cp.net.arch) << ' ' << to_string(cp.net.obs_layer.activation) << ' ' << blocks.size()
     << '\n';
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  auto layer_shapes = [&shapes](const DenseLayer& l) {
    shapes.emplace_back(l.out_width(), l.in_width());
    shapes.emplace_back(l.out_width(), 1);
  };
  layer_shapes(cp.net.obs_layer);
  if (cp.net.gate_layer) layer_shapes(*cp.net.gate_layer);
  layer_shapes(cp.net.out_layer);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    os << "block " << labels[b] << ' ' << shapes[b].first << ' ' << shapes[b].second << '\n';
    write_reals(os, blocks[b]);
  }

  const auto& opt = cp.optimizer;
  os << "optimizer " << to_string(opt.kind) << ' ' << real(opt.step_size) << ' ' << real(opt.adam_beta1) << ' '
     << real(opt.adam_beta2) << ' ' << real(opt.adam_epsilon) << ' ' << opt.step_count << ' '
     << opt.first_moment.size() << '\n';
  for (std::size_t b = 0; b < opt.first_moment.size(); ++b) {
    os << "moments " << b << ' ' << opt.first_moment[b].size() << '\n';
    write_reals(os, opt.first_moment[b]);
    write_reals(os, opt.second_moment[b]);
  }

  os << "rng " << cp.rng.serialize() << '\n';

  if (cp.buffer) {
    const auto& buf = *cp.buffer;
    os << "buffer " << (buf.capacity() ? std::to_string(*buf.capacity()) : "unbounded") << ' ' << buf.size() << '\n';
    for (const Episode& ep : buf.episodes()) {
      const std::size_t width = ep[0].observation.size();
      os << "episode " << ep.length() << ' ' << width << '\n';
      for (const Transition& t : ep.steps()) {
        os << t.action << ' ' << real(t.reward);
        for (double v : t.observation) os << ' ' << real(v);
        os << '\n';
      }
    }
  } else {
    os << "buffer none\n";
  }
  os << "end\n";
  return os.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
  Reader r(text);
  Checkpoint cp;
  {
    auto ls = r.expect("format_version");
    cp.format_version = read_value<int>(ls, r, "format version");
    if (cp.format_version != kCheckpointFormatVersion)
      r.fail("unsupported format_version " + std::to_string(cp.format_version));
  }
  {
    auto ls = r.expect("config");
    const auto n = read_value<std::size_t>(ls, r, "config line count");
    std::string config_text;
    for (std::size_t i = 0; i < n; ++i) config_text += r.raw_line() + '\n';
    apply_config_text(cp.config, config_text);
  }
  {
    auto ls = r.expect("counters");
    cp.iteration = read_value<std::size_t>(ls, r, "iteration");
    cp.env_steps = read_value<std::size_t>(ls, r, "env_steps");
    cp.episodes = read_value<std::size_t>(ls, r, "episodes");
    cp.warmed_up = read_value<int>(ls, r, "warmed_up") != 0;
  }
  {
    auto ls = r.expect("net");
    const auto arch = read_value<std::string>(ls, r, "architecture");
    const auto act = read_value<std::string>(ls, r, "activation");
    const auto n_blocks = read_value<std::size_t>(ls, r, "block count");

    std::vector<std::pair<std::string, Matrix>> read_blocks;
    for (std::size_t b = 0; b < n_blocks; ++b) {
      auto bs = r.expect("block");
      const auto label = read_value<std::string>(bs, r, "block label");
      const auto rows = read_value<std::size_t>(bs, r, "rows");
      const auto cols = read_value<std::size_t>(bs, r, "cols");
      read_blocks.emplace_back(label, Matrix(rows, cols, r.reals(rows * cols)));
    }
    auto take_layer = [&](std::size_t at, const std::string& name, Activation a) {
      if (at + 1 >= read_blocks.size() || read_blocks[at].first != name + ".weights" ||
          read_blocks[at + 1].first != name + ".bias")
        r.fail("missing parameter blocks for " + name);
      const auto bias = read_blocks[at + 1].second.values();
      return DenseLayer{read_blocks[at].second, std::vector<double>(bias.begin(), bias.end()), a};
    };
    cp.net.arch = architecture_from_string(arch);
    std::size_t at = 0;
    cp.net.obs_layer = take_layer(at, "obs_layer", activation_from_string(act));
    at += 2;
    if (cp.net.arch == Architecture::gated) {
      cp.net.gate_layer = take_layer(at, "gate_layer", Activation::sigmoid);
      at += 2;
    }
    cp.net.out_layer = take_layer(at, "out_layer", Activation::identity);
    if (at + 2 != read_blocks.size()) r.fail("unexpected extra parameter blocks");
    try {
      cp.net.validate();
    } catch (const Error& e) {
      r.fail(e.what());
    }
  }
  {
    auto ls = r.expect("optimizer");
    auto& opt = cp.optimizer;
    opt.kind = optimizer_from_string(read_value<std::string>(ls, r, "optimizer kind"));
    auto real_tok = [&](const char* what) {
      const auto tok = read_value<std::string>(ls, r, what);
      return std::strtod(tok.c_str(), nullptr);
    };
    opt.step_size = real_tok("step size");
    opt.adam_beta1 = real_tok("beta1");
    opt.adam_beta2 = real_tok("beta2");
    opt.adam_epsilon = real_tok("epsilon");
    opt.step_count = read_value<std::uint64_t>(ls, r, "step count");
    const auto n = read_value<std::size_t>(ls, r, "moment block count");
    for (std::size_t b = 0; b < n; ++b) {
      auto ms = r.expect("moments");
      read_value<std::size_t>(ms, r, "moment index");
      const auto len = read_value<std::size_t>(ms, r, "moment length");
      opt.first_moment.push_back(r.reals(len));
      opt.second_moment.push_back(r.reals(len));
    }
  }
  {
    auto ls = r.expect("rng");
    std::string state;
    std::getline(ls, state);
    cp.rng = Rng::deserialize(state);
  }
  {
    auto ls = r.expect("buffer");
    const auto cap = read_value<std::string>(ls, r, "buffer capacity");
    if (cap != "none") {
      std::optional<std::size_t> capacity;
      if (cap != "unbounded") capacity = std::stoull(cap);
      ReplayBuffer buffer(capacity);
      const auto n = read_value<std::size_t>(ls, r, "episode count");
      for (std::size_t e = 0; e < n; ++e) {
        auto es = r.expect("episode");
        const auto len = read_value<std::size_t>(es, r, "episode length");
        const auto width = read_value<std::size_t>(es, r, "observation width");
        Episode episode;
        for (std::size_t t = 0; t < len; ++t) {
          auto ts = r.line();
          const auto action = read_value<std::size_t>(ts, r, "action");
          const auto reward = std::strtod(read_value<std::string>(ts, r, "reward").c_str(), nullptr);
          std::vector<double> obs(width);
          for (auto& v : obs) v = std::strtod(read_value<std::string>(ts, r, "observation").c_str(), nullptr);
          episode.append(std::move(obs), action, reward);
        }
        buffer.push(std::move(episode));
      }
      cp.buffer = std::move(buffer);
    }
  }
  r.expect("end");
  return cp;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out << serialize_checkpoint(checkpoint);
  if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_checkpoint(text.str());
}

}  // namespace udrl

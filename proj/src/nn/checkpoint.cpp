#include "ppgage/nn/checkpoint.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "ppgage/error.hpp"

namespace ppgage::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  return v;
}

std::string real(double v) { return fmt::format("{:.17g}", v); }

struct Group {
  const char* name;
  const std::vector<double>* values;
};

Error corrupt(const std::string& what) { return Error(ErrorCode::invalid_input, "corrupt checkpoint: " + what); }

double parse_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw corrupt("bad number '" + s + "'");
  }
  if (used != s.size()) throw corrupt("bad number '" + s + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    throw corrupt("bad integer '" + s + "'");
  }
  if (used != s.size()) throw corrupt("bad integer '" + s + "'");
  return v;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  const NetConfig& n = c.net;
  const TrainConfig& t = c.train;
  const TrainingState& s = c.state;

  std::string m;
  auto line = [&m](std::string_view key, const std::string& value) { fmt::format_to(std::back_inserter(m), "{} {}\n", key, value); };
  line("input_length", std::to_string(n.input_length));
  line("stem_channels", std::to_string(n.stem_channels));
  for (const StageConfig& st : n.stages) line("stage", fmt::format("{} {} {}", st.blocks, st.channels, st.stride));
  line("se_reduction", std::to_string(n.se_reduction));
  line("kernel_size", std::to_string(n.kernel_size));
  line("head_hidden", std::to_string(n.head_hidden));
  line("output_shift", real(n.output_shift));
  line("output_scale", real(n.output_scale));
  line("loss", to_string(t.loss));
  line("epochs", std::to_string(t.epochs));
  line("batch_size", std::to_string(t.batch_size));
  line("lr", real(t.lr));
  line("weight_decay", real(t.weight_decay));
  line("kde_bandwidth", real(t.kde_bandwidth));
  line("label_min", std::to_string(t.label_min));
  line("label_max", std::to_string(t.label_max));
  line("sort_epsilon", real(t.sort_epsilon));
  line("distribution_weight", real(t.distribution_weight));
  line("seed", std::to_string(t.seed));
  line("epochs_done", std::to_string(s.epochs_done));
  line("best_epoch", std::to_string(s.best_epoch));
  line("best_selection_mae", real(s.best_selection_mae));
  line("adam_step", std::to_string(s.adam.step));
  line("adam_lr", real(s.adam.lr));
  line("adam_beta1", real(s.adam.beta1));
  line("adam_beta2", real(s.adam.beta2));
  line("adam_eps", real(s.adam.eps));
  line("adam_weight_decay", real(s.adam.weight_decay));

  const std::size_t count = s.params.parameter_count();
  require(s.best.parameter_count() == count && s.adam.m.size() == count && s.adam.v.size() == count,
          "training state arrays have inconsistent sizes");
  const Group groups[] = {{"params", &s.params.values}, {"best", &s.best.values}, {"adam_m", &s.adam.m}, {"adam_v", &s.adam.v}};
  for (const Group& g : groups)
    for (const ParamArray& a : s.params.arrays) line("array", fmt::format("{}/{} {}", g.name, a.name, a.size));

  std::string out(checkpoint_magic);
  put_u32(out, checkpoint_version);
  put_u32(out, static_cast<std::uint32_t>(m.size()));
  out += m;
  out.reserve(out.size() + 4 * 4 * count);
  for (const Group& g : groups) {
    for (double v : *g.values) {
      const auto f = static_cast<float>(v);
      require(static_cast<double>(f) == v || std::isnan(v), "checkpoint values must be binary32-representable");
      char b[4];
      std::memcpy(b, &f, 4);
      out.append(b, 4);
    }
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  const std::size_t header = checkpoint_magic.size() + 8;
  if (bytes.size() < header || bytes.substr(0, checkpoint_magic.size()) != checkpoint_magic)
    throw corrupt("missing magic");
  const std::uint32_t version = get_u32(bytes, checkpoint_magic.size());
  if (version != checkpoint_version) throw corrupt("unsupported version " + std::to_string(version));
  const std::uint32_t mlen = get_u32(bytes, checkpoint_magic.size() + 4);
  if (bytes.size() < header + mlen) throw corrupt("truncated manifest");

  std::map<std::string, std::string> kv;
  std::vector<StageConfig> stages;
  std::vector<std::pair<std::string, std::size_t>> arrays;
  std::istringstream manifest{std::string(bytes.substr(header, mlen))};
  std::string line;
  while (std::getline(manifest, line)) {
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw corrupt("bad manifest line '" + line + "'");
    const std::string key = line.substr(0, sp), value = line.substr(sp + 1);
    std::istringstream vs(value);
    if (key == "stage") {
      StageConfig st;
      if (!(vs >> st.blocks >> st.channels >> st.stride)) throw corrupt("bad stage line");
      stages.push_back(st);
    } else if (key == "array") {
      std::string name;
      std::size_t n = 0;
      if (!(vs >> name >> n)) throw corrupt("bad array line");
      arrays.emplace_back(name, n);
    } else {
      kv[key] = value;
    }
  }
  auto get = [&kv](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw corrupt("manifest lacks '" + key + "'");
    return it->second;
  };

  Checkpoint c;
  NetConfig& n = c.net;
  n.input_length = parse_uint(get("input_length"));
  n.stem_channels = parse_uint(get("stem_channels"));
  n.stages = stages;
  n.se_reduction = parse_uint(get("se_reduction"));
  n.kernel_size = parse_uint(get("kernel_size"));
  n.head_hidden = parse_uint(get("head_hidden"));
  n.output_shift = parse_real(get("output_shift"));
  n.output_scale = parse_real(get("output_scale"));
  TrainConfig& t = c.train;
  t.loss = parse_loss_kind(get("loss"));
  t.epochs = parse_uint(get("epochs"));
  t.batch_size = parse_uint(get("batch_size"));
  t.lr = parse_real(get("lr"));
  t.weight_decay = parse_real(get("weight_decay"));
  t.kde_bandwidth = parse_real(get("kde_bandwidth"));
  t.label_min = std::stoi(get("label_min"));
  t.label_max = std::stoi(get("label_max"));
  t.sort_epsilon = parse_real(get("sort_epsilon"));
  t.distribution_weight = parse_real(get("distribution_weight"));
  t.seed = parse_uint(get("seed"));

  const Net1D net(n, Backend::serial);
  TrainingState& s = c.state;
  s.params = net.layout().zeros();
  s.best = net.layout().zeros();
  s.epochs_done = parse_uint(get("epochs_done"));
  s.best_epoch = parse_uint(get("best_epoch"));
  s.best_selection_mae = parse_real(get("best_selection_mae"));
  s.adam = AdamState::for_size(net.parameter_count(), parse_real(get("adam_lr")), parse_real(get("adam_weight_decay")));
  s.adam.step = parse_uint(get("adam_step"));
  s.adam.beta1 = parse_real(get("adam_beta1"));
  s.adam.beta2 = parse_real(get("adam_beta2"));
  s.adam.eps = parse_real(get("adam_eps"));

  struct Slot {
    const char* name;
    std::vector<double>* values;
  };
  const Slot groups[] = {{"params", &s.params.values}, {"best", &s.best.values}, {"adam_m", &s.adam.m}, {"adam_v", &s.adam.v}};
  const auto& layout = s.params.arrays;
  if (arrays.size() != 4 * layout.size()) throw corrupt("array list does not match the network layout");
  std::size_t k = 0;
  for (const Slot& g : groups)
    for (const ParamArray& a : layout) {
      const auto& [name, size] = arrays[k++];
      if (name != std::string(g.name) + "/" + a.name || size != a.size) throw corrupt("unexpected array " + name);
    }

  const std::size_t count = net.parameter_count();
  std::size_t pos = header + mlen;
  if (bytes.size() != pos + 4 * 4 * count) throw corrupt("payload size mismatch");
  for (const Slot& g : groups) {
    std::vector<double>& dst = *g.values;
    for (std::size_t i = 0; i < count; ++i, pos += 4) {
      float f;
      std::memcpy(&f, bytes.data() + pos, 4);
      dst[i] = static_cast<double>(f);
    }
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_artifact, "cannot open checkpoint " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_checkpoint(bytes);
}

}  // namespace ppgage::nn
